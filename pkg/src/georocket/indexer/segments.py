"""Append-only segment log backing the index.

Layout on disk::

    <index dir>/manifest          one magic line + one JSON line listing segments
    <index dir>/segments/<n>.seg  magic line + JSON op records, one per line

Every committed batch is appended to the active segment, which rolls over at
a size threshold. Compaction writes a snapshot into a fresh segment and
atomically swaps the manifest. A partial trailing line (crash during append)
is ignored on replay. Unknown magic fails fast so a future format bump
cannot be misread.
"""

from __future__ import annotations

import json
import logging
import os
from pathlib import Path

from ..errors import StorageError

logger = logging.getLogger(__name__)

SEGMENT_MAGIC = "georocket-index-segment 1"
MANIFEST_MAGIC = "georocket-index-manifest 1"


class SegmentLog:
    def __init__(self, root, max_segment_bytes: int = 8 << 20, fsync: bool = True):
        self.root = Path(root)
        self.segments_dir = self.root / "segments"
        self.manifest_path = self.root / "manifest"
        self.max_segment_bytes = max_segment_bytes
        self.fsync = fsync
        self._active = None  # open file handle for the last listed segment
        try:
            self.segments_dir.mkdir(parents=True, exist_ok=True)
            if self.manifest_path.exists():
                self._segments = self._read_manifest()
            else:
                self._segments: list[str] = []
                self._write_manifest()
        except OSError as e:
            raise StorageError(f"cannot open index directory {self.root}: {e}") from e

    def _read_manifest(self) -> list[str]:
        with open(self.manifest_path, "r", encoding="utf-8") as f:
            magic = f.readline().strip()
            if magic != MANIFEST_MAGIC:
                raise StorageError(f"unrecognised index manifest header {magic!r}")
            body = f.readline()
        return list(json.loads(body)["segments"]) if body.strip() else []

    def _write_manifest(self) -> None:
        tmp = self.manifest_path.with_suffix(".tmp")
        with open(tmp, "w", encoding="utf-8") as f:
            f.write(MANIFEST_MAGIC + "\n")
            f.write(json.dumps({"segments": self._segments}) + "\n")
            f.flush()
            if self.fsync:
                os.fsync(f.fileno())
        os.replace(tmp, self.manifest_path)

    def replay(self):
        """Yield every op record in commit order."""
        self._close_active()
        for name in self._segments:
            path = self.segments_dir / name
            try:
                with open(path, "r", encoding="utf-8") as f:
                    magic = f.readline().strip()
                    if magic != SEGMENT_MAGIC:
                        raise StorageError(f"unrecognised segment header in {name}")
                    for line in f:
                        line = line.strip()
                        if not line:
                            continue
                        try:
                            yield json.loads(line)
                        except ValueError:
                            logger.warning("ignoring partial record in segment %s", name)
                            break
            except FileNotFoundError:
                logger.warning("segment %s listed but missing; skipping", name)

    def append(self, ops) -> None:
        """Durably append a batch of op records as one commit."""
        try:
            f = self._active_file()
            payload = "".join(json.dumps(op, separators=(",", ":")) + "\n" for op in ops)
            f.write(payload)
            f.flush()
            if self.fsync:
                os.fsync(f.fileno())
            if f.tell() >= self.max_segment_bytes:
                self._roll()
        except OSError as e:
            raise StorageError(f"cannot append to index segment: {e}") from e

    def _active_file(self):
        if self._active is None:
            if not self._segments:
                self._roll()
            else:
                self._active = open(
                    self.segments_dir / self._segments[-1], "a", encoding="utf-8"
                )
        return self._active

    def _next_name(self) -> str:
        last = int(self._segments[-1].split(".")[0]) if self._segments else -1
        return f"{last + 1:08d}.seg"

    def _roll(self) -> None:
        self._close_active()
        name = self._next_name()
        path = self.segments_dir / name
        with open(path, "w", encoding="utf-8") as f:
            f.write(SEGMENT_MAGIC + "\n")
            f.flush()
            if self.fsync:
                os.fsync(f.fileno())
        self._segments.append(name)
        self._write_manifest()
        self._active = open(path, "a", encoding="utf-8")

    def compact(self, snapshot_ops) -> None:
        """Replace the whole log with one segment holding ``snapshot_ops``."""
        self._close_active()
        old = list(self._segments)
        name = self._next_name()
        path = self.segments_dir / name
        try:
            with open(path, "w", encoding="utf-8") as f:
                f.write(SEGMENT_MAGIC + "\n")
                for op in snapshot_ops:
                    f.write(json.dumps(op, separators=(",", ":")) + "\n")
                f.flush()
                if self.fsync:
                    os.fsync(f.fileno())
            self._segments = [name]
            self._write_manifest()
        except OSError as e:
            raise StorageError(f"cannot compact index: {e}") from e
        for stale in old:
            try:
                os.unlink(self.segments_dir / stale)
            except OSError:
                pass

    def _close_active(self) -> None:
        if self._active is not None:
            self._active.close()
            self._active = None

    def close(self) -> None:
        self._close_active()
