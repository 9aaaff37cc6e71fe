"""Application core tying splitter, store, indexer, and merger together.

An import streams through the splitter into the store; each written chunk
id is handed to the index worker through a bounded queue (back-pressure:
when the indexer lags, the splitter stalls). The import is acknowledged
once all chunks are stored; indexing continues in the background and the
task reports both counters. A failed import rolls back its own chunks, so
imports are all-or-nothing.

Searches query the index, load matching chunks from the store, and stream
a merged document. Deletions remove ids from the index first, then the
store. Metadata updates go to the store first (source of truth), then the
index, so crash recovery converges on the stored state.
"""

from __future__ import annotations

import logging
import queue
import threading
import time

from ..errors import NotFoundError, ParseError
from ..indexer import ChunkIndex, build_document
from ..merger import merge
from ..model import ChunkMetadata, Format, LayerPath, MetadataDelta
from ..ids import new_chunk_id
from ..query import parse_query
from ..splitter import split_auto
from ..store import StoredEntry, create_store
from .config import ServerConfig
from .reconcile import ReconcileReport, reconcile
from .tasks import ImportTask, TaskRegistry

logger = logging.getLogger(__name__)

_STOP = object()


class GeoRocketApp:
    def __init__(self, config: ServerConfig):
        self.config = config.validate()
        self.store = create_store(config.store_backend, config.store_path)
        self.index = ChunkIndex(config.index_path)
        self.tasks = TaskRegistry(config.task_retention_seconds)
        self.request_slots = threading.BoundedSemaphore(config.max_concurrent_requests)
        self._queue: queue.Queue = queue.Queue(maxsize=config.index_queue_size)
        self._closed = False
        if config.reconcile_on_start:
            self.reconcile()
        self._worker = threading.Thread(target=self._index_worker, daemon=True,
                                        name="georocket-indexer")
        self._worker.start()

    # --- import -------------------------------------------------------------

    def import_stream(self, layer: LayerPath, blocks, tags=(), properties=None,
                      fallback_crs: str | None = None) -> ImportTask:
        """Split, store, and enqueue-for-indexing one uploaded file.

        Returns once every chunk is durably stored; indexing catches up
        asynchronously. Any failure rolls back this import's chunks and
        re-raises.
        """
        task = self.tasks.create(layer)
        task.start_splitting()
        written: list[str] = []
        timestamp = time.time_ns() // 1_000_000
        try:
            fmt, chunks = split_auto(blocks)
            base_tags = frozenset(tags)
            base_props = dict(properties or {})
            for chunk in chunks:
                metadata = ChunkMetadata(
                    layer=layer,
                    tags=base_tags,
                    properties=dict(base_props),
                    crs=chunk.crs_hint or fallback_crs,
                    import_timestamp=timestamp,
                    format=fmt,
                )
                chunk_id = new_chunk_id()
                self.store.put(
                    StoredEntry(
                        id=chunk_id,
                        content=chunk.content,
                        parents=chunk.parents,
                        metadata=metadata,
                        sequence=chunk.sequence,
                    )
                )
                written.append(chunk_id)
                task.add_written(1)
                self._queue.put(("add", task, chunk_id))
            task.splitting_done()
            return task
        except BaseException as e:
            message = str(e) if str(e) else type(e).__name__
            self._queue.put(("rollback", task, written, message))
            raise

    # --- queries ------------------------------------------------------------

    def search(self, layer: LayerPath, query_text: str,
               default_format: Format = Format.XML):
        """Merged export of all matching chunks; returns (format, byte iter).

        An empty query matches everything in the layer subtree. Raises
        NotFoundError when nothing matches and the layer never existed.
        """
        ids = self.index.query(parse_query(query_text), layer)
        if not ids and not self.store.layer_exists(layer):
            raise NotFoundError(f"layer {layer} does not exist")
        parents = []
        seen = set()
        live_ids = []
        for chunk_id in ids:
            try:
                p = self.store.get_parents(chunk_id)
            except NotFoundError:
                continue  # deleted while searching
            live_ids.append(chunk_id)
            if p not in seen:
                seen.add(p)
                parents.append(p)
        return merge(self._entries(live_ids), parents, default_format)

    def _entries(self, ids):
        for chunk_id in ids:
            try:
                yield self.store.get(chunk_id)
            except NotFoundError:
                continue

    def delete(self, layer: LayerPath, query_text: str, allow_all: bool = False) -> int:
        """Delete matching chunks from index then store; returns the count.

        An empty query needs the explicit ``allow_all`` guard.
        """
        if not query_text.strip() and not allow_all:
            raise ParseError("refusing to delete with an empty query; pass all=true")
        ids = self.index.query(parse_query(query_text), layer)
        removed = self.index.delete(ids)
        self.store.delete(ids)
        return removed

    def update_metadata(self, layer: LayerPath, query_text: str, delta: MetadataDelta) -> int:
        """Apply a tags/properties delta to every matching chunk.

        Returns the number of chunks whose metadata actually changed, so a
        removal of a tag nobody carries reports 0.
        """
        if delta.is_empty():
            raise ParseError("metadata update requires at least one change")
        ids = self.index.query(parse_query(query_text), layer)
        updated = []
        changed = 0
        for chunk_id in ids:
            doc = self.index.get_document(chunk_id)
            try:
                self.store.update_metadata(chunk_id, delta)
            except NotFoundError:
                continue  # deleted while updating
            updated.append(chunk_id)
            if doc is not None and doc.metadata.with_delta(delta) != doc.metadata:
                changed += 1
        if updated:
            self.index.update_metadata(updated, delta)
        return changed

    def task(self, task_id: str) -> ImportTask | None:
        return self.tasks.get(task_id)

    def reconcile(self) -> ReconcileReport:
        return reconcile(self.store, self.index)

    def status(self) -> dict:
        return {
            "name": "georocket",
            "version": _version(),
            "backend": self.config.store_backend,
            "chunks": len(self.index),
        }

    # --- index worker ---------------------------------------------------------

    def _index_worker(self) -> None:
        while True:
            item = self._queue.get()
            if item is _STOP:
                return
            try:
                if item[0] == "add":
                    batch = [item]
                    while len(batch) < self.config.index_batch_size:
                        try:
                            nxt = self._queue.get_nowait()
                        except queue.Empty:
                            break
                        if nxt is _STOP or nxt[0] != "add":
                            self._handle_batch(batch)
                            batch = []
                            if nxt is _STOP:
                                return
                            self._rollback(nxt)
                            break
                        batch.append(nxt)
                    if batch:
                        self._handle_batch(batch)
                else:
                    self._rollback(item)
            except Exception:
                logger.exception("index worker: unexpected failure")
                for op in (item,):
                    if op and op is not _STOP and len(op) > 1:
                        op[1].fail("internal indexing failure")

    def _handle_batch(self, batch) -> None:
        if self.config.index_throttle_ms:
            time.sleep(self.config.index_throttle_ms / 1000.0)
        docs = []
        tasks = []
        for _, task, chunk_id in batch:
            try:
                entry = self.store.get(chunk_id)
            except NotFoundError:
                continue  # rolled back or deleted before indexing
            docs.append(build_document(entry))
            tasks.append(task)
        if docs:
            self.index.add_documents(docs)
            for task in tasks:
                task.add_indexed(1)

    def _rollback(self, item) -> None:
        _, task, ids, message = item
        self.index.delete(ids)
        self.store.delete(ids)
        task.fail(message)
        logger.warning("import %s failed and was rolled back (%d chunks): %s",
                       task.id, len(ids), message)

    def close(self) -> None:
        if self._closed:
            return
        self._closed = True
        self._queue.put(_STOP)
        self._worker.join(timeout=30)
        self.index.close()
        self.store.close()


def _version() -> str:
    from .. import __version__

    return __version__
