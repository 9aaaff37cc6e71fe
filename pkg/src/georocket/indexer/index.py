"""Embedded search index over chunk documents.

Combines an inverted token index (content tokens, tags, property-value
tokens), per-key typed attribute/property entries, a packed spatial tree,
and an import-time ordering, behind one object. Queries are answered by set
algebra over these structures and must return exactly the ids the reference
evaluator accepts; the test suite enforces that equivalence.

Durability: every committed batch is appended to a segment log and replayed
on open; the log compacts itself periodically. The store remains the source
of truth, so a lost index can always be rebuilt from stored chunks.

Concurrency: one writer at a time; all public methods take the instance
lock, so readers only ever observe fully committed batches.
"""

from __future__ import annotations

import threading
from bisect import bisect_left

from ..errors import DuplicateIdError, UnknownIdError
from ..model import (
    LayerPath,
    MetadataDelta,
    ROOT_LAYER,
    TypedValue,
    parse_layer_path,
    timestamp_key,
)
from ..query.ast import (
    BBoxTerm,
    Comparison,
    DateTerm,
    Logical,
    LogicalOp,
    MatchAll,
    QueryNode,
    TextTerm,
)
from ..query.evaluate import compare_typed
from ..text import tokenize
from .documents import IndexDocument
from .segments import SegmentLog
from .spatial import SpatialIndex


class ChunkIndex:
    def __init__(self, path=None, *, compact_after_ops: int = 8192, fsync: bool = True):
        """Open (or create) an index; ``path=None`` keeps it in memory only."""
        self._lock = threading.RLock()
        self._docs: dict[str, IndexDocument] = {}
        self._content_tokens: dict[str, set[str]] = {}
        self._tag_ids: dict[str, set[str]] = {}
        self._prop_tokens: dict[str, set[str]] = {}
        # key -> id -> values (one chunk may carry several values per key)
        self._attr_entries: dict[str, dict[str, list[TypedValue]]] = {}
        self._prop_entries: dict[str, dict[str, TypedValue]] = {}
        self._layer_ids: dict[str, set[str]] = {}
        self._ts_entries: list[tuple[tuple, str]] = []  # (timestamp key, id)
        self._ts_sorted = True
        self._spatial = SpatialIndex()
        self._ops_since_compact = 0
        self._compact_after_ops = compact_after_ops
        self._log = SegmentLog(path, fsync=fsync) if path is not None else None
        if self._log is not None:
            self._replay()

    # --- persistence ------------------------------------------------------

    def _replay(self) -> None:
        for op in self._log.replay():
            kind = op["op"]
            if kind == "add":
                self._apply_add(IndexDocument.from_record(op["doc"]))
            elif kind == "update":
                delta = MetadataDelta.from_record(op["delta"])
                for chunk_id in op["ids"]:
                    if chunk_id in self._docs:
                        self._apply_metadata(chunk_id, delta)
            elif kind == "delete":
                for chunk_id in op["ids"]:
                    self._apply_delete(chunk_id)

    def _commit(self, ops) -> None:
        if self._log is not None:
            self._log.append(ops)
            self._ops_since_compact += len(ops)

    def _maybe_compact(self) -> None:
        # only after the committed batch is fully applied: the snapshot is
        # built from the live structures
        if self._log is not None and self._ops_since_compact >= self._compact_after_ops:
            self.compact()

    def compact(self) -> None:
        """Rewrite the log as one snapshot segment of the live documents."""
        with self._lock:
            if self._log is None:
                return
            snapshot = [
                {"op": "add", "doc": doc.to_record()}
                for doc in sorted(self._docs.values(), key=IndexDocument.order_key)
            ]
            self._log.compact(snapshot)
            self._ops_since_compact = 0

    def close(self) -> None:
        with self._lock:
            if self._log is not None:
                self._log.close()

    # --- mutation ----------------------------------------------------------

    def add_documents(self, docs) -> int:
        """Make a batch searchable atomically; all ids must be new."""
        docs = list(docs)
        with self._lock:
            for doc in docs:
                if doc.chunk_id in self._docs:
                    raise DuplicateIdError(f"chunk {doc.chunk_id} is already indexed")
            seen = {d.chunk_id for d in docs}
            if len(seen) != len(docs):
                raise DuplicateIdError("duplicate chunk id within one batch")
            self._commit([{"op": "add", "doc": d.to_record()} for d in docs])
            for doc in docs:
                self._apply_add(doc)
            self._maybe_compact()
            return len(docs)

    def update_metadata(self, ids, delta: MetadataDelta) -> int:
        """Apply one tags/properties delta to every id; all ids must exist."""
        ids = list(ids)
        with self._lock:
            missing = [i for i in ids if i not in self._docs]
            if missing:
                raise UnknownIdError(f"cannot update unknown chunk {missing[0]}")
            self._commit([{"op": "update", "ids": ids, "delta": delta.to_record()}])
            for chunk_id in ids:
                self._apply_metadata(chunk_id, delta)
            self._maybe_compact()
            return len(ids)

    def delete(self, ids) -> int:
        """Remove ids from all structures; unknown ids are ignored."""
        ids = list(ids)
        with self._lock:
            present = [i for i in ids if i in self._docs]
            if present:
                self._commit([{"op": "delete", "ids": present}])
                for chunk_id in present:
                    self._apply_delete(chunk_id)
                self._maybe_compact()
            return len(present)

    def _apply_add(self, doc: IndexDocument) -> None:
        if doc.chunk_id in self._docs:
            raise DuplicateIdError(f"chunk {doc.chunk_id} is already indexed")
        cid = doc.chunk_id
        self._docs[cid] = doc
        for token in doc.tokens:
            self._postings(self._content_tokens, token).add(cid)
        for tag in doc.metadata.tags:
            self._postings(self._tag_ids, tag.lower()).add(cid)
        for token in _property_tokens(doc.metadata.properties):
            self._postings(self._prop_tokens, token).add(cid)
        for attr in doc.attributes:
            self._attr_entries.setdefault(attr.key, {}).setdefault(cid, []).append(attr.value)
        for key, raw in doc.metadata.properties.items():
            self._prop_entries.setdefault(key, {})[cid] = TypedValue.from_text(raw)
        self._postings(self._layer_ids, str(doc.metadata.layer)).add(cid)
        self._ts_entries.append((timestamp_key(doc.metadata.import_timestamp), cid))
        self._ts_sorted = False
        if doc.bbox is not None:
            b = doc.bbox
            self._spatial.add(cid, (b.min_x, b.min_y, b.max_x, b.max_y))

    def _apply_metadata(self, chunk_id: str, delta: MetadataDelta) -> None:
        doc = self._docs[chunk_id]
        old_meta = doc.metadata
        new_meta = old_meta.with_delta(delta)
        for tag in old_meta.tags - new_meta.tags:
            self._discard(self._tag_ids, tag.lower(), chunk_id)
        for tag in new_meta.tags - old_meta.tags:
            self._postings(self._tag_ids, tag.lower()).add(chunk_id)
        old_tokens = _property_tokens(old_meta.properties)
        new_tokens = _property_tokens(new_meta.properties)
        for token in old_tokens - new_tokens:
            self._discard(self._prop_tokens, token, chunk_id)
        for token in new_tokens - old_tokens:
            self._postings(self._prop_tokens, token).add(chunk_id)
        for key in old_meta.properties.keys() - new_meta.properties.keys():
            self._prop_entries.get(key, {}).pop(chunk_id, None)
        for key, raw in new_meta.properties.items():
            self._prop_entries.setdefault(key, {})[chunk_id] = TypedValue.from_text(raw)
        self._docs[chunk_id] = doc.with_metadata(new_meta)

    def _apply_delete(self, chunk_id: str) -> None:
        doc = self._docs.pop(chunk_id, None)
        if doc is None:
            return
        for token in doc.tokens:
            self._discard(self._content_tokens, token, chunk_id)
        for tag in doc.metadata.tags:
            self._discard(self._tag_ids, tag.lower(), chunk_id)
        for token in _property_tokens(doc.metadata.properties):
            self._discard(self._prop_tokens, token, chunk_id)
        for key in {attr.key for attr in doc.attributes}:
            entries = self._attr_entries.get(key)
            if entries is not None:
                entries.pop(chunk_id, None)
                if not entries:
                    del self._attr_entries[key]
        for key in doc.metadata.properties:
            self._prop_entries.get(key, {}).pop(chunk_id, None)
        self._discard(self._layer_ids, str(doc.metadata.layer), chunk_id)
        self._spatial.remove(chunk_id)
        # _ts_entries keeps a dead pair until the next sort; filtered on query

    @staticmethod
    def _postings(table: dict, key) -> set:
        return table.setdefault(key, set())

    @staticmethod
    def _discard(table: dict, key, chunk_id) -> None:
        ids = table.get(key)
        if ids is not None:
            ids.discard(chunk_id)
            if not ids:
                del table[key]

    # --- queries ------------------------------------------------------------

    def query(self, ast: QueryNode, layer: LayerPath = ROOT_LAYER) -> list[str]:
        """Ids of documents in the layer subtree matching ``ast``.

        Ordered by (import timestamp, sequence, id) ascending.
        """
        with self._lock:
            matched = self._eval(ast)
            if not layer.is_root:
                allowed: set[str] = set()
                for layer_text, ids in self._layer_ids.items():
                    if layer.is_ancestor_or_self(parse_layer_path(layer_text)):
                        allowed |= ids
                matched &= allowed
            return sorted(matched, key=lambda i: self._docs[i].order_key())

    def _eval(self, node: QueryNode) -> set[str]:
        if isinstance(node, MatchAll):
            return set(self._docs)
        if isinstance(node, TextTerm):
            token = node.token.lower()
            return (
                set(self._content_tokens.get(token, ()))
                | set(self._tag_ids.get(token, ()))
                | set(self._prop_tokens.get(token, ()))
            )
        if isinstance(node, BBoxTerm):
            b = node.bbox
            candidates = self._spatial.candidates((b.min_x, b.min_y, b.max_x, b.max_y))
            return {
                cid
                for cid in candidates
                if cid in self._docs
                and self._docs[cid].bbox is not None
                and self._docs[cid].bbox.intersects(b)
            }
        if isinstance(node, DateTerm):
            if not self._ts_sorted:
                self._ts_entries = sorted(
                    e for e in self._ts_entries if e[1] in self._docs
                )
                self._ts_sorted = True
            lo = bisect_left(self._ts_entries, (node.date.lower_key(),))
            hi = bisect_left(self._ts_entries, (node.date.upper_key(),))
            return {cid for _, cid in self._ts_entries[lo:hi] if cid in self._docs}
        if isinstance(node, Comparison):
            out: set[str] = set()
            for cid, values in self._attr_entries.get(node.key, {}).items():
                if any(compare_typed(node.op, v, node.value) for v in values):
                    out.add(cid)
            for cid, value in self._prop_entries.get(node.key, {}).items():
                if cid not in out and compare_typed(node.op, value, node.value):
                    out.add(cid)
            return out
        if isinstance(node, Logical):
            parts = [self._eval(c) for c in node.children]
            if node.op is LogicalOp.AND:
                out = parts[0]
                for p in parts[1:]:
                    out &= p
                return out
            union: set[str] = set()
            for p in parts:
                union |= p
            if node.op is LogicalOp.OR:
                return union
            return set(self._docs) - union  # NOT
        raise TypeError(f"cannot evaluate {node!r}")

    # --- introspection -------------------------------------------------------

    def get_document(self, chunk_id: str) -> IndexDocument | None:
        with self._lock:
            return self._docs.get(chunk_id)

    def all_ids(self) -> list[str]:
        with self._lock:
            return list(self._docs)

    def __len__(self) -> int:
        with self._lock:
            return len(self._docs)


def _property_tokens(properties: dict) -> set[str]:
    tokens: set[str] = set()
    for value in properties.values():
        tokens |= tokenize(value)
    return tokens
