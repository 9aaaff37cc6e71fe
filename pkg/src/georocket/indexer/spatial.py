"""Sort-tile-recursive packed rectangle tree with incremental maintenance.

The tree is bulk-loaded by the STR packing scheme: entries are sorted by
center x into vertical slices, each slice sorted by center y and cut into
leaf pages; upper levels pack the page rectangles the same way. New entries
collect in a small pending list scanned linearly; once it exceeds the
rebuild threshold the whole tree is repacked. Removals are tombstones until
the next rebuild.

Queries return a candidate superset: every stored rectangle intersecting the
search box is among the candidates (callers post-filter exactly).
"""

from __future__ import annotations

import math

Rect = "tuple[float, float, float, float]"  # (min_x, min_y, max_x, max_y)


def _intersects(a, b) -> bool:
    return not (a[0] > b[2] or a[2] < b[0] or a[1] > b[3] or a[3] < b[1])


def _extend(a, b):
    return (min(a[0], b[0]), min(a[1], b[1]), max(a[2], b[2]), max(a[3], b[3]))


class _Node:
    __slots__ = ("rect", "children", "entries")

    def __init__(self, rect, children=None, entries=None):
        self.rect = rect
        self.children = children
        self.entries = entries


class StrTree:
    """Immutable bulk-loaded tree over (rect, payload) entries."""

    def __init__(self, entries, node_capacity: int = 16):
        if node_capacity < 2:
            raise ValueError("node capacity must be at least 2")
        self.node_capacity = node_capacity
        self._root = self._build(list(entries)) if entries else None

    def __len__(self) -> int:
        def count(node):
            if node is None:
                return 0
            if node.entries is not None:
                return len(node.entries)
            return sum(count(c) for c in node.children)

        return count(self._root)

    def _build(self, entries) -> _Node:
        leaves = [
            _Node(self._mbr([r for r, _ in page]), entries=page)
            for page in self._pack([(r, (r, p)) for r, p in entries])
        ]
        level = leaves
        while len(level) > 1:
            level = [
                _Node(self._mbr([n.rect for n in page]), children=page)
                for page in self._pack([(n.rect, n) for n in level])
            ]
        return level[0]

    def _pack(self, keyed) -> list[list]:
        """Cut (rect, item) pairs into pages of at most node_capacity items."""
        cap = self.node_capacity
        if len(keyed) <= cap:
            return [[item for _, item in keyed]]
        page_count = math.ceil(len(keyed) / cap)
        slice_count = math.ceil(math.sqrt(page_count))
        slice_size = slice_count * cap
        keyed = sorted(keyed, key=lambda kv: kv[0][0] + kv[0][2])  # center x
        pages = []
        for s in range(0, len(keyed), slice_size):
            vertical = sorted(
                keyed[s : s + slice_size], key=lambda kv: kv[0][1] + kv[0][3]
            )  # center y
            for p in range(0, len(vertical), cap):
                pages.append([item for _, item in vertical[p : p + cap]])
        return pages

    @staticmethod
    def _mbr(rects):
        out = rects[0]
        for r in rects[1:]:
            out = _extend(out, r)
        return out

    def query(self, rect) -> list:
        """Payloads of all entries whose rectangle intersects ``rect``."""
        if self._root is None:
            return []
        out = []
        stack = [self._root]
        while stack:
            node = stack.pop()
            if not _intersects(node.rect, rect):
                continue
            if node.entries is not None:
                out.extend(p for r, p in node.entries if _intersects(r, rect))
            else:
                stack.extend(node.children)
        return out


class SpatialIndex:
    """Mutable wrapper: STR tree plus pending inserts and tombstones."""

    def __init__(self, rebuild_threshold: int = 1024, node_capacity: int = 16):
        self.rebuild_threshold = rebuild_threshold
        self.node_capacity = node_capacity
        self._rects: dict = {}  # payload -> rect (live truth)
        self._tree = StrTree([], node_capacity)
        self._pending: dict = {}
        self._removed: set = set()

    def __len__(self) -> int:
        return len(self._rects)

    def add(self, payload, rect) -> None:
        rect = tuple(float(v) for v in rect)
        self._rects[payload] = rect
        self._pending[payload] = rect
        self._removed.discard(payload)
        if len(self._pending) > self.rebuild_threshold:
            self.rebuild()

    def remove(self, payload) -> None:
        if payload in self._rects:
            del self._rects[payload]
            self._pending.pop(payload, None)
            self._removed.add(payload)

    def candidates(self, rect) -> set:
        """Superset of live payloads whose rectangle intersects ``rect``."""
        rect = tuple(float(v) for v in rect)
        found = {p for p in self._tree.query(rect) if p not in self._removed}
        for payload, r in self._pending.items():
            if _intersects(r, rect):
                found.add(payload)
        return found

    def rebuild(self) -> None:
        """Repack everything into one tree; drops tombstones and pending."""
        self._tree = StrTree(
            [(r, p) for p, r in self._rects.items()], self.node_capacity
        )
        self._pending.clear()
        self._removed.clear()
