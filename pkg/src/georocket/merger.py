"""Joins chunks matching a query into one valid output document.

Chunks from different imports may be merged when their enclosing contexts
are compatible; for XML the merged root start tag carries the union of all
namespace declarations and attributes. Output is produced incrementally
(first bytes before the last chunk is read), so memory use is independent
of the number of chunks.

GeoJSON exports always have the shape
``{"type":"FeatureCollection","features":[...]}``; a standalone chunk is
wrapped into a collection.
"""

from __future__ import annotations

from .errors import IncompatibleParentsError
from .model import CollectionKind, Format, GeoJsonParents, XmlParents
from .splitter.xmlsplit import parse_attributes

EMPTY_XML = b'<?xml version="1.0" encoding="UTF-8"?>\n<FeatureCollection/>'
EMPTY_GEOJSON = b'{"type":"FeatureCollection","features":[]}'

_CONTENT_TYPES = {
    Format.XML: "application/xml",
    Format.GEOJSON: "application/geo+json",
}


def content_type(fmt: Format) -> str:
    return _CONTENT_TYPES[fmt]


def empty_document(fmt: Format) -> bytes:
    return EMPTY_XML if fmt is Format.XML else EMPTY_GEOJSON


def _root_name(root_start: bytes) -> bytes:
    body = root_start[1:-1].strip()
    for i, c in enumerate(body):
        if c in b" \t\r\n/":
            return body[:i]
    return body.rstrip(b"/")


def _escape_attr(value: str) -> tuple[str, str]:
    """Quote choice and escaped text for re-emitting a raw attribute value."""
    if '"' not in value:
        return '"', value
    if "'" not in value:
        return "'", value
    return '"', value.replace('"', "&quot;")


def merge_parents(parents_list):
    """Combine the enclosing contexts of all chunks being exported.

    XML contexts must share the root's local name, must not bind one
    namespace prefix to different URIs, and must not give one attribute
    conflicting values; the result carries the union of all attributes.
    Mixed XML/GeoJSON input is rejected.
    """
    parents_list = list(parents_list)
    if not parents_list:
        raise ValueError("merge_parents requires at least one parents record")
    first = parents_list[0]
    if isinstance(first, GeoJsonParents):
        if not all(isinstance(p, GeoJsonParents) for p in parents_list):
            raise IncompatibleParentsError("cannot merge XML and GeoJSON chunks")
        if any(p.collection_kind is CollectionKind.FEATURE_COLLECTION for p in parents_list):
            return GeoJsonParents(CollectionKind.FEATURE_COLLECTION)
        return GeoJsonParents(CollectionKind.STANDALONE)

    if not all(isinstance(p, XmlParents) for p in parents_list):
        raise IncompatibleParentsError("cannot merge XML and GeoJSON chunks")
    if all(p == first for p in parents_list):
        return first

    name = _root_name(first.root_start)
    local = name.rpartition(b":")[2]
    merged: dict[str, str] = {}
    order: list[str] = []
    for parents in parents_list:
        other = _root_name(parents.root_start)
        if other.rpartition(b":")[2] != local:
            raise IncompatibleParentsError(
                f"root elements differ: {local.decode('utf-8', 'replace')!r} vs "
                f"{other.rpartition(b':')[2].decode('utf-8', 'replace')!r}"
            )
        for attr, value in parse_attributes(parents.root_start):
            if attr in merged:
                if merged[attr] != value:
                    kind = "namespace" if attr.startswith("xmlns") else "attribute"
                    raise IncompatibleParentsError(
                        f"conflicting {kind} {attr!r}: {merged[attr]!r} vs {value!r}"
                    )
            else:
                merged[attr] = value
                order.append(attr)

    parts = [b"<", name]
    for attr in order:
        quote, value = _escape_attr(merged[attr])
        parts.append(f" {attr}={quote}{value}{quote}".encode("utf-8", "surrogatepass"))
    parts.append(b">")
    declaration = next((p.declaration for p in parents_list if p.declaration), None)
    return XmlParents(
        root_start=b"".join(parts),
        root_end=b"</" + name + b">",
        declaration=declaration,
    )


def merge(entries, parents_list, default_format: Format = Format.XML):
    """Stream a merged document; returns (format, byte iterator).

    ``entries`` must be ordered by (import timestamp, sequence) and
    ``parents_list`` must hold the distinct parents of those entries.
    With no chunks at all, an empty collection document of
    ``default_format`` is produced.
    """
    parents_list = list(parents_list)
    if not parents_list:
        return default_format, iter([empty_document(default_format)])
    merged = merge_parents(parents_list)
    if isinstance(merged, GeoJsonParents):
        return Format.GEOJSON, _merge_geojson(entries)
    return Format.XML, _merge_xml(entries, merged)


def _merge_xml(entries, parents: XmlParents):
    if parents.declaration:
        yield parents.declaration
        if not parents.declaration.endswith(b"\n"):
            yield b"\n"
    yield parents.root_start
    for entry in entries:
        if entry.metadata.format is not Format.XML:
            raise IncompatibleParentsError("cannot merge XML and GeoJSON chunks")
        yield b"\n"
        yield entry.content
    yield b"\n"
    yield parents.root_end


def _merge_geojson(entries):
    yield b'{"type":"FeatureCollection","features":['
    first = True
    for entry in entries:
        if entry.metadata.format is not Format.GEOJSON:
            raise IncompatibleParentsError("cannot merge XML and GeoJSON chunks")
        if not first:
            yield b","
        first = False
        yield entry.content
    yield b"]}"
