"""Streaming XML splitter.

One forward pass divides a document into one chunk per direct child element
of the root, regardless of element names, so no schema knowledge is needed.
Chunk content is the child's verbatim byte range. The XML declaration and the
root start tag are kept verbatim as enclosing context; the root end tag is
synthesized from the root name (it must be emitted before the input ends).

Comments and processing instructions between features are discarded, as is
any DOCTYPE. Character data directly under the root is expected to be
whitespace and is dropped. Input must be UTF-8 (or US-ASCII); an XML
declaration naming another encoding is rejected.
"""

from __future__ import annotations

import re

from ..errors import UnsupportedEncodingError, XmlMalformedError
from ..model import XmlParents
from .feed import ByteFeed
from .types import RawChunk

_WS = b" \t\r\n"
_TAG_DELIM = re.compile(rb"[>\"']")
_NAME_END = re.compile(rb"[ \t\r\n/>]")
_ATTR_RE = re.compile(rb"([^\s=/>'\"]+)\s*=\s*(?:\"([^\"]*)\"|'([^']*)')")
_SRS_NAME_RE = re.compile(rb"(?<![-\w:.])srsName\s*=\s*(?:\"([^\"]*)\"|'([^']*)')")
_ENCODING_RE = re.compile(rb"encoding\s*=\s*(?:\"([^\"]*)\"|'([^']*)')")
_ACCEPTED_ENCODINGS = {"utf-8", "utf8", "us-ascii", "ascii"}


def parse_attributes(tag: bytes) -> list[tuple[str, str]]:
    """Attribute name/value pairs of a start tag, verbatim (entities kept)."""
    out = []
    for m in _ATTR_RE.finditer(tag):
        value = m.group(2) if m.group(2) is not None else m.group(3)
        out.append((m.group(1).decode("utf-8", "replace"), value.decode("utf-8", "replace")))
    return out


def local_name(name: bytes) -> str:
    return name.rpartition(b":")[2].decode("utf-8", "replace")


def xml_events(feed: ByteFeed, start: int = 0):
    """Yield (kind, abs_start, abs_end, ...) tuples for the raw XML structure.

    Kinds: text, pi, comment, doctype, cdata, start (plus name and a
    self-closing flag), end (plus name). Raises XmlMalformedError with the
    byte offset on structural problems; higher-level balance checks are the
    caller's job.
    """
    pos = start
    while True:
        lt = feed.find(b"<", pos)
        if lt == -1:
            end = feed.end()
            if end > pos:
                yield ("text", pos, end)
            return
        if lt > pos:
            yield ("text", pos, lt)
        nxt = feed.byte_at(lt + 1)
        if nxt is None:
            raise XmlMalformedError("input ends inside a tag", offset=lt)
        if nxt == 0x3F:  # ?
            end = feed.find(b"?>", lt + 2)
            if end == -1:
                raise XmlMalformedError("unterminated processing instruction", offset=lt)
            yield ("pi", lt, end + 2)
            pos = end + 2
        elif nxt == 0x21:  # !
            if feed.startswith(b"<!--", lt):
                end = feed.find(b"-->", lt + 4)
                if end == -1:
                    raise XmlMalformedError("unterminated comment", offset=lt)
                yield ("comment", lt, end + 3)
                pos = end + 3
            elif feed.startswith(b"<![CDATA[", lt):
                end = feed.find(b"]]>", lt + 9)
                if end == -1:
                    raise XmlMalformedError("unterminated CDATA section", offset=lt)
                yield ("cdata", lt, end + 3)
                pos = end + 3
            else:
                pos = _scan_markup_decl(feed, lt)
                yield ("doctype", lt, pos)
        elif nxt == 0x2F:  # /
            gt = feed.find(b">", lt + 2)
            if gt == -1:
                raise XmlMalformedError("unterminated end tag", offset=lt)
            name = feed.slice(lt + 2, gt).strip(_WS)
            if not name or any(c in name for c in _WS):
                raise XmlMalformedError("malformed end tag", offset=lt)
            yield ("end", lt, gt + 1, name)
            pos = gt + 1
        else:
            gt = _scan_start_tag(feed, lt)
            tag = feed.slice(lt, gt + 1)
            m = _NAME_END.search(tag, 1)
            name = tag[1 : m.start()] if m else tag[1:-1]
            if not name:
                raise XmlMalformedError("missing element name", offset=lt)
            selfclosing = tag[-2:-1] == b"/"
            yield ("start", lt, gt + 1, bytes(name), selfclosing)
            pos = gt + 1


def _scan_start_tag(feed: ByteFeed, lt: int) -> int:
    """Index of the closing ``>`` of a start tag, skipping quoted values."""
    i = lt + 1
    while True:
        j = feed.search(_TAG_DELIM, i)
        if j == -1:
            raise XmlMalformedError("unterminated start tag", offset=lt)
        c = feed.byte_at(j)
        if c == 0x3E:  # >
            return j
        q = feed.find(bytes([c]), j + 1)
        if q == -1:
            raise XmlMalformedError("unterminated attribute value", offset=j)
        i = q + 1


def _scan_markup_decl(feed: ByteFeed, lt: int) -> int:
    """End offset of a <! ...> declaration, honouring [...] subsets and quotes."""
    depth = 0
    i = lt + 2
    pat = re.compile(rb"[>\[\]\"']")
    while True:
        j = feed.search(pat, i)
        if j == -1:
            raise XmlMalformedError("unterminated markup declaration", offset=lt)
        c = feed.byte_at(j)
        if c == 0x5B:  # [
            depth += 1
        elif c == 0x5D:  # ]
            depth = max(0, depth - 1)
        elif c in (0x22, 0x27):  # quotes
            q = feed.find(bytes([c]), j + 1)
            if q == -1:
                raise XmlMalformedError("unterminated literal in markup declaration", offset=j)
            j = q
        elif depth == 0:  # >
            return j + 1
        i = j + 1


class XmlSplitter:
    """Splits one XML document; ``max_buffered`` reports peak buffered bytes."""

    def __init__(self, compact_threshold: int = 1 << 18):
        self._compact_threshold = compact_threshold
        self._feed: ByteFeed | None = None

    @property
    def max_buffered(self) -> int:
        return self._feed.max_buffered if self._feed else 0

    def split(self, blocks):
        """Yield RawChunk for each direct child element of the root."""
        feed = self._feed = ByteFeed(blocks, self._compact_threshold)
        pos = 3 if feed.startswith(b"\xef\xbb\xbf", 0) else 0
        prolog_end = pos

        declaration = None
        first = feed.skip_ws(pos)
        if first != -1 and feed.startswith(b"<?xml", first) and feed.byte_at(first + 5) in (
            0x20, 0x09, 0x0D, 0x0A, 0x3F,
        ):
            end = feed.find(b"?>", first)
            if end == -1:
                raise XmlMalformedError("unterminated XML declaration", offset=first)
            decl = feed.slice(first, end + 2)
            m = _ENCODING_RE.search(decl)
            if m:
                enc = (m.group(1) or m.group(2)).decode("ascii", "replace").lower()
                if enc not in _ACCEPTED_ENCODINGS:
                    raise UnsupportedEncodingError(f"unsupported encoding {enc!r}")
            declaration = feed.slice(0, end + 2)
            prolog_end = end + 2
        elif pos:
            declaration = feed.slice(0, pos)

        stack: list[bytes] = []
        parents = None
        doc_crs = None
        env_crs = None
        chunk_start = None
        chunk_name = b""
        sequence = 0
        root_closed = False

        for event in xml_events(feed, prolog_end):
            kind, a, b = event[0], event[1], event[2]
            depth = len(stack)
            if kind == "text":
                if depth == 0 and feed.slice(a, b).strip(_WS):
                    raise XmlMalformedError("character data outside the root element", offset=a)
            elif kind == "cdata":
                if depth == 0:
                    raise XmlMalformedError("CDATA outside the root element", offset=a)
            elif kind in ("pi", "comment", "doctype"):
                pass  # dropped when not inside a chunk
            elif kind == "start":
                name, selfclosing = event[3], event[4]
                if depth == 0:
                    if parents is not None or root_closed:
                        raise XmlMalformedError("more than one root element", offset=a)
                    root_start = feed.slice(a, b)
                    if selfclosing:
                        root_start = root_start[:-2].rstrip(_WS) + b">"
                        root_closed = True
                    for attr, value in parse_attributes(root_start):
                        if attr.rpartition(":")[2] == "srsName":
                            doc_crs = value
                            break
                    parents = XmlParents(
                        root_start=root_start,
                        root_end=b"</" + name + b">",
                        declaration=declaration,
                    )
                    if not selfclosing:
                        stack.append(name)
                else:
                    if depth == 1 and chunk_start is None:
                        chunk_start = a
                        chunk_name = name
                        feed.retain_from(a)
                    if not selfclosing:
                        stack.append(name)
                    elif depth == 1:
                        content = feed.slice(a, b)
                        yield _make_chunk(content, parents, sequence, env_crs, doc_crs)
                        if local_name(chunk_name) in ("boundedBy", "Envelope"):
                            env_crs = _first_srs_name(content) or env_crs
                        sequence += 1
                        chunk_start = None
                        feed.retain_from(b)
            elif kind == "end":
                name = event[3]
                if not stack:
                    raise XmlMalformedError(
                        f"unexpected end tag </{name.decode('utf-8', 'replace')}>", offset=a
                    )
                if stack[-1] != name:
                    raise XmlMalformedError(
                        f"end tag </{name.decode('utf-8', 'replace')}> does not match "
                        f"<{stack[-1].decode('utf-8', 'replace')}>",
                        offset=a,
                    )
                stack.pop()
                if len(stack) == 1 and chunk_start is not None:
                    content = feed.slice(chunk_start, b)
                    yield _make_chunk(content, parents, sequence, env_crs, doc_crs)
                    if local_name(chunk_name) in ("boundedBy", "Envelope"):
                        env_crs = _first_srs_name(content) or env_crs
                    sequence += 1
                    chunk_start = None
                    feed.retain_from(b)
                elif not stack:
                    root_closed = True
            if chunk_start is None:
                feed.retain_from(b)

        if parents is None:
            raise XmlMalformedError("no root element", offset=feed.end())
        if stack:
            raise XmlMalformedError("input ends with unclosed elements", offset=feed.end())


def _make_chunk(content, parents, sequence, env_crs, doc_crs) -> RawChunk:
    crs = _first_srs_name(content) or env_crs or doc_crs
    return RawChunk(content=content, parents=parents, sequence=sequence, crs_hint=crs)


def _first_srs_name(content: bytes) -> str | None:
    m = _SRS_NAME_RE.search(content)
    if not m:
        return None
    return (m.group(1) if m.group(1) is not None else m.group(2)).decode("utf-8", "replace")


def split_xml(blocks):
    """Divide an XML byte stream into one RawChunk per direct child of the root."""
    return XmlSplitter().split(blocks)
