"""HTTP/1.1 interface.

Endpoints::

    GET    /                                     service metadata
    POST   /store/{layer}?tags=&props=&fallbackCRS=   import (202 + task id)
    GET    /store/{layer}?search=&format=        merged export (chunked stream)
    DELETE /store/{layer}?search=&all=           delete matching chunks
    PUT    /store/{layer}?search=&properties=&tags=    set properties / add tags
    DELETE /store/{layer}?search=&properties=&tags=    remove properties / tags
    GET    /tasks/{id}                           import task status

Request bodies may be Content-Length or chunked, optionally gzip-encoded.
Search responses stream with chunked transfer encoding; a mid-stream
failure aborts the connection without the terminal chunk so clients cannot
mistake a truncated document for a complete one. Errors are JSON
``{"error": {"code", "message", "offset"?}}``. When all request slots are
busy the server answers 503 instead of queueing unboundedly.
"""

from __future__ import annotations

import contextlib
import json
import logging
import threading
import zlib
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from urllib.parse import parse_qs, unquote, urlsplit

from .. import __version__
from ..errors import (
    GeoRocketError,
    MalformedPathError,
    NotFoundError,
    ParseError,
    UnsupportedEncodingError,
)
from ..merger import content_type
from ..model import Format, MetadataDelta, parse_layer_path
from .app import GeoRocketApp
from .config import ServerConfig

logger = logging.getLogger(__name__)

_STATUS_BY_CODE = {
    "PARSE_ERROR": 400,
    "MALFORMED_BBOX": 400,
    "UNSUPPORTED_FORMAT": 400,
    "UNSUPPORTED_ENCODING": 400,
    "XML_MALFORMED": 400,
    "JSON_MALFORMED": 400,
    "CONFIG": 400,
    "MALFORMED_PATH": 404,
    "NOT_FOUND": 404,
    "DUPLICATE_ID": 409,
    "INCOMPATIBLE_PARENTS": 409,
    "UNKNOWN_ID": 404,
    "IO_ERROR": 500,
    "INTERNAL": 500,
}


def parse_property_specs(raw: str) -> dict[str, str]:
    """Parse comma-separated ``key:value`` pairs; malformed specs raise."""
    out: dict[str, str] = {}
    for spec in raw.split(","):
        if not spec:
            continue
        key, sep, value = spec.partition(":")
        if not sep or not key:
            raise ParseError(f"malformed property {spec!r}; expected key:value")
        out[key] = value
    return out


def parse_tag_list(raw: str) -> list[str]:
    return [t for t in raw.split(",") if t]


class _Handler(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"
    server_version = f"georocket/{__version__}"

    @property
    def app(self) -> GeoRocketApp:
        return self.server.app

    def log_message(self, fmt, *args):
        logger.debug("%s %s", self.address_string(), fmt % args)

    # --- plumbing -----------------------------------------------------------

    def _send_json(self, status: int, payload: dict) -> None:
        body = json.dumps(payload).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def _send_error_payload(self, err: GeoRocketError) -> None:
        status = _STATUS_BY_CODE.get(err.code, 500)
        payload = {"error": {"code": err.code, "message": err.message}}
        if err.offset is not None:
            payload["error"]["offset"] = err.offset
        # request body may be partially consumed; do not reuse the connection
        self.close_connection = True
        self._send_json(status, payload)

    def _send_internal_error(self, exc: Exception) -> None:
        logger.exception("unhandled error serving %s", self.path)
        self.close_connection = True
        try:
            self._send_json(
                500, {"error": {"code": "INTERNAL", "message": str(exc) or type(exc).__name__}}
            )
        except OSError:
            pass

    def _layer(self, segments: list[str]):
        try:
            return parse_layer_path("/".join(unquote(s) for s in segments))
        except MalformedPathError:
            raise
        except Exception as e:  # pragma: no cover - defensive
            raise MalformedPathError(str(e)) from e

    def _route(self):
        parts = urlsplit(self.path)
        segments = [s for s in parts.path.split("/") if s]
        params = {
            k: v[-1] for k, v in parse_qs(parts.query, keep_blank_values=True).items()
        }
        return segments, params

    @contextlib.contextmanager
    def _slot(self):
        if not self.app.request_slots.acquire(blocking=False):
            self._send_json(503, {"error": {"code": "OVERLOADED",
                                            "message": "too many concurrent requests"}})
            yield False
            return
        try:
            yield True
        finally:
            self.app.request_slots.release()

    def _body_blocks(self):
        """Iterator over the (decoded) request body, never fully buffered."""
        encoding = self.headers.get("Content-Encoding", "").lower().strip()
        transfer = self.headers.get("Transfer-Encoding", "").lower()
        if "chunked" in transfer:
            raw = self._chunked_blocks()
        else:
            length = self.headers.get("Content-Length")
            if length is None:
                raise ParseError("request body requires Content-Length or chunked encoding")
            raw = self._sized_blocks(int(length))
        if encoding in ("", "identity"):
            return raw
        if encoding == "gzip":
            return _gunzip(raw)
        raise UnsupportedEncodingError(f"unsupported Content-Encoding {encoding!r}")

    def _sized_blocks(self, length: int, block_size: int = 65536):
        remaining = length
        while remaining > 0:
            block = self.rfile.read(min(block_size, remaining))
            if not block:
                break
            remaining -= len(block)
            yield block

    def _chunked_blocks(self):
        while True:
            line = self.rfile.readline(1024)
            try:
                size = int(line.split(b";")[0].strip(), 16)
            except ValueError:
                raise ParseError("malformed chunked transfer encoding") from None
            if size == 0:
                while True:  # trailers
                    trailer = self.rfile.readline(1024)
                    if trailer in (b"\r\n", b"\n", b""):
                        break
                return
            remaining = size
            while remaining > 0:
                block = self.rfile.read(min(65536, remaining))
                if not block:
                    raise ParseError("truncated chunked body")
                remaining -= len(block)
                yield block
            self.rfile.read(2)  # CRLF after each chunk

    # --- endpoints ------------------------------------------------------------

    def do_GET(self):
        segments, params = self._route()
        try:
            if not segments:
                self._send_json(200, self.app.status())
            elif segments[0] == "tasks" and len(segments) == 2:
                task = self.app.task(segments[1])
                if task is None:
                    raise NotFoundError(f"no such task {segments[1]}")
                self._send_json(200, task.to_dict())
            elif segments[0] == "store":
                with self._slot() as ok:
                    if ok:
                        self._search(segments[1:], params)
            else:
                raise NotFoundError(f"no such endpoint {self.path}")
        except GeoRocketError as e:
            self._send_error_payload(e)
        except Exception as e:
            self._send_internal_error(e)

    def _search(self, layer_segments, params):
        layer = self._layer(layer_segments)
        default_format = (
            Format.GEOJSON if params.get("format", "").lower() in ("geojson", "json")
            else Format.XML
        )
        fmt, stream = self.app.search(layer, params.get("search", ""), default_format)
        self.send_response(200)
        self.send_header("Content-Type", content_type(fmt))
        self.send_header("Transfer-Encoding", "chunked")
        self.end_headers()
        try:
            for piece in stream:
                if piece:
                    self.wfile.write(b"%x\r\n%s\r\n" % (len(piece), piece))
            self.wfile.write(b"0\r\n\r\n")
        except Exception:
            # abort without the terminal chunk: the client sees a truncated
            # transfer instead of a silently incomplete document
            logger.exception("search stream aborted")
            self.close_connection = True

    def do_POST(self):
        segments, params = self._route()
        try:
            if not segments or segments[0] != "store":
                raise NotFoundError(f"no such endpoint {self.path}")
            with self._slot() as ok:
                if not ok:
                    return
                layer = self._layer(segments[1:])
                tags = parse_tag_list(params.get("tags", ""))
                properties = parse_property_specs(params.get("props", params.get("properties", "")))
                task = self.app.import_stream(
                    layer,
                    self._body_blocks(),
                    tags=tags,
                    properties=properties,
                    fallback_crs=params.get("fallbackCRS") or None,
                )
                self._send_json(202, {"taskId": task.id,
                                      "chunksWritten": task.chunks_written})
        except GeoRocketError as e:
            self._send_error_payload(e)
        except Exception as e:
            self._send_internal_error(e)

    def do_DELETE(self):
        segments, params = self._route()
        try:
            if not segments or segments[0] != "store":
                raise NotFoundError(f"no such endpoint {self.path}")
            with self._slot() as ok:
                if not ok:
                    return
                layer = self._layer(segments[1:])
                search = params.get("search", "")
                if "properties" in params or "tags" in params:
                    delta = MetadataDelta(
                        remove_properties=frozenset(
                            parse_tag_list(params.get("properties", ""))
                        ),
                        remove_tags=frozenset(parse_tag_list(params.get("tags", ""))),
                    )
                    count = self.app.update_metadata(layer, search, delta)
                    self._send_json(200, {"updated": count})
                else:
                    allow_all = params.get("all", "").lower() == "true"
                    count = self.app.delete(layer, search, allow_all)
                    self._send_json(200, {"deleted": count})
        except GeoRocketError as e:
            self._send_error_payload(e)
        except Exception as e:
            self._send_internal_error(e)

    def do_PUT(self):
        segments, params = self._route()
        try:
            if not segments or segments[0] != "store":
                raise NotFoundError(f"no such endpoint {self.path}")
            with self._slot() as ok:
                if not ok:
                    return
                layer = self._layer(segments[1:])
                delta = MetadataDelta(
                    set_properties=parse_property_specs(
                        params.get("properties", params.get("props", ""))
                    ),
                    add_tags=frozenset(parse_tag_list(params.get("tags", ""))),
                )
                count = self.app.update_metadata(layer, params.get("search", ""), delta)
                self._send_json(200, {"updated": count})
        except GeoRocketError as e:
            self._send_error_payload(e)
        except Exception as e:
            self._send_internal_error(e)


def _gunzip(blocks):
    decomp = zlib.decompressobj(16 + zlib.MAX_WBITS)
    try:
        for block in blocks:
            out = decomp.decompress(block)
            if out:
                yield out
        tail = decomp.flush()
        if tail:
            yield tail
    except zlib.error as e:
        raise UnsupportedEncodingError(f"invalid gzip body: {e}") from e


class GeoRocketHTTPServer(ThreadingHTTPServer):
    daemon_threads = True
    allow_reuse_address = True

    def __init__(self, config: ServerConfig, app: GeoRocketApp | None = None):
        self.app = app or GeoRocketApp(config)
        super().__init__((config.host, config.port), _Handler)


class EmbeddedServer:
    """Run the HTTP server on a background thread (tests, __main__)."""

    def __init__(self, config: ServerConfig):
        self.httpd = GeoRocketHTTPServer(config)
        self._thread: threading.Thread | None = None

    @property
    def app(self) -> GeoRocketApp:
        return self.httpd.app

    @property
    def port(self) -> int:
        return self.httpd.server_address[1]

    @property
    def url(self) -> str:
        host = self.httpd.server_address[0]
        return f"http://{host}:{self.port}"

    def start(self) -> "EmbeddedServer":
        self._thread = threading.Thread(
            target=self.httpd.serve_forever, daemon=True, name="georocket-http"
        )
        self._thread.start()
        return self

    def stop(self) -> None:
        self.httpd.shutdown()
        self.httpd.server_close()
        if self._thread is not None:
            self._thread.join(timeout=10)
        self.app.close()

    def __enter__(self) -> "EmbeddedServer":
        return self.start()

    def __exit__(self, *exc) -> None:
        self.stop()
