"""Run the server: ``python -m georocket.server [-c config.json]``."""

from __future__ import annotations

import argparse
import logging
import signal
import sys
import threading

from ..errors import ConfigError
from .config import load_config
from .httpd import EmbeddedServer


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="georocket-server")
    parser.add_argument("-c", "--config", help="path to the JSON config file")
    parser.add_argument("--host", help="override the listen host")
    parser.add_argument("--port", type=int, help="override the listen port")
    parser.add_argument("-v", "--verbose", action="store_true")
    args = parser.parse_args(argv)

    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    try:
        config = load_config(args.config)
        if args.host:
            config.host = args.host
        if args.port is not None:
            config.port = args.port
        server = EmbeddedServer(config)
    except ConfigError as e:
        print(f"configuration error: {e}", file=sys.stderr)
        return 1

    stop = threading.Event()
    signal.signal(signal.SIGTERM, lambda *_: stop.set())
    signal.signal(signal.SIGINT, lambda *_: stop.set())

    server.start()
    print(f"georocket listening on {server.url}", flush=True)
    stop.wait()
    server.stop()
    return 0


if __name__ == "__main__":
    sys.exit(main())
