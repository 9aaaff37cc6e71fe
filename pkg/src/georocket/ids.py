"""Time-ordered chunk identifiers.

Ids are 26-character Crockford base32 strings encoding a 48-bit millisecond
timestamp followed by 80 bits of randomness. Lexicographic order therefore
approximates generation order, and ids generated by one process are strictly
increasing (a same-millisecond id increments the random part).
"""

from __future__ import annotations

import os
import threading
import time

_ALPHABET = "0123456789ABCDEFGHJKMNPQRSTVWXYZ"
_RAND_BITS = 80
_RAND_MASK = (1 << _RAND_BITS) - 1

_lock = threading.Lock()
_last_ms = -1
_last_rand = 0


def _encode(value: int, length: int) -> str:
    chars = []
    for _ in range(length):
        chars.append(_ALPHABET[value & 0x1F])
        value >>= 5
    return "".join(reversed(chars))


def new_chunk_id() -> str:
    """Return a fresh id, strictly greater than any previous one from this process."""
    global _last_ms, _last_rand
    with _lock:
        now = time.time_ns() // 1_000_000
        if now > _last_ms:
            _last_ms = now
            _last_rand = int.from_bytes(os.urandom(10), "big")
        else:
            _last_rand += 1
            if _last_rand > _RAND_MASK:
                # random part exhausted within one millisecond; borrow from time
                _last_ms += 1
                _last_rand = 0
        return _encode((_last_ms << _RAND_BITS) | _last_rand, 26)
