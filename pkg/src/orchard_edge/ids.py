"""Time-sortable 26-character image identifiers (ULID layout).

48-bit millisecond timestamp + 80 random bits, Crockford base32 encoded.
Within one process, ids generated in the same millisecond are made strictly
monotonic by incrementing the random tail, so lexicographic order equals
arrival order.
"""

import os
import threading
import time

_CROCKFORD = "0123456789ABCDEFGHJKMNPQRSTVWXYZ"

_lock = threading.Lock()
_last_ms = -1
_last_rand = 0


def _encode(value: int, length: int) -> str:
    chars = []
    for _ in range(length):
        chars.append(_CROCKFORD[value & 0x1F])
        value >>= 5
    return "".join(reversed(chars))


def new_image_id(now_ms: int | None = None) -> str:
    global _last_ms, _last_rand
    with _lock:
        ms = int(time.time() * 1000) if now_ms is None else now_ms
        if ms <= _last_ms:
            # same (or rewound) clock tick: bump the tail to stay monotonic
            ms = _last_ms
            _last_rand += 1
        else:
            _last_rand = int.from_bytes(os.urandom(10), "big")
        _last_ms = ms
        return _encode(ms, 10) + _encode(_last_rand & ((1 << 80) - 1), 16)
