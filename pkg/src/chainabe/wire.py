"""Canonical tagged binary codec for protocol values.

Used for ledger state hashing, transaction transcripts and the CLI state
directory.  Encodings are deterministic: dict entries are sorted by their
encoded key, and tuples and lists encode identically (both decode as tuple).
"""

import dataclasses
import struct

from .algebra import G1Point, G2Point, GTPoint

_NONE, _FALSE, _TRUE, _INT, _BYTES, _STR, _SEQ, _MAP, _RECORD = range(9)
_POINTS = {cls.tag: cls for cls in (G1Point, G2Point, GTPoint)}

_records = {}


def record(cls):
    """Register a dataclass so it round-trips through the codec by name."""
    _records[cls.__name__] = cls
    return cls


def _u32(n):
    return struct.pack(">I", n)


def encode(obj):
    out = bytearray()
    _enc(obj, out)
    return bytes(out)


def _enc(obj, out):
    if obj is None:
        out.append(_NONE)
    elif obj is True:
        out.append(_TRUE)
    elif obj is False:
        out.append(_FALSE)
    elif isinstance(obj, int):
        n = (obj.bit_length() + 8) // 8
        out.append(_INT)
        out += _u32(n) + obj.to_bytes(n, "big", signed=True)
    elif isinstance(obj, (bytes, bytearray)):
        out.append(_BYTES)
        out += _u32(len(obj)) + bytes(obj)
    elif isinstance(obj, str):
        data = obj.encode()
        out.append(_STR)
        out += _u32(len(data)) + data
    elif isinstance(obj, (G1Point, G2Point, GTPoint)):
        out += obj.encode()
    elif isinstance(obj, (tuple, list)):
        out.append(_SEQ)
        out += _u32(len(obj))
        for item in obj:
            _enc(item, out)
    elif isinstance(obj, (dict, set, frozenset)):
        items = obj.items() if isinstance(obj, dict) else ((k, None) for k in obj)
        pairs = sorted((encode(k), encode(v)) for k, v in items)
        out.append(_MAP)
        out += _u32(len(pairs))
        for k, v in pairs:
            out += k + v
    elif dataclasses.is_dataclass(obj) and type(obj).__name__ in _records:
        name = type(obj).__name__.encode()
        out.append(_RECORD)
        out += _u32(len(name)) + name
        _enc(tuple(getattr(obj, f.name) for f in dataclasses.fields(obj)), out)
    else:
        raise TypeError(f"cannot encode {type(obj).__name__}")


def decode(data):
    obj, pos = _dec(memoryview(bytes(data)), 0)
    if pos != len(data):
        raise ValueError("trailing bytes after encoded value")
    return obj


def _take(buf, pos, n):
    if pos + n > len(buf):
        raise ValueError("truncated encoding")
    return bytes(buf[pos:pos + n]), pos + n


def _dec(buf, pos):
    tag, pos = _take(buf, pos, 1)
    tag = tag[0]
    if tag == _NONE:
        return None, pos
    if tag == _TRUE:
        return True, pos
    if tag == _FALSE:
        return False, pos
    if tag in _POINTS:
        cls = _POINTS[tag]
        raw, pos = _take(buf, pos, cls.size)
        return cls.from_bytes(raw), pos
    if tag in (_INT, _BYTES, _STR, _RECORD):
        n, pos = _take(buf, pos, 4)
        raw, pos = _take(buf, pos, struct.unpack(">I", n)[0])
        if tag == _INT:
            return int.from_bytes(raw, "big", signed=True), pos
        if tag == _BYTES:
            return raw, pos
        if tag == _STR:
            return raw.decode(), pos
        cls = _records.get(raw.decode())
        if cls is None:
            raise ValueError(f"unknown record type {raw.decode()!r}")
        fields, pos = _dec(buf, pos)
        return cls(*fields), pos
    if tag in (_SEQ, _MAP):
        n, pos = _take(buf, pos, 4)
        n = struct.unpack(">I", n)[0]
        if tag == _SEQ:
            items = []
            for _ in range(n):
                item, pos = _dec(buf, pos)
                items.append(item)
            return tuple(items), pos
        mapping = {}
        for _ in range(n):
            k, pos = _dec(buf, pos)
            v, pos = _dec(buf, pos)
            mapping[k] = v
        return mapping, pos
    raise ValueError(f"unknown tag 0x{tag:02x}")
