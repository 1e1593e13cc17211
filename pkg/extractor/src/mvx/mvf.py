"""Binary feature file writer (and reader, for round-trip checks).

Layout, little-endian throughout:

    magic   4 bytes  b"MVF1"
    version u32      1
    dim     u32
    count   u64      number of records
    records count x (object_index u64, dim x f32)

This matches the retrieval engine's feature format byte for byte; files
written here load there unchanged.
"""

import os
import struct
import tempfile
from pathlib import Path

from .errors import FormatError

MAGIC = b"MVF1"
VERSION = 1
_HEADER = struct.Struct("<4sIIQ")
_INDEX = struct.Struct("<Q")


def features_to_bytes(dim: int, records) -> bytes:
    """Serialize (object_index, vector) pairs; vectors are float lists."""
    records = list(records)
    parts = [_HEADER.pack(MAGIC, VERSION, dim, len(records))]
    vector_format = struct.Struct(f"<{dim}f")
    for object_index, vector in records:
        if len(vector) != dim:
            raise FormatError(f"vector of length {len(vector)} does not match dim {dim}")
        parts.append(_INDEX.pack(object_index))
        parts.append(vector_format.pack(*vector))
    return b"".join(parts)


def features_from_bytes(buf: bytes):
    """Parse a feature payload into (dim, [(object_index, vector), ...])."""
    if len(buf) < _HEADER.size:
        raise FormatError(f"truncated header: need {_HEADER.size} bytes, have {len(buf)}")
    magic, version, dim, count = _HEADER.unpack_from(buf, 0)
    if magic != MAGIC:
        raise FormatError(f"bad magic {magic!r}, expected {MAGIC!r}")
    if version != VERSION:
        raise FormatError(f"unsupported version {version}, expected {VERSION}")
    vector_format = struct.Struct(f"<{dim}f")
    record_size = _INDEX.size + vector_format.size
    expected = _HEADER.size + count * record_size
    if len(buf) != expected:
        raise FormatError(f"payload is {len(buf)} bytes, expected {expected}")
    records = []
    offset = _HEADER.size
    for _ in range(count):
        (object_index,) = _INDEX.unpack_from(buf, offset)
        vector = list(vector_format.unpack_from(buf, offset + _INDEX.size))
        records.append((object_index, vector))
        offset += record_size
    return dim, records


def write_atomic(path, payload: bytes) -> None:
    """Write via a temp file in the same directory, then rename."""
    path = Path(path)
    fd, tmp_name = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "wb") as handle:
            handle.write(payload)
        os.replace(tmp_name, path)
    except BaseException:
        os.unlink(tmp_name)
        raise
