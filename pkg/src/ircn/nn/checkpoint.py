"""Binary tensor container and trainer checkpoints.

Weight file layout, all little-endian:

    magic "IRCN" | version u32 | tensor count u32
    per tensor: name_len u32 | name UTF-8 | rank u32 | dims u32 * rank | raw f32

Arrays are stored as float32 in C order; a float32 array round-trips
bit-exactly.  A trainer checkpoint is the same blob prefixed with a small
length-framed key=value header (phase, epoch, step, seed, config hash) so a
resumed run can restart from the exact position.
"""

from __future__ import annotations

import struct

import numpy as np

MAGIC = b"IRCN"
VERSION = 1
HEADER_MAGIC = b"IRCNHDR0"


def _pack_tensors(tensors: dict[str, np.ndarray]) -> bytes:
    parts = [MAGIC, struct.pack("<II", VERSION, len(tensors))]
    for name, arr in tensors.items():
        data = np.asarray(arr).astype("<f4", order="C", copy=False)
        encoded = name.encode("utf-8")
        parts.append(struct.pack("<I", len(encoded)))
        parts.append(encoded)
        parts.append(struct.pack("<I", data.ndim))
        parts.append(struct.pack(f"<{data.ndim}I", *data.shape))
        parts.append(data.tobytes())
    return b"".join(parts)


class _Reader:
    def __init__(self, buf: bytes, pos: int = 0):
        self.buf = buf
        self.pos = pos

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.buf):
            raise ValueError("truncated tensor file")
        out = self.buf[self.pos : self.pos + n]
        self.pos += n
        return out

    def u32(self) -> int:
        return struct.unpack("<I", self.take(4))[0]


def _unpack_tensors(reader: _Reader) -> dict[str, np.ndarray]:
    if reader.take(4) != MAGIC:
        raise ValueError("not an IRCN tensor file (bad magic)")
    version = reader.u32()
    if version != VERSION:
        raise ValueError(f"unsupported tensor file version {version}")
    count = reader.u32()
    tensors: dict[str, np.ndarray] = {}
    for _ in range(count):
        name = reader.take(reader.u32()).decode("utf-8")
        rank = reader.u32()
        dims = struct.unpack(f"<{rank}I", reader.take(4 * rank)) if rank else ()
        size = int(np.prod(dims)) if rank else 1
        arr = np.frombuffer(reader.take(4 * size), dtype="<f4").reshape(dims)
        tensors[name] = arr.astype(np.float32, copy=True)
    if reader.pos != len(reader.buf):
        raise ValueError("trailing bytes after last tensor")
    return tensors


def save_tensors(path, tensors: dict[str, np.ndarray]) -> None:
    with open(path, "wb") as fh:
        fh.write(_pack_tensors(tensors))


def load_tensors(path) -> dict[str, np.ndarray]:
    with open(path, "rb") as fh:
        return _unpack_tensors(_Reader(fh.read()))


def save_checkpoint(path, header: dict[str, str], tensors: dict[str, np.ndarray]) -> None:
    lines = "".join(f"{k}={header[k]}\n" for k in header)
    encoded = lines.encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(HEADER_MAGIC)
        fh.write(struct.pack("<I", len(encoded)))
        fh.write(encoded)
        fh.write(_pack_tensors(tensors))


def load_checkpoint(path) -> tuple[dict[str, str], dict[str, np.ndarray]]:
    with open(path, "rb") as fh:
        buf = fh.read()
    reader = _Reader(buf)
    if reader.take(8) != HEADER_MAGIC:
        raise ValueError("not a trainer checkpoint (bad magic)")
    header: dict[str, str] = {}
    for line in reader.take(reader.u32()).decode("utf-8").splitlines():
        if line:
            key, _, value = line.partition("=")
            header[key] = value
    return header, _unpack_tensors(reader)
