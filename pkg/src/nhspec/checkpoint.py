"""Binary checkpoint format.

Layout (all little-endian)::

    magic      4 bytes   b"NHSP"
    version    u32
    dim        f64
    n          f64
    period     f64
    space_tag  u32       0 = Eulerian, 1 = Lagrangian
    ncomp      u32
    payload    ncomp * n**dim complex128, components in order, each in
               row-major order of ascending wavenumber index -n/2 .. n/2-1
    sections   zero or more of: tag (4 bytes), u64 byte length, bytes

Known section tags are ``META`` (UTF-8 JSON) and ``LMAP`` (a flow map stored
as a nested checkpoint).
"""

from __future__ import annotations

import io
import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import CheckpointFormatError
from .grid import EULER, LAGRANGE, Grid

MAGIC = b"NHSP"
VERSION = 1
_HEADER = struct.Struct("<4sIdddII")
_SECTION = struct.Struct("<4sQ")
_TAGS = {EULER: 0, LAGRANGE: 1}
_TAGS_INV = {v: k for k, v in _TAGS.items()}


@dataclass
class Checkpoint:
    grid: Grid
    space: str
    components: np.ndarray  # (ncomp, *grid.shape), FFT-native order
    sections: dict[bytes, bytes] = field(default_factory=dict)

    @property
    def meta(self) -> dict:
        raw = self.sections.get(b"META")
        return json.loads(raw.decode()) if raw else {}


def encode(ck: Checkpoint) -> bytes:
    g = ck.grid
    comps = np.asarray(ck.components, dtype=complex).reshape((-1,) + g.shape)
    buf = io.BytesIO()
    buf.write(_HEADER.pack(MAGIC, VERSION, float(g.dim), float(g.n), g.period,
                           _TAGS[ck.space], comps.shape[0]))
    ordered = np.fft.fftshift(comps, axes=g.axes)
    buf.write(np.ascontiguousarray(ordered).astype("<c16").tobytes())
    for tag, payload in ck.sections.items():
        if len(tag) != 4:
            raise ValueError("section tags are four bytes")
        buf.write(_SECTION.pack(tag, len(payload)))
        buf.write(payload)
    return buf.getvalue()


def decode(data: bytes) -> Checkpoint:
    if len(data) < _HEADER.size:
        raise CheckpointFormatError("file shorter than header")
    magic, version, dim, n, period, tag, ncomp = _HEADER.unpack_from(data, 0)
    if magic != MAGIC:
        raise CheckpointFormatError(f"bad magic {magic!r}")
    if version != VERSION:
        raise CheckpointFormatError(f"unsupported version {version}")
    if tag not in _TAGS_INV:
        raise CheckpointFormatError(f"unknown space tag {tag}")
    grid = Grid(int(dim), int(n), period)
    count = ncomp * grid.npoints
    offset = _HEADER.size
    end = offset + 16 * count
    if len(data) < end:
        raise CheckpointFormatError("truncated coefficient payload")
    comps = np.frombuffer(data, dtype="<c16", count=count, offset=offset)
    comps = comps.reshape((ncomp,) + grid.shape).astype(complex)
    comps = np.fft.ifftshift(comps, axes=grid.axes)
    sections = {}
    pos = end
    while pos < len(data):
        if pos + _SECTION.size > len(data):
            raise CheckpointFormatError("truncated section header")
        stag, length = _SECTION.unpack_from(data, pos)
        pos += _SECTION.size
        if pos + length > len(data):
            raise CheckpointFormatError(f"truncated section {stag!r}")
        sections[stag] = bytes(data[pos : pos + length])
        pos += length
    return Checkpoint(grid, _TAGS_INV[tag], comps, sections)


def save(path, ck: Checkpoint) -> None:
    Path(path).write_bytes(encode(ck))


def load(path) -> Checkpoint:
    return decode(Path(path).read_bytes())


def describe(ck: Checkpoint) -> dict:
    """Summary used by the ``inspect`` command."""
    g = ck.grid
    energy = 0.5 * g.volume * float(np.sum(np.abs(ck.components) ** 2))
    out = {
        "dim": g.dim,
        "n": g.n,
        "period": g.period,
        "space": ck.space,
        "components": int(ck.components.shape[0]),
        "half_l2_squared": energy,
        "sections": sorted(t.decode(errors="replace") for t in ck.sections),
    }
    if b"META" in ck.sections:
        out["meta"] = ck.meta
    if b"LMAP" in ck.sections:
        out["flow_map"] = describe(decode(ck.sections[b"LMAP"]))
    return out
