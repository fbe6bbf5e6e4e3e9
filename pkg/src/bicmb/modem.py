"""Gray-mapped QAM, spatial and per-stream bit interleaving, frame layout.

Index conventions: coded-bit positions ``u``, time instants ``k``, stream
positions ``l`` and label bit positions ``i`` are 0-based.  Stream ``l``
is carried on subchannel ``l + 1``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .channel import ConfigurationError

__all__ = [
    "Constellation",
    "make_qam",
    "SpatialInterleaver",
    "rotating",
    "block_pattern",
    "spatial_map",
    "BitInterleaver",
    "FrameLayout",
    "map_symbols",
    "demap_symbols",
]


def _gray(n: int) -> int:
    return n ^ (n >> 1)


@dataclass(frozen=True, eq=False)
class Constellation:
    m: int
    points: np.ndarray  # indexed by integer label, MSB = label bit 0
    d_min: float

    @property
    def size(self) -> int:
        return self.points.size

    @cached_property
    def labels(self) -> np.ndarray:
        """(2^m, m) label bits of each point."""
        idx = np.arange(self.size)
        return (idx[:, None] >> (self.m - 1 - np.arange(self.m))) & 1

    @cached_property
    def subsets(self) -> np.ndarray:
        """Boolean (m, 2, 2^m): ``[i, b, j]`` is True if point j has bit b at position i."""
        lab = self.labels.T
        return np.stack([lab == 0, lab == 1], axis=1)


def make_qam(m: int) -> Constellation:
    """Unit-energy square Gray QAM with ``2**m`` points (BPSK for m = 1)."""
    if m not in (1, 2, 4, 6):
        raise ConfigurationError(f"unsupported bits per symbol m={m}")
    if m == 1:
        pts = np.array([1.0 + 0j, -1.0 + 0j])
        return Constellation(1, pts, 2.0)
    half = m // 2
    side = 1 << half
    # amplitude level of each Gray-coded axis label
    level = np.empty(side)
    for pos in range(side):
        level[_gray(pos)] = 2 * pos - side + 1
    idx = np.arange(1 << m)
    pts = level[idx >> half] + 1j * level[idx & (side - 1)]
    scale = np.sqrt(np.mean(np.abs(pts) ** 2))
    pts = pts / scale
    return Constellation(m, pts, 2.0 / scale)


@dataclass(frozen=True)
class SpatialInterleaver:
    """Periodic assignment of coded bits to streams (0-based stream indices)."""

    pattern: tuple

    def __post_init__(self):
        pat = tuple(int(p) for p in self.pattern)
        if not pat:
            raise ConfigurationError("empty spatial interleaver pattern")
        s = max(pat) + 1
        if min(pat) < 0 or set(pat) != set(range(s)):
            raise ConfigurationError(f"pattern {pat} must use every stream 0..{s - 1}")
        object.__setattr__(self, "pattern", pat)

    @property
    def period(self) -> int:
        return len(self.pattern)

    @property
    def s(self) -> int:
        return max(self.pattern) + 1

    def stream_of(self, u) -> np.ndarray:
        return np.asarray(self.pattern)[np.asarray(u) % self.period]

    @classmethod
    def parse(cls, value, s: int) -> "SpatialInterleaver":
        """From config: ``"rotating"``, ``"block:<run>"`` or an explicit 1-based list."""
        if isinstance(value, str):
            if value == "rotating":
                return rotating(s)
            if value.startswith("block:"):
                return block_pattern(s, int(value.split(":", 1)[1]))
            raise ConfigurationError(f"unknown spatial interleaver {value!r}")
        il = cls(tuple(int(v) - 1 for v in value))
        if il.s != s:
            raise ConfigurationError(f"pattern uses {il.s} streams, system has {s}")
        return il


def rotating(s: int) -> SpatialInterleaver:
    return SpatialInterleaver(tuple(range(s)))


def block_pattern(s: int, run: int) -> SpatialInterleaver:
    """``run`` consecutive bits per stream, cycling through the streams."""
    return SpatialInterleaver(tuple(l for l in range(s) for _ in range(run)))


def spatial_map(il: SpatialInterleaver, coded_bits) -> list:
    """Split coded bits into per-stream lists, preserving order within a stream."""
    bits = np.asarray(coded_bits)
    streams = il.stream_of(np.arange(bits.shape[-1]))
    return [bits[..., streams == l] for l in range(il.s)]


@dataclass(frozen=True, eq=False)
class BitInterleaver:
    """One permutation per stream; ``perms[l][j]`` is the new position of stream bit j."""

    perms: tuple

    @classmethod
    def identity(cls, lengths) -> "BitInterleaver":
        return cls(tuple(np.arange(n) for n in lengths))

    @classmethod
    def random(cls, lengths, rng: np.random.Generator) -> "BitInterleaver":
        return cls(tuple(rng.permutation(n) for n in lengths))


def map_symbols(c: Constellation, stream_bits) -> np.ndarray:
    """Group bits (last axis) into m-bit labels and map to points.

    The bit count must be a multiple of ``m``; pad before calling otherwise.
    """
    bits = np.asarray(stream_bits, dtype=np.int64)
    if bits.shape[-1] % c.m:
        raise ConfigurationError(f"{bits.shape[-1]} bits is not a multiple of m={c.m}")
    grouped = bits.reshape(bits.shape[:-1] + (-1, c.m))
    idx = grouped @ (1 << (c.m - 1 - np.arange(c.m)))
    return c.points[idx]


def demap_symbols(c: Constellation, symbols) -> np.ndarray:
    """Hard nearest-point demapping back to label bits."""
    sym = np.asarray(symbols)
    idx = np.argmin(np.abs(sym[..., None] - c.points), axis=-1)
    bits = c.labels[idx]
    return bits.reshape(sym.shape[:-1] + (-1,))


class FrameLayout:
    """Where each transmitted coded bit sits in the symbol frame.

    Bits are spread over streams by the spatial interleaver, permuted inside
    each stream by the bit interleaver, then packed stream-major, bit-minor:
    interleaved stream bit ``j`` lands in time instant ``j // m`` at label
    position ``j % m``.  Streams shorter than the longest one are padded with
    zero bits that carry no coded data.
    """

    def __init__(self, n_coded: int, spatial: SpatialInterleaver, m: int,
                 bit_interleaver: BitInterleaver | None = None, rng=None):
        self.n_coded = int(n_coded)
        self.spatial = spatial
        self.m = int(m)
        self.s = spatial.s
        stream = spatial.stream_of(np.arange(self.n_coded))
        pos = np.empty(self.n_coded, dtype=np.int64)
        lengths = []
        for l in range(self.s):
            sel = stream == l
            pos[sel] = np.arange(sel.sum())
            lengths.append(int(sel.sum()))
        if bit_interleaver is None:
            bit_interleaver = (BitInterleaver.random(lengths, rng) if rng is not None
                               else BitInterleaver.identity(lengths))
        if [len(p) for p in bit_interleaver.perms] != lengths:
            raise ConfigurationError("bit interleaver lengths do not match the streams")
        self.bit_interleaver = bit_interleaver
        self.stream_lengths = lengths
        j = np.empty(self.n_coded, dtype=np.int64)
        for l in range(self.s):
            sel = stream == l
            j[sel] = np.asarray(bit_interleaver.perms[l])[pos[sel]]
        self.k = j // self.m
        self.l = stream
        self.i = j % self.m
        self.n_instants = -(-max(lengths) // self.m)
        self.n_pad = self.n_instants * self.m * self.s - self.n_coded
        flat = (self.k * self.s + self.l) * self.m + self.i
        self._inverse = np.full(self.n_instants * self.s * self.m, -1, dtype=np.int64)
        self._inverse[flat] = np.arange(self.n_coded)

    def locate(self, u: int):
        """Coded bit ``u`` -> (time instant k, stream l, label bit i)."""
        if not 0 <= u < self.n_coded:
            raise IndexError(f"coded bit {u} outside 0..{self.n_coded - 1}")
        return int(self.k[u]), int(self.l[u]), int(self.i[u])

    def unlocate(self, k: int, l: int, i: int) -> int:
        """Inverse of :meth:`locate`; -1 for padding positions."""
        if not (0 <= k < self.n_instants and 0 <= l < self.s and 0 <= i < self.m):
            raise IndexError(f"position {(k, l, i)} outside the frame")
        return int(self._inverse[(k * self.s + l) * self.m + i])

    def to_grid(self, coded) -> np.ndarray:
        """Coded bits (..., n_coded) -> label-bit grid (..., K, S, m)."""
        coded = np.asarray(coded)
        grid = np.zeros(coded.shape[:-1] + (self.n_instants, self.s, self.m), dtype=np.int8)
        grid[..., self.k, self.l, self.i] = coded
        return grid

    def from_grid(self, grid) -> np.ndarray:
        """Inverse of :meth:`to_grid`: gather values back in codeword order."""
        grid = np.asarray(grid)
        return grid[..., self.k, self.l, self.i]

    def symbols(self, c: Constellation, coded) -> np.ndarray:
        """Coded bits (..., n_coded) -> symbol frame (..., K, S)."""
        grid = self.to_grid(coded).astype(np.int64)
        idx = grid @ (1 << (self.m - 1 - np.arange(self.m)))
        return c.points[idx]

    def distinct_instants(self, positions) -> bool:
        """True if the given coded-bit positions fall in distinct time instants."""
        ks = self.k[np.asarray(positions)]
        return np.unique(ks).size == ks.size
