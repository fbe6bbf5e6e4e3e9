"""Rate 1/n convolutional codes with optional puncturing and Viterbi decoding.

Generators are given in octal with the most significant tap acting on the
current input bit (the usual textbook convention, so (5, 7) is 1+D^2, 1+D+D^2).
The encoder is zero-terminated with ``memory`` tail bits.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

__all__ = [
    "ContractError",
    "SearchBoundError",
    "CodeSpec",
    "PUNCTURE_2_3",
    "PUNCTURE_3_4",
    "encode",
    "puncture",
    "depuncture",
    "viterbi_decode",
    "free_distance",
]

PUNCTURE_2_3 = ((1, 1), (1, 0))
PUNCTURE_3_4 = ((1, 1, 0), (1, 0, 1))


class ContractError(ValueError):
    """Raised when inputs do not match the code's framing."""


class SearchBoundError(RuntimeError):
    """Raised when a bounded trellis search fails to close."""


def _parity(x: int) -> int:
    return bin(x).count("1") & 1


@dataclass(frozen=True)
class CodeSpec:
    constraint_length: int
    generators: tuple
    puncture_pattern: tuple | None = None

    def __post_init__(self):
        gens = tuple(int(g) for g in self.generators)
        if not gens:
            raise ValueError("at least one generator polynomial is required")
        if self.constraint_length < 1:
            raise ValueError("constraint length must be positive")
        if any(g <= 0 or g >= 1 << self.constraint_length for g in gens):
            raise ValueError(f"generators {[oct(g) for g in gens]} do not fit K={self.constraint_length}")
        object.__setattr__(self, "generators", gens)
        if self.puncture_pattern is not None:
            pat = tuple(tuple(int(b) for b in row) for row in self.puncture_pattern)
            if len(pat) != len(gens) or len({len(r) for r in pat}) != 1:
                raise ValueError("puncture pattern needs one equal-length row per generator")
            if any(all(row[t] == 0 for row in pat) for t in range(len(pat[0]))):
                raise ValueError("every puncture column must keep at least one bit")
            if any(b not in (0, 1) for row in pat for b in row):
                raise ValueError("puncture pattern entries must be 0 or 1")
            object.__setattr__(self, "puncture_pattern", pat)

    @classmethod
    def from_octal(cls, generators, puncture=None, constraint_length=None) -> "CodeSpec":
        """Build from octal strings, e.g. ``"5,7"`` or ``["133", "171"]``."""
        if isinstance(generators, str):
            generators = [g for g in generators.replace(" ", "").split(",") if g]
        gens = [int(str(g), 8) for g in generators]
        if constraint_length is None:
            constraint_length = max(g.bit_length() for g in gens)
        return cls(constraint_length, tuple(gens), puncture)

    @property
    def n_out(self) -> int:
        return len(self.generators)

    @property
    def memory(self) -> int:
        return self.constraint_length - 1

    @property
    def n_states(self) -> int:
        return 1 << self.memory

    @property
    def period(self) -> int:
        return 1 if self.puncture_pattern is None else len(self.puncture_pattern[0])

    @property
    def rate(self) -> float:
        if self.puncture_pattern is None:
            return 1.0 / self.n_out
        kept = sum(sum(r) for r in self.puncture_pattern)
        return self.period / kept

    @cached_property
    def keep_mask(self) -> np.ndarray:
        """Boolean (period, n_out) mask of transmitted mother-code bits."""
        if self.puncture_pattern is None:
            return np.ones((1, self.n_out), dtype=bool)
        return np.array(self.puncture_pattern, dtype=bool).T

    @cached_property
    def trellis(self):
        """``(next_state, outputs)`` with shapes (states, 2) and (states, 2, n_out).

        State bit ``memory-1`` holds the most recent input.
        """
        mem = self.memory
        nxt = np.zeros((self.n_states, 2), dtype=np.int64)
        out = np.zeros((self.n_states, 2, self.n_out), dtype=np.int8)
        for st in range(self.n_states):
            for u in (0, 1):
                reg = (u << mem) | st
                nxt[st, u] = reg >> 1
                for j, g in enumerate(self.generators):
                    out[st, u, j] = _parity(reg & g)
        return nxt, out

    @cached_property
    def predecessors(self):
        """Per next state: the two (predecessor, input) pairs, smaller state first."""
        nxt, _ = self.trellis
        preds = [[] for _ in range(self.n_states)]
        for st in range(self.n_states):
            for u in (0, 1):
                preds[nxt[st, u]].append((st, u))
        prev = np.array([[p[0] for p in sorted(pl)] for pl in preds], dtype=np.int64)
        inp = np.array([[p[1] for p in sorted(pl)] for pl in preds], dtype=np.int64)
        return prev, inp

    def coded_length(self, n_info: int) -> int:
        """Number of transmitted bits for ``n_info`` information bits (tail included)."""
        steps = n_info + self.memory
        return int(self.transmitted_per_step(steps).sum())

    def mother_length(self, n_info: int) -> int:
        return (n_info + self.memory) * self.n_out

    def transmitted_per_step(self, steps: int) -> np.ndarray:
        mask = self.keep_mask
        return mask[np.arange(steps) % mask.shape[0]].sum(axis=1)


def encode(spec: CodeSpec, info_bits) -> np.ndarray:
    """Encode and puncture.  Accepts a 1-D bit sequence or a (batch, L) array."""
    bits = np.asarray(info_bits, dtype=np.int8)
    single = bits.ndim == 1
    if single:
        bits = bits[None]
    if bits.shape[1] == 0:
        raise ContractError("info_bits must be non-empty")
    batch, n_info = bits.shape
    u = np.concatenate([bits, np.zeros((batch, spec.memory), dtype=np.int8)], axis=1)
    nxt, out = spec.trellis
    state = np.zeros(batch, dtype=np.int64)
    coded = np.empty((batch, u.shape[1], spec.n_out), dtype=np.int8)
    for t in range(u.shape[1]):
        coded[:, t] = out[state, u[:, t]]
        state = nxt[state, u[:, t]]
    res = puncture(spec, coded.reshape(batch, -1))
    return res[0] if single else res


def puncture(spec: CodeSpec, mother) -> np.ndarray:
    """Drop punctured positions from mother-code bits (last axis)."""
    mother = np.asarray(mother)
    if spec.puncture_pattern is None:
        return mother
    steps = mother.shape[-1] // spec.n_out
    keep = spec.keep_mask[np.arange(steps) % spec.period].reshape(-1)
    return mother[..., keep]


def depuncture(spec: CodeSpec, metrics, n_info: int) -> np.ndarray:
    """Expand per-transmitted-bit metrics (..., n_tx, 2) to mother-code positions.

    Punctured positions receive metric 0 for both hypotheses.
    """
    metrics = np.asarray(metrics, dtype=float)
    steps = n_info + spec.memory
    keep = spec.keep_mask[np.arange(steps) % spec.period].reshape(-1)
    if metrics.shape[-2] != keep.sum():
        raise ContractError(f"metric table has {metrics.shape[-2]} rows, code transmits {keep.sum()}")
    full = np.zeros(metrics.shape[:-2] + (keep.size, 2))
    full[..., keep, :] = metrics
    return full


def viterbi_decode(spec: CodeSpec, metrics, n_info: int | None = None) -> np.ndarray:
    """Minimum summed-metric decoding of a zero-terminated codeword.

    ``metrics`` has shape (..., n_tx, 2): entry ``[k, b]`` is the cost of coded
    bit ``k`` taking value ``b``.  For punctured codes pass the transmitted-bit
    table; punctured positions are filled with zero cost.  A leading batch axis
    decodes many frames at once.  On equal path metrics the predecessor with
    the smaller state index survives.
    """
    metrics = np.asarray(metrics, dtype=float)
    single = metrics.ndim == 2
    if single:
        metrics = metrics[None]
    if metrics.shape[-1] != 2:
        raise ContractError("metric table must have two columns (bit 0, bit 1)")
    if not np.all(np.isfinite(metrics)):
        raise ContractError("metric table has non-finite entries")
    if n_info is None:
        n_info = _infer_info_length(spec, metrics.shape[1])
    full = depuncture(spec, metrics, n_info)
    batch = full.shape[0]
    steps = n_info + spec.memory
    full = full.reshape(batch, steps, spec.n_out, 2)

    _, out = spec.trellis
    prev, inp = spec.predecessors
    ns = spec.n_states
    # branch output bits for each (next state, predecessor slot, output)
    branch_bits = out[prev, inp]
    j_idx = np.arange(spec.n_out)

    pm = np.full((batch, ns), np.inf)
    pm[:, 0] = 0.0
    choice = np.empty((steps, batch, ns), dtype=np.int8)
    for t in range(steps):
        m_t = full[:, t]  # (batch, n_out, 2)
        bm = m_t[:, j_idx, branch_bits].sum(axis=-1)  # (batch, ns, 2)
        cand = pm[:, prev] + bm
        sel = np.argmin(cand, axis=-1)  # first minimum -> smaller predecessor
        choice[t] = sel
        pm = np.take_along_axis(cand, sel[..., None], axis=-1)[..., 0]
        if t >= n_info:
            # tail steps carry known zero inputs
            pm = np.where(inp[np.arange(ns), sel] == 0, pm, np.inf)

    state = np.zeros(batch, dtype=np.int64)
    decoded = np.empty((batch, steps), dtype=np.int8)
    rows = np.arange(batch)
    for t in range(steps - 1, -1, -1):
        sel = choice[t, rows, state]
        decoded[:, t] = inp[state, sel]
        state = prev[state, sel]
    res = decoded[:, :n_info]
    return res[0] if single else res


def _infer_info_length(spec: CodeSpec, n_tx: int) -> int:
    n = max(1, n_tx * spec.rate - spec.memory - 2)
    n = int(n)
    while spec.coded_length(n) < n_tx:
        n += 1
    while n > 1 and spec.coded_length(n) > n_tx:
        n -= 1
    if spec.coded_length(n) != n_tx:
        raise ContractError(f"{n_tx} coded bits do not correspond to a whole codeword")
    return n


def free_distance(spec: CodeSpec, max_steps: int = 200) -> int:
    """Minimum Hamming weight over error events leaving and re-entering state 0."""
    nxt, out = spec.trellis
    w = out.sum(axis=-1)
    start = int(nxt[0, 1])
    dist = {start: int(w[0, 1])}
    heap = [(int(w[0, 1]), 0, start)]
    best = None
    while heap:
        d, depth, st = heapq.heappop(heap)
        if best is not None and d >= best:
            break
        if d > dist.get(st, np.inf):
            continue
        if depth > max_steps:
            raise SearchBoundError("free-distance search did not close")
        for u in (0, 1):
            n2 = int(nxt[st, u])
            d2 = d + int(w[st, u])
            if n2 == 0:
                best = d2 if best is None else min(best, d2)
                continue
            if d2 < dist.get(n2, np.inf):
                dist[n2] = d2
                heapq.heappush(heap, (d2, depth + 1, n2))
    if best is None:
        raise SearchBoundError("no error event returns to the zero state")
    if spec.memory == 0:
        return int(w[0, 1])
    return best
