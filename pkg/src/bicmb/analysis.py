"""Diversity-order prediction from code, spatial interleaver and precoder layout.

Error events are enumerated on an augmented trellis whose state is
``(encoder state, puncture column, spatial-interleaver phase)``; the
per-stream counts of erroneous coded bits of each event form its alpha
vector.  Subchannel lists are 1-based, alpha vectors are indexed by stream
(stream ``l`` rides subchannel ``l + 1``).
"""

from __future__ import annotations

import itertools
import math
from collections import Counter, deque
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .channel import check_partition
from .coding import CodeSpec, ContractError, SearchBoundError, free_distance
from .modem import SpatialInterleaver
from .numerics import InvalidInputError, gaussian_complex, singular_values

__all__ = [
    "AlphaVector",
    "DiversityRow",
    "DiversityReport",
    "WindowError",
    "start_configurations",
    "enumerate_alpha",
    "support_reachable",
    "delta_of",
    "order_of",
    "diversity_order",
    "bicmb_bound",
    "Theorem1Result",
    "theorem1_check",
    "estimate_slope",
]


class WindowError(ValueError):
    """Raised when a BER curve window cannot support a slope fit."""


@dataclass(frozen=True, order=True)
class AlphaVector:
    d_h: int
    alpha: tuple
    multiplicity: int = field(default=1, compare=False)

    def __post_init__(self):
        if sum(self.alpha) != self.d_h:
            raise ValueError(f"alpha {self.alpha} does not sum to d_h={self.d_h}")

    def monomial(self, names="abcdefgh") -> str:
        """Render as a transfer-function term such as ``2a^3b^2c``."""
        body = "".join(
            names[l] + (f"^{a}" if a > 1 else "") for l, a in enumerate(self.alpha) if a
        )
        return (str(self.multiplicity) if self.multiplicity != 1 else "") + body


def start_configurations(spec: CodeSpec, il: SpatialInterleaver):
    """All (puncture column, interleaver phase) pairs at which a trellis step can begin."""
    seen = []
    col, phase = 0, 0
    kept = spec.keep_mask.sum(axis=1)
    while (col, phase) not in seen:
        seen.append((col, phase))
        phase = (phase + int(kept[col])) % il.period
        col = (col + 1) % spec.period
    return seen


def _step(spec: CodeSpec, il: SpatialInterleaver, state: int, u: int, col: int, phase: int):
    """One augmented-trellis transition: returns (next state, col, phase, streams of 1s)."""
    nxt, out = spec.trellis
    bits = out[state, u]
    keep = spec.keep_mask[col]
    hits = []
    for j in range(spec.n_out):
        if not keep[j]:
            continue
        if bits[j]:
            hits.append(il.pattern[phase])
        phase = (phase + 1) % il.period
    return int(nxt[state, u]), (col + 1) % spec.period, phase, hits


def enumerate_alpha(spec: CodeSpec, il: SpatialInterleaver, max_weight: int | None = None,
                    max_depth: int | None = None) -> list:
    """Alpha vectors of all error events with Hamming weight <= ``max_weight``.

    Every reachable starting phase is tried; the multiplicity of an alpha
    vector counts (starting phase, path) pairs producing it.  Results are
    sorted by weight, then alpha.
    """
    if max_weight is None:
        max_weight = free_distance(spec) + 4
    if max_depth is None:
        max_depth = 64 * (max_weight + spec.constraint_length)
    s = il.s
    counts = Counter()
    for col0, phase0 in start_configurations(spec, il):
        state, col, phase, hits = _step(spec, il, 0, 1, col0, phase0)
        alpha = [0] * s
        for h in hits:
            alpha[h] += 1
        stack = [(state, col, phase, tuple(alpha), len(hits), 1)]
        while stack:
            state, col, phase, alpha, weight, depth = stack.pop()
            if weight > max_weight:
                continue
            if state == 0:
                if weight:
                    counts[(weight, alpha)] += 1
                continue
            if depth > max_depth:
                raise SearchBoundError(f"event search exceeded depth {max_depth}")
            for u in (0, 1):
                n2, c2, p2, hits = _step(spec, il, state, u, col, phase)
                if weight + len(hits) > max_weight:
                    continue
                a2 = list(alpha)
                for h in hits:
                    a2[h] += 1
                stack.append((n2, c2, p2, tuple(a2), weight + len(hits), depth + 1))
    return [AlphaVector(w, a, n) for (w, a), n in sorted(counts.items())]


def support_reachable(spec: CodeSpec, il: SpatialInterleaver, allowed) -> bool:
    """Whether some error event places all of its erroneous bits on ``allowed`` streams.

    Decided exactly by reachability on the augmented trellis, so no weight
    bound is involved.
    """
    allowed = set(allowed)
    for col0, phase0 in start_configurations(spec, il):
        state, col, phase, hits = _step(spec, il, 0, 1, col0, phase0)
        if any(h not in allowed for h in hits):
            continue
        start = (state, col, phase, bool(hits))
        if state == 0:
            if hits:
                return True
            continue
        seen = {start}
        queue = deque([start])
        while queue:
            state, col, phase, hit = queue.popleft()
            for u in (0, 1):
                n2, c2, p2, hits = _step(spec, il, state, u, col, phase)
                if any(h not in allowed for h in hits):
                    continue
                h2 = hit or bool(hits)
                if n2 == 0:
                    if h2:
                        return True
                    continue
                node = (n2, c2, p2, h2)
                if node not in seen:
                    seen.add(node)
                    queue.append(node)
    return False


def delta_of(av, bp, bn=None) -> int:
    """Index of the weakest subchannel forced to carry error energy.

    With no erroneous bit on the precoded subchannels this is the smallest
    non-precoded subchannel used by the event; otherwise it is the smaller of
    ``bp[0]`` and that index.
    """
    alpha = av.alpha if isinstance(av, AlphaVector) else tuple(av)
    s = len(alpha)
    bp = list(bp)
    bn = [b for b in range(1, s + 1) if b not in bp] if bn is None else list(bn)
    check_partition(bp, bn, s)
    d_hp = sum(alpha[b - 1] for b in bp)
    used_n = [b for b in bn if alpha[b - 1] > 0]
    delta_n = min(used_n) if used_n else math.inf
    if d_hp > 0:
        return int(min(bp[0], delta_n))
    if not used_n:
        raise ContractError(f"alpha {alpha} has no erroneous bits")
    return int(delta_n)


def order_of(n: int, m: int, delta: int) -> int:
    return (n - delta + 1) * (m - delta + 1)


@dataclass(frozen=True)
class DiversityRow:
    alpha: AlphaVector
    d_hp: int
    d_hn: int
    delta: int
    order: int


@dataclass(frozen=True)
class DiversityReport:
    rows: list
    overall_order: int
    full_order: int
    structural_order: int
    max_weight: int
    bp: tuple
    n: int
    m: int

    @property
    def full(self) -> bool:
        return self.overall_order == self.full_order

    @property
    def exact(self) -> bool:
        """True when the weight-bounded enumeration already hit the worst event class."""
        return self.overall_order == self.structural_order

    def to_text(self) -> str:
        lines = ["alpha\tmult\td_H\td_Hp\tdelta\torder"]
        for r in self.rows:
            a = " ".join(str(x) for x in r.alpha.alpha)
            lines.append(f"[{a}]\t{r.alpha.multiplicity}\t{r.alpha.d_h}\t{r.d_hp}\t{r.delta}\t{r.order}")
        label = "exact" if self.exact else f"bound (structural order {self.structural_order})"
        lines.append(
            f"bp={list(self.bp)} N={self.n} M={self.m} max_weight={self.max_weight} "
            f"diversity={self.overall_order} full={self.full_order} [{label}]"
        )
        return "\n".join(lines)


def diversity_order(spec: CodeSpec, il: SpatialInterleaver, bp, n: int, m: int,
                    max_weight: int | None = None) -> DiversityReport:
    s = il.s
    if s > min(n, m):
        raise InvalidInputError(f"S={s} exceeds min(N, M)={min(n, m)}")
    bp = tuple(bp)
    bn = tuple(b for b in range(1, s + 1) if b not in bp)
    check_partition(bp, bn, s)
    if max_weight is None:
        max_weight = free_distance(spec) + 4
    rows = []
    for av in enumerate_alpha(spec, il, max_weight):
        delta = delta_of(av, bp, bn)
        d_hp = sum(av.alpha[b - 1] for b in bp)
        rows.append(DiversityRow(av, d_hp, av.d_h - d_hp, delta, order_of(n, m, delta)))
    overall = min((r.order for r in rows), default=n * m)

    structural = n * m
    for size in range(1, s + 1):
        for subset in itertools.combinations(range(s), size):
            if support_reachable(spec, il, subset):
                ind = tuple(1 if l in subset else 0 for l in range(s))
                structural = min(structural, order_of(n, m, delta_of(ind, bp, bn)))
    return DiversityReport(rows, overall, n * m, structural, max_weight, bp, n, m)


def bicmb_bound(n: int, m: int, s: int, rc) -> int:
    """Maximum diversity of uncoded-precoding BICMB with code rate ``rc``."""
    rc = Fraction(rc).limit_denominator(10_000) if not isinstance(rc, Fraction) else rc
    if not 0 < rc <= 1:
        raise InvalidInputError(f"code rate {rc} outside (0, 1]")
    if not 1 <= s <= min(n, m):
        raise InvalidInputError(f"s={s} must lie in [1, min(n, m)]")
    q = math.ceil(s * rc)
    return (n - q + 1) * (m - q + 1)


@dataclass(frozen=True)
class Theorem1Result:
    gammas_db: np.ndarray
    estimates: np.ndarray
    exponent: float
    delta: int
    predicted: int
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.exponent >= self.predicted - self.tolerance


def _scale_ladder(gamma_max: float, phi_min: float) -> np.ndarray:
    """Proposal variances from 1 down to about 1 / (gamma * phi_min), half a decade apart."""
    lo = 1.0 / (1.0 + gamma_max * phi_min)
    count = max(1, int(np.ceil(-np.log10(lo) / 0.5)))
    return np.logspace(0.0, np.log10(lo), count + 1)


def theorem1_check(n: int, m: int, phi, gammas_db, trials: int, rng: np.random.Generator,
                   importance: bool = True, tolerance: float = 0.5) -> Theorem1Result:
    """Monte Carlo estimate of E[exp(-gamma sum phi_s mu_s)] and its decay exponent.

    ``mu`` are the largest ``len(phi)`` eigenvalues of the M x N Wishart matrix.
    With ``importance`` the channel is drawn from a defensive mixture of scaled
    Gaussians (half the draws at unit variance) and reweighted by the exact
    likelihood ratio, which keeps the estimator usable when the expectation is
    far below 1/trials.  The exponent is minus the least-squares slope of
    log E against log gamma.
    """
    phi = np.asarray(phi, dtype=float)
    s = phi.size
    if np.any(phi < 0) or not np.any(phi > 0):
        raise InvalidInputError("phi must be non-negative and not all zero")
    if s > min(n, m):
        raise InvalidInputError(f"len(phi)={s} exceeds min(N, M)")
    delta = int(np.argmax(phi > 0)) + 1
    phi_min = float(phi[phi > 0].min())
    gammas_db = np.asarray(gammas_db, dtype=float)
    gammas = 10.0 ** (gammas_db / 10.0)
    nm = n * m
    est = np.empty(gammas.size)
    for g_idx, g in enumerate(gammas):
        if importance:
            scales = _scale_ladder(g, phi_min)
            weights = np.full(scales.size, 0.5 / max(1, scales.size - 1))
            weights[0] = 0.5 if scales.size > 1 else 1.0
        else:
            scales, weights = np.ones(1), np.ones(1)
        counts = np.floor(weights * trials).astype(int)
        counts[0] += trials - counts.sum()
        total = 0.0
        for var, cnt in zip(scales, counts):
            if cnt == 0:
                continue
            h = gaussian_complex(rng, (cnt, m, n)) * np.sqrt(var)
            mu = singular_values(h)[:, :s] ** 2
            f = -g * (mu @ phi)
            fro = np.sum(np.abs(h) ** 2, axis=(1, 2))
            # log q/p for every mixture component, then log-sum-exp
            log_terms = (np.log(weights)[None, :] - nm * np.log(scales)[None, :]
                         - fro[:, None] * (1.0 / scales[None, :] - 1.0))
            top = log_terms.max(axis=1)
            log_qp = top + np.log(np.exp(log_terms - top[:, None]).sum(axis=1))
            total += np.exp(f - log_qp).sum()
        est[g_idx] = total / trials
    slope = np.polyfit(np.log10(gammas), np.log10(est), 1)[0]
    return Theorem1Result(gammas_db, est, float(-slope), delta,
                          order_of(n, m, delta), tolerance)


def estimate_slope(curve, window=None) -> float:
    """Diversity estimate ``-10 * d log10(BER) / d SNR_dB`` by least squares.

    ``curve`` is a sequence of ``(snr_db, ber)`` pairs; ``window`` optionally
    restricts the fit to ``lo <= snr_db <= hi``.
    """
    pts = np.asarray(curve, dtype=float).reshape(-1, 2)
    if window is not None:
        lo, hi = window
        pts = pts[(pts[:, 0] >= lo) & (pts[:, 0] <= hi)]
    if pts.shape[0] < 3:
        raise WindowError(f"need at least 3 points in the window, got {pts.shape[0]}")
    if np.any(pts[:, 1] <= 0):
        raise WindowError("zero BER inside the fit window; simulate more trials")
    slope = np.polyfit(pts[:, 0], np.log10(pts[:, 1]), 1)[0]
    return float(-10.0 * slope)
