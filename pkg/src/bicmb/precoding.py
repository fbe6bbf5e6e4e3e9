"""Constellation precoders: rotations, the full-diversity check, subchannel routing.

Subchannel lists ``bp``/``bn`` are 1-based like the subchannel numbers they
name.  The permutation onto subchannels is kept implicit in ``(bp, bn)``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .channel import ConfigurationError, check_partition
from .modem import Constellation, make_qam

__all__ = [
    "FeasibilityError",
    "PrecoderConfig",
    "make_rotation",
    "default_angles",
    "default_rotation",
    "verify_condition",
    "apply_precoder",
    "permutation_matrix",
    "ZERO_TOL",
]

ZERO_TOL = 1e-9
_MAX_POINTS = 1 << 20
_MAX_PAIR_POINTS = 1 << 12


class FeasibilityError(ValueError):
    """Raised when an exhaustive search would be too large."""


def make_rotation(p: int, angles) -> np.ndarray:
    """Real orthogonal P x P rotation built from ``p - 1`` planar rotations.

    For P = 2 this is ``[[cos t, sin t], [-sin t, cos t]]``.  For larger P the
    product R(1,2) R(2,3) ... gives a first row
    ``(c1, s1 c2, s1 s2 c3, ..., s1 ... s_{P-1})``.
    """
    if p not in (2, 3, 4):
        raise ConfigurationError(f"rotation size p={p} not supported (2, 3 or 4)")
    angles = np.atleast_1d(np.asarray(angles, dtype=float))
    if angles.size != p - 1:
        raise ConfigurationError(f"p={p} needs {p - 1} angles, got {angles.size}")
    out = np.eye(p)
    for j, t in enumerate(angles):
        g = np.eye(p)
        c, s = np.cos(t), np.sin(t)
        g[j, j], g[j, j + 1], g[j + 1, j], g[j + 1, j + 1] = c, s, -s, c
        out = out @ g
    return out.astype(np.complex128)


def _axis_differences(c: Constellation) -> np.ndarray:
    """Distinct real-axis differences between constellation coordinates."""
    vals = np.unique(np.round(np.concatenate([c.points.real, c.points.imag]), 12))
    return np.unique(np.round((vals[:, None] - vals[None, :]).ravel(), 12))


def _min_real_projection(row: np.ndarray, diffs: np.ndarray) -> float:
    p = row.size
    grid = np.array(list(itertools.product(diffs, repeat=p)))
    grid = grid[np.any(grid != 0, axis=1)]
    return float(np.min((grid @ row) ** 2))


@lru_cache(maxsize=None)
def default_angles(p: int, m: int) -> tuple:
    """Rotation angles for P-dimensional precoding of ``2**m``-QAM.

    P = 2 uses atan(2)/2.  P = 3, 4 use a coarse grid search that maximises
    the smallest projection of a nonzero difference onto the first row.  With
    a real rotation and square QAM the real and imaginary parts separate, so
    the search only needs per-axis differences.
    """
    if p == 2:
        return (0.5 * np.arctan(2.0),)
    c = make_qam(m)
    diffs = _axis_differences(c)
    steps = np.linspace(0.05, np.pi / 2 - 0.05, 24 if p == 3 else 14)
    best, best_val = None, -1.0
    for ang in itertools.product(steps, repeat=p - 1):
        row = make_rotation(p, ang)[0].real
        val = _min_real_projection(row, diffs)
        if val > best_val + 1e-15:
            best, best_val = ang, val
    return tuple(float(a) for a in best)


def default_rotation(p: int, m: int) -> np.ndarray:
    return make_rotation(p, default_angles(p, m))


def verify_condition(theta_tilde, c: Constellation, dedupe: bool = True):
    """Exhaustively check that the first row never annihilates a symbol difference.

    Returns ``(passed, worst)`` where ``worst`` is the minimum of
    ``|theta_1^T (x - x')|^2`` over distinct ``x, x'`` in the P-fold product
    of the constellation.  With ``dedupe`` the scan runs over the set of
    distinct difference vectors, otherwise over all ordered pairs.
    """
    theta = np.asarray(theta_tilde, dtype=np.complex128)
    p = theta.shape[0]
    if p > 4 or c.size ** p > _MAX_POINTS:
        raise FeasibilityError(f"{c.size}^{p} candidate vectors is too many for an exhaustive scan")
    row = theta[0]
    if dedupe:
        d1 = np.unique(np.round((c.points[:, None] - c.points[None, :]).ravel(), 12))
        worst = np.inf
        # chunk over the first coordinate to bound memory
        rest = np.array(list(itertools.product(d1, repeat=p - 1))) if p > 1 else np.zeros((1, 0))
        tail = rest @ row[1:] if p > 1 else np.zeros(1)
        rest_zero = np.all(rest == 0, axis=1) if p > 1 else np.ones(1, dtype=bool)
        for d in d1:
            proj = np.abs(row[0] * d + tail) ** 2
            if d == 0:
                proj = proj[~rest_zero]
            if proj.size:
                worst = min(worst, float(proj.min()))
    else:
        if c.size ** p > _MAX_PAIR_POINTS:
            raise FeasibilityError("pairwise scan limited to 4096 candidate vectors")
        vecs = np.array(list(itertools.product(c.points, repeat=p)))
        z = vecs @ row
        dist = np.abs(z[:, None] - z[None, :]) ** 2
        np.fill_diagonal(dist, np.inf)
        worst = float(dist.min())
    return worst > ZERO_TOL, worst


@dataclass(frozen=True, eq=False)
class PrecoderConfig:
    s: int
    theta_tilde: np.ndarray
    bp: tuple
    bn: tuple = field(default=None)

    def __post_init__(self):
        bp = tuple(int(b) for b in self.bp)
        bn = self.bn
        if bn is None:
            bn = tuple(b for b in range(1, self.s + 1) if b not in bp)
        bn = tuple(int(b) for b in bn)
        check_partition(bp, bn, self.s)
        theta = np.asarray(self.theta_tilde, dtype=np.complex128)
        if theta.shape != (len(bp), len(bp)):
            raise ConfigurationError(f"rotation must be {len(bp)}x{len(bp)}, got {theta.shape}")
        if theta.size and np.abs(theta.conj().T @ theta - np.eye(len(bp))).max() > 1e-10:
            raise ConfigurationError("precoding matrix is not unitary")
        object.__setattr__(self, "bp", bp)
        object.__setattr__(self, "bn", bn)
        object.__setattr__(self, "theta_tilde", theta)

    @property
    def p(self) -> int:
        return len(self.bp)

    @property
    def bp_idx(self) -> np.ndarray:
        return np.asarray(self.bp, dtype=np.int64) - 1

    @property
    def bn_idx(self) -> np.ndarray:
        return np.asarray(self.bn, dtype=np.int64) - 1

    @property
    def order(self) -> np.ndarray:
        """Subchannel indices (0-based) in the arranged order [bp ; bn]."""
        return np.concatenate([self.bp_idx, self.bn_idx])

    @property
    def theta(self) -> np.ndarray:
        """The S x S block matrix diag(theta_tilde, I) acting on [x_bp ; x_bn]."""
        out = np.eye(self.s, dtype=np.complex128)
        out[: self.p, : self.p] = self.theta_tilde
        return out

    @classmethod
    def baseline(cls, s: int) -> "PrecoderConfig":
        """No precoding (plain BICMB)."""
        return cls(s, np.zeros((0, 0)), (), tuple(range(1, s + 1)))

    @classmethod
    def with_default_rotation(cls, s: int, bp, m: int) -> "PrecoderConfig":
        bp = tuple(bp)
        if len(bp) == 0:
            return cls.baseline(s)
        if len(bp) == 1:
            return cls(s, np.eye(1), bp)
        return cls(s, default_rotation(len(bp), m), bp)


def permutation_matrix(cfg: PrecoderConfig) -> np.ndarray:
    """Explicit S x S matrix T taking the arranged vector [bp ; bn] onto subchannels."""
    t = np.zeros((cfg.s, cfg.s))
    t[cfg.order, np.arange(cfg.s)] = 1.0
    return t


def apply_precoder(cfg: PrecoderConfig, x) -> np.ndarray:
    """Precode symbol vectors indexed by stream (= subchannel) on the last axis.

    Symbols of the streams in ``bp`` are rotated together by theta_tilde and
    sent on the ``bp`` subchannels; the others pass through unchanged.
    """
    x = np.asarray(x, dtype=np.complex128)
    if x.shape[-1] != cfg.s:
        raise ConfigurationError(f"symbol vectors have length {x.shape[-1]}, expected {cfg.s}")
    out = x.copy()
    if cfg.p:
        out[..., cfg.bp_idx] = x[..., cfg.bp_idx] @ cfg.theta_tilde.T
    return out
