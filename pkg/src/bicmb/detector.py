"""ML bit metrics for the precoded beamforming channel.

Received vectors are indexed by subchannel.  Streams map one-to-one onto
subchannels, so a bit on stream ``l`` is detected from subchannel ``l``
(or from the whole precoded group when ``l`` is in ``bp``).

``amp`` is the transmit amplitude scaling applied to every symbol.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .modem import Constellation, FrameLayout
from .precoding import PrecoderConfig, apply_precoder

__all__ = [
    "ReceivedVector",
    "candidate_labels",
    "bit_metric_general",
    "bit_metric_partial",
    "metrics_general",
    "metrics_partial",
    "build_metric_table",
]


@dataclass(frozen=True)
class ReceivedVector:
    """Detector input at one instant, split as [r_p ; r_n] in bp/bn order."""

    r_p: np.ndarray
    r_n: np.ndarray
    k: int = 0

    @classmethod
    def from_subchannels(cls, y, cfg: PrecoderConfig, k: int = 0) -> "ReceivedVector":
        y = np.asarray(y, dtype=np.complex128)
        return cls(y[cfg.bp_idx], y[cfg.bn_idx], k)

    def subchannels(self, cfg: PrecoderConfig) -> np.ndarray:
        y = np.empty(cfg.s, dtype=np.complex128)
        y[cfg.bp_idx] = self.r_p
        y[cfg.bn_idx] = self.r_n
        return y


@lru_cache(maxsize=32)
def candidate_labels(size: int, n: int) -> np.ndarray:
    """All label tuples of an n-fold product of a ``size``-point constellation."""
    return np.array(list(itertools.product(range(size), repeat=n)), dtype=np.int64).reshape(-1, n)


def _subset_min(dist: np.ndarray, labels: np.ndarray, c: Constellation, out: np.ndarray, slots):
    """Fill ``out[..., slot_l, i, b]`` with minima of ``dist`` over label subsets.

    ``slots`` pairs a column of ``labels`` with a stream index in ``out``.
    """
    for col, l in slots:
        for i in range(c.m):
            for b in (0, 1):
                idx = np.flatnonzero(c.subsets[i, b][labels[:, col]])
                out[..., l, i, b] = dist[..., idx].min(axis=-1)


def _sq_dist(y, model):
    d = y - model
    return (d.real**2 + d.imag**2).sum(axis=-1)


def metrics_general(y, lambdas, cfg: PrecoderConfig, c: Constellation, amp: float = 1.0) -> np.ndarray:
    """Exhaustive bit metrics over the full S-symbol candidate set.

    ``y``: (..., S) received, ``lambdas``: broadcastable to (..., S).
    Returns (..., S, m, 2).
    """
    y = np.asarray(y, dtype=np.complex128)
    lam = np.asarray(lambdas, dtype=float)
    labels = candidate_labels(c.size, cfg.s)
    tx = apply_precoder(cfg, c.points[labels])  # (C, S)
    model = amp * lam[..., None, :] * tx
    dist = _sq_dist(y[..., None, :], model)
    out = np.empty(y.shape[:-1] + (cfg.s, c.m, 2))
    _subset_min(dist, labels, c, out, [(l, l) for l in range(cfg.s)])
    return out


def metrics_partial(y, lambdas, cfg: PrecoderConfig, c: Constellation, amp: float = 1.0) -> np.ndarray:
    """Bit metrics using the precoded/non-precoded split.

    Precoded streams search only the P-symbol precoded group; the others use a
    scalar search on their own subchannel.  Returns (..., S, m, 2).
    """
    y = np.asarray(y, dtype=np.complex128)
    lam = np.broadcast_to(np.asarray(lambdas, dtype=float), y.shape)
    out = np.empty(y.shape[:-1] + (cfg.s, c.m, 2))
    if cfg.p:
        labels = candidate_labels(c.size, cfg.p)
        tx = c.points[labels] @ cfg.theta_tilde.T  # (C, P)
        lam_p = lam[..., cfg.bp_idx]
        model = amp * lam_p[..., None, :] * tx
        dist = _sq_dist(y[..., None, cfg.bp_idx], model)
        _subset_min(dist, labels, c, out, list(zip(range(cfg.p), cfg.bp_idx)))
    if cfg.s > cfg.p:
        single = np.arange(c.size)[:, None]
        for l in cfg.bn_idx:
            d = y[..., l, None] - amp * lam[..., l, None] * c.points
            dist = d.real**2 + d.imag**2
            _subset_min(dist, single, c, out, [(0, l)])
    return out


def bit_metric_general(r: ReceivedVector, lambdas, cfg: PrecoderConfig, c: Constellation,
                       l: int, i: int, b: int, amp: float = 1.0) -> float:
    """Metric of bit ``i`` of stream ``l`` taking value ``b`` (full search)."""
    y = r.subchannels(cfg)
    return float(metrics_general(y, lambdas, cfg, c, amp)[l, i, b])


def bit_metric_partial(r: ReceivedVector, lambdas, cfg: PrecoderConfig, c: Constellation,
                       l: int, i: int, b: int, amp: float = 1.0) -> float:
    """Metric of bit ``i`` of stream ``l`` taking value ``b`` (split search)."""
    y = r.subchannels(cfg)
    return float(metrics_partial(y, lambdas, cfg, c, amp)[l, i, b])


def build_metric_table(layout: FrameLayout, gamma) -> np.ndarray:
    """Gather per-position metrics (..., K, S, m, 2) into codeword order (..., n_coded, 2)."""
    gamma = np.asarray(gamma)
    if gamma.shape[-4:-1] != (layout.n_instants, layout.s, layout.m):
        raise ValueError(
            f"metric grid {gamma.shape[-4:-1]} does not match layout "
            f"{(layout.n_instants, layout.s, layout.m)}"
        )
    return gamma[..., layout.k, layout.l, layout.i, :]
