"""Quasi-static Rayleigh MIMO channels and their SVD beamforming split."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .numerics import InvalidInputError, gaussian_complex, singular_values, svd

__all__ = [
    "ConfigurationError",
    "ChannelRealization",
    "draw_channel",
    "draw_gains",
    "effective_gains",
    "check_partition",
]


class ConfigurationError(ValueError):
    """Raised for inconsistent system configuration (subchannels, modulation, ...)."""


@dataclass(frozen=True)
class ChannelRealization:
    """One M x N channel draw with its first ``s`` beamforming vectors."""

    h: np.ndarray
    u_tilde: np.ndarray
    v_tilde: np.ndarray
    lambdas: np.ndarray

    @property
    def s(self) -> int:
        return self.lambdas.size

    def transmit(self, x: np.ndarray) -> np.ndarray:
        """Send symbol vectors (S, K) through V~, H and U~^H (the physical path)."""
        return self.u_tilde.conj().T @ (self.h @ (self.v_tilde @ x))


def _check_dims(n: int, m: int, s: int) -> None:
    if not 1 <= s <= min(n, m):
        raise InvalidInputError(f"s={s} must lie in [1, min(n, m)={min(n, m)}]")


def draw_channel(rng: np.random.Generator, n: int, m: int, s: int) -> ChannelRealization:
    """Draw H (M x N, i.i.d. CN(0,1)) and keep its ``s`` strongest subchannels."""
    _check_dims(n, m, s)
    h = gaussian_complex(rng, (m, n))
    r = svd(h)
    return ChannelRealization(
        h=h,
        u_tilde=r.u[:, :s].copy(),
        v_tilde=r.v[:, :s].copy(),
        lambdas=r.sigma[:s].copy(),
    )


def draw_gains(rng: np.random.Generator, n: int, m: int, s: int, count: int) -> np.ndarray:
    """Subchannel gains only, for ``count`` independent channels: shape (count, s).

    This is the fast path used by the simulator, which transmits through the
    equivalent diagonal model.
    """
    _check_dims(n, m, s)
    h = gaussian_complex(rng, (count, m, n))
    return singular_values(h)[:, :s]


def check_partition(bp, bn, s: int) -> None:
    """Validate 1-based subchannel lists ``bp``/``bn`` as a partition of 1..s."""
    bp, bn = list(bp), list(bn)
    for name, lst in (("bp", bp), ("bn", bn)):
        if any(b <= a for a, b in zip(lst, lst[1:])):
            raise ConfigurationError(f"{name}={lst} must be strictly increasing")
    if set(bp) & set(bn):
        raise ConfigurationError(f"bp={bp} and bn={bn} overlap")
    if sorted(bp + bn) != list(range(1, s + 1)):
        raise ConfigurationError(f"bp={bp} and bn={bn} do not cover subchannels 1..{s}")


def effective_gains(ch, bp, bn):
    """Split the subchannel gains into the precoded and non-precoded groups.

    ``ch`` is a ChannelRealization or a plain sequence of singular values;
    subchannel numbers are 1-based.
    """
    lam = np.asarray(ch.lambdas if isinstance(ch, ChannelRealization) else ch, dtype=float)
    check_partition(bp, bn, lam.shape[-1])
    gp = lam[..., [b - 1 for b in bp]]
    gn = lam[..., [b - 1 for b in bn]]
    return gp, gn
