"""Small complex linear algebra and seeded random streams.

The SVD here is a one-sided (Hestenes) Jacobi iteration vectorised over a
leading batch axis, which is all the simulator needs for matrices of at most
8x8.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "InvalidInputError",
    "SvdResult",
    "rng_stream",
    "svd",
    "singular_values",
    "gaussian_complex",
    "wishart_eigs",
]

MAX_DIM = 8
_MAX_SWEEPS = 60


class InvalidInputError(ValueError):
    """Raised when an argument violates an operation's precondition."""


@dataclass(frozen=True)
class SvdResult:
    u: np.ndarray
    sigma: np.ndarray
    v: np.ndarray

    def reconstruct(self) -> np.ndarray:
        k = self.sigma.size
        return (self.u[:, :k] * self.sigma) @ self.v[:, :k].conj().T


def rng_stream(seed: int, *stream: int) -> np.random.Generator:
    """Return a Philox generator fully determined by ``seed`` and ``stream``.

    Distinct stream indices give statistically independent generators, so
    workers can each own one without coordination.
    """
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(s) for s in stream))
    return np.random.Generator(np.random.Philox(ss))


def gaussian_complex(rng: np.random.Generator, n, dtype=np.complex128) -> np.ndarray:
    """Circularly-symmetric complex Gaussian samples with unit variance.

    ``n`` may be an int or a shape tuple.
    """
    shape = (n,) if np.isscalar(n) else tuple(n)
    out = np.empty(shape, dtype=dtype)
    out.real = rng.standard_normal(shape)
    out.imag = rng.standard_normal(shape)
    out *= np.sqrt(0.5)
    return out


def _jacobi_columns(a: np.ndarray, tol: float = 1e-15):
    """Orthogonalise the columns of a batch of tall matrices.

    Returns ``(w, v)`` with ``a @ v == w`` and the columns of ``w`` mutually
    orthogonal. ``a`` has shape (B, M, N) with M >= N.
    """
    w = np.array(a, dtype=np.complex128, copy=True)
    batch, _, n = w.shape
    v = np.broadcast_to(np.eye(n, dtype=np.complex128), (batch, n, n)).copy()
    if n == 1:
        return w, v
    for _ in range(_MAX_SWEEPS):
        rotated = False
        for p in range(n - 1):
            for q in range(p + 1, n):
                wp = w[:, :, p]
                wq = w[:, :, q]
                alpha = np.einsum("bm,bm->b", wp.conj(), wp).real
                beta = np.einsum("bm,bm->b", wq.conj(), wq).real
                gamma = np.einsum("bm,bm->b", wp.conj(), wq)
                mag = np.abs(gamma)
                active = mag > tol * np.sqrt(alpha * beta)
                if not active.any():
                    continue
                rotated = True
                safe = np.where(active, mag, 1.0)
                zeta = (beta - alpha) / (2.0 * safe)
                sgn = np.where(zeta >= 0, 1.0, -1.0)
                t = sgn / (np.abs(zeta) + np.sqrt(1.0 + zeta * zeta))
                t = np.where(active, t, 0.0)
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = c * t
                # phase-align column q with column p before the real rotation
                ph = np.where(active, gamma / safe, 1.0)
                cs = c[:, None]
                ss = s[:, None]
                phc = ph.conj()[:, None]
                for mat in (w, v):
                    mp = mat[:, :, p].copy()
                    mq = mat[:, :, q] * phc
                    mat[:, :, p] = cs * mp - ss * mq
                    mat[:, :, q] = ss * mp + cs * mq
        if not rotated:
            break
    return w, v


def _complete_basis(q: np.ndarray, keep: np.ndarray) -> np.ndarray:
    """Fill the columns of ``q`` not flagged in ``keep`` to make it unitary."""
    m, n = q.shape
    basis = [q[:, j] for j in range(n) if keep[j]]
    fill = [j for j in range(n) if not keep[j]]
    eye = np.eye(m, dtype=np.complex128)
    out = q.copy()
    cand = 0
    for j in fill:
        while True:
            x = eye[:, cand].copy()
            cand += 1
            for _ in range(2):
                for b in basis:
                    x -= b * np.vdot(b, x)
            nrm = np.linalg.norm(x)
            if nrm > 1e-6:
                x /= nrm
                break
        basis.append(x)
        out[:, j] = x
    return out


def _check_finite(a: np.ndarray) -> None:
    if not np.all(np.isfinite(a)):
        raise InvalidInputError("matrix has non-finite entries")


def singular_values(a: np.ndarray) -> np.ndarray:
    """Singular values, sorted decreasing, of a matrix or a batch of matrices."""
    a = np.asarray(a, dtype=np.complex128)
    single = a.ndim == 2
    if single:
        a = a[None]
    _check_finite(a)
    if a.shape[1] < a.shape[2]:
        a = np.conj(np.swapaxes(a, 1, 2))
    w, _ = _jacobi_columns(a)
    sig = np.sort(np.linalg.norm(w, axis=1), axis=1)[:, ::-1]
    return sig[0] if single else sig


def svd(a) -> SvdResult:
    """Full SVD ``a = u @ diag(sigma) @ v^H`` of a small complex matrix."""
    a = np.asarray(a, dtype=np.complex128)
    if a.ndim != 2 or not (1 <= a.shape[0] <= MAX_DIM and 1 <= a.shape[1] <= MAX_DIM):
        raise InvalidInputError(f"expected a matrix of size at most {MAX_DIM}x{MAX_DIM}")
    _check_finite(a)
    rows, cols = a.shape
    if rows < cols:
        r = svd(a.conj().T)
        return SvdResult(u=r.v, sigma=r.sigma, v=r.u)

    w, v = _jacobi_columns(a[None])
    w, v = w[0], v[0]
    sigma = np.linalg.norm(w, axis=0)
    order = np.argsort(-sigma, kind="stable")
    sigma = sigma[order]
    w = w[:, order]
    v = v[:, order]

    scale = sigma[0] if sigma[0] > 0 else 1.0
    keep = sigma > 1e-13 * scale
    u = np.zeros((rows, rows), dtype=np.complex128)
    u[:, :cols][:, keep] = w[:, keep] / sigma[keep]
    keep_full = np.concatenate([keep, np.zeros(rows - cols, dtype=bool)])
    u = _complete_basis(u, keep_full)
    sigma = np.where(keep, sigma, 0.0)
    return SvdResult(u=u, sigma=sigma, v=v)


def wishart_eigs(rng: np.random.Generator, n: int, m: int, s: int, size=None) -> np.ndarray:
    """Largest ``s`` eigenvalues of ``H H^H`` for ``H`` i.i.d. CN(0, 1), M x N.

    With ``size`` given, returns an array of shape (size, s) of independent draws.
    """
    if not 1 <= s <= min(n, m):
        raise InvalidInputError(f"s={s} must lie in [1, min(n, m)={min(n, m)}]")
    count = 1 if size is None else int(size)
    h = gaussian_complex(rng, (count, m, n))
    mu = singular_values(h)[:, :s] ** 2
    return mu[0] if size is None else mu
