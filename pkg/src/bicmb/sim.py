"""Monte Carlo BER engine.

Work is split into batches of frames.  Batch ``b`` of an SNR point draws all
of its randomness from ``rng_stream(seed, point_key, b)``, and batches are
merged in index order after every round of ``batches_per_round``, so the
result depends only on the configuration, never on the worker count.
"""

from __future__ import annotations

import csv
import io
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .analysis import WindowError, diversity_order, estimate_slope
from .channel import draw_channel, draw_gains
from .coding import encode, viterbi_decode
from .config import SimConfig
from .detector import build_metric_table, metrics_general, metrics_partial
from .modem import FrameLayout, make_qam
from .numerics import gaussian_complex, rng_stream
from .precoding import apply_precoder

__all__ = [
    "BerPoint",
    "Link",
    "noise_variance",
    "simulate_batch",
    "run_point",
    "run_curve",
    "write_csv",
    "run_experiment",
    "default_workers",
]

log = logging.getLogger(__name__)

WORKERS_ENV = "BICMB_WORKERS"


@dataclass(frozen=True)
class BerPoint:
    snr_db: float
    bit_errors: int
    bits: int
    frames: int

    def __post_init__(self):
        if self.bit_errors > self.bits:
            raise ValueError("more bit errors than bits")

    @property
    def ber(self) -> float:
        return self.bit_errors / self.bits if self.bits else float("nan")


def noise_variance(n: int, snr_db: float) -> float:
    """Complex noise variance N0 = N / SNR (total transmit power is N)."""
    return n / 10.0 ** (snr_db / 10.0)


class Link:
    """Everything about a configured transmit/receive chain that is fixed across frames."""

    def __init__(self, cfg: SimConfig, metric: str = "partial"):
        self.cfg = cfg
        self.constellation = make_qam(cfg.bits)
        self.precoder = cfg.precoder()
        self.n_coded = cfg.code.coded_length(cfg.info_bits)
        rng = rng_stream(cfg.bit_seed, 0xB17) if cfg.bit_interleaver == "random" else None
        self.layout = FrameLayout(self.n_coded, cfg.spatial, cfg.bits, rng=rng)
        # unit-energy symbols on S streams; scale so the total power is N
        self.amp = np.sqrt(cfg.n / cfg.s)
        if metric not in ("partial", "general"):
            raise ValueError(f"unknown metric {metric!r}")
        self.metric = metric

    @property
    def n_instants(self) -> int:
        return self.layout.n_instants

    def transmit_symbols(self, info) -> np.ndarray:
        """Info bits (B, L) -> precoded, scaled symbols (B, K, S) indexed by subchannel."""
        coded = encode(self.cfg.code, info)
        x = self.layout.symbols(self.constellation, coded)
        return self.amp * apply_precoder(self.precoder, x)

    def gains(self, rng: np.random.Generator, frames: int) -> np.ndarray:
        """Per-instant subchannel gains (B, K, S), constant over each channel block."""
        cfg = self.cfg
        kb = cfg.k_block or self.n_instants
        blocks = -(-self.n_instants // kb)
        lam = draw_gains(rng, cfg.n, cfg.m, cfg.s, frames * blocks).reshape(frames, blocks, cfg.s)
        return lam[:, np.arange(self.n_instants) // kb]

    def detect(self, y, lam) -> np.ndarray:
        fn = metrics_partial if self.metric == "partial" else metrics_general
        gamma = fn(y, lam, self.precoder, self.constellation, self.amp)
        table = build_metric_table(self.layout, gamma)
        return viterbi_decode(self.cfg.code, table, self.cfg.info_bits)


def simulate_batch(link: Link, snr_db: float, rng: np.random.Generator, frames: int,
                   noiseless: bool = False, physical: bool = False):
    """Run ``frames`` codewords; returns (bit_errors, bits).

    With ``physical`` each channel block is sent through V~, H and U~^H with
    noise added at the receive antennas instead of through the diagonal model.
    """
    cfg = link.cfg
    info = rng.integers(0, 2, size=(frames, cfg.info_bits), dtype=np.int8)
    tx = link.transmit_symbols(info)
    n0 = noise_variance(cfg.n, snr_db)
    if physical:
        y, lam = _physical_path(link, rng, tx, n0, noiseless)
    else:
        lam = link.gains(rng, frames)
        y = lam * tx
        if not noiseless:
            y = y + np.sqrt(n0) * gaussian_complex(rng, y.shape)
    decoded = link.detect(y, lam)
    return int(np.count_nonzero(decoded != info)), int(info.size)


def _physical_path(link: Link, rng, tx, n0, noiseless):
    cfg = link.cfg
    frames, k_total, _ = tx.shape
    kb = cfg.k_block or k_total
    y = np.empty_like(tx)
    lam = np.empty(tx.shape)
    for f in range(frames):
        for start in range(0, k_total, kb):
            sl = slice(start, min(start + kb, k_total))
            ch = draw_channel(rng, cfg.n, cfg.m, cfg.s)
            r = ch.h @ (ch.v_tilde @ tx[f, sl].T)
            if not noiseless:
                r = r + np.sqrt(n0) * gaussian_complex(rng, r.shape)
            y[f, sl] = (ch.u_tilde.conj().T @ r).T
            lam[f, sl] = ch.lambdas
    return y, lam


def default_workers() -> int:
    env = os.environ.get(WORKERS_ENV)
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def _point_key(snr_db: float) -> int:
    return int(round((snr_db + 1000.0) * 1000.0))


def _batch_job(args):
    cfg, snr_db, index, noiseless = args
    link = _link_cache(cfg)
    rng = rng_stream(cfg.seed, _point_key(snr_db), index)
    return simulate_batch(link, snr_db, rng, cfg.frames_per_batch, noiseless=noiseless)


_LINKS: dict = {}


def _link_cache(cfg: SimConfig) -> Link:
    link = _LINKS.get(cfg)
    if link is None:
        _LINKS.clear()
        link = _LINKS[cfg] = Link(cfg)
    return link


def run_point(cfg: SimConfig, snr_db: float, workers: int | None = None,
              noiseless: bool = False, pool=None) -> BerPoint:
    """Simulate one SNR point until the stop rule is met."""
    workers = default_workers() if workers is None else workers
    errors = bits = frames = 0
    index = 0
    own_pool = None
    if pool is None and workers > 1:
        pool = own_pool = ProcessPoolExecutor(max_workers=workers)
    try:
        while errors < cfg.min_errors and bits < cfg.max_bits:
            jobs = [(cfg, snr_db, index + j, noiseless) for j in range(cfg.batches_per_round)]
            index += cfg.batches_per_round
            results = list(pool.map(_batch_job, jobs)) if pool else [_batch_job(j) for j in jobs]
            for e, b in results:
                errors += e
                bits += b
                frames += cfg.frames_per_batch
            if noiseless:
                break
    finally:
        if own_pool is not None:
            own_pool.shutdown()
    log.info("%s snr=%.2f dB: %d errors / %d bits", cfg.name, snr_db, errors, bits)
    return BerPoint(float(snr_db), errors, bits, frames)


def run_curve(cfg: SimConfig, workers: int | None = None) -> list:
    cfg.require_snr()
    workers = default_workers() if workers is None else workers
    pool = ProcessPoolExecutor(max_workers=workers) if workers > 1 else None
    try:
        return [run_point(cfg, snr, workers, pool=pool) for snr in cfg.snr_db]
    finally:
        if pool is not None:
            pool.shutdown()


def write_csv(points, path=None) -> str:
    """Write ``snr_db,ber,bit_errors,bits,frames`` rows; returns the text."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["snr_db", "ber", "bit_errors", "bits", "frames"])
    for p in points:
        w.writerow([repr(p.snr_db), repr(p.ber), p.bit_errors, p.bits, p.frames])
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text)
    return text


def fit_points(cfg: SimConfig, points) -> list:
    """Curve points eligible for the slope fit: enough errors and inside the window."""
    pts = [(p.snr_db, p.ber) for p in points if p.bit_errors >= cfg.min_errors]
    if cfg.fit_window is not None:
        lo, hi = cfg.fit_window
        pts = [q for q in pts if lo <= q[0] <= hi]
    return pts


def run_experiment(cfgs, out_dir, workers: int | None = None) -> str:
    """Simulate every variant, write one CSV each plus ``summary.txt``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    problems = []
    for cfg in cfgs:
        try:
            cfg.require_snr()
            points = run_curve(cfg, workers)
        except Exception as exc:  # collected and reported at the end
            problems.append(f"{cfg.name}: {exc}")
            continue
        write_csv(points, out / f"{cfg.name}.csv")
        pred = diversity_order(cfg.code, cfg.spatial, cfg.bp, cfg.n, cfg.m)
        pts = fit_points(cfg, points)
        try:
            est = f"{estimate_slope(pts):.2f}"
        except WindowError as exc:
            est = f"n/a ({exc})"
        rows.append((cfg.name, pred.overall_order, est, len(pts)))
    lines = [f"{'variant':<20}{'predicted':>10}  {'estimated':<12}{'fit_points':>10}"]
    lines += [f"{n:<20}{p:>10}  {e:<12}{k:>10}" for n, p, e, k in rows]
    lines += [f"ERROR {msg}" for msg in problems]
    text = "\n".join(lines) + "\n"
    (out / "summary.txt").write_text(text)
    if problems:
        raise RuntimeError("; ".join(problems))
    return text
