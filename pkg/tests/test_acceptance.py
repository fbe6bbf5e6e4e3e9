"""Acceptance gate: one test per criterion, each reporting a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v``; the lines are repeated in
an "acceptance criteria" section at the end of the session.
"""

import itertools
import time
from dataclasses import replace
from fractions import Fraction
from pathlib import Path

import numpy as np

from bicmb.analysis import bicmb_bound, diversity_order, enumerate_alpha, estimate_slope, theorem1_check
from bicmb.coding import CodeSpec
from bicmb.config import load_configs
from bicmb.detector import metrics_general, metrics_partial
from bicmb.modem import block_pattern, make_qam, rotating
from bicmb.precoding import PrecoderConfig, apply_precoder, default_rotation, verify_condition
from bicmb.sim import run_curve, write_csv

CONFIGS = Path(__file__).resolve().parents[1] / "configs"
C57 = CodeSpec.from_octal("5,7")

# transfer-function terms as printed, exponents of (a, b, c) -> multiplicity
T1_PRINTED = {
    5: {(2, 2, 1): 1, (2, 1, 2): 1, (1, 2, 2): 1},
    6: {(3, 2, 1): 1},
    7: {(3, 3, 1): 2, (3, 2, 2): 2, (2, 3, 2): 2},
}
T1_COMPLETE = {5}  # weights whose term list is printed without "+ ..."
T2_Z5 = {(5, 0, 0): 1, (3, 2, 0): 1, (2, 3, 0): 1, (0, 5, 0): 1, (3, 0, 2): 1,
         (0, 3, 2): 1, (2, 0, 3): 1, (0, 2, 3): 1, (0, 0, 5): 1}


def _by_weight(avs):
    out = {}
    for a in avs:
        out.setdefault(a.d_h, {})[a.alpha] = a.multiplicity
    return out


def test_criterion_1_transfer_functions(acceptance):
    t0 = time.perf_counter()
    t1 = _by_weight(enumerate_alpha(C57, rotating(3), 7))
    t2 = _by_weight(enumerate_alpha(C57, block_pattern(3, 6), 5))
    elapsed = time.perf_counter() - t0
    bad = []
    for w, terms in T1_PRINTED.items():
        got = t1.get(w, {})
        if w in T1_COMPLETE and got != terms:
            bad.append(f"T1 Z^{w}: {got}")
        for alpha, mult in terms.items():
            if got.get(alpha) != mult:
                bad.append(f"T1 Z^{w} {alpha}: {got.get(alpha)} != {mult}")
    if t2.get(5) != T2_Z5:
        bad.append(f"T2 Z^5: {t2.get(5)}")
    ok = not bad and elapsed < 10
    acceptance(1, "transfer-function terms", ok,
               f"{sum(len(v) for v in T1_PRINTED.values())} T1 terms + 9 T2 terms checked, "
               f"mismatches={bad or 'none'}, {elapsed:.2f}s")


def test_criterion_2_diversity_table(acceptance):
    expect = {("T1", (1, 2)): 9, ("T1", (1, 3)): 9, ("T1", (2, 3)): 4,
              ("T2", (1, 2)): 1, ("T2", (1, 3)): 4, ("T2", (2, 3)): 4}
    ils = {"T1": rotating(3), "T2": block_pattern(3, 6)}
    t0 = time.perf_counter()
    got = {key: diversity_order(C57, ils[key[0]], key[1], 3, 3).overall_order for key in expect}
    elapsed = time.perf_counter() - t0
    ok = got == expect and elapsed < 10
    acceptance(2, "diversity-order table", ok,
               " ".join(f"{il}{list(bp)}={got[(il, bp)]}" for il, bp in expect) + f", {elapsed:.2f}s")


def test_criterion_3_bicmb_bound(acceptance):
    first = bicmb_bound(3, 3, 3, Fraction(1, 2))
    violations = []
    rates = [Fraction(1, 4), Fraction(1, 3), Fraction(1, 2), Fraction(2, 3), Fraction(3, 4), Fraction(1)]
    checked = 0
    for n, m in itertools.product(range(1, 9), repeat=2):
        for s in range(1, min(n, m) + 1):
            for rc in rates:
                if s * rc <= 1:
                    checked += 1
                    if bicmb_bound(n, m, s, rc) != n * m:
                        violations.append((n, m, s, rc))
    ok = first == 4 and not violations
    acceptance(3, "BICMB bound", ok,
               f"bicmb_bound(3,3,3,1/2)={first}, S*Rc<=1 grid: {checked} cases, {len(violations)} violations")


def test_criterion_4_metric_equivalence(acceptance):
    rng = np.random.default_rng(2024)
    c = make_qam(2)
    cfg = PrecoderConfig(3, default_rotation(2, 2), (1, 2))
    count = 1000
    lam = np.sort(np.sqrt(rng.exponential(size=(count, 3)) * 3), axis=1)[:, ::-1]
    x = c.points[rng.integers(0, 4, (count, 3))]
    noise = rng.standard_normal((count, 3)) + 1j * rng.standard_normal((count, 3))
    y = lam * apply_precoder(cfg, x) + 0.5 * noise
    gen = metrics_general(y, lam, cfg, c)
    part = metrics_partial(y, lam, cfg, c)
    err = float(np.abs(gen - part).max())
    # the gap is the same for both bit values, so decisions agree
    rel = float(np.abs((gen[..., 1] - gen[..., 0]) - (part[..., 1] - part[..., 0])).max())
    ok = err <= 1e-9
    acceptance(4, "split metrics equal full metrics", ok,
               f"{count} vectors, max |full - split| = {err:.3g} (tol 1e-9); "
               f"max |difference of bit-0/bit-1 gaps| = {rel:.3g}")


def test_criterion_5_precoder_condition(acceptance):
    t0 = time.perf_counter()
    res = {}
    for m in (2, 4):
        c = make_qam(m)
        res[f"I/{2 ** m}QAM"] = verify_condition(np.eye(2), c)
        res[f"R/{2 ** m}QAM"] = verify_condition(default_rotation(2, m), c)
    elapsed = time.perf_counter() - t0
    ok = (not res["I/4QAM"][0] and not res["I/16QAM"][0] and res["R/4QAM"][0] and res["R/16QAM"][0]
          and elapsed < 5)
    acceptance(5, "precoder condition", ok,
               " ".join(f"{k}:{'pass' if v[0] else 'fail'}({v[1]:.3g})" for k, v in res.items())
               + f", {elapsed:.2f}s")


def test_criterion_6_theorem1(acceptance):
    grid = [10.0, 15.0, 20.0, 25.0, 30.0]
    t0 = time.perf_counter()
    full = theorem1_check(2, 2, [1.0, 1.0], grid, 100_000, np.random.default_rng(11))
    weak = theorem1_check(2, 2, [0.0, 1.0], grid, 100_000, np.random.default_rng(12))
    elapsed = time.perf_counter() - t0
    ok = 3.5 <= full.exponent <= 4.5 and 0.6 <= weak.exponent <= 1.4 and elapsed < 120
    acceptance(6, "Theorem 1 exponents", ok,
               f"phi=(1,1): {full.exponent:.3f} in [3.5,4.5]; phi=(0,1): {weak.exponent:.3f} in [0.6,1.4]; "
               f"{elapsed:.1f}s")


def test_criterion_7_slope_ordering(acceptance):
    cfgs = {cfg.name: cfg for cfg in load_configs(CONFIGS / "roster_3x3.yaml")}
    t0 = time.perf_counter()
    slopes, low = {}, []
    for name in ("T2-BICMB", "T1-BICMB", "T1-PP12"):
        pts = run_curve(cfgs[name])
        low += [f"{name}@{p.snr_db}" for p in pts if p.bit_errors < 200]
        slopes[name] = estimate_slope([(p.snr_db, p.ber) for p in pts])
    elapsed = time.perf_counter() - t0
    d2, d1, dp = slopes["T2-BICMB"], slopes["T1-BICMB"], slopes["T1-PP12"]
    ok = (d2 < d1 < dp and abs(d2 - 1) <= 0.75 and abs(d1 - 4) <= 1.5 and not low
          and elapsed <= 1800)
    acceptance(7, "end-to-end slope ordering", ok,
               f"T2-BICMB {d2:.2f} (1+-0.75) < T1-BICMB {d1:.2f} (4+-1.5) < T1-PP[1,2] {dp:.2f}; "
               f"points under 200 errors: {low or 'none'}; {elapsed / 60:.1f} min")


def test_criterion_8_reproducibility(acceptance, tmp_path):
    base = {cfg.name: cfg for cfg in load_configs(CONFIGS / "roster_3x3.yaml")}["T1-BICMB"]
    cfg = replace(base, snr_db=(4.0, 6.0, 8.0), frames_per_batch=64)
    a = tmp_path / "a.csv"
    b = tmp_path / "b.csv"
    write_csv(run_curve(cfg), a)
    write_csv(run_curve(cfg), b)
    ok = a.read_bytes() == b.read_bytes()
    acceptance(8, "byte-identical CSVs", ok, f"{len(a.read_bytes())} bytes, identical={ok}")
