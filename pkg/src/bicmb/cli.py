"""Command-line entry point: ``bicmb <subcommand> ...``."""

from __future__ import annotations

import argparse
import logging
import sys

import numpy as np

from .analysis import diversity_order, theorem1_check
from .channel import ConfigurationError
from .config import load_configs
from .modem import make_qam
from .precoding import FeasibilityError, verify_condition
from .sim import run_experiment


def _floats(text: str) -> list:
    return [float(x) for x in text.replace(" ", "").split(",") if x]


def cmd_simulate(args) -> int:
    cfgs = load_configs(args.config)
    print(run_experiment(cfgs, args.out, args.workers), end="")
    return 0


def cmd_analyze(args) -> int:
    for cfg in load_configs(args.config):
        rep = diversity_order(cfg.code, cfg.spatial, cfg.bp, cfg.n, cfg.m, args.max_weight)
        print(f"# {cfg.name}")
        print(rep.to_text())
    return 0


def cmd_verify_precoder(args) -> int:
    status = 0
    for cfg in load_configs(args.config):
        pc = cfg.precoder()
        if pc.p < 2:
            print(f"{cfg.name}: P={pc.p}, nothing to verify")
            continue
        try:
            ok, worst = verify_condition(pc.theta_tilde, make_qam(cfg.bits))
        except FeasibilityError as exc:
            print(f"{cfg.name}: {exc}")
            status = 1
            continue
        print(f"{cfg.name}: P={pc.p} {2 ** cfg.bits}-QAM {'PASS' if ok else 'FAIL'} worst={worst:.6g}")
        status |= 0 if ok else 1
    return status


def cmd_check_theorem1(args) -> int:
    res = theorem1_check(args.n, args.m, _floats(args.phi), _floats(args.gamma_db), args.trials,
                         np.random.default_rng(args.seed), importance=not args.plain)
    for g, e in zip(res.gammas_db, res.estimates):
        print(f"gamma={g:6.2f} dB  E={e:.6e}")
    print(f"exponent={res.exponent:.3f} predicted={res.predicted} delta={res.delta} "
          f"{'PASS' if res.passed else 'FAIL'}")
    return 0 if res.passed else 1


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="bicmb", description="BICMB partial-precoding simulator and analysis")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress per SNR point")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="BER curves for every variant of a config")
    s.add_argument("--config", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--workers", type=int, default=None, help="override BICMB_WORKERS")
    s.set_defaults(func=cmd_simulate)

    a = sub.add_parser("analyze", help="alpha-vector table and predicted diversity order")
    a.add_argument("--config", required=True)
    a.add_argument("--max-weight", type=int, default=None)
    a.set_defaults(func=cmd_analyze)

    v = sub.add_parser("verify-precoder", help="exhaustive check of the rotation condition")
    v.add_argument("--config", required=True)
    v.set_defaults(func=cmd_verify_precoder)

    t = sub.add_parser("check-theorem1", help="Monte Carlo decay exponent of the Wishart PEP bound")
    t.add_argument("--n", type=int, required=True)
    t.add_argument("--m", type=int, required=True)
    t.add_argument("--phi", required=True, help="comma separated weights, e.g. 1,1")
    t.add_argument("--trials", type=int, required=True)
    t.add_argument("--gamma-db", default="10,15,20,25,30")
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--plain", action="store_true", help="plain Monte Carlo, no importance sampling")
    t.set_defaults(func=cmd_check_theorem1)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (ConfigurationError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
