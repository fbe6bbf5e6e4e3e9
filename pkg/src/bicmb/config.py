"""YAML configuration for simulations and analyses.

Schema (all sections optional except where noted; defaults shown)::

    name: run                     # used for the CSV file name
    system:      {n: 2, m: 2, s: 2}
    code:        {generators: "5,7", puncture: null}    # puncture: list of 0/1 rows,
                                                         # or "2/3" / "3/4"
    modulation:  {bits: 2}
    interleaver: {spatial: rotating,  # "rotating", "block:<run>" or 1-based list
                  bit: random,        # "random" or "identity"
                  bit_seed: 0}
    precoder:    {bp: [], angles: auto}  # bp 1-based; angles list or "auto"
    simulation:  {snr_db: [...],      # required for simulate
                  min_errors: 200, max_bits: 20000000,
                  info_bits: 1800, k_block: frame,  # or symbols per channel draw
                  frames_per_batch: 32, batches_per_round: 8,
                  seed: 0, fit_window: null}
    variants:                         # optional; each entry deep-merges over the above
      - {name: t2, interleaver: {spatial: "block:6"}}
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
import yaml

from .channel import ConfigurationError
from .coding import PUNCTURE_2_3, PUNCTURE_3_4, CodeSpec
from .modem import SpatialInterleaver, make_qam
from .precoding import PrecoderConfig, make_rotation

__all__ = ["SimConfig", "parse_config", "load_configs"]

_NAMED_PUNCTURES = {"2/3": PUNCTURE_2_3, "3/4": PUNCTURE_3_4}


@dataclass(frozen=True)
class SimConfig:
    n: int = 2
    m: int = 2
    s: int = 2
    code: CodeSpec = field(default_factory=lambda: CodeSpec.from_octal("5,7"))
    bits: int = 2
    spatial: SpatialInterleaver | None = None
    bit_interleaver: str = "random"
    bit_seed: int = 0
    bp: tuple = ()
    angles: tuple | None = None
    snr_db: tuple = ()
    min_errors: int = 200
    max_bits: int = 20_000_000
    info_bits: int = 1800
    k_block: int | None = None
    frames_per_batch: int = 32
    batches_per_round: int = 8
    seed: int = 0
    fit_window: tuple | None = None
    name: str = "run"

    def __post_init__(self):
        if not 1 <= self.s <= min(self.n, self.m):
            raise ConfigurationError(f"s={self.s} must lie in [1, min(n, m)={min(self.n, self.m)}]")
        if self.spatial is None:
            object.__setattr__(self, "spatial", SpatialInterleaver(tuple(range(self.s))))
        if self.spatial.s != self.s:
            raise ConfigurationError(f"spatial interleaver uses {self.spatial.s} streams, s={self.s}")
        if self.min_errors <= 0 or self.max_bits <= 0:
            raise ConfigurationError("stop rule values must be positive")
        if self.info_bits <= 0 or self.frames_per_batch <= 0 or self.batches_per_round <= 0:
            raise ConfigurationError("frame and batch sizes must be positive")
        if self.k_block is not None and self.k_block <= 0:
            raise ConfigurationError("k_block must be positive")
        if self.bit_interleaver not in ("random", "identity"):
            raise ConfigurationError(f"unknown bit interleaver {self.bit_interleaver!r}")
        make_qam(self.bits)
        self.precoder()

    @property
    def rate(self) -> float:
        return self.code.rate

    def precoder(self) -> PrecoderConfig:
        if self.angles is None or len(self.bp) < 2:
            return PrecoderConfig.with_default_rotation(self.s, self.bp, self.bits)
        return PrecoderConfig(self.s, make_rotation(len(self.bp), self.angles), self.bp)

    def require_snr(self) -> None:
        if not self.snr_db:
            raise ConfigurationError(f"{self.name}: empty SNR list")


def _merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for key, val in over.items():
        if isinstance(val, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], val)
        else:
            out[key] = copy.deepcopy(val)
    return out


def _parse_code(sec: dict) -> CodeSpec:
    punct = sec.get("puncture")
    if isinstance(punct, str):
        if punct not in _NAMED_PUNCTURES:
            raise ConfigurationError(f"unknown puncture pattern {punct!r}")
        punct = _NAMED_PUNCTURES[punct]
    try:
        return CodeSpec.from_octal(str(sec.get("generators", "5,7")), punct,
                                   sec.get("constraint_length"))
    except ValueError as exc:
        raise ConfigurationError(str(exc)) from exc


def parse_config(doc: dict) -> SimConfig:
    """Build one SimConfig from an already-merged mapping."""
    known = {"name", "system", "code", "modulation", "interleaver", "precoder", "simulation", "variants"}
    unknown = set(doc) - known
    if unknown:
        raise ConfigurationError(f"unknown config sections: {sorted(unknown)}")
    system = doc.get("system", {})
    inter = doc.get("interleaver", {})
    prec = doc.get("precoder", {})
    sim = doc.get("simulation", {})
    s = int(system.get("s", 2))
    angles = prec.get("angles", "auto")
    k_block = sim.get("k_block", "frame")
    window = sim.get("fit_window")
    return SimConfig(
        n=int(system.get("n", 2)),
        m=int(system.get("m", 2)),
        s=s,
        code=_parse_code(doc.get("code", {})),
        bits=int(doc.get("modulation", {}).get("bits", 2)),
        spatial=SpatialInterleaver.parse(inter.get("spatial", "rotating"), s),
        bit_interleaver=str(inter.get("bit", "random")),
        bit_seed=int(inter.get("bit_seed", 0)),
        bp=tuple(int(b) for b in prec.get("bp", [])),
        angles=None if angles in (None, "auto") else tuple(float(a) for a in np.atleast_1d(angles)),
        snr_db=tuple(float(x) for x in sim.get("snr_db", [])),
        min_errors=int(sim.get("min_errors", 200)),
        max_bits=int(float(sim.get("max_bits", 20_000_000))),
        info_bits=int(sim.get("info_bits", 1800)),
        k_block=None if k_block in (None, "frame") else int(k_block),
        frames_per_batch=int(sim.get("frames_per_batch", 32)),
        batches_per_round=int(sim.get("batches_per_round", 8)),
        seed=int(sim.get("seed", 0)),
        fit_window=None if window is None else (float(window[0]), float(window[1])),
        name=str(doc.get("name", "run")),
    )


def load_configs(path) -> list:
    """Read a YAML file; returns one SimConfig per variant (or a single one)."""
    doc = yaml.safe_load(Path(path).read_text()) or {}
    if not isinstance(doc, dict):
        raise ConfigurationError("config root must be a mapping")
    variants = doc.get("variants")
    base = {k: v for k, v in doc.items() if k != "variants"}
    if not variants:
        return [parse_config(base)]
    return [parse_config(_merge(base, v)) for v in variants]
