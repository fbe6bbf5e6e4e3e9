import textwrap

import numpy as np
import pytest

from bicmb.channel import ConfigurationError
from bicmb.coding import PUNCTURE_3_4
from bicmb.config import SimConfig, load_configs, parse_config
from bicmb.modem import block_pattern, rotating

DOC = textwrap.dedent("""
    name: base
    system: {n: 3, m: 3, s: 3}
    code: {generators: "5,7"}
    modulation: {bits: 2}
    interleaver: {spatial: rotating}
    simulation: {snr_db: [0, 5], seed: 4, min_errors: 50}
    variants:
      - name: t2
        interleaver: {spatial: "block:6"}
      - name: pp
        precoder: {bp: [1, 2]}
        simulation: {snr_db: [10]}
""")


def test_variants_deep_merge(tmp_path):
    path = tmp_path / "c.yaml"
    path.write_text(DOC)
    t2, pp = load_configs(path)
    assert t2.name == "t2" and t2.spatial == block_pattern(3, 6)
    assert t2.snr_db == (0.0, 5.0) and t2.seed == 4 and t2.min_errors == 50
    assert pp.spatial == rotating(3) and pp.bp == (1, 2)
    # merge replaces lists, keeps sibling keys
    assert pp.snr_db == (10.0,) and pp.seed == 4


def test_no_variants(tmp_path):
    path = tmp_path / "c.yaml"
    path.write_text("system: {n: 2, m: 2, s: 2}\n")
    (cfg,) = load_configs(path)
    assert cfg == SimConfig(n=2, m=2, s=2)


def test_defaults():
    cfg = parse_config({})
    assert (cfg.n, cfg.m, cfg.s, cfg.bits) == (2, 2, 2, 2)
    assert cfg.min_errors == 200 and cfg.max_bits == 20_000_000
    assert cfg.info_bits == 1800 and cfg.k_block is None
    assert cfg.code.generators == (0o5, 0o7)
    assert cfg.precoder().p == 0


def test_named_puncture_and_fields():
    cfg = parse_config({
        "code": {"generators": "133,171", "puncture": "3/4"},
        "precoder": {"bp": [1, 2], "angles": [0.3]},
        "simulation": {"k_block": 10, "fit_window": [4, 12], "max_bits": "1e6"},
    })
    assert cfg.code.puncture_pattern == PUNCTURE_3_4
    assert cfg.k_block == 10 and cfg.fit_window == (4.0, 12.0) and cfg.max_bits == 10**6
    c, s = np.cos(0.3), np.sin(0.3)
    np.testing.assert_allclose(cfg.precoder().theta_tilde, [[c, s], [-s, c]])


@pytest.mark.parametrize("doc", [
    {"system": {"n": 2, "m": 2, "s": 3}},
    {"simulation": {"min_errors": 0}},
    {"simulation": {"k_block": -1}},
    {"code": {"puncture": "5/6"}},
    {"code": {"generators": "9,7"}},
    {"interleaver": {"bit": "sorted"}},
    {"interleaver": {"spatial": [1, 2, 3]}},
    {"modulation": {"bits": 3}},
    {"precoder": {"bp": [3]}},
    {"bogus": 1},
])
def test_invalid_configs(doc):
    with pytest.raises(ConfigurationError):
        parse_config(doc)


def test_empty_snr_rejected():
    with pytest.raises(ConfigurationError):
        parse_config({}).require_snr()


def test_shipped_configs_load():
    from pathlib import Path
    root = Path(__file__).resolve().parents[1] / "configs"
    for path in sorted(root.glob("*.yaml")):
        assert load_configs(path)
