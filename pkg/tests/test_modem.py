import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bicmb.channel import ConfigurationError
from bicmb.coding import CodeSpec, encode
from bicmb.modem import (
    BitInterleaver,
    FrameLayout,
    SpatialInterleaver,
    block_pattern,
    demap_symbols,
    make_qam,
    map_symbols,
    rotating,
    spatial_map,
)


@pytest.mark.parametrize("m", [1, 2, 4, 6])
def test_unit_energy_and_size(m):
    c = make_qam(m)
    assert c.size == 2**m
    assert np.mean(np.abs(c.points) ** 2) == pytest.approx(1.0)
    dist = np.abs(c.points[:, None] - c.points[None, :])
    np.fill_diagonal(dist, np.inf)
    assert dist.min() == pytest.approx(c.d_min)


@pytest.mark.parametrize("m", [1, 2, 4, 6])
def test_gray_neighbours_differ_in_one_bit(m):
    c = make_qam(m)
    dist = np.abs(c.points[:, None] - c.points[None, :])
    for a, b in zip(*np.nonzero(np.isclose(dist, c.d_min))):
        assert np.sum(c.labels[a] != c.labels[b]) == 1


def test_qpsk_geometry():
    c = make_qam(2)
    expect = {complex(x, y) / np.sqrt(2) for x in (-1, 1) for y in (-1, 1)}
    assert {complex(np.round(p, 12)) for p in c.points} == {complex(np.round(p, 12)) for p in expect}
    assert c.d_min == pytest.approx(np.sqrt(2))


def test_16qam_dmin():
    assert make_qam(4).d_min == pytest.approx(2 / np.sqrt(10))


def test_16qam_matches_axiswise_gray():
    # binary-reflected Gray per axis: 00 -> -3, 01 -> -1, 11 -> +1, 10 -> +3
    axis = {(0, 0): -3, (0, 1): -1, (1, 1): 1, (1, 0): 3}
    c = make_qam(4)
    for bits in itertools.product((0, 1), repeat=4):
        expect = (axis[bits[:2]] + 1j * axis[bits[2:]]) / np.sqrt(10)
        assert map_symbols(c, list(bits))[0] == pytest.approx(expect)


def test_unsupported_m():
    with pytest.raises(ConfigurationError):
        make_qam(3)


def test_label_zero_maps_to_point_zero():
    c = make_qam(2)
    assert map_symbols(c, [0, 0])[0] == c.points[0]
    np.testing.assert_array_equal(c.labels[0], [0, 0])


@settings(max_examples=40, deadline=None)
@given(m=st.sampled_from([1, 2, 4, 6]), data=st.data())
def test_map_demap_round_trip(m, data):
    n = data.draw(st.integers(1, 20)) * m
    bits = np.array(data.draw(st.lists(st.integers(0, 1), min_size=n, max_size=n)))
    c = make_qam(m)
    np.testing.assert_array_equal(demap_symbols(c, map_symbols(c, bits)), bits)


def test_map_requires_whole_symbols():
    with pytest.raises(ConfigurationError):
        map_symbols(make_qam(4), [0, 1, 1])


def test_rotating_switch():
    streams = spatial_map(rotating(3), np.arange(6))
    assert [s.tolist() for s in streams] == [[0, 3], [1, 4], [2, 5]]
    np.testing.assert_array_equal(rotating(3).stream_of(np.arange(6)), [0, 1, 2, 0, 1, 2])


def test_block_pattern_t2():
    il = block_pattern(3, 6)
    np.testing.assert_array_equal(il.stream_of(np.arange(18)), [0] * 6 + [1] * 6 + [2] * 6)
    assert il.stream_of(18) == 0


def test_single_stream():
    (only,) = spatial_map(rotating(1), np.arange(5))
    np.testing.assert_array_equal(only, np.arange(5))


def test_pattern_parse():
    assert SpatialInterleaver.parse("rotating", 3) == rotating(3)
    assert SpatialInterleaver.parse("block:6", 3) == block_pattern(3, 6)
    assert SpatialInterleaver.parse([1, 1, 2, 2, 3, 3], 3).pattern == (0, 0, 1, 1, 2, 2)
    with pytest.raises(ConfigurationError):
        SpatialInterleaver.parse([1, 3], 3)


def test_locate_first_bit_and_packing():
    lay = FrameLayout(12, rotating(3), 2)
    assert lay.locate(0) == (0, 0, 0)
    # bits 0 and 3 both go to stream 0 and fill its first symbol
    assert lay.locate(3) == (0, 0, 1)
    assert lay.locate(1) == (0, 1, 0)
    assert lay.locate(6) == (1, 0, 0)
    with pytest.raises(IndexError):
        lay.locate(12)


@pytest.mark.parametrize("n_coded,m", [(36, 2), (37, 2), (100, 4), (29, 1)])
def test_locate_is_a_bijection(n_coded, m):
    lay = FrameLayout(n_coded, block_pattern(3, 6), m, rng=np.random.default_rng(0))
    seen = set()
    for u in range(n_coded):
        pos = lay.locate(u)
        assert lay.unlocate(*pos) == u
        seen.add(pos)
    assert len(seen) == n_coded
    assert lay.n_pad == lay.n_instants * lay.s * m - n_coded


def test_bit_transport_noiseless():
    spec = CodeSpec.from_octal("5,7")
    c = make_qam(4)
    rng = np.random.default_rng(3)
    info = rng.integers(0, 2, (5, 61))
    cw = encode(spec, info)
    lay = FrameLayout(cw.shape[1], rotating(3), c.m, rng=rng)
    sym = lay.symbols(c, cw)
    assert sym.shape == (5, lay.n_instants, 3)
    grid = demap_symbols(c, sym).reshape(5, lay.n_instants, 3, c.m)
    np.testing.assert_array_equal(lay.from_grid(grid), cw)


def test_bit_interleaver_is_permutation():
    bi = BitInterleaver.random([10, 7], np.random.default_rng(1))
    for perm, n in zip(bi.perms, [10, 7]):
        assert sorted(perm.tolist()) == list(range(n))


def test_distinct_instant_audit():
    lay = FrameLayout(12, rotating(3), 2)
    assert lay.distinct_instants([0, 6])
    assert not lay.distinct_instants([0, 3])
