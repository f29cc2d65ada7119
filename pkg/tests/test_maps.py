import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from pldyn import (
    DomainError,
    MapSpec,
    ParameterError,
    ShiftSystem,
    bowen_dist,
    evaluate,
    example_exv,
    example_exv_cores,
    lap_counts,
    lipschitz_constant,
    load_map_json,
    orbit,
    periodic_cycles,
    periodic_points,
    pl_iterate,
    save_map_json,
    tent,
)

unit = st.floats(min_value=0.0, max_value=1.0, allow_nan=False)


def test_eval_tent_examples(tent2):
    assert evaluate(tent2, 0.0) == 0.0
    assert evaluate(tent2, 0.5) == 1.0
    # 2(1-x) = x at x = 2/3
    assert abs(evaluate(tent2, 2.0 / 3.0) - 2.0 / 3.0) < 1e-15


def test_eval_domain_error(tent2):
    with pytest.raises(DomainError):
        evaluate(tent2, 1.5)
    with pytest.raises(DomainError):
        evaluate(tent2, -0.1)


def test_mapspec_validation():
    with pytest.raises(ParameterError):
        MapSpec(np.array([0.0, 0.5, 1.0]), np.array([0.0, 1.2, 0.0]))
    with pytest.raises(ParameterError):
        MapSpec(np.array([0.0, 0.5, 0.9]), np.array([0.0, 1.0, 0.0]))
    with pytest.raises(ParameterError):
        MapSpec(np.array([0.0, 0.5, 0.5, 1.0]), np.array([0.0, 1.0, 1.0, 0.0]))


def test_orbit_examples(tent2, ident):
    fixed = orbit(tent2, 2.0 / 3.0, 4).states
    assert np.allclose(fixed, 2.0 / 3.0, atol=1e-14)
    assert orbit(tent2, 0.25, 3).states.tolist() == [0.25, 0.5, 1.0]
    assert np.all(orbit(ident, 0.37, 5).states == 0.37)


def test_orbit_matches_bruteforce(tent18):
    got = orbit(tent18, 0.3141, 25).states
    want = oracles.brute_orbit(tent18, 0.3141, 25)
    assert np.allclose(got, want, atol=0.0)


def test_bowen_dist_examples(tent2, ident):
    assert bowen_dist(ident, 0.2, 0.5, 10) == pytest.approx(0.3, abs=1e-15)
    assert bowen_dist(tent2, 0.77, 0.77, 7) == 0.0
    # orbits (0, 0) vs (0.25, 0.5)
    assert bowen_dist(tent2, 0.0, 0.25, 2) == 0.5


@settings(max_examples=60, deadline=None)
@given(unit, unit, unit, st.integers(min_value=1, max_value=12))
def test_bowen_dist_metric_properties(x, y, z, n):
    m = tent(2.0)
    dxy = bowen_dist(m, x, y, n)
    assert dxy == pytest.approx(bowen_dist(m, y, x, n), abs=1e-12)
    assert dxy <= bowen_dist(m, x, z, n) + bowen_dist(m, z, y, n) + 1e-12
    assert dxy >= abs(x - y) - 1e-12
    if x == y:
        assert dxy == 0.0


@settings(max_examples=40, deadline=None)
@given(unit, unit, st.integers(min_value=1, max_value=10))
def test_bowen_dist_nondecreasing_in_n(x, y, n):
    m = tent(1.8)
    assert bowen_dist(m, x, y, n) <= bowen_dist(m, x, y, n + 1) + 1e-15


def test_self_map_closure(tent2, exv2):
    rng = np.random.default_rng(0)
    xs = rng.uniform(size=100_000)
    for m in (tent2, exv2):
        ys = m.eval_array(xs)
        assert float(ys.min()) >= 0.0 and float(ys.max()) <= 1.0


def test_orbit_growth_bound(tent18):
    L = lipschitz_constant(tent18)
    rng = np.random.default_rng(1)
    for _ in range(50):
        x, y = rng.uniform(size=2)
        for n in (5, 10, 20):
            assert bowen_dist(tent18, x, y, n) <= L ** n * abs(x - y) + 1e-9


def test_lipschitz_examples(tent2, ident):
    assert lipschitz_constant(tent2) == 2.0
    assert lipschitz_constant(ident) == 1.0
    # connectors have slope exactly 2.5, so the computed constant is
    # 2.5, inside the documented bound of 5
    lip3 = lipschitz_constant(example_exv(3))
    assert lip3 == pytest.approx(2.5, abs=1e-9)
    assert lip3 <= 5.0


def test_exv_depth0_equals_tent(tent2):
    ev = example_exv(0)
    g = np.linspace(0.0, 1.0, 10_001)
    assert np.max(np.abs(ev.eval_array(g) - tent2.eval_array(g))) < 1e-12


def test_exv_depth2_breakpoints():
    ev = example_exv(2)
    left = 0.25
    expect = [(v - left) / 0.75 for v in (0.25, 0.3125, 0.5, 0.625, 1.0)]
    for v in expect:
        assert np.min(np.abs(ev.breakpoints - v)) < 1e-12


def test_exv_connector_fixes_block_corner():
    # the clamped connector at depth 2 fixes the rescaled image of the
    # first block corner: f(b_1) = b_1
    ev = example_exv(2)
    b1 = (0.3125 - 0.25) / 0.75
    assert evaluate(ev, b1) == pytest.approx(b1, abs=1e-12)
    # and the clamp point at the left edge is fixed too
    assert evaluate(ev, 0.0) == 0.0


def test_exv_cores_are_invariant():
    ev = example_exv(2)
    for lo, hi in example_exv_cores(2):
        xs = np.linspace(lo, hi, 501)
        ys = ev.eval_array(xs)
        assert float(ys.min()) >= lo - 1e-12
        assert float(ys.max()) <= hi + 1e-12


def test_exv_parameter_errors():
    with pytest.raises(ParameterError):
        example_exv(2, slopes=[2.0, 1.3])      # below sqrt(2)
    with pytest.raises(ParameterError):
        example_exv(2, slopes=[1.9, 2.0])      # first slope must be 2
    with pytest.raises(ParameterError):
        example_exv(-1)


def test_pl_iterate_tent2(tent2):
    xs, ys = pl_iterate(tent2, 3)
    # T^3 has 8 laps: breakpoints at k/8
    assert np.allclose(xs, np.arange(9) / 8.0)
    assert np.allclose(ys[::2], [0, 0, 0, 0, 0])
    assert np.allclose(ys[1::2], [1, 1, 1, 1])


def test_lap_counts(tent2, ident, tent_sqrt2):
    assert lap_counts(tent2, 8) == [2 ** k for k in range(1, 9)]
    assert lap_counts(ident, 5) == [1] * 5
    # the sqrt(2)-slope laps double every second step in the tail
    laps = lap_counts(tent_sqrt2, 12)
    assert laps[:6] == [2, 4, 8, 14, 24, 38]


def test_periodic_points_tent2(tent2):
    p1 = periodic_points(tent2, 1)
    assert np.allclose(sorted(p1), [0.0, 2.0 / 3.0], atol=1e-12)
    p2 = periodic_points(tent2, 2)
    assert len(p2) == 4  # 0, 2/5, 2/3, 4/5
    assert any(abs(v - 0.4) < 1e-12 for v in p2)


def test_periodic_cycles_minimal_period(tent2):
    cycles = periodic_cycles(tent2, 3)
    periods = sorted(len(c) for c in cycles)
    # fixed points 0 and 2/3, one 2-cycle, two 3-cycles
    assert periods == [1, 1, 2, 3, 3]
    two = next(c for c in cycles if len(c) == 2)
    assert np.allclose(sorted(two), [0.4, 0.8], atol=1e-12)
    for cyc in cycles:
        back = cyc[0]
        for _ in range(len(cyc)):
            back = evaluate(tent2, back)
        assert abs(back - cyc[0]) < 1e-9


def test_map_json_roundtrip(tmp_path, exv2):
    path = tmp_path / "m.json"
    save_map_json(exv2, path)
    m2 = load_map_json(path)
    assert m2.label == exv2.label
    assert np.array_equal(m2.breakpoints, exv2.breakpoints)
    assert np.array_equal(m2.values, exv2.values)


def test_map_json_rejects_with_anchor(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('{"label": "x",\n "breakpoints": [0, 0.5, 1],\n "values": [0, 2.0, 0]}\n')
    with pytest.raises(ParameterError) as exc:
        load_map_json(path)
    assert "values[1]" in str(exc.value)
    path.write_text('{"label": "x",\n "breakpoints": [0, 0.5, 1],\n')
    with pytest.raises(ParameterError) as exc:
        load_map_json(path)
    assert "line" in str(exc.value)


def test_shift_metric():
    sh = ShiftSystem(2, 0.5)
    assert sh.distance((0, 1, 1), (0, 1, 1)) == 0.0
    assert sh.distance((0, 1, 1), (1, 1, 1)) == 1.0
    assert sh.distance((0, 1, 1), (0, 0, 1)) == 0.5
    assert sh.distance((0, 1, 1), (0, 1, 0)) == 0.25
    assert sh.entropy_exact() == math.log(2)
    with pytest.raises(ParameterError):
        ShiftSystem(1)
