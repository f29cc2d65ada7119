import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from pldyn import (
    NotShadowed,
    ParameterError,
    PseudoOrbit,
    ShiftSystem,
    is_pseudo_orbit,
    orbit,
    perturbed_orbit,
    refine,
    shadowing_modulus,
    tent,
    trace,
)
from pldyn.shadowing import max_gap, pseudo_orbit_to_csv_string


def test_is_pseudo_orbit_examples(tent2, ident):
    true_orbit = orbit(tent2, 0.37, 30).states
    assert is_pseudo_orbit(tent2, true_orbit, 1e-9)
    assert not is_pseudo_orbit(ident, [0.0, 1.0, 0.0, 1.0], 0.5)
    assert is_pseudo_orbit(tent2, [2 / 3, 2 / 3 + 0.001, 2 / 3], 0.01)


def test_perturbed_orbit_zero_noise_limit(tent2):
    po = perturbed_orbit(tent2, 0.3, 40, 1e-300, seed=5)
    assert np.max(np.abs(po.states - orbit(tent2, 0.3, 40).states)) < 1e-250


def test_perturbed_orbit_deterministic(tent2):
    a = perturbed_orbit(tent2, 0.3, 100, 1e-4, seed=7)
    b = perturbed_orbit(tent2, 0.3, 100, 1e-4, seed=7)
    assert np.array_equal(a.states, b.states)
    assert is_pseudo_orbit(tent2, a.states, 1e-4)


def test_certified_constructor_rejects(tent2):
    with pytest.raises(ParameterError):
        PseudoOrbit.certified(tent2, [0.0, 0.9, 0.0], 1e-3)


def test_trace_fixed_point(tent2):
    po = PseudoOrbit(np.full(100, 2.0 / 3.0), 1e-6, "chain-path")
    tr = trace(tent2, po, 0.01)
    assert abs(tr.shadow_point - 2.0 / 3.0) < 1e-6
    assert tr.achieved_error < 1e-12


def test_trace_true_orbit_returns_start(tent2):
    states = orbit(tent2, 0.312, 40).states
    tr = trace(tent2, states, 1e-3)
    assert abs(tr.shadow_point - 0.312) < 1e-3
    # direct re-simulation stays certified at this horizon
    y = tr.shadow_point
    for i, z in enumerate(states):
        assert abs(y - z) <= 1e-3 + 1e-12, i
        y = tent2(y)


def test_trace_perturbed_success_and_oracle_agreement(tent2):
    po = perturbed_orbit(tent2, 0.3, 120, 1e-4, seed=3)
    tr = trace(tent2, po, 1e-3)
    assert tr.achieved_error <= 1e-3 + 1e-12
    segs = oracles.backward_surviving_set(tent2, po.states, 1e-3)
    assert segs, "oracle says the surviving set is nonempty"
    assert any(a - 1e-9 <= tr.shadow_point <= b + 1e-9 for a, b in segs)


def test_trace_failure_reports_first_dead_index(ident):
    states = np.array([0.0, 0.0, 0.8, 0.8, 0.8])
    with pytest.raises(NotShadowed) as exc:
        trace(ident, states, 0.1)
    # the set dies when the window jumps beyond reach
    assert exc.value.failed_index == 2


def test_nesting_surviving_measure_nonincreasing(tent2):
    po = perturbed_orbit(tent2, 0.41, 60, 1e-4, seed=9)
    widths = []
    for n in range(1, 61):
        pieces, _ = refine(tent2, po.states[:n], 1e-3)
        widths.append(sum(b - a for a, b, _, _ in pieces))
    for w0, w1 in zip(widths[:-1], widths[1:]):
        assert w1 <= w0 + 1e-15


@settings(max_examples=30, deadline=None)
@given(st.integers(min_value=0, max_value=2**31), st.integers(min_value=0, max_value=2**31))
def test_concatenation_closure(seed_a, seed_b):
    m = tent(2.0)
    a = perturbed_orbit(m, 0.3, 30, 1e-3, seed=seed_a).states
    b = perturbed_orbit(m, float(m(a[-1])), 30, 1e-3, seed=seed_b).states
    # junction gap |T(a[-1]) - b[0]| is zero by construction of b
    glued = np.concatenate([a, b])
    assert is_pseudo_orbit(m, glued, 1e-3)


def test_modulus_identity_drift(ident):
    d100 = shadowing_modulus(ident, 1e-2, trials=8, horizon=100, seed=2)
    assert 0.0 < d100 <= 1e-2
    d400 = shadowing_modulus(ident, 1e-2, trials=8, horizon=400, seed=2)
    assert d400 <= d100 + 1e-12


def test_modulus_tent_positive_and_monotone(tent2):
    d1 = shadowing_modulus(tent2, 1e-2, trials=8, horizon=120, seed=4)
    assert d1 > 0.0
    d2 = shadowing_modulus(tent2, 2e-2, trials=8, horizon=120, seed=4)
    assert d2 >= d1 - 1e-12


def test_modulus_thread_determinism(tent2):
    a = shadowing_modulus(tent2, 1e-2, trials=6, horizon=80, seed=11, threads=1)
    b = shadowing_modulus(tent2, 1e-2, trials=6, horizon=80, seed=11, threads=4)
    assert a == b


def test_pseudo_orbit_csv_roundtrip(tmp_path, tent2):
    po = perturbed_orbit(tent2, 0.25, 50, 1e-4, seed=1)
    path = tmp_path / "po.csv"
    po.to_csv(path)
    back = PseudoOrbit.from_csv(path)
    assert back.delta == po.delta
    assert back.provenance == po.provenance
    assert np.array_equal(back.states, po.states)
    assert "random-perturbed" in pseudo_orbit_to_csv_string(po)


def test_trace_result_json(tent2):
    po = perturbed_orbit(tent2, 0.3, 50, 1e-4, seed=1)
    js = trace(tent2, po, 1e-3).to_json()
    assert "shadow_point" in js


def test_full_shift_prefix_concatenation_tracing():
    """delta below base**m forces m+1 leading symbols to match after the
    shift, and the concatenation-of-prefixes point then traces within
    2 * base**m exactly."""
    sh = ShiftSystem(2, 0.5)
    k, mm = 2, 4
    rng = np.random.default_rng(0)
    horizon = 12
    length = 40
    seqs = [tuple(rng.integers(0, k, size=length).tolist())]
    for _ in range(horizon - 1):
        shifted = sh.shift(seqs[-1])
        tail = tuple(rng.integers(0, k, size=length - len(shifted) + mm + 1).tolist())
        seqs.append(shifted[: mm + 1] + tail)
    delta = sh.metric_base ** mm
    assert sh.is_pseudo_orbit(seqs, delta)
    y = sh.prefix_concat_point(seqs)
    cur = y
    for i in range(horizon):
        d = sh.distance(cur, seqs[i])
        assert d < 2 * sh.metric_base ** mm
        cur = sh.shift(cur)


def test_max_gap_matches_definition(tent2):
    states = np.array([0.1, 0.25, 0.55])
    want = max(abs(tent2(0.1) - 0.25), abs(tent2(0.25) - 0.55))
    assert max_gap(tent2, states) == pytest.approx(want, abs=0.0)
