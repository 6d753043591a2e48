import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qnonlin import nogo, states
from qnonlin.errors import ValidationError


def test_sym_projector_rank_and_idempotence():
    for d, n, rank in [(2, 2, 3), (3, 2, 6), (2, 3, 4)]:
        p = nogo.sym_projector(d, n)
        assert np.allclose(p @ p, p)
        assert round(np.trace(p).real) == rank


def test_gap_maximally_mixed_qubit():
    r = nogo.nogo_gap(states.maximally_mixed(2), 2)
    assert r.sym_overlap == pytest.approx(0.75, abs=1e-15)
    assert r.target == pytest.approx(0.5, abs=1e-15)
    assert r.gap == pytest.approx(0.25, abs=1e-15)
    assert r.to_json()["closed_form"] == pytest.approx(0.75)


def test_gap_vanishes_on_pure_states():
    for n in (2, 3):
        assert abs(nogo.nogo_gap(states.random_pure(2, 5), n).gap) < 1e-12
    with pytest.raises(ValidationError):
        nogo.nogo_gap(states.maximally_mixed(2), 1)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 3))
def test_gap_positive_for_mixed(seed, d):
    rho = states.random_mixed(d, seed)
    r = nogo.nogo_gap(rho, 2)
    assert abs(r.sym_overlap - r.closed_form) < 1e-12
    if r.state_purity <= 0.99:
        assert r.gap > 0


def test_map2_target_and_deviation():
    rho = states.diagonal_state([0.5, 0.3, 0.2])
    assert np.allclose(nogo.map2_target(rho), np.diag([0.25 + 0.62 / 3, 0.09 + 0.62 / 3, 0.04 + 0.62 / 3]))
    assert nogo.map2_deviation(rho) > 0.01
    rep = nogo.map2_linearization_check(2, 25, 1)
    assert rep.max_deviation < 1e-12 and rep.trials == 25
    with pytest.raises(ValidationError):
        nogo.map2_linearization_check(1, 3, 1)


def test_symmetrize_and_trace_is_trace_preserving():
    sigma = np.kron(states.random_mixed(3, 1).mat, states.random_mixed(3, 2).mat)
    assert np.trace(nogo.symmetrize_and_trace(sigma, 3)).real == pytest.approx(1.0)


def test_map2_documented_examples():
    pure = states.random_pure(3, 2)
    assert np.allclose(nogo.map2_target(pure), pure.mat, atol=1e-12)
    assert np.allclose(nogo.map2_target(states.maximally_mixed(2)), np.eye(2) / 2)
    assert nogo.map2_deviation(states.random_pure(2, 4)) < 1e-12
    t = nogo.map2_target(states.random_mixed(4, 1))
    assert abs(np.trace(t) - 1) < 1e-12 and np.linalg.eigvalsh(t)[0] > 0
