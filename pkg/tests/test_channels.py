import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qnonlin import channels, states
from qnonlin.channels import ChoiMatrix, KrausMap
from qnonlin.errors import (
    DimensionMismatchError,
    NotCPError,
    NotTraceNonincreasingError,
    TrivialMapError,
    ValidationError,
)

from conftest import rand_complex, rand_hermitian


def random_kraus(rng, d_in, d_out, k=3, scale=1.0):
    ops = [rand_complex(rng, d_out, d_in) for _ in range(k)]
    a0 = sum(v.conj().T @ v for v in ops)
    top = np.linalg.eigvalsh(a0)[-1]
    return KrausMap(d_in, d_out, tuple(v * np.sqrt(scale / top) for v in ops))


def random_hermitian_choi(rng, d_in, d_out):
    c = rand_hermitian(rng, d_in * d_out)
    m = ChoiMatrix(d_in, d_out, c)
    if np.linalg.eigvalsh(channels.adjoint_on_identity(m))[-1] <= 0:
        m = ChoiMatrix(d_in, d_out, -c)
    return m


def test_transpose_choi_is_scaled_swap():
    for d in (2, 3):
        swap = np.zeros((d * d, d * d))
        for i in range(d):
            for j in range(d):
                swap[j * d + i, i * d + j] = 1
        assert np.allclose(channels.transpose_map(d).mat, swap / d)


def test_apply_agrees_across_representations(rng):
    x = rand_complex(rng, 3)
    assert np.allclose(channels.apply(channels.transpose_map(3), x), x.T)
    km = random_kraus(rng, 3, 2)
    direct = sum(v @ x @ v.conj().T for v in km.ops)
    via_choi = channels.apply(channels.choi_from_map(km), x)
    assert np.allclose(channels.apply(km, x), direct)
    assert np.allclose(via_choi, direct)
    with pytest.raises(DimensionMismatchError):
        channels.apply(km, np.eye(2))


def test_depolarizing_sends_everything_to_identity(rng):
    x = rand_complex(rng, 2)
    out = channels.apply(channels.depolarizing_map(2, 3), x)
    assert np.allclose(out, np.trace(x) * np.eye(3) / 3)
    assert np.allclose(channels.choi_from_map(channels.depolarizing_map(2, 3)).mat, np.eye(6) / 6)


def test_kraus_choi_roundtrip(rng):
    km = random_kraus(rng, 2, 3, k=4)
    back = channels.kraus_from_choi(channels.choi_from_map(km))
    x = rand_complex(rng, 2)
    assert np.allclose(channels.apply(back, x), channels.apply(km, x))
    assert len(back.ops) <= 6


def test_kraus_from_nonpositive_choi_raises():
    with pytest.raises(NotCPError) as exc:
        channels.kraus_from_choi(channels.transpose_map(2))
    assert exc.value.to_dict()["lambda_min"] == pytest.approx(-0.5)


def test_cp_and_tp_predicates(rng):
    assert channels.is_cp(channels.transpose_map(2))[0] is False
    assert channels.is_cp(channels.depolarizing_map(2))[0] is True
    assert channels.is_tp(channels.transpose_map(3))[0] is True
    assert channels.is_tp(channels.depolarizing_map(3))[0] is True
    assert channels.is_tp(random_kraus(rng, 2, 2, scale=0.5))[0] is False


def test_alpha_and_adjoint(rng):
    km = random_kraus(rng, 3, 2, scale=0.7)
    assert channels.alpha_of(km) == pytest.approx(0.7)
    c = channels.choi_from_map(km)
    assert np.allclose(channels.adjoint_on_identity(c), channels.adjoint_on_identity(km))
    rho = states.random_mixed(3, 1)
    assert np.trace(channels.apply(km, rho)).real == pytest.approx(
        np.trace(channels.adjoint_on_identity(km) @ rho.mat).real
    )
    with pytest.raises(ValidationError):
        channels.alpha_of(ChoiMatrix(2, 2, -np.eye(4) / 2))


def test_hermitian_basis_is_orthonormal():
    b = channels.hermitian_basis(3)
    gram = np.array([[np.trace(x.conj().T @ y) for y in b] for x in b])
    assert len(b) == 9
    assert np.allclose(gram, np.eye(9))


def test_trivial_map_rejected():
    with pytest.raises(TrivialMapError):
        channels.spa_optimal(channels.depolarizing_map(2))
    assert channels.is_nontrivial(channels.transpose_map(2))


@pytest.mark.parametrize("d", [2, 3, 4])
def test_spa_of_transposition(d):
    r = channels.spa_optimal(channels.transpose_map(d))
    assert r.lambda_prime == pytest.approx(-1 / d, abs=1e-12)
    assert r.gamma == pytest.approx(1 / (d + 1), abs=1e-12)
    assert r.delta == pytest.approx(1 / (d + 1), abs=1e-12)
    assert r.p_star == pytest.approx(d / (d + 1), abs=1e-12)
    assert r.alpha == pytest.approx(1.0)
    assert r.a == pytest.approx(1.0)
    assert r.t == pytest.approx(d + 1)
    assert channels.is_tp(r.theta_bar)[0]
    lam = channels.is_cp(r.theta_bar)[1]
    assert -1e-9 <= lam <= 1e-8


def test_spa_of_cp_map_is_rescaling(rng):
    km = random_kraus(rng, 2, 2, scale=0.5)
    r = channels.spa_optimal(km)
    assert r.lam == 0.0 and r.delta == 0.0 and r.p_star == 0.0
    assert r.gamma == pytest.approx(2.0)


def test_spa_preserves_bloch_direction(rng):
    m = random_hermitian_choi(rng, 2, 3)
    r = channels.spa_optimal(m)
    for _ in range(10):
        rho = states.random_mixed(2, rng)
        out = channels.apply(r.theta_bar, rho)
        target = channels.apply(m, rho)
        assert np.allclose(channels.traceless_part(out), r.gamma * channels.traceless_part(target), atol=1e-9)
        e = r.error_operator(m, rho)
        assert np.allclose(e, r.delta * np.eye(3), atol=1e-9) or np.allclose(
            channels.traceless_part(e), 0, atol=1e-9
        )


def test_spa_at_threshold_and_below():
    t = channels.transpose_map(2)
    k = channels.spa_at(t, 1.0)
    assert channels.is_cp(k)[0] and channels.is_tp(k)[0]
    with pytest.raises(NotCPError):
        channels.spa_at(t, 0.5)
    with pytest.raises(ValidationError):
        channels.spa_at(t, 1.0, t=1.0)


def test_spa_json_has_full_precision():
    obj = channels.spa_optimal(channels.transpose_map(2)).to_json()
    assert obj["gamma"] == 1 / 3
    back = channels.map_from_json(obj["theta_bar"])
    assert isinstance(back, KrausMap)


def test_dilation_square_and_rectangular(rng):
    for d_in, d_out in ((2, 2), (2, 3), (3, 2), (4, 1)):
        km = random_kraus(rng, d_in, d_out, scale=0.6)
        full = channels.dilate_trace_nonincreasing(km)
        assert channels.is_tp(full, 1e-9)[0]
        assert full.n_discard >= 1
        rho = states.random_mixed(d_in, rng)
        p = channels.outcome_probabilities(full, rho)
        assert p[full.n_discard:].sum() == pytest.approx(np.trace(channels.apply(km, rho)).real, abs=1e-12)
    with pytest.raises(NotTraceNonincreasingError):
        channels.dilate_trace_nonincreasing(random_kraus(rng, 2, 2, scale=1.5))
    with pytest.raises(ValidationError):
        channels.dilate_trace_nonincreasing(full)


def test_realize_probabilistic_post_state(rng):
    km = random_kraus(rng, 2, 2, k=1, scale=0.9)
    rho = states.random_mixed(2, 4)
    r = channels.realize_probabilistic(km, rho, seed=11)
    again = channels.realize_probabilistic(km, rho, seed=11)
    assert r.outcome == again.outcome
    if r.success:
        v = km.ops[0]
        expected = v @ rho.mat @ v.conj().T
        assert np.allclose(r.state, expected / np.trace(expected))
    assert abs(np.trace(r.state) - 1) < 1e-12


def test_realization_counts_total(rng):
    km = random_kraus(rng, 3, 3, scale=0.4)
    counts, full = channels.realization_counts(km, states.random_mixed(3, 2), 1000, 5)
    assert counts.sum() == 1000 and len(counts) == len(full.ops)


def test_map_json_roundtrip_and_errors(rng):
    km = random_kraus(rng, 2, 3)
    back = channels.map_from_json(channels.map_to_json(km))
    assert all(np.array_equal(a, b) for a, b in zip(back.ops, km.ops))
    c = channels.transpose_map(2)
    assert np.array_equal(channels.map_from_json(channels.map_to_json(c)).mat, c.mat)
    with pytest.raises(ValidationError):
        channels.map_from_json({"kind": "other", "d_in": 1, "d_out": 1})
    with pytest.raises(ValidationError):
        channels.map_from_json({"kind": "kraus", "d_in": 1})
    with pytest.raises(ValidationError):
        channels.builtin("builtin:nope", 2)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 3), st.integers(1, 3))
def test_spa_is_cp_and_trace_nonincreasing(seed, d_in, d_out):
    rng = np.random.default_rng(seed)
    m = random_hermitian_choi(rng, d_in, d_out)
    if not channels.is_nontrivial(m):
        return
    r = channels.spa_optimal(m)
    assert channels.is_cp(r.theta_bar, 1e-9)[0]
    top = np.linalg.eigvalsh(r.theta_bar.a0())[-1]
    assert top <= 1 + 1e-9
    assert 0 <= r.p_star < 1


def test_single_shots_match_batched_distribution(rng):
    km = random_kraus(rng, 2, 2, k=2, scale=0.6)
    rho = states.random_mixed(2, 6)
    p = np.trace(channels.apply(km, rho)).real
    gen = np.random.default_rng(17)
    n = 3000
    hits = sum(channels.realize_probabilistic(km, rho, gen).success for _ in range(n))
    assert abs(hits / n - p) < 4 * np.sqrt(p * (1 - p) / n)


def test_documented_examples():
    rho = states.random_mixed(2, 1)
    assert np.allclose(channels.apply(channels.identity_map(2), rho), rho.mat)
    assert np.allclose(channels.apply(channels.depolarizing_map(2), rho), np.eye(2) / 2)
    a = np.array([[1, 2], [3, 4]])
    assert np.allclose(channels.apply(channels.transpose_map(2), a), [[1, 3], [2, 4]])
    assert np.allclose(channels.choi_from_map(channels.identity_map(2)).mat, states.max_entangled(2).mat)
    assert np.allclose(channels.choi_from_map(channels.depolarizing_map(2)).mat, np.eye(4) / 4)
    k = channels.kraus_from_choi(channels.choi_from_map(channels.depolarizing_map(2)))
    assert len(k.ops) == 4
    k = channels.kraus_from_choi(channels.choi_from_map(channels.identity_map(2)))
    assert len(k.ops) == 1 and np.allclose(channels.apply(k, rho), rho.mat)
    assert channels.is_cp(channels.transpose_map(2))[1] == pytest.approx(-0.5)
    assert channels.alpha_of(channels.scaled_identity_map(3, 0.5)) == pytest.approx(0.5)
    assert channels.alpha_of(channels.transpose_map(3)) == pytest.approx(1.0)
    assert channels.alpha_of(channels.depolarizing_map(3)) == pytest.approx(1.0)


def test_spa_documented_examples():
    r = channels.spa_optimal(channels.transpose_map(2))
    rho = states.random_mixed(2, 3)
    expected = (2 / 3) * np.eye(2) / 2 + rho.mat.T / 3
    assert np.allclose(channels.apply(r.theta_bar, rho), expected)
    r = channels.spa_optimal(channels.identity_map(2))
    assert r.lam == 0 and np.allclose(channels.apply(r.theta_bar, rho), rho.mat)
    loose = channels.spa_at(channels.transpose_map(2), 5.0)
    assert channels.is_cp(loose)[1] > 1e-3
    with pytest.raises(NotCPError):
        channels.spa_at(channels.transpose_map(2), 0.9)


def test_dilation_documented_examples():
    full = channels.dilate_trace_nonincreasing(channels.identity_map(2))
    assert np.allclose(full.ops[0], 0)
    v1 = np.diag([1, 1 / np.sqrt(2)])
    full = channels.dilate_trace_nonincreasing(KrausMap(2, 2, (v1,)))
    assert np.allclose(full.ops[0], np.diag([0, 1 / np.sqrt(2)]))
    assert channels.is_tp(full)[0]
    k = channels.spa_at(channels.transpose_map(3), 1.0, t=8.0)
    assert channels.is_tp(channels.dilate_trace_nonincreasing(k))[0]


def test_realization_documented_examples():
    rho = states.random_mixed(2, 5)
    gen = np.random.default_rng(1)
    assert all(channels.realize_probabilistic(channels.identity_map(2), rho, gen).success for _ in range(200))
    half = channels.scaled_identity_map(2, 0.5)
    counts, full = channels.realization_counts(half, rho, 10000, 2)
    assert abs(counts[full.n_discard:].sum() / 10000 - 0.5) < 0.02


def test_conditional_states_reconstruct_map(rng):
    km = random_kraus(rng, 2, 3, k=3, scale=0.7)
    full = channels.dilate_trace_nonincreasing(km)
    rho = states.random_mixed(2, 7)
    p = channels.outcome_probabilities(full, rho)
    acc = np.zeros((3, 3), dtype=complex)
    for i in range(full.n_discard, len(full.ops)):
        v = full.ops[i]
        if p[i] > 0:
            acc += p[i] * (v @ rho.mat @ v.conj().T) / p[i]
    assert np.allclose(acc, channels.apply(km, rho), atol=1e-9)
