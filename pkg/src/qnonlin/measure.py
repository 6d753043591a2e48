"""Finite-shot simulation of projective measurements.

Randomness comes from numpy's ``PCG64`` bit generator via
``np.random.default_rng(seed)``. Experiments that need several independent
batches derive child seeds with ``np.random.SeedSequence(seed).spawn(k)``,
batch ``i`` using child ``i``; outcome indices are drawn with
``Generator.choice`` over the distinct eigenvalues in ascending order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import config
from .errors import DimensionMismatchError, NumericalError, ValidationError
from .linalg import as_matrix, hermitian_eig
from .multicopy import (
    MulticopyObservable,
    WitnessReport,
    copies,
    shift_operator,
    split_observable,
    swap_operator,
    witness_operator,
    _bipartite,
)
from .spectrum import MomentVector, SpectrumEstimate, estimate_spectrum
from .states import DensityMatrix, validate


@dataclass(frozen=True)
class ShotEstimate:
    mean: float | complex
    std_error: float
    shots: int
    observable_id: str
    observables_used: int = 1
    imag_std_error: float | None = None

    def to_json(self) -> dict:
        out = {"kind": "shot_estimate", "observable_id": self.observable_id, "shots": self.shots,
               "observables_used": self.observables_used}
        if isinstance(self.mean, complex):
            out.update(mean_real=self.mean.real, mean_imag=self.mean.imag,
                       std_error=self.std_error, imag_std_error=self.imag_std_error)
        else:
            out.update(mean=self.mean, std_error=self.std_error)
        return out


def child_seeds(seed, k: int) -> list:
    """``k`` independent child seed sequences of ``seed`` (an int or a ``SeedSequence``)."""
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    return ss.spawn(k)


def outcome_distribution(obs, sigma, merge_tol: float | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Distinct eigenvalues of ``obs`` and their Born probabilities in ``sigma``.

    Eigenvalues closer than ``merge_tol`` share one outcome whose probability
    sums ``<v_i|σ|v_i>`` over the eigenspace.
    """
    tol = config.tol()
    merge_tol = tol.degenerate if merge_tol is None else merge_tol
    obs = as_matrix(obs, square=True)
    s = as_matrix(sigma.mat if isinstance(sigma, DensityMatrix) else sigma, square=True)
    if obs.shape != s.shape:
        raise DimensionMismatchError("observable and state sizes differ", expected=obs.shape[0], actual=s.shape[0])
    eig = hermitian_eig(obs)
    w, v = eig.eigenvalues, eig.eigenvectors
    weights = np.real(np.einsum("ij,ik,kj->j", v.conj(), s, v))
    groups = [[0]]
    for i in range(1, len(w)):
        if w[i] - w[groups[-1][0]] <= merge_tol:
            groups[-1].append(i)
        else:
            groups.append([i])
    values = np.array([np.mean(w[g]) for g in groups])
    probs = np.array([np.sum(weights[g]) for g in groups])
    total = probs.sum()
    if abs(total - 1.0) > tol.probability_sum:
        raise NumericalError(f"outcome probabilities sum to {total:.12g}", total=float(total))
    probs = np.clip(probs, 0.0, None)
    return values, probs / probs.sum()


def sample_outcomes(obs, sigma, shots: int, seed) -> np.ndarray:
    """Raw eigenvalue outcomes of ``shots`` independent measurements."""
    if shots < 1:
        raise ValidationError("shots must be positive")
    values, probs = outcome_distribution(obs, sigma)
    rng = np.random.default_rng(seed)
    return values[rng.choice(len(values), size=int(shots), p=probs)]


def sample_observable(obs, sigma, shots: int, seed, observable_id: str = "observable") -> ShotEstimate:
    """Sample mean and standard error of a hermitian observable."""
    x = sample_outcomes(obs, sigma, shots, seed)
    se = float(np.std(x, ddof=1) / np.sqrt(shots)) if shots > 1 else 0.0
    return ShotEstimate(float(np.mean(x)), se, int(shots), observable_id)


def estimate_multicopy(a: MulticopyObservable, rho, shots: int, seed, max_dim: int | None = None) -> ShotEstimate:
    """Shot estimate of ``Tr(A ρ^{⊗n})``.

    A non-hermitian ``A`` is estimated from two batches, on ``A_h`` and
    ``A_a``, combined as ``<A_h> - i <A_a>``.
    """
    rho = validate(rho)
    if rho.dim != a.d:
        raise DimensionMismatchError("state dimension does not match observable", expected=a.d, actual=rho.dim)
    sigma = copies(rho, a.n, max_dim)
    label = a.label or f"multicopy{a.n}"
    if a.hermitian:
        return sample_observable(a.op, sigma, shots, seed, label)
    h, anti = split_observable(a)
    s_h, s_a = child_seeds(seed, 2)
    eh = sample_observable(h.op, sigma, shots, s_h, h.label)
    ea = sample_observable(anti.op, sigma, shots, s_a, anti.label)
    return ShotEstimate(
        complex(eh.mean, -ea.mean), eh.std_error, int(shots), label,
        observables_used=2, imag_std_error=ea.std_error,
    )


def estimate_moments_shots(rho, k_max: int, shots: int, seed, max_dim: int | None = None) -> MomentVector:
    """Moments ``m_1 .. m_{k_max}``: ``m_1 = 1``, the rest from shift observables.

    ``m_2`` uses the swap; each higher moment measures both hermitian parts of
    the shift and keeps the real part, ``2 k_max - 3`` observables in total.
    """
    rho = validate(rho)
    if k_max < 1:
        raise ValidationError("k_max must be >= 1")
    ms, errs = [1.0], [0.0]
    seeds = child_seeds(seed, max(k_max - 1, 1))
    for k in range(2, k_max + 1):
        obs = swap_operator(rho.dim, max_dim) if k == 2 else shift_operator(rho.dim, k, max_dim)
        est = estimate_multicopy(obs, rho, shots, seeds[k - 2], max_dim)
        ms.append(float(np.real(est.mean)))
        errs.append(est.std_error)
    return MomentVector(rho.dim, tuple(ms), tuple(errs))


def spectrum_from_shots(rho, shots: int, seed, max_dim: int | None = None) -> SpectrumEstimate:
    rho = validate(rho)
    moments = estimate_moments_shots(rho, rho.dim, shots, seed, max_dim)
    est = estimate_spectrum(moments)
    return SpectrumEstimate(
        est.eigenvalues, est.residual, est.projected, method="shots",
        observables_used=max(2 * rho.dim - 3, 0), max_imag=est.max_imag,
    )


def estimate_witness(rho, dims, shots: int, seed, max_dim: int | None = None) -> WitnessReport:
    """Sampled two-copy witness on both sides; detection below ``-3`` standard errors."""
    rho, d_a, d_b = _bipartite(rho, dims)
    sigma = copies(rho, 2, max_dim)
    s_a, s_b = child_seeds(seed, 2)
    ea = sample_observable(witness_operator(d_a, d_b, "A", max_dim).op, sigma, shots, s_a, "witness2:A")
    eb = sample_observable(witness_operator(d_a, d_b, "B", max_dim).op, sigma, shots, s_b, "witness2:B")
    detected = ea.mean < -3 * ea.std_error or eb.mean < -3 * eb.std_error
    return WitnessReport(
        ea.mean, eb.mean, bool(detected), 2, method="sampled",
        std_error_A=ea.std_error, std_error_B=eb.std_error, shots=int(shots),
    )
