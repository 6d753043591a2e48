"""Density matrices, random states and entropy functionals."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import config
from .errors import StateValidationError, ValidationError
from .linalg import (
    as_matrix,
    dagger,
    hermiticity_defect,
    matrix_from_json,
    matrix_to_json,
    partial_trace,
)

EIG_DROP = 1e-14


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """A validated quantum state. Construct through :func:`validate`."""

    mat: np.ndarray

    @property
    def dim(self) -> int:
        return self.mat.shape[0]

    def __array__(self, dtype=None, copy=None):
        return self.mat if dtype is None else self.mat.astype(dtype)

    def eigenvalues(self) -> np.ndarray:
        """Spectrum, descending, with round-off negatives clipped to zero."""
        w = np.linalg.eigvalsh(self.mat)[::-1]
        return np.clip(w, 0.0, None)

    def to_json(self) -> dict:
        obj = {"kind": "density"}
        obj.update(matrix_to_json(self.mat))
        return obj


def validate(mat, tol: config.Tolerances | None = None) -> DensityMatrix:
    """Check hermiticity, unit trace and positivity; report every violation."""
    if isinstance(mat, DensityMatrix):
        return mat
    tol = config.tol() if tol is None else tol
    m = as_matrix(mat, square=True)
    violations = {}
    defect = hermiticity_defect(m)
    if defect > tol.hermiticity:
        violations["hermiticity"] = defect
    tr = np.trace(m)
    if abs(tr - 1.0) > tol.trace:
        violations["trace"] = float(tr.real)
    hm = 0.5 * (m + dagger(m))
    lam_min = float(np.linalg.eigvalsh(hm)[0])
    if lam_min < -tol.psd_clip:
        violations["positivity"] = lam_min
    if violations:
        raise StateValidationError(violations)
    return DensityMatrix(hm)


def state_from_json(obj: dict) -> DensityMatrix:
    kind = obj.get("kind", "density")
    if kind != "density":
        raise ValidationError(f"expected kind 'density', got {kind!r}")
    return validate(matrix_from_json(obj))


def _rng(seed) -> np.random.Generator:
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def _ginibre(rng: np.random.Generator, rows: int, cols: int) -> np.ndarray:
    return rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))


def pure_state(psi) -> DensityMatrix:
    psi = np.asarray(psi, dtype=np.complex128).reshape(-1)
    psi = psi / np.linalg.norm(psi)
    return DensityMatrix(np.outer(psi, psi.conj()))


def random_pure(d: int, seed=None) -> DensityMatrix:
    """Haar-random pure state on C^d."""
    if d < 1:
        raise ValidationError("dimension must be positive")
    psi = _ginibre(_rng(seed), d, 1)[:, 0]
    return pure_state(psi)


def random_mixed(d: int, seed=None) -> DensityMatrix:
    """Ginibre-ensemble mixed state ``G G^H / Tr(G G^H)``."""
    if d < 1:
        raise ValidationError("dimension must be positive")
    g = _ginibre(_rng(seed), d, d)
    m = g @ dagger(g)
    m = m / np.trace(m).real
    return DensityMatrix(0.5 * (m + dagger(m)))


def maximally_mixed(d: int) -> DensityMatrix:
    return DensityMatrix(np.eye(d, dtype=np.complex128) / d)


def diagonal_state(probs) -> DensityMatrix:
    return validate(np.diag(np.asarray(probs, dtype=np.complex128)))


def max_entangled(d: int) -> DensityMatrix:
    """Projector onto ``(1/sqrt d) sum_i |i>|i>``."""
    if d < 2:
        raise ValidationError("max_entangled requires d >= 2")
    psi = np.zeros(d * d, dtype=np.complex128)
    psi[[i * d + i for i in range(d)]] = 1.0
    return pure_state(psi)


def singlet() -> DensityMatrix:
    return pure_state([0.0, 1.0, -1.0, 0.0])


def werner_singlet_mixture(weight: float) -> DensityMatrix:
    """``weight * singlet + (1 - weight) * I/4`` on two qubits."""
    return validate(weight * singlet().mat + (1.0 - weight) * np.eye(4) / 4)


def random_separable(d_a: int, d_b: int, seed=None, terms: int | None = None) -> DensityMatrix:
    """Random convex mixture of product states (at most ``d_a*d_b`` terms)."""
    rng = _rng(seed)
    if terms is None:
        terms = int(rng.integers(1, d_a * d_b + 1))
    weights = rng.dirichlet(np.ones(terms))
    m = np.zeros((d_a * d_b, d_a * d_b), dtype=np.complex128)
    for w in weights:
        pick_a = random_pure if rng.random() < 0.5 else random_mixed
        pick_b = random_pure if rng.random() < 0.5 else random_mixed
        m += w * np.kron(pick_a(d_a, rng).mat, pick_b(d_b, rng).mat)
    return DensityMatrix(0.5 * (m + dagger(m)))


def reduced(rho: DensityMatrix, dims, keep) -> DensityMatrix:
    return DensityMatrix(partial_trace(rho.mat, dims, keep))


# -- functionals -------------------------------------------------------------

@dataclass(frozen=True)
class EntropyValue:
    kind: str
    order: float | None
    value: float

    def __float__(self) -> float:
        return self.value


def purity(rho) -> float:
    rho = validate(rho)
    m = rho.mat
    return float(np.real(np.sum(m * m.T)))


def power_sum(probs, q: float) -> float:
    p = np.asarray(probs, dtype=float)
    p = p[p > EIG_DROP]
    return float(np.sum(p**q))


def tsallis_entropy(rho, q: float) -> EntropyValue:
    """``(1 - sum_i p_i^q) / (q - 1)`` from the spectrum."""
    if q <= 0:
        raise ValidationError("Tsallis order must be positive")
    if q == 1:
        raise ValidationError("Tsallis order q = 1 is the von Neumann entropy; use von_neumann_entropy")
    p = validate(rho).eigenvalues()
    return EntropyValue("tsallis", float(q), (1.0 - power_sum(p, q)) / (q - 1.0))


def renyi_entropy(rho, alpha: float) -> EntropyValue:
    """``ln(sum_i p_i^alpha) / (1 - alpha)`` in nats."""
    if alpha <= 0:
        raise ValidationError("Renyi order must be positive")
    if alpha == 1:
        raise ValidationError("Renyi order alpha = 1 is the von Neumann entropy; use von_neumann_entropy")
    p = validate(rho).eigenvalues()
    return EntropyValue("renyi", float(alpha), math.log(power_sum(p, alpha)) / (1.0 - alpha))


def von_neumann_entropy(rho) -> EntropyValue:
    p = validate(rho).eigenvalues()
    p = p[p > EIG_DROP]
    return EntropyValue("von_neumann", None, float(-np.sum(p * np.log(p))))
