"""Hermitian linear maps, their structural physical approximations, and the
probabilistic realization of trace-nonincreasing CP maps.

Choi matrices use the normalized maximally entangled state:
``C = [id ⊗ Θ](P+)``, ``P+ = |Ψ+><Ψ+|``, ``|Ψ+> = d^{-1/2} Σ_i |i>|i>``,
with the input space as the first tensor factor. The "noise" map that
appears in every approximation is ``X -> Tr(X) I_{d_out}``; its Choi matrix
is ``I_{d d_out} / d``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from . import config
from .errors import (
    DimensionMismatchError,
    NotCPError,
    NotTraceNonincreasingError,
    NumericalError,
    TrivialMapError,
    ValidationError,
)
from .linalg import (
    as_matrix,
    dagger,
    hermitian_eig,
    hermiticity_defect,
    matrix_from_json,
    matrix_to_json,
    partial_trace,
    psd_sqrt,
)
from .states import DensityMatrix, validate


@dataclass(frozen=True, eq=False)
class KrausMap:
    """``X -> Σ_i V_i X V_i^H`` with every ``V_i`` of shape ``(d_out, d_in)``.

    ``n_discard`` counts leading operators that form the discard branch added
    by :func:`dilate_trace_nonincreasing`; they are not part of the map
    being realized.
    """

    d_in: int
    d_out: int
    ops: tuple
    n_discard: int = 0

    def __post_init__(self):
        ops = tuple(as_matrix(v) for v in self.ops)
        for v in ops:
            if v.shape != (self.d_out, self.d_in):
                raise DimensionMismatchError(
                    "Kraus operator has wrong shape",
                    expected=[self.d_out, self.d_in],
                    actual=list(v.shape),
                )
        object.__setattr__(self, "ops", ops)

    @classmethod
    def from_ops(cls, ops: Sequence) -> "KrausMap":
        ops = [as_matrix(v) for v in ops]
        if not ops:
            raise ValidationError("a Kraus map needs at least one operator")
        d_out, d_in = ops[0].shape
        return cls(d_in, d_out, tuple(ops))

    @property
    def kept_ops(self) -> tuple:
        return self.ops[self.n_discard:]

    def a0(self) -> np.ndarray:
        """``Σ_i V_i^H V_i`` over the operators that define the map."""
        a = np.zeros((self.d_in, self.d_in), dtype=np.complex128)
        for v in self.kept_ops:
            a += dagger(v) @ v
        return a


@dataclass(frozen=True, eq=False)
class ChoiMatrix:
    d_in: int
    d_out: int
    mat: np.ndarray

    def __post_init__(self):
        m = as_matrix(self.mat, square=True)
        n = self.d_in * self.d_out
        if m.shape[0] != n:
            raise DimensionMismatchError("Choi matrix has wrong size", expected=n, actual=m.shape[0])
        object.__setattr__(self, "mat", m)


HermitianMapSpec = Union[KrausMap, ChoiMatrix]


# -- builtin maps -------------------------------------------------------------

def identity_map(d: int) -> KrausMap:
    return KrausMap(d, d, (np.eye(d),))


def scaled_identity_map(d: int, scale: float) -> KrausMap:
    return KrausMap(d, d, (np.sqrt(scale) * np.eye(d),))


def depolarizing_map(d_in: int, d_out: int | None = None) -> KrausMap:
    """``X -> Tr(X) I / d_out`` with ``d_in * d_out`` Kraus operators."""
    d_out = d_in if d_out is None else d_out
    ops = []
    for a in range(d_out):
        for i in range(d_in):
            v = np.zeros((d_out, d_in), dtype=np.complex128)
            v[a, i] = 1.0 / np.sqrt(d_out)
            ops.append(v)
    return KrausMap(d_in, d_out, tuple(ops))


def transpose_map(d: int) -> ChoiMatrix:
    """Transposition; its Choi matrix is the swap divided by ``d``."""
    return choi_of_superoperator(d, d, lambda x: x.T)


def noise_choi(d_in: int, d_out: int) -> np.ndarray:
    return np.eye(d_in * d_out, dtype=np.complex128) / d_in


BUILTINS = {
    "transpose": lambda d: transpose_map(d),
    "depolarize": lambda d: depolarizing_map(d),
    "identity": lambda d: identity_map(d),
}


def builtin(name: str, d: int) -> HermitianMapSpec:
    key = name.split(":", 1)[1] if name.startswith("builtin:") else name
    try:
        return BUILTINS[key](d)
    except KeyError:
        raise ValidationError(f"unknown builtin map {name!r}; known: {sorted(BUILTINS)}") from None


# -- representations ----------------------------------------------------------

def _unit(d: int, i: int, j: int) -> np.ndarray:
    e = np.zeros((d, d), dtype=np.complex128)
    e[i, j] = 1.0
    return e


def choi_of_superoperator(d_in: int, d_out: int, fn) -> ChoiMatrix:
    """Choi matrix of an arbitrary linear function on ``d_in x d_in`` matrices."""
    c = np.zeros((d_in * d_out, d_in * d_out), dtype=np.complex128)
    for i in range(d_in):
        for j in range(d_in):
            c += np.kron(_unit(d_in, i, j), as_matrix(fn(_unit(d_in, i, j))))
    return ChoiMatrix(d_in, d_out, c / d_in)


def apply(m: HermitianMapSpec, x) -> np.ndarray:
    """Evaluate the map on a ``d_in x d_in`` operator."""
    x = as_matrix(x.mat if isinstance(x, DensityMatrix) else x, square=True)
    if x.shape[0] != m.d_in:
        raise DimensionMismatchError("input has wrong dimension", expected=m.d_in, actual=x.shape[0])
    if isinstance(m, KrausMap):
        out = np.zeros((m.d_out, m.d_out), dtype=np.complex128)
        for v in m.kept_ops:
            out += v @ x @ dagger(v)
        return out
    # Θ(X) = d Tr_1[(X^T ⊗ I) C]
    c = m.mat.reshape(m.d_in, m.d_out, m.d_in, m.d_out)
    return m.d_in * np.einsum("ij,iajb->ab", x, c)


def choi_from_map(m: HermitianMapSpec) -> ChoiMatrix:
    if isinstance(m, ChoiMatrix):
        return m
    c = np.zeros((m.d_in * m.d_out, m.d_in * m.d_out), dtype=np.complex128)
    for v in m.kept_ops:
        w = v.T.reshape(-1)  # w[i*d_out + a] = V[a, i]
        c += np.outer(w, w.conj())
    return ChoiMatrix(m.d_in, m.d_out, c / m.d_in)


def kraus_from_choi(c: ChoiMatrix, tol: float | None = None) -> KrausMap:
    """Kraus operators from the spectral decomposition of a PSD Choi matrix.

    Raises
    ------
    NotCPError
        If the Choi matrix has an eigenvalue below ``-tol``.
    """
    tol = config.tol().kraus_psd if tol is None else tol
    eig = hermitian_eig(c.mat)
    w, u = eig.eigenvalues, eig.eigenvectors
    if w[0] < -tol:
        raise NotCPError(float(w[0]))
    cutoff = 1e-14 * max(abs(w[-1]), 1.0)
    ops = []
    for k in range(len(w) - 1, -1, -1):
        if w[k] <= cutoff:
            continue
        v = np.sqrt(c.d_in * w[k]) * u[:, k].reshape(c.d_in, c.d_out).T
        ops.append(v)
    if not ops:
        ops.append(np.zeros((c.d_out, c.d_in), dtype=np.complex128))
    return KrausMap(c.d_in, c.d_out, tuple(ops))


def is_cp(m: HermitianMapSpec, tol: float | None = None) -> tuple[bool, float]:
    tol = config.tol().cp if tol is None else tol
    lam = float(hermitian_eig(choi_from_map(m).mat, tol=1e-8).eigenvalues[0])
    return lam >= -tol, lam


def is_tp(m: HermitianMapSpec, tol: float | None = None) -> tuple[bool, float]:
    """Trace preservation; the defect is a Frobenius norm."""
    tol = config.tol().tp if tol is None else tol
    if isinstance(m, KrausMap):
        a = np.zeros((m.d_in, m.d_in), dtype=np.complex128)
        for v in m.ops:
            a += dagger(v) @ v
        defect = float(np.linalg.norm(a - np.eye(m.d_in)))
    else:
        # Tr_out C = I / d_in
        reduced = partial_trace(m.mat, [m.d_in, m.d_out], [0])
        defect = float(np.linalg.norm(m.d_in * reduced - np.eye(m.d_in)))
    return defect <= tol, defect


def adjoint_on_identity(m: HermitianMapSpec) -> np.ndarray:
    """``Θ*(I)``, the operator with ``Tr Θ(ρ) = Tr(Θ*(I) ρ)``."""
    if isinstance(m, KrausMap):
        return m.a0()
    t = m.d_in * partial_trace(m.mat, [m.d_in, m.d_out], [0])  # t_ij = Tr Θ(|i><j|)
    return t.T


def alpha_of(m: HermitianMapSpec) -> float:
    """Largest output trace over input states, ``max_ρ Tr Θ(ρ)``."""
    alpha = float(hermitian_eig(adjoint_on_identity(m), tol=1e-8).eigenvalues[-1])
    if alpha <= 0:
        raise ValidationError(
            f"max output trace alpha = {alpha:.6g} <= 0; optimal approximation undefined",
            alpha=alpha,
        )
    return alpha


def hermitian_basis(d: int) -> list[np.ndarray]:
    """Orthonormal (Hilbert-Schmidt) hermitian basis of d x d matrices."""
    basis = []
    for i in range(d):
        basis.append(_unit(d, i, i))
    for i in range(d):
        for j in range(i + 1, d):
            basis.append((_unit(d, i, j) + _unit(d, j, i)) / np.sqrt(2))
            basis.append(1j * (_unit(d, i, j) - _unit(d, j, i)) / np.sqrt(2))
    return basis


def traceless_part(x) -> np.ndarray:
    x = as_matrix(x, square=True)
    return x - np.trace(x) * np.eye(x.shape[0]) / x.shape[0]


def is_nontrivial(m: HermitianMapSpec, tol: float | None = None) -> bool:
    """False iff every output on a hermitian basis is proportional to ``I``."""
    tol = config.tol().triviality if tol is None else tol
    return any(np.linalg.norm(traceless_part(apply(m, b))) >= tol for b in hermitian_basis(m.d_in))


def is_hermitian_map(m: HermitianMapSpec, tol: float | None = None) -> bool:
    tol = config.tol().hermiticity if tol is None else tol
    return hermiticity_defect(choi_from_map(m).mat) <= tol


# -- structural physical approximation ----------------------------------------

@dataclass(frozen=True, eq=False)
class SpaResult:
    theta_bar: KrausMap
    lambda_prime: float
    lam: float
    alpha: float
    gamma: float
    delta: float
    p_star: float
    a: float
    t: float
    d_in: int
    d_out: int
    choi: np.ndarray = field(repr=False)

    def error_operator(self, theta: HermitianMapSpec, rho) -> np.ndarray:
        """``Θ̄(ρ) - γ Θ(ρ)``; equals ``δ I`` for a structural approximation."""
        return apply(self.theta_bar, rho) - self.gamma * apply(theta, rho)

    def to_json(self) -> dict:
        return {
            "kind": "spa",
            "d_in": self.d_in,
            "d_out": self.d_out,
            "lambda_prime": self.lambda_prime,
            "lambda": self.lam,
            "alpha": self.alpha,
            "gamma": self.gamma,
            "delta": self.delta,
            "p_star": self.p_star,
            "a": self.a,
            "t": self.t,
            "theta_bar": map_to_json(self.theta_bar),
        }


def noisy_choi(m: HermitianMapSpec, a: float, t: float = 1.0) -> np.ndarray:
    """Choi matrix of ``t^{-1} (a Tr(.) I + Θ)``."""
    c = choi_from_map(m)
    return (a * noise_choi(m.d_in, m.d_out) + c.mat) / t


def spa_at(m: HermitianMapSpec, a: float, t: float | None = None) -> KrausMap:
    """``t^{-1} (a I + Θ)`` in Kraus form.

    ``t`` defaults to the smallest normalizer keeping every output trace at
    most one, ``a d_out + α_Θ``.
    """
    if t is None:
        t = a * m.d_out + alpha_of(m)
    if t <= 0:
        raise ValidationError(f"normalizer t must be positive, got {t}")
    c = noisy_choi(m, a, t)
    lam = float(hermitian_eig(c, tol=1e-8).eigenvalues[0])
    if lam < -config.tol().cp:
        lam_prime = float(hermitian_eig(choi_from_map(m).mat, tol=1e-8).eigenvalues[0])
        threshold = m.d_in * max(0.0, -lam_prime)
        raise NotCPError(lam, f"noise level a = {a:.6g} is below the CP threshold {threshold:.6g}")
    out = kraus_from_choi(ChoiMatrix(m.d_in, m.d_out, c))
    max_trace = float(hermitian_eig(out.a0(), tol=1e-8).eigenvalues[-1])
    if max_trace > 1.0 + config.tol().trace_nonincreasing:
        raise ValidationError(
            f"normalizer t = {t:.6g} too small: output trace reaches {max_trace:.6g}",
            max_trace=max_trace,
        )
    return out


def spa_optimal(m: HermitianMapSpec) -> SpaResult:
    """Best structural physical approximation of a nontrivial hermitian map.

    With ``λ' = λ_min(C)``, ``λ = max(0, -λ')`` and ``α = max_ρ Tr Θ(ρ)``::

        Θ̄ = (λ d / (λ d d' + α)) I + (1 / (λ d d' + α)) Θ
    """
    if not is_hermitian_map(m):
        raise ValidationError("map is not hermiticity preserving")
    if not is_nontrivial(m):
        raise TrivialMapError("map sends every input to a multiple of the identity")
    d, dp = m.d_in, m.d_out
    lam_prime = float(hermitian_eig(choi_from_map(m).mat, tol=1e-8).eigenvalues[0])
    # round-off negatives of a rank-deficient CP Choi matrix count as zero
    lam = -lam_prime if lam_prime < -config.tol().cp else 0.0
    alpha = alpha_of(m)
    norm = lam * d * dp + alpha
    gamma = 1.0 / norm
    delta = lam * d / norm
    ratio = lam * d * dp / alpha
    p_star = ratio / (ratio + 1.0)
    a = lam * d
    c = noisy_choi(m, a, norm)
    theta_bar = kraus_from_choi(ChoiMatrix(d, dp, c))
    return SpaResult(
        theta_bar=theta_bar,
        lambda_prime=lam_prime,
        lam=lam,
        alpha=alpha,
        gamma=gamma,
        delta=delta,
        p_star=p_star,
        a=a,
        t=norm,
        d_in=d,
        d_out=dp,
        choi=c,
    )


# -- probabilistic realization ------------------------------------------------

def dilate_trace_nonincreasing(m: KrausMap, tol: float | None = None) -> KrausMap:
    """Prepend discard operators built from ``V_0 = sqrt(I - A_0)``.

    For ``d_out >= d_in`` there is a single discard operator, ``V_0`` padded
    with zero rows. For ``d_out < d_in``, ``V_0`` is split into row blocks of
    height ``d_out``; the blocks jointly satisfy ``Σ B_k^H B_k = I - A_0``.
    """
    tol = config.tol().trace_nonincreasing if tol is None else tol
    if m.n_discard:
        raise ValidationError("map is already dilated")
    a0 = m.a0()
    top = float(hermitian_eig(a0, tol=1e-8).eigenvalues[-1])
    if top > 1.0 + tol:
        raise NotTraceNonincreasingError(top - 1.0)
    v0 = psd_sqrt(np.eye(m.d_in) - a0, clip=max(tol, 1e-10))
    if m.d_out >= m.d_in:
        pad = np.zeros((m.d_out, m.d_in), dtype=np.complex128)
        pad[: m.d_in] = v0
        discard = [pad]
    else:
        discard = []
        for start in range(0, m.d_in, m.d_out):
            block = np.zeros((m.d_out, m.d_in), dtype=np.complex128)
            rows = v0[start : start + m.d_out]
            block[: rows.shape[0]] = rows
            discard.append(block)
    return KrausMap(m.d_in, m.d_out, tuple(discard) + m.ops, n_discard=len(discard))


@dataclass(frozen=True, eq=False)
class Realization:
    outcome: int
    state: np.ndarray | None
    success: bool
    probabilities: np.ndarray


def outcome_probabilities(m: KrausMap, rho) -> np.ndarray:
    """``p_i = Tr(V_i ρ V_i^H)`` for every operator of a dilated map."""
    rho = validate(rho)
    if rho.dim != m.d_in:
        raise DimensionMismatchError("state has wrong dimension", expected=m.d_in, actual=rho.dim)
    p = np.array([np.real(np.trace(v @ rho.mat @ dagger(v))) for v in m.ops])
    p = np.clip(p, 0.0, None)
    if p.sum() < 1e-14:
        raise NumericalError("all outcome probabilities vanish", total=float(p.sum()))
    return p / p.sum()


def _dilated(m: KrausMap) -> KrausMap:
    return m if m.n_discard else dilate_trace_nonincreasing(m)


def realize_probabilistic(m: KrausMap, rho, seed) -> Realization:
    """One run of the measurement that implements ``m`` probabilistically.

    Outcomes below ``n_discard`` (index 0 for square maps) mean the system is
    discarded; otherwise the post-measurement state is ``V_i ρ V_i^H / p_i``.
    """
    full = _dilated(m)
    rho = validate(rho)
    p = outcome_probabilities(full, rho)
    rng = np.random.default_rng(seed)
    i = int(rng.choice(len(p), p=p))
    v = full.ops[i]
    post = v @ rho.mat @ dagger(v) / p[i]
    return Realization(i, post, i >= full.n_discard, p)


def realization_counts(m: KrausMap, rho, shots: int, seed) -> tuple[np.ndarray, KrausMap]:
    """Outcome histogram of ``shots`` independent runs; returns the dilated map too."""
    full = _dilated(m)
    p = outcome_probabilities(full, rho)
    rng = np.random.default_rng(seed)
    counts = rng.multinomial(int(shots), p)
    return counts, full


# -- JSON ---------------------------------------------------------------------

def map_to_json(m: HermitianMapSpec) -> dict:
    if isinstance(m, KrausMap):
        return {
            "kind": "kraus",
            "d_in": m.d_in,
            "d_out": m.d_out,
            "n_discard": m.n_discard,
            "ops": [matrix_to_json(v) for v in m.ops],
        }
    return {"kind": "choi", "d_in": m.d_in, "d_out": m.d_out, "choi": matrix_to_json(m.mat)}


def map_from_json(obj: dict) -> HermitianMapSpec:
    kind = obj.get("kind")
    try:
        d_in, d_out = int(obj["d_in"]), int(obj["d_out"])
        if kind == "kraus":
            ops = tuple(matrix_from_json(v) for v in obj["ops"])
            return KrausMap(d_in, d_out, ops, int(obj.get("n_discard", 0)))
        if kind == "choi":
            return ChoiMatrix(d_in, d_out, matrix_from_json(obj["choi"]))
    except KeyError as exc:
        raise ValidationError(f"malformed map object: missing {exc}") from None
    raise ValidationError(f"map kind must be 'kraus' or 'choi', got {kind!r}")
