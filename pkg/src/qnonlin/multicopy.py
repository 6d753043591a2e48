"""Permutation observables on n copies of a system and the entropic
entanglement tests built from them.

An n-copy observable ``A`` on ``H^{⊗n}`` is read against a single state
through ``<<A>> = Tr(A ρ^{⊗n})``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import config
from .config import DEFAULT_MAX_OPERATOR_DIM
from .errors import BudgetExceededError, DimensionMismatchError, ValidationError
from .linalg import as_matrix, dagger, hermiticity_defect, permute_subsystems, tensor_power
from .states import DensityMatrix, power_sum, reduced, tsallis_entropy, validate, von_neumann_entropy


def check_budget(dim: int, max_dim: int | None, hint: str = "") -> None:
    max_dim = DEFAULT_MAX_OPERATOR_DIM if max_dim is None else max_dim
    if dim > max_dim:
        raise BudgetExceededError(dim, max_dim, hint)


@dataclass(frozen=True, eq=False)
class MulticopyObservable:
    n: int
    d: int
    op: np.ndarray = field(repr=False)
    hermitian: bool
    label: str = ""

    def __post_init__(self):
        op = as_matrix(self.op, square=True)
        if op.shape[0] != self.d**self.n:
            raise DimensionMismatchError(
                "operator size is not d**n", expected=self.d**self.n, actual=op.shape[0]
            )
        if self.hermitian and hermiticity_defect(op) > config.tol().hermiticity:
            raise ValidationError("observable flagged hermitian but is not")
        object.__setattr__(self, "op", op)


def permutation_operator(dims: Sequence[int], perm: Sequence[int], max_dim: int | None = None) -> np.ndarray:
    """Unitary sending ``u_0 ⊗ ... ⊗ u_{n-1}`` to ``u_{perm[0]} ⊗ ... ⊗ u_{perm[n-1]}``."""
    dims = [int(d) for d in dims]
    if sorted(perm) != list(range(len(dims))):
        raise ValidationError(f"{list(perm)} is not a permutation of {len(dims)} factors")
    if any(dims[p] != dims[k] for k, p in enumerate(perm)):
        raise DimensionMismatchError("permutation exchanges factors of different dimension")
    total = math.prod(dims)
    check_budget(total, max_dim)
    source = np.transpose(np.arange(total).reshape(dims), list(perm)).reshape(-1)
    p = np.zeros((total, total), dtype=np.complex128)
    p[np.arange(total), source] = 1.0
    return p


def swap_operator(d: int, max_dim: int | None = None) -> MulticopyObservable:
    """Flip ``V |φ>|ψ> = |ψ>|φ>``; ``Tr(V A⊗B) = Tr(AB)``."""
    if d < 1:
        raise ValidationError("dimension must be positive")
    return MulticopyObservable(2, d, permutation_operator([d, d], [1, 0], max_dim), True, "swap")


def shift_operator(d: int, n: int, max_dim: int | None = None) -> MulticopyObservable:
    """Cyclic shift ``u_1 ⊗ u_2 ⊗ ... ⊗ u_n -> u_2 ⊗ ... ⊗ u_n ⊗ u_1``.

    Satisfies ``Tr(V^(n) A_1 ⊗ ... ⊗ A_n) = Tr(A_1 ... A_n)``; hermitian only
    for ``n <= 2``.
    """
    if n < 2:
        raise ValidationError("shift needs n >= 2 copies")
    check_budget(d**n, max_dim, "use the eigenvalue path for moments of this order")
    perm = [(k + 1) % n for k in range(n)]
    return MulticopyObservable(n, d, permutation_operator([d] * n, perm, max_dim), n <= 2, f"shift{n}")


def tsallis_observable(d: int, max_dim: int | None = None) -> MulticopyObservable:
    """``W = I - V`` whose two-copy mean is the q = 2 Tsallis entropy."""
    v = swap_operator(d, max_dim).op
    return MulticopyObservable(2, d, np.eye(d * d) - v, True, "tsallis2")


def herm_part(x) -> np.ndarray:
    x = as_matrix(getattr(x, "op", x), square=True)
    return 0.5 * (x + dagger(x))


def antiherm_part(x) -> np.ndarray:
    """``(i/2)(X - X^H)``, hermitian, with ``X = X_h - i X_a``."""
    x = as_matrix(getattr(x, "op", x), square=True)
    return 0.5j * (x - dagger(x))


def split_observable(a: MulticopyObservable) -> tuple[MulticopyObservable, MulticopyObservable]:
    return (
        MulticopyObservable(a.n, a.d, herm_part(a.op), True, a.label + ":h"),
        MulticopyObservable(a.n, a.d, antiherm_part(a.op), True, a.label + ":a"),
    )


def copies(rho, n: int, max_dim: int | None = None) -> np.ndarray:
    rho = validate(rho)
    check_budget(rho.dim**n, max_dim)
    return tensor_power(rho.mat, n)


def multicopy_mean(a: MulticopyObservable, rho, max_dim: int | None = None) -> complex | float:
    """``Tr(A ρ^{⊗n})``; real when ``A`` is flagged hermitian."""
    rho = validate(rho)
    if rho.dim != a.d:
        raise DimensionMismatchError("state dimension does not match observable", expected=a.d, actual=rho.dim)
    sigma = copies(rho, a.n, max_dim)
    value = complex(np.sum(a.op * sigma.T))
    return value.real if a.hermitian else value


def moment(rho, k: int, max_dim: int | None = None) -> float:
    """``Tr(ρ^k)`` as the mean of the k-copy shift."""
    if k < 1:
        raise ValidationError("moment order must be >= 1")
    if k == 1:
        return 1.0
    rho = validate(rho)
    return float(np.real(multicopy_mean(shift_operator(rho.dim, k, max_dim), rho, max_dim)))


def moment_observables(d: int, k_max: int | None = None) -> list[str]:
    """Labels of the hermitian observables measured for moments 2..k_max.

    ``V^(2)`` once, then both parts of every higher shift: ``2 k_max - 3``.
    """
    k_max = d if k_max is None else k_max
    labels = ["shift2"] if k_max >= 2 else []
    for k in range(3, k_max + 1):
        labels += [f"shift{k}:h", f"shift{k}:a"]
    return labels


# -- bipartite witnesses ------------------------------------------------------

def _parse_side(side: str) -> str:
    s = str(side).upper()
    if s not in ("A", "B"):
        raise ValidationError(f"side must be 'A' or 'B', got {side!r}")
    return s


def double_swap(d_a: int, d_b: int, max_dim: int | None = None) -> np.ndarray:
    """``V_AA' ⊗ V_BB'`` expressed on the copy ordering ``A B A' B'``.

    Built on ``A A' B B'`` and reordered, which makes it the swap of the two
    bipartite copies.
    """
    check_budget((d_a * d_b) ** 2, max_dim)
    grouped = np.kron(swap_operator(d_a).op, swap_operator(d_b).op)
    return permute_subsystems(grouped, [d_a, d_a, d_b, d_b], [0, 2, 1, 3])


def local_swap(d_a: int, d_b: int, side: str, max_dim: int | None = None) -> np.ndarray:
    """``V_XX'`` tensored with identity on the other party, ordering ``A B A' B'``."""
    side = _parse_side(side)
    check_budget((d_a * d_b) ** 2, max_dim)
    perm = [2, 1, 0, 3] if side == "A" else [0, 3, 2, 1]
    return permutation_operator([d_a, d_b, d_a, d_b], perm, max_dim)


def witness_operator(d_a: int, d_b: int, side: str, max_dim: int | None = None) -> MulticopyObservable:
    """Two-copy witness ``V_XX' ⊗ I - V_AA' ⊗ V_BB'``.

    Its mean on ``ρ_AB ⊗ ρ_AB`` is ``Tr ρ_X^2 - Tr ρ_AB^2``, nonnegative on
    separable states.
    """
    side = _parse_side(side)
    op = local_swap(d_a, d_b, side, max_dim) - double_swap(d_a, d_b, max_dim)
    return MulticopyObservable(2, d_a * d_b, op, True, f"witness2:{side}")


def _bipartite(rho, dims) -> tuple[DensityMatrix, int, int]:
    rho = validate(rho)
    d_a, d_b = (int(x) for x in dims)
    if d_a * d_b != rho.dim:
        raise DimensionMismatchError(
            f"dims {d_a}x{d_b} do not factor state dimension {rho.dim}",
            expected=rho.dim,
            actual=d_a * d_b,
        )
    return rho, d_a, d_b


def witness_q2(rho, dims, side: str, max_dim: int | None = None) -> float:
    rho, d_a, d_b = _bipartite(rho, dims)
    return float(multicopy_mean(witness_operator(d_a, d_b, side, max_dim), rho, max_dim))


@dataclass(frozen=True)
class WitnessReport:
    value_A: float
    value_B: float
    entangled_detected: bool
    q: int
    method: str = "exact"
    std_error_A: float | None = None
    std_error_B: float | None = None
    shots: int | None = None
    observables_used: int = 2

    def to_json(self) -> dict:
        out = {
            "kind": "witness",
            "q": self.q,
            "method": self.method,
            "value_A": self.value_A,
            "value_B": self.value_B,
            "entangled_detected": self.entangled_detected,
            "observables_used": self.observables_used,
        }
        if self.method == "sampled":
            out.update(std_error_A=self.std_error_A, std_error_B=self.std_error_B, shots=self.shots)
        return out


def quasi_witness_operator(d_a: int, d_b: int, side: str, n: int, max_dim: int | None = None) -> MulticopyObservable:
    """``V^(n)_X ⊗ I - V^(n)_AB`` on ``n`` copies ordered ``A1 B1 A2 B2 ...``.

    Not hermitian for ``n >= 3``.
    """
    side = _parse_side(side)
    if n < 2:
        raise ValidationError("quasi-witness needs n >= 2")
    dims = [d_a, d_b] * n
    check_budget((d_a * d_b) ** n, max_dim)
    offset = 0 if side == "A" else 1
    local = list(range(2 * n))
    full = list(range(2 * n))
    for k in range(n):
        nxt = (k + 1) % n
        local[2 * k + offset] = 2 * nxt + offset
        full[2 * k] = 2 * nxt
        full[2 * k + 1] = 2 * nxt + 1
    op = permutation_operator(dims, local, max_dim) - permutation_operator(dims, full, max_dim)
    return MulticopyObservable(n, d_a * d_b, op, n <= 2, f"quasiwitness{n}:{side}")


def quasi_witness_qn(rho, dims, side: str, n: int, max_dim: int | None = None) -> float:
    """``Tr ρ_X^n - Tr ρ_AB^n`` from the two hermitian parts of the quasi-witness.

    Equals ``(n - 1)(S_n(ρ_AB) - S_n(ρ_X))`` for Tsallis entropies and is
    nonnegative on separable states.
    """
    rho, d_a, d_b = _bipartite(rho, dims)
    q = quasi_witness_operator(d_a, d_b, side, n, max_dim)
    h, a = split_observable(q)
    mean = multicopy_mean(h, rho, max_dim) - 1j * multicopy_mean(a, rho, max_dim)
    return float(np.real(mean))


def witness_report(rho, dims, q: int = 2, max_dim: int | None = None) -> WitnessReport:
    """Exact witness values on both sides; ``q >= 3`` uses the quasi-witness."""
    if q < 2 or int(q) != q:
        raise ValidationError("witness order must be an integer >= 2")
    if q == 2:
        va, vb = witness_q2(rho, dims, "A", max_dim), witness_q2(rho, dims, "B", max_dim)
        used = 2
    else:
        va = quasi_witness_qn(rho, dims, "A", q, max_dim)
        vb = quasi_witness_qn(rho, dims, "B", q, max_dim)
        used = 4
    tol = config.tol().detection
    return WitnessReport(va, vb, bool(va < -tol or vb < -tol), int(q), observables_used=used)


def _entropy(rho, q: float) -> float:
    return von_neumann_entropy(rho).value if q == 1 else tsallis_entropy(rho, q).value


def entropic_separability_check(rho, dims, qs: Sequence[float] = (2,)) -> dict:
    """``S_q(ρ_AB) - S_q(ρ_X)`` per order and side, from spectra.

    Entanglement is reported iff some difference is below ``-1e-9``
    (``config.tol().detection``).
    """
    rho, d_a, d_b = _bipartite(rho, dims)
    rho_a = reduced(rho, [d_a, d_b], [0])
    rho_b = reduced(rho, [d_a, d_b], [1])
    tol = config.tol().detection
    rows = []
    detected = False
    for q in qs:
        s_ab = _entropy(rho, q)
        diff_a = s_ab - _entropy(rho_a, q)
        diff_b = s_ab - _entropy(rho_b, q)
        hit = diff_a < -tol or diff_b < -tol
        detected |= hit
        rows.append({"q": float(q), "A": diff_a, "B": diff_b, "violated": bool(hit)})
    return {"kind": "entropic_check", "differences": rows, "entangled_detected": bool(detected)}


def exact_moment(rho, k: int) -> float:
    """``Σ p_i^k`` from the spectrum; the independent check for :func:`moment`."""
    return power_sum(validate(rho).eigenvalues(), k) if k > 1 else 1.0
