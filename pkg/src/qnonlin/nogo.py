"""Numerical content of the impossibility results for state powers.

Any operator ``0 <= A <= I`` with ``Tr(A P_φ^{⊗n}) = 1`` for every pure
``φ`` acts as the identity on the symmetric subspace, so ``A >= P_sym`` and
``Tr(A ρ^{⊗n}) >= Tr(P_sym ρ^{⊗n})``. :func:`nogo_gap` shows that this lower
bound already exceeds ``Tr(ρ^n)`` for every mixed state.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .linalg import partial_trace
from .multicopy import check_budget, copies, permutation_operator, swap_operator
from .states import power_sum, purity, random_mixed, validate


def sym_projector(d: int, n: int, max_dim: int | None = None) -> np.ndarray:
    """``(1/n!) Σ_π V_π``, the projector onto the symmetric subspace of ``(C^d)^{⊗n}``."""
    check_budget(d**n, max_dim)
    p = np.zeros((d**n, d**n), dtype=np.complex128)
    for perm in itertools.permutations(range(n)):
        p += permutation_operator([d] * n, perm, max_dim)
    return p / math.factorial(n)


@dataclass(frozen=True)
class NogoGapReport:
    d: int
    n: int
    state_purity: float
    sym_overlap: float
    target: float
    gap: float
    closed_form: float | None = None

    def to_json(self) -> dict:
        out = {
            "kind": "nogo_gap",
            "d": self.d,
            "n": self.n,
            "state_purity": self.state_purity,
            "sym_overlap": self.sym_overlap,
            "target": self.target,
            "gap": self.gap,
        }
        if self.closed_form is not None:
            out["closed_form"] = self.closed_form
        return out


def nogo_gap(rho, n: int, max_dim: int | None = None) -> NogoGapReport:
    """``Tr(P_sym ρ^{⊗n}) - Tr(ρ^n)``; zero for pure states, positive otherwise.

    For ``n = 2`` the report also carries ``(1 + Tr ρ^2)/2``, which the
    overlap must match.
    """
    rho = validate(rho)
    if n < 2:
        raise ValidationError("n must be at least 2", n=n)
    p_sym = sym_projector(rho.dim, n, max_dim)
    sigma = copies(rho, n, max_dim)
    overlap = float(np.real(np.sum(p_sym * sigma.T)))
    target = power_sum(rho.eigenvalues(), n)
    pur = purity(rho)
    closed = (1.0 + pur) / 2.0 if n == 2 else None
    return NogoGapReport(rho.dim, n, pur, overlap, target, overlap - target, closed)


def map2_target(rho) -> np.ndarray:
    """``(1 - Tr ρ^2) I/d + ρ^2``, the output demanded of the two-copy map."""
    rho = validate(rho)
    m = rho.mat
    d = rho.dim
    return (1.0 - purity(rho)) * np.eye(d) / d + m @ m


def symmetrize_and_trace(sigma, d: int) -> np.ndarray:
    """Candidate channel ``σ -> Tr_2[(σ + V σ V)/2]`` on ``C^d ⊗ C^d``."""
    v = swap_operator(d).op
    sym = 0.5 * (sigma + v @ sigma @ v)
    return partial_trace(sym, [d, d], [0])


def map2_deviation(rho) -> float:
    rho = validate(rho)
    out = symmetrize_and_trace(np.kron(rho.mat, rho.mat), rho.dim)
    return float(np.linalg.norm(out - map2_target(rho)))


@dataclass(frozen=True)
class Map2Report:
    d: int
    trials: int
    seed: int | None
    max_deviation: float
    mean_deviation: float

    def to_json(self) -> dict:
        return {
            "kind": "map2_linearization",
            "d": self.d,
            "trials": self.trials,
            "seed": self.seed,
            "candidate": "partial_trace_of_symmetrization",
            "max_deviation": self.max_deviation,
            "mean_deviation": self.mean_deviation,
        }


def map2_linearization_check(d: int, trials: int, seed, states=None) -> Map2Report:
    """Distance between the symmetrize-then-trace channel and the two-copy target.

    Uses ``trials`` Ginibre states drawn from ``seed`` unless explicit
    ``states`` are given. At ``d = 2`` the deviation vanishes identically
    because ``ρ^2 = ρ - det(ρ) I`` makes the target equal to ``ρ``; for
    ``d >= 3`` it is positive on generic mixed states.
    """
    if d < 2:
        raise ValidationError("d must be at least 2", d=d)
    if states is None:
        rng = np.random.default_rng(seed)
        states = [random_mixed(d, rng) for _ in range(trials)]
    devs = np.array([map2_deviation(s) for s in states])
    return Map2Report(d, len(devs), seed, float(devs.max()), float(devs.mean()))
