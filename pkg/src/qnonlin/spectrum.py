"""Spectrum recovery from the power moments ``m_k = Tr(ρ^k)``.

Moments are turned into elementary symmetric polynomials with Newton's
identities; the eigenvalues are then the roots of
``x^d - e_1 x^{d-1} + e_2 x^{d-2} - ... + (-1)^d e_d``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import config
from .config import DEFAULT_MAX_OPERATOR_DIM
from .errors import ConvergenceError, IllConditionedError, ValidationError
from .multicopy import exact_moment, moment, moment_observables
from .states import validate

DK_MAX_ITER = 500
DK_TOL = 1e-13


@dataclass(frozen=True)
class MomentVector:
    """``m_1 .. m_d`` with ``m_1 = 1``; optional standard errors when sampled."""

    d: int
    m: tuple
    std_errors: tuple | None = None

    def __post_init__(self):
        object.__setattr__(self, "m", tuple(float(x) for x in self.m))
        if self.std_errors is not None:
            object.__setattr__(self, "std_errors", tuple(float(x) for x in self.std_errors))

    @classmethod
    def from_probabilities(cls, probs, k_max: int | None = None) -> "MomentVector":
        p = np.asarray(probs, dtype=float)
        k_max = len(p) if k_max is None else k_max
        return cls(len(p), tuple(float(np.sum(p**k)) for k in range(1, k_max + 1)))

    def check(self, slack: float | None = None) -> None:
        """Enforce ``1/d^(k-1) <= m_k <= 1`` and ``m_{k+1} <= m_k`` up to ``slack``."""
        slack = config.tol().moment_slack if slack is None else slack
        m = self.m
        if not m or abs(m[0] - 1.0) > 1e-9:
            raise ValidationError(f"first moment must equal 1, got {m[0] if m else None}")
        for k, mk in enumerate(m, start=1):
            lo = 1.0 / self.d ** (k - 1)
            if not (lo - slack <= mk <= 1.0 + slack):
                raise ValidationError(
                    f"moment m_{k} = {mk:.6g} outside [{lo:.6g}, 1] beyond slack {slack}",
                    k=k,
                    value=mk,
                )
        for k in range(1, len(m)):
            if m[k] > m[k - 1] + slack:
                raise ValidationError(
                    f"moments not nonincreasing: m_{k + 1} = {m[k]:.6g} > m_{k} = {m[k - 1]:.6g}",
                    k=k + 1,
                )

    def to_json(self) -> dict:
        out = {"kind": "moments", "d": self.d, "m": list(self.m)}
        if self.std_errors is not None:
            out["std_errors"] = list(self.std_errors)
        return out


@dataclass(frozen=True)
class SpectrumEstimate:
    eigenvalues: tuple
    residual: float
    projected: bool
    method: str = "moments"
    observables_used: int | None = None
    max_imag: float = 0.0
    notice: str | None = None

    def to_json(self) -> dict:
        out = {
            "kind": "spectrum",
            "eigenvalues": list(self.eigenvalues),
            "residual": self.residual,
            "projected": self.projected,
            "method": self.method,
            "max_imag": self.max_imag,
        }
        if self.observables_used is not None:
            out["observables_used"] = self.observables_used
        if self.notice:
            out["notice"] = self.notice
        return out


def newton_elementary(m) -> np.ndarray:
    """Elementary symmetric polynomials ``e_1 .. e_d`` from power sums ``m_1 .. m_d``.

    ``k e_k = Σ_{i=1..k} (-1)^{i-1} e_{k-i} m_i`` with ``e_0 = 1``.
    """
    m = np.asarray(m.m if isinstance(m, MomentVector) else m, dtype=float)
    e = np.zeros(len(m) + 1)
    e[0] = 1.0
    for k in range(1, len(m) + 1):
        acc = 0.0
        for i in range(1, k + 1):
            acc += (-1) ** (i - 1) * e[k - i] * m[i - 1]
        e[k] = acc / k
    return e[1:]


def _poly_coeffs(e) -> np.ndarray:
    """Monic coefficients, highest degree first."""
    e = np.asarray(e, dtype=float)
    signs = (-1.0) ** np.arange(1, len(e) + 1)
    return np.concatenate([[1.0], signs * e])


def _backward_error(coeffs: np.ndarray, z: np.ndarray) -> np.ndarray:
    value = np.polyval(coeffs, z)
    scale = np.polyval(np.abs(coeffs), np.abs(z))
    return np.abs(value) / np.maximum(scale, 1e-300)


def roots_from_elementary(e, max_iter: int = DK_MAX_ITER, tol: float = DK_TOL) -> np.ndarray:
    """Roots of the characteristic polynomial by Durand-Kerner iteration.

    Starts from points on a circle around the root centroid, rotated off the
    real axis so no two iterates share a conjugate-symmetric orbit.

    Raises
    ------
    ConvergenceError
        If the iteration has not settled (step below ``tol``) after
        ``max_iter`` sweeps and the iterates do not solve the polynomial to
        a relative backward error of 1e-12.
    """
    coeffs = _poly_coeffs(e)
    n = len(coeffs) - 1
    if n == 0:
        return np.zeros(0, dtype=complex)
    if n == 1:
        return np.array([-coeffs[1]], dtype=complex)
    center = -coeffs[1] / n
    radius = 1.0 + float(np.max(np.abs(coeffs[1:])))
    z = center + radius * np.exp(1j * (2 * np.pi * np.arange(n) / n + 0.4))
    for _ in range(max_iter):
        diff = z[:, None] - z[None, :]
        np.fill_diagonal(diff, 1.0)
        denom = np.prod(diff, axis=1)
        step = np.polyval(coeffs, z) / denom
        z = z - step
        if np.max(np.abs(step)) < tol:
            return z
    # multiple roots never settle below round-off; accept them if they solve p
    residual = float(np.max(_backward_error(coeffs, z)))
    if residual <= 1e-12:
        return z
    raise ConvergenceError(f"Durand-Kerner did not converge in {max_iter} iterations", residual)


MERGE_RADII = (1e-2, 1e-3, 1e-4, 1e-5, 1e-6)


def _polish_multiple(coeffs: np.ndarray, x: float, k: int, steps: int = 20) -> float:
    deriv = np.polyder(coeffs, k - 1)
    slope = np.polyder(deriv)
    for _ in range(steps):
        g = np.polyval(slope, x)
        if g == 0:
            break
        dx = np.polyval(deriv, x) / g
        x -= dx
        if abs(dx) < 1e-16:
            break
    return float(x)


def _is_multiple_root(coeffs: np.ndarray, noise: np.ndarray, x: float, k: int) -> bool:
    """``p^(j)(x)`` vanishes within coefficient noise for every ``j < k``."""
    for j in range(k):
        pj, nj = np.polyder(coeffs, j), np.polyder(noise, j)
        if abs(np.polyval(pj, x)) > np.polyval(nj, abs(x)):
            return False
    return True


def merge_clusters(coeffs, roots) -> np.ndarray:
    """Collapse root clusters that are numerically a single multiple root.

    Iterates split a ``k``-fold root into a ring of radius ``~eps^(1/k)``
    and wander inside it, while the centroid stays accurate. A cluster is
    replaced by its refined centroid (Newton on the ``(k-1)``-th derivative,
    where a ``k``-fold root is simple) only if the polynomial and its first
    ``k-1`` derivatives vanish there within the absolute round-off carried by
    the coefficients.
    """
    coeffs = np.asarray(coeffs, dtype=float)
    z = np.array(roots, dtype=complex)
    n = len(z)
    if n < 2:
        return z
    noise = 16 * n * np.finfo(float).eps * np.maximum(np.abs(coeffs), 1.0)
    fixed = np.zeros(n, dtype=bool)
    for radius in MERGE_RADII:
        order = np.argsort(z.real)
        clusters, current = [], [order[0]]
        for i in order[1:]:
            if abs(z[i] - z[current[-1]]) <= radius and not fixed[i] and not fixed[current[-1]]:
                current.append(i)
            else:
                clusters.append(current)
                current = [i]
        clusters.append(current)
        for members in clusters:
            if len(members) < 2:
                continue
            center = _polish_multiple(coeffs, np.mean(z[members]).real, len(members))
            if _is_multiple_root(coeffs, noise, center, len(members)):
                z[members] = center
                fixed[members] = True
    return z


def _project(values: np.ndarray) -> tuple[np.ndarray, bool]:
    """Clip to [0, 1] and renormalize; flag whether anything moved."""
    clipped = np.clip(values, 0.0, 1.0)
    total = clipped.sum()
    if total <= 0:
        raise IllConditionedError("recovered spectrum vanishes after clipping")
    projected = bool(np.any(clipped != values) or abs(total - 1.0) > 1e-12)
    return clipped / total, projected


def estimate_spectrum(m: MomentVector, imag_tol: float | None = None) -> SpectrumEstimate:
    """Eigenvalues (descending) consistent with the first ``d`` moments.

    Raises
    ------
    ValidationError
        If the moments violate the moment-cone bounds beyond the slack.
    IllConditionedError
        If a root has imaginary part above ``imag_tol``: no spectrum fits.
    """
    imag_tol = config.tol().imag_root if imag_tol is None else imag_tol
    if len(m.m) != m.d:
        raise ValidationError(f"need exactly d = {m.d} moments, got {len(m.m)}")
    m.check()
    e = newton_elementary(m)
    roots = merge_clusters(_poly_coeffs(e), roots_from_elementary(e))
    max_imag = float(np.max(np.abs(roots.imag))) if len(roots) else 0.0
    if max_imag > imag_tol:
        raise IllConditionedError(
            f"moments are inconsistent with any spectrum (root imaginary part {max_imag:.3g})",
            max_imag=max_imag,
        )
    values, projected = _project(np.sort(roots.real)[::-1])
    values = np.sort(values)[::-1]
    recomputed = [float(np.sum(values**k)) for k in range(1, m.d + 1)]
    residual = float(np.max(np.abs(np.array(recomputed) - np.array(m.m))))
    return SpectrumEstimate(
        tuple(float(v) for v in values), residual, projected, max_imag=max_imag
    )


def spectrum_from_state(rho, via: str = "shift", max_dim: int | None = None) -> SpectrumEstimate:
    """Moments of ``ρ`` (shift observables or eigenvalues), then inversion.

    With ``via="shift"`` the moments come from ``2d - 3`` observables; when
    ``d**d`` exceeds the operator budget the eigenvalue path is used instead
    and the estimate carries a notice.
    """
    rho = validate(rho)
    d = rho.dim
    max_dim = DEFAULT_MAX_OPERATOR_DIM if max_dim is None else max_dim
    notice = None
    if via not in ("shift", "eig"):
        raise ValidationError(f"via must be 'shift' or 'eig', got {via!r}")
    if via == "shift" and d**d > max_dim:
        notice = f"d**d = {d**d} exceeds operator budget {max_dim}; moments taken from eigenvalues"
        via = "eig"
    if via == "shift":
        ms = [moment(rho, k, max_dim) for k in range(1, d + 1)]
        used = len(moment_observables(d))
    else:
        ms = [exact_moment(rho, k) for k in range(1, d + 1)]
        used = None
    est = estimate_spectrum(MomentVector(d, tuple(ms)))
    return SpectrumEstimate(
        est.eigenvalues,
        est.residual,
        est.projected,
        method=via,
        observables_used=used,
        max_imag=est.max_imag,
        notice=notice,
    )
