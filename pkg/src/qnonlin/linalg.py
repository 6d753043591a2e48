"""Dense complex matrix kernel.

Matrices are plain ``numpy`` arrays of dtype ``complex128``. Multipartite
operators follow one fixed layout: the leftmost tensor factor is subsystem 0
and owns the slowest-varying basis index (row-major, as ``np.kron``).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import config
from .errors import (
    DimensionMismatchError,
    NegativityError,
    NotHermitianError,
    ValidationError,
)


def as_matrix(m, *, square: bool = False) -> np.ndarray:
    """Coerce ``m`` to a finite 2-d ``complex128`` array."""
    a = np.asarray(m, dtype=np.complex128)
    if a.ndim != 2:
        raise ValidationError(f"expected a 2-d matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValidationError("matrix has non-finite entries")
    if square and a.shape[0] != a.shape[1]:
        raise DimensionMismatchError("matrix is not square", expected="square", actual=list(a.shape))
    return a


def dagger(m: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(m, -1, -2))


def hermiticity_defect(m: np.ndarray) -> float:
    m = np.asarray(m)
    return float(np.linalg.norm(m - dagger(m)))


def kron(a, b) -> np.ndarray:
    """Kronecker product; ``(a ⊗ b)(u ⊗ v) = (a u) ⊗ (b v)``."""
    return np.kron(as_matrix(a), as_matrix(b))


def kron_all(factors: Sequence) -> np.ndarray:
    out = np.ones((1, 1), dtype=np.complex128)
    for f in factors:
        out = np.kron(out, as_matrix(f))
    return out


def tensor_power(m, n: int) -> np.ndarray:
    return kron_all([m] * n)


def partial_trace(m, dims: Sequence[int], keep: Sequence[int]) -> np.ndarray:
    """Trace out every subsystem not listed in ``keep``.

    Parameters
    ----------
    m : array_like
        Square operator on ``prod(dims)``.
    dims : sequence of int
        Subsystem dimensions, leftmost factor first.
    keep : sequence of int
        Indices of the subsystems to retain. The result keeps them in
        ascending index order.

    Returns
    -------
    numpy.ndarray
        Operator on the product of the kept dimensions.
    """
    m = as_matrix(m, square=True)
    dims = [int(d) for d in dims]
    total = int(np.prod(dims)) if dims else 1
    if m.shape[0] != total:
        raise DimensionMismatchError(
            f"matrix dimension {m.shape[0]} does not match product of dims {dims} = {total}",
            expected=total,
            actual=m.shape[0],
        )
    n = len(dims)
    keep = sorted(set(int(k) for k in keep))
    if any(k < 0 or k >= n for k in keep):
        raise ValidationError(f"keep indices {keep} out of range for {n} subsystems")
    t = m.reshape(dims + dims)
    # einsum labels: row index i, column index i+n; traced subsystems share a label
    row = list(range(n))
    col = [i if i not in keep else i + n for i in range(n)]
    out = keep + [k + n for k in keep]
    t = np.einsum(t, row + col, out)
    d_keep = int(np.prod([dims[k] for k in keep])) if keep else 1
    return t.reshape(d_keep, d_keep)


def permute_subsystems(m, dims: Sequence[int], perm: Sequence[int]) -> np.ndarray:
    """Reorder tensor factors of an operator.

    Factor ``k`` of the result is factor ``perm[k]`` of ``m``; i.e. the result
    equals ``P m P^H`` where ``P`` sends ``u_0 ⊗ ... ⊗ u_{n-1}`` to
    ``u_{perm[0]} ⊗ ... ⊗ u_{perm[n-1]}``.
    """
    m = as_matrix(m, square=True)
    dims = list(dims)
    n = len(dims)
    if sorted(perm) != list(range(n)):
        raise ValidationError(f"{list(perm)} is not a permutation of {n} subsystems")
    t = m.reshape(dims + dims)
    t = np.transpose(t, list(perm) + [p + n for p in perm])
    d = m.shape[0]
    return t.reshape(d, d)


@dataclass(frozen=True)
class HermitianEig:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        u = self.eigenvectors
        return (u * self.eigenvalues) @ dagger(u)


def hermitian_eig(m, tol: float | None = None) -> HermitianEig:
    """Eigendecomposition of a hermitian matrix, eigenvalues ascending."""
    m = as_matrix(m, square=True)
    tol = config.tol().hermiticity if tol is None else tol
    defect = hermiticity_defect(m)
    if defect > tol:
        raise NotHermitianError(defect)
    w, v = np.linalg.eigh(0.5 * (m + dagger(m)))
    return HermitianEig(w, v)


def eigvalsh(m) -> np.ndarray:
    return hermitian_eig(m).eigenvalues


def min_eigenvalue(m) -> float:
    return float(hermitian_eig(m).eigenvalues[0])


def psd_sqrt(m, clip: float | None = None) -> np.ndarray:
    """Positive square root of a positive-semidefinite hermitian matrix.

    Eigenvalues in ``[-clip, 0)`` are treated as zero; anything more negative
    raises ``NegativityError``.
    """
    clip = config.tol().psd_clip if clip is None else clip
    eig = hermitian_eig(m)
    w = eig.eigenvalues
    if w[0] < -clip:
        raise NegativityError(float(w[0]))
    root = np.sqrt(np.clip(w, 0.0, None))
    u = eig.eigenvectors
    return (u * root) @ dagger(u)


# -- JSON matrix format -------------------------------------------------------

def matrix_to_json(m) -> dict:
    m = as_matrix(m)
    flat = m.reshape(-1)
    return {
        "rows": int(m.shape[0]),
        "cols": int(m.shape[1]),
        "entries": [[float(z.real), float(z.imag)] for z in flat],
    }


def matrix_from_json(obj: dict) -> np.ndarray:
    try:
        rows, cols, entries = int(obj["rows"]), int(obj["cols"]), obj["entries"]
    except (KeyError, TypeError) as exc:
        raise ValidationError(f"malformed matrix object: missing {exc}") from None
    if len(entries) != rows * cols:
        raise DimensionMismatchError(
            "entries length does not equal rows*cols", expected=rows * cols, actual=len(entries)
        )
    flat = np.array([complex(float(re), float(im)) for re, im in entries], dtype=np.complex128)
    return as_matrix(flat.reshape(rows, cols))
