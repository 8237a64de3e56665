"""Dense complex linear algebra for density operators.

Everything here works on plain numpy arrays (complex128). Operators are
validated at module boundaries; hot loops assume valid input. Eigenvalues of
nominally positive matrices may drift slightly negative in floating point:
values in [-PSD_CLAMP, 0) are treated as 0, anything below -PSD_CLAMP is an
error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

HERMITIAN_TOL = 1e-10
PSD_CLAMP = 1e-10
TRACE_TOL = 1e-10
ORTHO_TOL = 1e-10


def max_asymmetry(a: np.ndarray) -> float:
    """Largest entry of |A - A^dag|."""
    return float(np.abs(a - a.conj().T).max())


def require_hermitian(a: np.ndarray, tol: float = HERMITIAN_TOL, name: str = "matrix") -> np.ndarray:
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"{name} must be square, got shape {a.shape}")
    if not np.all(np.isfinite(a.view(float))):
        raise ValueError(f"{name} has non-finite entries")
    asym = max_asymmetry(a)
    if asym > tol:
        raise ValueError(f"{name} is not Hermitian: max |A - A^dag| entry = {asym:.3e} > {tol:g}")
    return a


def require_density(rho: np.ndarray, tol: float = TRACE_TOL, name: str = "density operator") -> np.ndarray:
    """Validate Hermiticity, positivity (within clamp) and unit trace."""
    rho = require_hermitian(rho, name=name)
    tr = float(rho.trace().real)
    if abs(tr - 1.0) > tol:
        raise ValueError(f"{name} has trace {tr!r}, expected 1 within {tol:g}")
    wmin = float(np.linalg.eigvalsh(rho)[0])
    if wmin < -PSD_CLAMP:
        raise ValueError(f"{name} is not PSD: min eigenvalue {wmin:.3e} < -{PSD_CLAMP:g}")
    return rho


def clamp_psd_eigenvalues(w: np.ndarray, clamp: float = PSD_CLAMP) -> np.ndarray:
    """Zero out small negative eigenvalues; reject genuinely negative ones."""
    w = np.asarray(w, dtype=float)
    wmin = float(w.min()) if w.size else 0.0
    if wmin < -clamp:
        raise ValueError(f"eigenvalue {wmin:.3e} below -{clamp:g}: matrix is not PSD")
    return np.where(w < 0.0, 0.0, w)


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Eigendecomposition sorted by non-increasing eigenvalue.

    ``vectors[:, i]`` is the eigenvector for ``values[i]``. Ties keep the
    order produced by the eigensolver (stable sort), which makes downstream
    selections deterministic.
    """

    values: np.ndarray
    vectors: np.ndarray

    @property
    def dim(self) -> int:
        return int(self.values.size)


def hermitian_eig(a: np.ndarray, tol: float = HERMITIAN_TOL) -> Spectrum:
    """Full eigendecomposition of a Hermitian matrix, eigenvalues non-increasing."""
    a = require_hermitian(a, tol=tol)
    w, v = np.linalg.eigh(a)
    order = np.argsort(-w, kind="stable")
    return Spectrum(values=w[order], vectors=v[:, order])


def density_spectrum(rho: np.ndarray, tol: float = TRACE_TOL) -> Spectrum:
    """Spectrum of a density operator with negative eigenvalues clamped to 0."""
    spec = hermitian_eig(rho)
    values = clamp_psd_eigenvalues(spec.values)
    total = float(values.sum())
    if abs(total - 1.0) > max(tol, 1e-9):
        raise ValueError(f"spectrum mass {total!r} differs from 1 beyond tolerance")
    return Spectrum(values=values, vectors=spec.vectors)


def kron(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kronecker product: out[i*rB+k, j*cB+l] = A[i,j] * B[k,l]."""
    return np.kron(np.asarray(a, dtype=complex), np.asarray(b, dtype=complex))


def kron_power(a: np.ndarray, n: int) -> np.ndarray:
    """n-fold Kronecker power of a matrix."""
    if n < 1:
        raise ValueError("kron_power needs n >= 1")
    out = np.asarray(a, dtype=complex)
    for _ in range(n - 1):
        out = np.kron(out, a)
    return out


def partial_trace(rho: np.ndarray, dims: list[int] | tuple[int, ...], keep) -> np.ndarray:
    """Trace out all sites except ``keep`` from an operator on a tensor product.

    ``dims`` lists the local dimension of each site; site order in the result
    follows the original chain order.
    """
    rho = np.asarray(rho, dtype=complex)
    dims = [int(d) for d in dims]
    total = math.prod(dims)
    if rho.shape != (total, total):
        raise ValueError(f"operator shape {rho.shape} does not match site dims {dims} (product {total})")
    keep = sorted(set(int(k) for k in keep))
    if not keep:
        raise ValueError("keep must name at least one site")
    if keep[0] < 0 or keep[-1] >= len(dims):
        raise ValueError(f"keep indices {keep} out of range for {len(dims)} sites")
    traced = [i for i in range(len(dims)) if i not in keep]
    t = rho.reshape(dims + dims)
    cur = list(dims)
    for idx in sorted(traced, reverse=True):
        t = np.trace(t, axis1=idx, axis2=idx + len(cur))
        del cur[idx]
    d_keep = math.prod(cur)
    return np.ascontiguousarray(t.reshape(d_keep, d_keep))


def matrix_sqrt_psd(a: np.ndarray, clamp: float = PSD_CLAMP) -> np.ndarray:
    """Principal square root of a PSD Hermitian matrix."""
    a = require_hermitian(a, name="PSD matrix")
    w, v = np.linalg.eigh(a)
    w = clamp_psd_eigenvalues(w, clamp=clamp)
    root = (v * np.sqrt(w)) @ v.conj().T
    return (root + root.conj().T) / 2.0


def trace_norm(a: np.ndarray) -> float:
    """Sum of absolute eigenvalues of a Hermitian matrix (trace norm)."""
    a = require_hermitian(a)
    return float(np.abs(np.linalg.eigvalsh(a)).sum())


def require_orthonormal(basis: np.ndarray, tol: float = ORTHO_TOL, name: str = "basis") -> np.ndarray:
    """Validate that the columns of ``basis`` are orthonormal."""
    basis = np.asarray(basis, dtype=complex)
    if basis.ndim != 2 or basis.shape[1] > basis.shape[0]:
        raise ValueError(f"{name} must be a tall matrix of column vectors, got {basis.shape}")
    gram = basis.conj().T @ basis
    dev = float(np.abs(gram - np.eye(basis.shape[1])).max())
    if dev > tol:
        raise ValueError(f"{name} columns are not orthonormal: max Gram deviation {dev:.3e} > {tol:g}")
    return basis


def projector_matrix(basis: np.ndarray) -> np.ndarray:
    """Orthogonal projector onto the span of the (orthonormal) columns."""
    basis = require_orthonormal(basis)
    p = basis @ basis.conj().T
    return (p + p.conj().T) / 2.0


def orthonormal_complement(basis: np.ndarray) -> np.ndarray:
    """Orthonormal basis of the orthogonal complement of span(basis)."""
    basis = require_orthonormal(basis)
    d, r = basis.shape
    if r == d:
        return np.zeros((d, 0), dtype=complex)
    q, _ = np.linalg.qr(basis, mode="complete")
    comp = q[:, r:]
    # qr may rotate the leading block; re-project to guarantee orthogonality to basis
    comp = comp - basis @ (basis.conj().T @ comp)
    comp, _ = np.linalg.qr(comp)
    return comp
