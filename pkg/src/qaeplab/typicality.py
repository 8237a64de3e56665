"""Entropies, typical subspaces and minimal high-probability subspaces.

All selections work uniformly on dense ``Spectrum`` objects and structured
``ClassSpectrum`` objects, so the same greedy/window logic runs on 2x2
matrices and on binomial spectra with 2**1000 eigenvectors. Dimensions are
exact Python integers; log-dimensions are floats.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .counting import ceil_count, count_mass, log2_int
from .linalg import Spectrum, clamp_psd_eigenvalues, density_spectrum, require_density
from .sources import ClassSpectrum, class_spectrum, entropy_rate_exact, SourceModel

SpectrumLike = Spectrum | ClassSpectrum


def _as_classes(spectrum: SpectrumLike):
    """(log2_values, multiplicities, masses, total_dim) view of either kind."""
    if isinstance(spectrum, ClassSpectrum):
        return spectrum.log2_values, spectrum.multiplicities, spectrum.masses, spectrum.total_dim
    values = clamp_psd_eigenvalues(spectrum.values)
    with np.errstate(divide="ignore"):
        log2_values = np.log2(values)
    return log2_values, (1,) * values.size, values, values.size


# ---------------------------------------------------------------------------
# entropies
# ---------------------------------------------------------------------------

def von_neumann_entropy(state_or_spectrum) -> float:
    """Entropy -sum lambda log2 lambda in bits, with 0 log 0 = 0."""
    if isinstance(state_or_spectrum, (Spectrum, ClassSpectrum)):
        log2_values, _, masses, _ = _as_classes(state_or_spectrum)
        total = float(masses.sum())
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"spectrum mass {total!r} is not 1 within 1e-9")
        nz = masses > 0.0
        return float(-(masses[nz] * log2_values[nz]).sum())
    rho = require_density(state_or_spectrum)
    w = clamp_psd_eigenvalues(np.linalg.eigvalsh(rho))
    nz = w > 0.0
    return float(-(w[nz] * np.log2(w[nz])).sum())


def relative_entropy(rho: np.ndarray, sigma: np.ndarray,
                     support_tol: float = 1e-12, escape_tol: float = 1e-9) -> float:
    """tr rho (log2 rho - log2 sigma) in bits; +inf outside sigma's support.

    Support is decided spectrally: sigma-eigenvalues at or below
    ``support_tol`` count as kernel directions, and rho may place at most
    ``escape_tol`` of its mass there before the result is +inf.
    """
    rho = require_density(rho)
    sigma = require_density(sigma)
    if rho.shape != sigma.shape:
        raise ValueError(f"dimension mismatch: {rho.shape} vs {sigma.shape}")
    w_r = clamp_psd_eigenvalues(np.linalg.eigvalsh(rho))
    nz = w_r > 0.0
    entropy_term = float((w_r[nz] * np.log2(w_r[nz])).sum())

    w_s, v_s = np.linalg.eigh(sigma)
    w_s = clamp_psd_eigenvalues(w_s)
    weights = np.einsum("ji,jk,ki->i", v_s.conj(), rho, v_s).real  # <w_i|rho|w_i>
    weights = np.clip(weights, 0.0, None)
    kernel = w_s <= support_tol
    if float(weights[kernel].sum()) > escape_tol:
        return math.inf
    supp = ~kernel
    cross_term = float((weights[supp] * np.log2(w_s[supp])).sum())
    return max(0.0, entropy_term - cross_term)


# ---------------------------------------------------------------------------
# typical subspaces
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TypicalSubspace:
    """Eigenvalue window selection for the n-site typicality test.

    ``selected`` indexes classes of the originating spectrum whose eigenvalue
    lies in the closed window [2**(-n(s+eps)), 2**(-n(s-eps))]. ``dim_count``
    is the exact number of selected eigenvectors; ``log2_dim`` is -inf for an
    empty selection.
    """

    n: int
    epsilon: float
    entropy_rate: float
    selected: np.ndarray
    dim_count: int
    mass: float
    window_log2: tuple[float, float]

    @property
    def log2_dim(self) -> float:
        return log2_int(self.dim_count) if self.dim_count else -math.inf


def typical_projector(spectrum: SpectrumLike, n: int, entropy_rate: float,
                      epsilon: float) -> TypicalSubspace:
    """Select all eigenvalue classes inside the closed typicality window."""
    if not 0.0 < epsilon < 1.0:
        raise ValueError("epsilon must lie in (0, 1)")
    if entropy_rate < 0.0:
        raise ValueError("entropy rate must be non-negative")
    log2_values, mults, masses, _ = _as_classes(spectrum)
    lo = -n * (entropy_rate + epsilon)
    hi = -n * (entropy_rate - epsilon)
    selected = np.flatnonzero((log2_values >= lo) & (log2_values <= hi))
    dim_count = sum(mults[int(i)] for i in selected)
    mass = float(masses[selected].sum())
    return TypicalSubspace(n=n, epsilon=epsilon, entropy_rate=entropy_rate,
                           selected=selected, dim_count=dim_count, mass=mass,
                           window_log2=(lo, hi))


def typical_basis(spectrum: Spectrum, subspace: TypicalSubspace) -> np.ndarray:
    """Materialize the orthonormal basis of a typical subspace (dense path)."""
    if not isinstance(spectrum, Spectrum):
        raise TypeError("a dense Spectrum is required to materialize eigenvectors")
    return spectrum.vectors[:, subspace.selected]


# ---------------------------------------------------------------------------
# minimal high-probability subspaces
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class HighProbSubspace:
    """Smallest eigenvector selection with mass >= 1 - epsilon.

    Greedy over non-increasing eigenvalues is optimal: the largest mass a
    rank-k projector can capture is the sum of the k largest eigenvalues
    (Ky Fan), so no smaller selection can reach the threshold. ``full_classes``
    counts wholly consumed classes; ``partial_count`` eigenvectors are taken
    from the next class when the threshold is crossed mid-class.
    """

    epsilon: float
    dim_count: int
    mass: float
    full_classes: int
    partial_count: int

    @property
    def log2_dim(self) -> float:
        return log2_int(self.dim_count)


def high_prob_subspace(spectrum: SpectrumLike, epsilon: float) -> HighProbSubspace:
    """Minimal-dimension subspace capturing mass >= 1 - epsilon."""
    if not 0.0 < epsilon < 1.0:
        raise ValueError("epsilon must lie in (0, 1)")
    log2_values, mults, masses, total_dim = _as_classes(spectrum)
    threshold = 1.0 - epsilon
    cum = np.cumsum(masses)
    idx = int(np.searchsorted(cum, threshold, side="left"))
    if idx >= len(cum):
        # numerically the whole spectrum is needed (threshold ~ total mass)
        return HighProbSubspace(epsilon=epsilon, dim_count=total_dim,
                                mass=float(cum[-1]) if len(cum) else 0.0,
                                full_classes=len(mults), partial_count=0)
    mass_before = float(cum[idx - 1]) if idx else 0.0
    deficit = threshold - mass_before
    need = ceil_count(deficit, float(log2_values[idx]))
    need = min(max(need, 1), mults[idx])
    count = sum(mults[:idx]) + need
    if need == mults[idx]:
        full, partial = idx + 1, 0
    else:
        full, partial = idx, need
    mass = mass_before + count_mass(need, float(log2_values[idx]))
    return HighProbSubspace(epsilon=epsilon, dim_count=count, mass=min(mass, 1.0),
                            full_classes=full, partial_count=partial)


def ky_fan_mass(spectrum: SpectrumLike, rank: int) -> float:
    """Largest probability mass a rank-``rank`` projector can capture.

    By the Ky Fan maximum principle this is the sum of the ``rank`` largest
    eigenvalues; non-decreasing in ``rank`` and 1 at full rank.
    """
    log2_values, mults, masses, total_dim = _as_classes(spectrum)
    if not 1 <= rank <= total_dim:
        raise ValueError(f"rank must lie in [1, {total_dim}], got {rank}")
    remaining = rank
    mass = 0.0
    for lv, mult, class_mass in zip(log2_values, mults, masses):
        if mult <= remaining:
            mass += float(class_mass)
            remaining -= mult
            if remaining == 0:
                break
        else:
            mass += count_mass(remaining, float(lv))
            remaining = 0
            break
    return min(mass, 1.0)


def high_prob_rate_sweep(source: SourceModel, epsilon: float, n_list,
                         **spectrum_kwargs) -> list[tuple[int, float]]:
    """(n, log2 dim / n) of the minimal high-probability subspace per block length."""
    rows = []
    for n in n_list:
        spec = class_spectrum(source, int(n), **spectrum_kwargs)
        hp = high_prob_subspace(spec, epsilon)
        rows.append((int(n), hp.log2_dim / n))
    return rows


def entropy_rate_gap(source: SourceModel, n: int, **spectrum_kwargs) -> float:
    """S(rho_n)/n minus the exact entropy rate (block-entropy convergence gap)."""
    spec = class_spectrum(source, n, **spectrum_kwargs)
    return von_neumann_entropy(spec) / n - entropy_rate_exact(source)
