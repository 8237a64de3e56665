"""Stationary ergodic source families and their block spectra.

Two families generate the consistent family of block states rho_n:

* ``IIDSource`` — n-fold tensor power of a fixed site state.
* ``RotatedMarkovSource`` — a classical irreducible aperiodic Markov chain
  embedded diagonally and conjugated site-wise by a unitary. Ergodicity holds
  by construction for both families.

Block spectra come in two representations: dense matrices (``block_state``,
capped by ``dense_cap``) and eigenvalue classes with exact integer
multiplicities (``class_spectrum``), which scale to thousands of sites
because nothing of size d**n is ever materialized.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .counting import count_mass
from .linalg import kron_power, partial_trace, require_density

DENSE_CAP_DEFAULT = 4096
WORD_CAP_BITS_DEFAULT = 24
CLASS_CAP_DEFAULT = 4_000_000

STOCHASTIC_TOL = 1e-12
STATIONARY_TOL = 1e-10
UNITARY_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class IIDSource:
    """Memoryless source emitting copies of a fixed site state."""

    site_state: np.ndarray

    def __post_init__(self):
        state = require_density(self.site_state, name="site state")
        object.__setattr__(self, "site_state", np.ascontiguousarray(state))

    @property
    def site_dim(self) -> int:
        return self.site_state.shape[0]


@dataclass(frozen=True, eq=False)
class RotatedMarkovSource:
    """Classical ergodic Markov words, rotated site-wise by a unitary.

    ``start_dist`` defaults to the stationary distribution of ``transition``,
    which makes the family stationary and consistent. Passing an explicit
    non-stationary distribution is allowed (the resulting family is still
    consistent under dropping the *last* site but not the first); it exists
    so stationarity failures can be exercised and reported.
    """

    transition: np.ndarray
    rotation: np.ndarray | None = None
    start_dist: np.ndarray | None = None

    def __post_init__(self):
        m = np.asarray(self.transition, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"transition matrix must be square, got {m.shape}")
        if m.min() < 0.0:
            raise ValueError("transition matrix has negative entries")
        row_dev = float(np.abs(m.sum(axis=1) - 1.0).max())
        if row_dev > STOCHASTIC_TOL:
            raise ValueError(f"transition matrix is not row-stochastic: max row-sum deviation {row_dev:.3e}")
        if not _is_primitive(m):
            raise ValueError("transition matrix is not irreducible and aperiodic (no strictly positive power)")
        object.__setattr__(self, "transition", np.ascontiguousarray(m))

        d = m.shape[0]
        u = self.rotation
        if u is None:
            u = np.eye(d, dtype=complex)
        u = np.asarray(u, dtype=complex)
        if u.shape != (d, d):
            raise ValueError(f"rotation must be {d}x{d}, got {u.shape}")
        unitary_dev = float(np.abs(u.conj().T @ u - np.eye(d)).max())
        if unitary_dev > UNITARY_TOL:
            raise ValueError(f"rotation is not unitary: max deviation {unitary_dev:.3e}")
        object.__setattr__(self, "rotation", np.ascontiguousarray(u))

        pi = self.start_dist
        if pi is None:
            pi = stationary_distribution(m)
        pi = np.asarray(pi, dtype=float)
        if pi.shape != (d,) or pi.min() < -1e-12 or abs(pi.sum() - 1.0) > 1e-10:
            raise ValueError("start distribution must be a probability vector over the chain states")
        object.__setattr__(self, "start_dist", np.ascontiguousarray(np.clip(pi, 0.0, None)))

    @property
    def site_dim(self) -> int:
        return self.transition.shape[0]

    @property
    def stationarity_residual(self) -> float:
        """max |pi M - pi| for the configured start distribution."""
        pi = self.start_dist
        return float(np.abs(pi @ self.transition - pi).max())


SourceModel = IIDSource | RotatedMarkovSource


def _is_primitive(m: np.ndarray) -> bool:
    d = m.shape[0]
    adj = m > 0.0
    power = adj.copy()
    for _ in range(d * d):
        if power.all():
            return True
        power = (power.astype(np.int64) @ adj.astype(np.int64)) > 0
    return bool(power.all())


def stationary_distribution(m: np.ndarray) -> np.ndarray:
    """Stationary distribution of a primitive row-stochastic matrix."""
    m = np.asarray(m, dtype=float)
    w, v = np.linalg.eig(m.T)
    idx = int(np.argmin(np.abs(w - 1.0)))
    pi = np.abs(v[:, idx].real)
    pi = pi / pi.sum()
    residual = float(np.abs(pi @ m - pi).max())
    if residual > STATIONARY_TOL:
        raise ValueError(f"stationary distribution residual {residual:.3e} exceeds {STATIONARY_TOL:g}")
    return pi


# ---------------------------------------------------------------------------
# dense block states
# ---------------------------------------------------------------------------

def _check_dense_cap(d: int, n: int, dense_cap: int) -> None:
    if d ** n > dense_cap:
        raise ValueError(
            f"dense block of dimension {d}**{n} exceeds the dense cap {dense_cap}; "
            "use class_spectrum for the structured spectral path"
        )


def block_state(source: SourceModel, n: int, dense_cap: int = DENSE_CAP_DEFAULT) -> np.ndarray:
    """Dense n-site block state of the source."""
    if n < 1:
        raise ValueError("block length n must be >= 1")
    d = source.site_dim
    _check_dense_cap(d, n, dense_cap)
    if isinstance(source, IIDSource):
        return kron_power(source.site_state, n)
    probs = word_probabilities(source, n, cap_bits=None)
    u = source.rotation
    if np.abs(u - np.eye(d)).max() < 1e-15:
        return np.diag(probs.astype(complex))
    un = kron_power(u, n)
    rho = (un * probs) @ un.conj().T
    return (rho + rho.conj().T) / 2.0


def word_probabilities(source: RotatedMarkovSource, n: int,
                       cap_bits: int | None = WORD_CAP_BITS_DEFAULT) -> np.ndarray:
    """Probabilities of all d**n words, in lexicographic word order.

    Site 1 is the most significant digit of the word index.
    """
    if not isinstance(source, RotatedMarkovSource):
        raise TypeError("word_probabilities is defined for Markov sources")
    d = source.site_dim
    if cap_bits is not None and n * math.log2(d) > cap_bits:
        raise ValueError(
            f"word enumeration for {d}**{n} words exceeds the {cap_bits}-bit cap; "
            "use the transition-count class path"
        )
    p = source.start_dist.astype(float).copy()
    m = source.transition
    for _ in range(n - 1):
        p = (p.reshape(-1, d)[:, :, None] * m[None, :, :]).reshape(-1)
    return p


# ---------------------------------------------------------------------------
# eigenvalue classes
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class ClassSpectrum:
    """Block spectrum as eigenvalue classes with exact multiplicities.

    Entries are sorted by non-increasing eigenvalue. ``log2_values`` may reach
    -inf (zero eigenvalues); ``multiplicities`` are exact Python integers so
    astronomically large degeneracies stay exact; ``masses[i]`` is
    ``multiplicities[i] * 2**log2_values[i]`` computed underflow-safely.
    """

    log2_values: np.ndarray
    multiplicities: tuple[int, ...]
    masses: np.ndarray
    total_dim: int

    @property
    def n_classes(self) -> int:
        return int(self.log2_values.size)


def make_class_spectrum(log2_values, multiplicities, total_dim: int,
                        mass_tol: float = 1e-9) -> ClassSpectrum:
    """Sort, aggregate-check and wrap raw class data."""
    log2_values = np.asarray(log2_values, dtype=float)
    multiplicities = [int(m) for m in multiplicities]
    if log2_values.size != len(multiplicities):
        raise ValueError("values and multiplicities differ in length")
    order = np.argsort(-log2_values, kind="stable")
    log2_values = log2_values[order]
    multiplicities = tuple(multiplicities[int(i)] for i in order)
    if sum(multiplicities) != total_dim:
        raise ValueError(
            f"class multiplicities sum to {sum(multiplicities)}, expected total dimension {total_dim}"
        )
    masses = np.array([count_mass(m, lv) for m, lv in zip(multiplicities, log2_values)])
    total_mass = float(masses.sum())
    if abs(total_mass - 1.0) > mass_tol:
        raise ValueError(f"class masses sum to {total_mass!r}, expected 1 within {mass_tol:g}")
    return ClassSpectrum(log2_values=log2_values, multiplicities=multiplicities,
                         masses=masses, total_dim=total_dim)


def expand_class_values(spectrum: ClassSpectrum, max_dim: int = 1 << 20) -> np.ndarray:
    """Linear eigenvalues repeated by multiplicity (small spectra only)."""
    if spectrum.total_dim > max_dim:
        raise ValueError(f"refusing to expand {spectrum.total_dim} eigenvalues (cap {max_dim})")
    values = np.exp2(spectrum.log2_values, where=np.isfinite(spectrum.log2_values),
                     out=np.zeros_like(spectrum.log2_values))
    return np.repeat(values, np.array(spectrum.multiplicities, dtype=np.int64))


def _multinomial(n: int, parts) -> int:
    out = 1
    rem = n
    for k in parts:
        out *= math.comb(rem, k)
        rem -= k
    return out


def _compositions(n: int, parts: int):
    """All tuples of `parts` non-negative integers summing to n."""
    if parts == 1:
        yield (n,)
        return
    for head in range(n + 1):
        for tail in _compositions(n - head, parts - 1):
            yield (head,) + tail


def _iid_class_spectrum(source: IIDSource, n: int, class_cap: int) -> ClassSpectrum:
    from .linalg import density_spectrum

    q = density_spectrum(source.site_state).values
    d = q.size
    n_classes = math.comb(n + d - 1, d - 1)
    if n_classes > class_cap:
        raise ValueError(f"{n_classes} type classes exceed the class cap {class_cap}")
    with np.errstate(divide="ignore"):
        log2q = np.log2(q)
    log2_values = []
    mults = []
    for ks in _compositions(n, d):
        lv = 0.0
        for ki, lqi in zip(ks, log2q):
            if ki:
                lv += ki * lqi
        log2_values.append(lv)
        mults.append(_multinomial(n, ks))
    return make_class_spectrum(log2_values, mults, d ** n)


def _markov_word_class_spectrum(source: RotatedMarkovSource, n: int,
                                cap_bits: int) -> ClassSpectrum:
    probs = word_probabilities(source, n, cap_bits=cap_bits)
    with np.errstate(divide="ignore"):
        log2_values = np.log2(probs)
    return make_class_spectrum(log2_values, [1] * probs.size, source.site_dim ** n)


def _fraction_det(mat: list[list[Fraction]]) -> Fraction:
    size = len(mat)
    if size == 0:
        return Fraction(1)
    if size == 1:
        return mat[0][0]
    det = Fraction(0)
    for col in range(size):
        if mat[0][col] == 0:
            continue
        minor = [row[:col] + row[col + 1:] for row in mat[1:]]
        det += (-1) ** col * mat[0][col] * _fraction_det(minor)
    return det


def whittle_word_count(counts: np.ndarray, start: int, end: int) -> int:
    """Number of words with the given start, end and transition-count matrix.

    Uses Whittle's formula: the multinomial arrangement count of each row,
    corrected by the (end, start) cofactor of I - K, where K has the rows of
    ``counts`` normalized (identity rows where a state is never left).
    """
    k = np.asarray(counts, dtype=np.int64)
    d = k.shape[0]
    rows = k.sum(axis=1)
    base = 1
    for i in range(d):
        base *= _multinomial(int(rows[i]), [int(x) for x in k[i]])
    mat = []
    for i in range(d):
        row = []
        for j in range(d):
            kij = Fraction(int(k[i, j]), int(rows[i])) if rows[i] else Fraction(0)
            row.append((Fraction(1) if i == j else Fraction(0)) - kij)
        mat.append(row)
    minor = [row[:start] + row[start + 1:] for r, row in enumerate(mat) if r != end]
    cof = (-1) ** (start + end) * _fraction_det(minor)
    total = cof * base
    if total.denominator != 1:
        raise ValueError("Whittle count is not integral; inconsistent transition counts")
    return max(0, int(total))


def _markov_type_classes(source: RotatedMarkovSource, n: int):
    """(start, k-matrix) classes for 2-state chains, any n."""
    d = source.site_dim
    if d != 2:
        raise ValueError(
            "transition-count class aggregation is implemented for 2-state chains; "
            "larger alphabets must stay within the word-enumeration cap"
        )
    if n == 1:
        for u in range(d):
            yield u, np.zeros((2, 2), dtype=np.int64), 1
        return
    total = n - 1
    for start in range(2):
        for end in range(2):
            # flow condition: k01 - k10 = [start==0] - [end==0]
            delta = (1 if start == 0 else 0) - (1 if end == 0 else 0)
            k10 = 0
            while True:
                k01 = k10 + delta
                if k01 < 0:
                    k10 += 1
                    continue
                off = k01 + k10
                if off > total:
                    break
                for k00 in range(total - off + 1):
                    k11 = total - off - k00
                    if start == 0 and k00 + k01 == 0:
                        continue  # word must leave state 0 at least via its first step
                    if start == 1 and k10 + k11 == 0:
                        continue
                    k = np.array([[k00, k01], [k10, k11]], dtype=np.int64)
                    count = whittle_word_count(k, start, end)
                    if count:
                        yield start, k, count
                k10 += 1


def _markov_type_class_spectrum(source: RotatedMarkovSource, n: int,
                                class_cap: int) -> ClassSpectrum:
    m = source.transition
    pi = source.start_dist
    with np.errstate(divide="ignore"):
        log2m = np.log2(m)
        log2pi = np.log2(pi)
    log2_values = []
    mults = []
    for start, k, count in _markov_type_classes(source, n):
        lv = float(log2pi[start])
        nz = k > 0
        if nz.any():
            lv += float((k[nz] * log2m[nz]).sum())
        log2_values.append(lv)
        mults.append(count)
        if len(mults) > class_cap:
            raise ValueError(f"type classes exceed the class cap {class_cap}")
    return make_class_spectrum(log2_values, mults, source.site_dim ** n)


def class_spectrum(source: SourceModel, n: int,
                   word_cap_bits: int = WORD_CAP_BITS_DEFAULT,
                   class_cap: int = CLASS_CAP_DEFAULT,
                   force_type_classes: bool = False) -> ClassSpectrum:
    """Block spectrum as classes, without materializing d**n matrices.

    IID sources aggregate by eigenvalue type (multinomial multiplicities).
    Markov sources enumerate words while d**n fits in ``word_cap_bits`` bits
    and switch to exact transition-count aggregation beyond (2-state chains);
    ``force_type_classes`` selects the aggregated path unconditionally.
    """
    if n < 1:
        raise ValueError("block length n must be >= 1")
    if isinstance(source, IIDSource):
        return _iid_class_spectrum(source, n, class_cap)
    if not force_type_classes and n * math.log2(source.site_dim) <= word_cap_bits:
        return _markov_word_class_spectrum(source, n, word_cap_bits)
    return _markov_type_class_spectrum(source, n, class_cap)


# ---------------------------------------------------------------------------
# exact rates and consistency checks
# ---------------------------------------------------------------------------

def entropy_rate_exact(source: SourceModel) -> float:
    """Closed-form entropy rate in bits per site.

    IID: the site-state entropy. Rotated Markov: the classical chain rate
    -sum_i pi_i sum_j M_ij log2 M_ij (the stationary distribution is used
    regardless of any overridden start distribution; the rate is a limit and
    does not depend on the start).
    """
    if isinstance(source, IIDSource):
        from .linalg import density_spectrum

        q = density_spectrum(source.site_state).values
        nz = q > 0.0
        return float(-(q[nz] * np.log2(q[nz])).sum())
    m = source.transition
    pi = stationary_distribution(m)
    nz = m > 0.0
    terms = np.zeros_like(m)
    terms[nz] = m[nz] * np.log2(m[nz])
    return float(-(pi * terms.sum(axis=1)).sum())


@dataclass(frozen=True)
class ConsistencyReport:
    """Residuals of the two one-site marginalizations of rho_{n+1} vs rho_n."""

    n: int
    drop_last_residual: float
    drop_first_residual: float
    tol: float

    @property
    def ok(self) -> bool:
        return self.drop_last_residual <= self.tol and self.drop_first_residual <= self.tol


def check_consistency(source: SourceModel, n: int, tol: float = 1e-10,
                      dense_cap: int = DENSE_CAP_DEFAULT) -> ConsistencyReport:
    """Compare both one-site partial traces of rho_{n+1} against rho_n."""
    d = source.site_dim
    _check_dense_cap(d, n + 1, dense_cap)
    rho_n = block_state(source, n, dense_cap=dense_cap)
    rho_n1 = block_state(source, n + 1, dense_cap=dense_cap)
    dims = [d] * (n + 1)
    drop_last = partial_trace(rho_n1, dims, keep=range(n))
    drop_first = partial_trace(rho_n1, dims, keep=range(1, n + 1))
    return ConsistencyReport(
        n=n,
        drop_last_residual=float(np.abs(drop_last - rho_n).max()),
        drop_first_residual=float(np.abs(drop_first - rho_n).max()),
        tol=tol,
    )
