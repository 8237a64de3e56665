"""Fidelities, trace distance and their inequality relations.

The core quantity is the square-root fidelity

    F(rho, sigma) = tr sqrt(sqrt(rho) sigma sqrt(rho)),

which reduces to |<psi|phi>| on pure states. Entanglement fidelity has two
independently computed routes (the Kraus trace formula and an explicit
purification), ensemble fidelity averages squared fidelities over a convex
decomposition, and the supremum over pure decompositions is only ever
bracketed: by one explicit decomposition from below and by
min(6 * Ky-Fan mass, output fidelity) from above.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channels import KrausChannel
from .linalg import (
    clamp_psd_eigenvalues,
    density_spectrum,
    matrix_sqrt_psd,
    require_density,
    trace_norm,
)
from .typicality import ky_fan_mass, von_neumann_entropy


def fidelity(rho: np.ndarray, sigma: np.ndarray) -> float:
    """tr sqrt(sqrt(rho) sigma sqrt(rho)), in [0, 1]."""
    rho = require_density(rho)
    sigma = require_density(sigma)
    if rho.shape != sigma.shape:
        raise ValueError(f"dimension mismatch: {rho.shape} vs {sigma.shape}")
    root = matrix_sqrt_psd(rho)
    inner = root @ sigma @ root
    inner = (inner + inner.conj().T) / 2.0
    w = clamp_psd_eigenvalues(np.linalg.eigvalsh(inner), clamp=1e-9)
    value = float(np.sqrt(w).sum())
    return min(max(value, 0.0), 1.0)


def fidelity_nuclear(rho: np.ndarray, sigma: np.ndarray) -> float:
    """Cross-check route: nuclear norm of sqrt(rho) sqrt(sigma)."""
    rho = require_density(rho)
    sigma = require_density(sigma)
    singular = np.linalg.svd(matrix_sqrt_psd(rho) @ matrix_sqrt_psd(sigma), compute_uv=False)
    return min(float(singular.sum()), 1.0)


def trace_distance(rho: np.ndarray, sigma: np.ndarray) -> float:
    """Half the trace norm of rho - sigma, in [0, 1]."""
    rho = np.asarray(rho, dtype=complex)
    sigma = np.asarray(sigma, dtype=complex)
    if rho.shape != sigma.shape:
        raise ValueError(f"dimension mismatch: {rho.shape} vs {sigma.shape}")
    return 0.5 * trace_norm(rho - sigma)


# ---------------------------------------------------------------------------
# entanglement fidelity: two routes
# ---------------------------------------------------------------------------

def _require_roundtrip(channel: KrausChannel, dim: int) -> None:
    if channel.in_dim != dim or channel.out_dim != dim:
        raise ValueError(
            f"entanglement fidelity needs a round-trip channel on dim {dim}, "
            f"got {channel.in_dim} -> {channel.out_dim}"
        )


def entanglement_fidelity_kraus(rho: np.ndarray, channel: KrausChannel) -> float:
    """sum_i |tr(rho E_i)|^2 (squared norm of an affine complex vector)."""
    rho = require_density(rho)
    _require_roundtrip(channel, rho.shape[0])
    traces = np.einsum("kij,ji->k", channel.stack, rho)
    return min(float((traces.conj() * traces).real.sum()), 1.0)


def canonical_purification(rho: np.ndarray) -> np.ndarray:
    """|Psi> = sum_i sqrt(lambda_i) |i>|v_i> on reference x system."""
    spectrum = density_spectrum(rho)
    dim = spectrum.dim
    psi = np.zeros(dim * dim, dtype=complex)
    for i in range(dim):
        if spectrum.values[i] > 0.0:
            psi[i * dim:(i + 1) * dim] += math.sqrt(spectrum.values[i]) * spectrum.vectors[:, i]
    return psi


def entanglement_fidelity_purification(rho: np.ndarray, channel: KrausChannel,
                                       dense_cap: int = 4096,
                                       reference_rotation: np.ndarray | None = None) -> float:
    """F(|Psi><Psi|, (id x E)(|Psi><Psi|))^2 through an explicit purification.

    The reference system may be rotated by a unitary to exercise
    purification-independence; the value must agree with the Kraus route
    within 1e-8 either way.
    """
    rho = require_density(rho)
    dim = rho.shape[0]
    _require_roundtrip(channel, dim)
    if dim * dim > dense_cap:
        raise ValueError(f"purification dimension {dim * dim} exceeds the dense cap {dense_cap}")
    psi = canonical_purification(rho)
    if reference_rotation is not None:
        w = np.asarray(reference_rotation, dtype=complex)
        psi = (np.kron(w, np.eye(dim)) @ psi)
    psi_mat = psi.reshape(dim, dim)  # reference index first
    lifted = np.zeros((dim * dim, dim * dim), dtype=complex)
    for op in channel.ops:
        image = (psi_mat @ op.T).reshape(-1)
        lifted += np.outer(image, image.conj())
    lifted = (lifted + lifted.conj().T) / 2.0
    pure = np.outer(psi, psi.conj())
    return fidelity(pure, lifted) ** 2


# ---------------------------------------------------------------------------
# ensembles
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class EnsembleItem:
    """One weighted state; pure members may carry their vector directly."""

    weight: float
    state: np.ndarray | None = None
    vector: np.ndarray | None = None
    pure: bool = False

    def __post_init__(self):
        if (self.state is None) == (self.vector is None):
            raise ValueError("exactly one of state or vector must be given")
        if self.vector is not None:
            v = np.asarray(self.vector, dtype=complex)
            norm = float(np.linalg.norm(v))
            if abs(norm - 1.0) > 1e-9:
                raise ValueError(f"pure-state vector has norm {norm!r}")
            object.__setattr__(self, "vector", v)
            object.__setattr__(self, "pure", True)

    def density(self) -> np.ndarray:
        if self.state is not None:
            return np.asarray(self.state, dtype=complex)
        return np.outer(self.vector, self.vector.conj())


@dataclass(frozen=True, eq=False)
class Ensemble:
    """Weighted states forming a convex decomposition of their average."""

    items: tuple[EnsembleItem, ...]

    def __post_init__(self):
        if not self.items:
            raise ValueError("ensemble must not be empty")
        total = sum(item.weight for item in self.items)
        if abs(total - 1.0) > 1e-10:
            raise ValueError(f"ensemble weights sum to {total!r}, expected 1")
        if min(item.weight for item in self.items) < 0.0:
            raise ValueError("ensemble weights must be non-negative")
        for item in self.items:
            if item.state is not None:
                rho = require_density(item.state, name="ensemble state")
                if item.pure:
                    purity = float((rho @ rho).trace().real)
                    if abs(purity - 1.0) > 1e-9:
                        raise ValueError(f"state flagged pure has tr(rho^2) = {purity!r}")

    def average_state(self) -> np.ndarray:
        avg = sum(item.weight * item.density() for item in self.items)
        return require_density(avg, name="ensemble average")


def eigen_ensemble(rho: np.ndarray) -> Ensemble:
    """Pure decomposition of rho along its eigenvectors (zero weights dropped)."""
    spectrum = density_spectrum(rho)
    keep = spectrum.values > 0.0
    weights = spectrum.values[keep]
    weights = weights / weights.sum()
    items = tuple(
        EnsembleItem(weight=float(w), vector=spectrum.vectors[:, i])
        for w, i in zip(weights, np.flatnonzero(keep))
    )
    return Ensemble(items=items)


def ensemble_fidelity(ensemble: Ensemble, channel) -> float:
    """sum_i p_i F(rho_i, E(rho_i))^2.

    ``channel`` is a KrausChannel or any callable mapping densities to
    densities (e.g. a scheme round-trip). For vector-backed pure members the
    squared fidelity reduces to <v|E(|v><v|)|v>.
    """
    if isinstance(channel, KrausChannel):
        op = channel.apply
        op_pure = channel.apply_pure
    else:
        op = channel
        op_pure = None
    total = 0.0
    for item in ensemble.items:
        if item.vector is not None:
            out = op_pure(item.vector) if op_pure is not None else op(item.density())
            val = float(np.real(item.vector.conj() @ out @ item.vector))
            total += item.weight * min(max(val, 0.0), 1.0)
        else:
            rho_i = item.density()
            total += item.weight * fidelity(rho_i, op(rho_i)) ** 2
    return min(total, 1.0)


# ---------------------------------------------------------------------------
# bounds on the decomposition supremum
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DecompositionFidelityBounds:
    """Bracket for the supremum of ensemble fidelities over pure decompositions.

    ``lower`` is the eigen-decomposition's ensemble fidelity (one admissible
    decomposition); ``upper`` is min(six_ky_fan, output_fidelity). Both sides
    live in [0, 6]; lower <= upper is not guaranteed in general since the two
    sides bound different directions.
    """

    lower: float
    upper: float
    six_ky_fan: float
    output_fidelity: float


def decomposition_fidelity_bounds(rho: np.ndarray, channel, compressed_dim: int,
                                  roundtrip=None) -> DecompositionFidelityBounds:
    """Bracket sup over pure decompositions of the ensemble fidelity.

    ``compressed_dim`` is the dimension of the space the channel squeezes
    through; ``roundtrip`` (defaulting to ``channel``) evaluates the channel
    when it is cheaper as a callable.
    """
    rho = require_density(rho)
    apply_channel = roundtrip if roundtrip is not None else channel
    lower = ensemble_fidelity(eigen_ensemble(rho), apply_channel)
    six = 6.0 * ky_fan_mass(density_spectrum(rho), compressed_dim)
    if isinstance(apply_channel, KrausChannel):
        out = apply_channel.apply(rho)
    else:
        out = apply_channel(rho)
    out_fid = fidelity(rho, out)
    return DecompositionFidelityBounds(lower=lower, upper=min(six, out_fid),
                                       six_ky_fan=six, output_fidelity=out_fid)


# ---------------------------------------------------------------------------
# inequality reports
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class InequalityReport:
    """Signed slacks (>= 0 means the inequality holds) for the fidelity relations."""

    fvdg_lower_slack: float      # T - (1 - F)
    fvdg_upper_slack: float      # sqrt(1 - F^2) - T
    chain_fe: float              # F_e >= 0
    chain_fe_vs_fbar: float      # Fbar - F_e
    chain_fbar_vs_f: float       # F(rho, E(rho)) - Fbar
    chain_f_vs_one: float        # 1 - F(rho, E(rho))
    fannes_slack: float          # entropy continuity bound residual

    @property
    def min_slack(self) -> float:
        return min(self.fvdg_lower_slack, self.fvdg_upper_slack, self.chain_fe,
                   self.chain_fe_vs_fbar, self.chain_fbar_vs_f, self.chain_f_vs_one,
                   self.fannes_slack)

    def ok(self, tol: float = 1e-9) -> bool:
        return self.min_slack >= -tol


def check_inequalities(rho: np.ndarray, sigma: np.ndarray, ensemble: Ensemble,
                       channel: KrausChannel, n_sites: int = 1) -> InequalityReport:
    """Slack report for the trace-distance sandwich, the fidelity chain and
    the entropy continuity (Fannes-type) bound.

    ``ensemble`` must average to ``rho``; the continuity bound reads the full
    space as ``n_sites`` sites of dimension dim**(1/n_sites).
    """
    rho = require_density(rho)
    sigma = require_density(sigma)
    avg = ensemble.average_state()
    if float(np.abs(avg - rho).max()) > 1e-8:
        raise ValueError("ensemble does not average to rho")

    f_pair = fidelity(rho, sigma)
    t_pair = trace_distance(rho, sigma)
    fvdg_lower = t_pair - (1.0 - f_pair)
    fvdg_upper = math.sqrt(max(0.0, 1.0 - f_pair ** 2)) - t_pair

    f_e = entanglement_fidelity_kraus(rho, channel)
    f_bar = ensemble_fidelity(ensemble, channel)
    out = channel.apply(rho)
    f_out = fidelity(rho, out)

    dim = rho.shape[0]
    site_dim = dim ** (1.0 / n_sites)
    tail = math.sqrt(max(0.0, 1.0 - f_out ** 2))
    entropy_gap = abs(von_neumann_entropy(rho) - von_neumann_entropy(out)) / n_sites
    fannes = 2.0 * math.log2(site_dim) * tail + 1.0 / n_sites - entropy_gap

    return InequalityReport(
        fvdg_lower_slack=fvdg_lower,
        fvdg_upper_slack=fvdg_upper,
        chain_fe=f_e,
        chain_fe_vs_fbar=f_bar - f_e,
        chain_fbar_vs_f=f_out - f_bar,
        chain_f_vs_one=1.0 - f_out,
        fannes_slack=fannes,
    )
