"""Trace-preserving quantum operations in Kraus form and compression schemes.

A channel is a finite list of operators E_i (all out_dim x in_dim) with
sum_i E_i^dag E_i = identity. Compression schemes pair a projective
compressor onto a chosen eigen-subspace with the isometric embedding back;
the compressor keeps the projected block and funnels everything orthogonal
into a fixed unit vector of the subspace.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .counting import pow2_floor
from .linalg import density_spectrum, orthonormal_complement, require_density, require_orthonormal
from .sources import DENSE_CAP_DEFAULT, SourceModel, block_state
from .typicality import high_prob_subspace

COMPLETENESS_TOL = 1e-10
PRUNE_NORM = 1e-14


class KrausChannel:
    """Trace-preserving quantum operation as an explicit Kraus operator list."""

    def __init__(self, ops, check: bool = True, completeness_tol: float = COMPLETENESS_TOL):
        ops = [np.asarray(op, dtype=complex) for op in ops]
        if not ops:
            raise ValueError("a channel needs at least one Kraus operator")
        shape = ops[0].shape
        if any(op.shape != shape for op in ops):
            raise ValueError("all Kraus operators must share the same shape")
        self._stack = np.ascontiguousarray(np.stack(ops))
        if check:
            dev = self.completeness_defect()
            if dev > completeness_tol:
                raise ValueError(
                    f"Kraus operators are not trace preserving: "
                    f"max |sum E^dag E - I| entry = {dev:.3e} > {completeness_tol:g}"
                )

    @property
    def ops(self) -> tuple[np.ndarray, ...]:
        return tuple(self._stack)

    @property
    def stack(self) -> np.ndarray:
        """All operators as one (n_ops, out_dim, in_dim) array."""
        return self._stack

    @property
    def n_ops(self) -> int:
        return self._stack.shape[0]

    @property
    def out_dim(self) -> int:
        return self._stack.shape[1]

    @property
    def in_dim(self) -> int:
        return self._stack.shape[2]

    def completeness_defect(self) -> float:
        gram = np.einsum("kji,kjl->il", self._stack.conj(), self._stack)
        return float(np.abs(gram - np.eye(self.in_dim)).max())

    def apply(self, rho: np.ndarray) -> np.ndarray:
        """sum_i E_i rho E_i^dag."""
        rho = np.asarray(rho, dtype=complex)
        if rho.shape != (self.in_dim, self.in_dim):
            raise ValueError(f"state dimension {rho.shape} does not match channel input {self.in_dim}")
        tmp = self._stack @ rho
        out = np.einsum("kil,kml->im", tmp, self._stack.conj())
        return (out + out.conj().T) / 2.0

    def apply_pure(self, vector: np.ndarray) -> np.ndarray:
        """Channel output for the pure state |v><v| without forming it."""
        vector = np.asarray(vector, dtype=complex)
        if vector.shape != (self.in_dim,):
            raise ValueError(f"vector dimension {vector.shape} does not match channel input {self.in_dim}")
        images = self._stack @ vector  # (n_ops, out_dim)
        out = images.T @ images.conj()
        return (out + out.conj().T) / 2.0


def apply(channel: KrausChannel, rho: np.ndarray) -> np.ndarray:
    """Function form of ``channel.apply``."""
    return channel.apply(rho)


def identity_channel(dim: int) -> KrausChannel:
    return KrausChannel([np.eye(dim, dtype=complex)])


def unitary_channel(u: np.ndarray) -> KrausChannel:
    return KrausChannel([np.asarray(u, dtype=complex)])


def compose(first: KrausChannel, second: KrausChannel,
            prune_norm: float = PRUNE_NORM) -> KrausChannel:
    """Channel applying ``first`` then ``second`` (Kraus set {B_j A_i}).

    Products with Frobenius norm below ``prune_norm`` are dropped; at that
    size they contribute < 1e-28 to any entanglement-fidelity sum.
    """
    if first.out_dim != second.in_dim:
        raise ValueError(
            f"cannot compose: first output dim {first.out_dim} != second input dim {second.in_dim}"
        )
    ops = []
    for b in second.ops:
        for a in first.ops:
            prod = b @ a
            if np.linalg.norm(prod) >= prune_norm:
                ops.append(prod)
    return KrausChannel(ops, completeness_tol=1e-9)


def build_compression(basis: np.ndarray, zero_vector: np.ndarray | None = None,
                      complement: np.ndarray | None = None) -> KrausChannel:
    """Compressor onto span(basis), in the coordinates of ``basis``.

    Kraus set {P} union {|0><e|} expressed in the compressed coordinate
    system: the projected block becomes basis^dag, and every orthonormal
    complement vector e is mapped onto the coordinates of ``zero_vector``
    (any unit vector inside the subspace; defaults to the first basis
    column). Completeness P + sum |e><e| = I holds by construction.
    """
    basis = require_orthonormal(basis, name="subspace basis")
    d, r = basis.shape
    if zero_vector is None:
        zero_vector = basis[:, 0]
    zero_vector = np.asarray(zero_vector, dtype=complex)
    inside = basis @ (basis.conj().T @ zero_vector)
    residual = float(np.linalg.norm(zero_vector - inside))
    if residual > 1e-10:
        raise ValueError(f"zero vector lies outside the subspace: residual norm {residual:.3e}")
    zero_coord = basis.conj().T @ zero_vector
    zero_coord = zero_coord / np.linalg.norm(zero_coord)
    if complement is None:
        complement = orthonormal_complement(basis)
    else:
        complement = require_orthonormal(complement, name="complement basis")
        overlap = float(np.abs(basis.conj().T @ complement).max()) if complement.size else 0.0
        if overlap > 1e-10:
            raise ValueError(f"complement is not orthogonal to the subspace: max overlap {overlap:.3e}")
    ops = [basis.conj().T]
    for j in range(complement.shape[1]):
        ops.append(np.outer(zero_coord, complement[:, j].conj()))
    return KrausChannel(ops)


def build_decompression(basis: np.ndarray) -> KrausChannel:
    """Isometric embedding of the compressed coordinates back into the big space."""
    basis = require_orthonormal(basis, name="subspace basis")
    return KrausChannel([basis])


@dataclass(frozen=True, eq=False)
class CompressionScheme:
    """One block-length slice of a compression scheme.

    ``basis`` holds the selected eigenvectors (selection order = compressed
    coordinate order), ``subspace_mass`` is tr(rho_n P). The log2 rank is the
    dimension-counting rate; whole qubits would be ceil(log2 rank).
    """

    n: int
    epsilon: float | None
    target_rate: float | None
    basis: np.ndarray
    subspace_mass: float
    compressor: KrausChannel
    decompressor: KrausChannel

    @property
    def rank(self) -> int:
        return self.basis.shape[1]

    @property
    def rate_log2dim(self) -> float:
        return math.log2(self.rank)

    @property
    def rate_qubits(self) -> int:
        return math.ceil(self.rate_log2dim)

    def roundtrip(self, rho: np.ndarray) -> np.ndarray:
        """Decompress(compress(rho)) without materializing the composed channel."""
        return self.decompressor.apply(self.compressor.apply(rho))

    def composed(self) -> KrausChannel:
        return compose(self.compressor, self.decompressor)


def make_scheme(source: SourceModel, n: int, epsilon: float | None = None,
                target_rate: float | None = None,
                dense_cap: int = DENSE_CAP_DEFAULT) -> CompressionScheme:
    """Compression scheme for the n-site block of a source.

    epsilon-mode keeps the minimal high-probability subspace at level
    epsilon; rate-mode keeps the top floor(2**(n*R)) eigenvectors. The zero
    vector is the first selected eigenvector.
    """
    if (epsilon is None) == (target_rate is None):
        raise ValueError("specify exactly one of epsilon or target_rate")
    rho = block_state(source, n, dense_cap=dense_cap)
    spectrum = density_spectrum(rho)
    dim = spectrum.dim
    if epsilon is not None:
        hp = high_prob_subspace(spectrum, epsilon)
        rank = int(hp.dim_count)
    else:
        rank = pow2_floor(n * target_rate)
        if rank < 1:
            raise ValueError(f"target rate {target_rate} gives an empty subspace at n={n}")
        rank = min(rank, dim)
    basis = spectrum.vectors[:, :rank]
    complement = spectrum.vectors[:, rank:]
    mass = float(spectrum.values[:rank].sum())
    compressor = build_compression(basis, zero_vector=basis[:, 0], complement=complement)
    decompressor = build_decompression(basis)
    return CompressionScheme(n=n, epsilon=epsilon, target_rate=target_rate,
                             basis=basis, subspace_mass=mass,
                             compressor=compressor, decompressor=decompressor)


def roundtrip_entanglement_fidelity(scheme: CompressionScheme, rho: np.ndarray) -> float:
    """Entanglement fidelity of decompress(compress(.)) on ``rho``.

    Evaluates sum_ij |tr(rho B_j A_i)|^2 over the composed Kraus set without
    materializing the products; identical by associativity of the trace to
    the Kraus-formula fidelity of ``scheme.composed()``.
    """
    rho = require_density(rho)
    total = 0.0
    for b in scheme.decompressor.ops:
        cross = rho @ b  # (n, rank)
        vals = np.einsum("kab,ba->k", scheme.compressor.stack, cross)
        total += float((vals.conj() * vals).real.sum())
    return min(total, 1.0)


def pure_roundtrip_overlaps(scheme: CompressionScheme, vectors: np.ndarray) -> np.ndarray:
    """<v|roundtrip(|v><v|)|v> for each column v, batched over the columns.

    Used for ensemble fidelities of eigen-ensembles at block sizes where a
    per-state dense roundtrip would be wasteful. Matches
    ``fidelity(P_v, roundtrip(P_v))**2`` on every column.
    """
    vectors = np.asarray(vectors, dtype=complex)
    a = scheme.compressor.stack  # (K, r, d)
    k, r, d = a.shape
    images = (a.reshape(k * r, d) @ vectors).reshape(k, r, -1)
    w = scheme.decompressor.ops[0].conj().T @ vectors  # compressed coordinates (r, N)
    t = np.einsum("krn,rn->kn", images, w.conj())
    return np.clip((t.conj() * t).real.sum(axis=0), 0.0, 1.0)
