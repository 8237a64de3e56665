"""Seeded random instances for property suites.

States are normalized G G^dag for complex Gaussian G (full rank, well
conditioned); channels are Haar-ish isometry dilations truncated to a few
Kraus terms, plus the scheme round-trips built elsewhere.
"""

from __future__ import annotations

import numpy as np

from .channels import KrausChannel


def random_complex_gaussian(rng: np.random.Generator, shape) -> np.ndarray:
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def random_density(rng: np.random.Generator, dim: int) -> np.ndarray:
    g = random_complex_gaussian(rng, (dim, dim))
    rho = g @ g.conj().T
    rho = rho / rho.trace().real
    return (rho + rho.conj().T) / 2.0


def random_pure_vector(rng: np.random.Generator, dim: int) -> np.ndarray:
    v = random_complex_gaussian(rng, dim)
    return v / np.linalg.norm(v)


def random_unitary(rng: np.random.Generator, dim: int) -> np.ndarray:
    q, r = np.linalg.qr(random_complex_gaussian(rng, (dim, dim)))
    phases = np.diag(r).copy()
    phases /= np.abs(phases)
    return q * phases.conj()


def random_kraus_channel(rng: np.random.Generator, dim: int, n_ops: int = 4) -> KrausChannel:
    """Channel from a random isometry V: C^dim -> C^dim (x) C^n_ops."""
    g = random_complex_gaussian(rng, (dim * n_ops, dim))
    isometry, _ = np.linalg.qr(g)
    ops = [isometry[k * dim:(k + 1) * dim, :] for k in range(n_ops)]
    return KrausChannel(ops)


def random_probability_vector(rng: np.random.Generator, dim: int) -> np.ndarray:
    p = rng.dirichlet(np.ones(dim))
    return np.sort(p)[::-1]
