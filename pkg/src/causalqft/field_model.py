"""Finite-dimensional field models: truncated oscillator chains and random qudits.

Operators returned here act on the single global register ``sys`` of
dimension ``D``; placement onto process-vector registers happens downstream.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from functools import cached_property, lru_cache
from typing import Union

import numpy as np

from .tensor_core import LabeledOperator, LabeledVector, SpaceLabel

__all__ = [
    "ModelError",
    "DegenerateGroundStateWarning",
    "OscillatorChainModel",
    "RandomQuditModel",
    "Model",
    "MAX_PROCESS_DIM",
    "annihilation",
    "hamiltonian",
    "ground_state",
    "ground_energy",
    "evolution",
    "field_operator",
    "schrodinger_state",
]

# six registers of this dimension must fit in memory for dense contraction
MAX_PROCESS_DIM = 16


class ModelError(ValueError):
    pass


class DegenerateGroundStateWarning(UserWarning):
    pass


def annihilation(d: int) -> np.ndarray:
    """Truncated ladder operator, ``a|n> = sqrt(n)|n-1>`` for ``n < d``."""
    return np.diag(np.sqrt(np.arange(1, d, dtype=float)), k=1)


def _embed(op: np.ndarray, site: int, sites: int, d: int) -> np.ndarray:
    out = np.eye(1)
    for k in range(sites):
        out = np.kron(out, op if k == site else np.eye(d))
    return out


@dataclass(frozen=True)
class OscillatorChainModel:
    """Open (or periodic) chain of truncated harmonic oscillators, hbar = m = 1."""

    sites: int = 1
    truncation: int = 2
    frequency: float = 1.0
    coupling: float = 0.0
    periodic: bool = False

    def __post_init__(self):
        if int(self.sites) != self.sites or self.sites < 1:
            raise ModelError(f"sites must be a positive integer, got {self.sites!r}")
        if int(self.truncation) != self.truncation or self.truncation < 1:
            raise ModelError(f"truncation must be a positive integer, got {self.truncation!r}")
        if not self.frequency > 0:
            raise ModelError(f"frequency must be positive, got {self.frequency!r}")
        if not self.coupling >= 0:
            raise ModelError(f"coupling must be non-negative, got {self.coupling!r}")

    @property
    def dim(self) -> int:
        return self.truncation ** self.sites

    @cached_property
    def hamiltonian_matrix(self) -> np.ndarray:
        n, d, w = self.sites, self.truncation, self.frequency
        a = annihilation(d)
        number = a.T @ a
        quad = (a + a.T) / np.sqrt(2 * w)
        H = sum(_embed(w * (number + 0.5 * np.eye(d)), i, n, d) for i in range(n))
        bonds = [(i, i + 1) for i in range(n - 1)]
        if self.periodic and n > 2:
            bonds.append((n - 1, 0))
        for i, j in bonds:
            diff = _embed(quad, i, n, d) - _embed(quad, j, n, d)
            H = H + 0.5 * self.coupling * diff @ diff
        return np.asarray(H, dtype=np.complex128)

    def field_matrix(self, site: int) -> np.ndarray:
        if not 0 <= site < self.sites:
            raise ModelError(f"site {site} out of range for a {self.sites}-site chain")
        a = annihilation(self.truncation)
        return _embed((a + a.T) / np.sqrt(2), site, self.sites, self.truncation).astype(complex)


@dataclass(frozen=True)
class RandomQuditModel:
    """Seeded random Hermitian Hamiltonian ``(A + A†)/2`` on a single qudit.

    ``A`` has standard complex Gaussian entries (real and imaginary parts of
    variance 1/2). Field operators at ``site`` are independent seeded random
    Hermitian matrices of the same form, so a model offers ``sites`` distinct
    fields.
    """

    dimension: int
    seed: int = 0
    sites: int = 2

    def __post_init__(self):
        if int(self.dimension) != self.dimension or self.dimension < 1:
            raise ModelError(f"dimension must be a positive integer, got {self.dimension!r}")
        if int(self.seed) != self.seed or not 0 <= self.seed < 2**64:
            raise ModelError(f"seed must be a 64-bit unsigned integer, got {self.seed!r}")
        if int(self.sites) != self.sites or self.sites < 1:
            raise ModelError(f"sites must be a positive integer, got {self.sites!r}")

    @property
    def dim(self) -> int:
        return self.dimension

    def _hermitian(self, stream: int) -> np.ndarray:
        rng = np.random.default_rng([self.seed, stream])
        D = self.dimension
        A = (rng.standard_normal((D, D)) + 1j * rng.standard_normal((D, D))) / np.sqrt(2)
        return (A + A.conj().T) / 2

    @cached_property
    def hamiltonian_matrix(self) -> np.ndarray:
        return self._hermitian(0)

    def field_matrix(self, site: int) -> np.ndarray:
        if not 0 <= site < self.sites:
            raise ModelError(f"site {site} out of range for {self.sites} fields")
        return self._hermitian(1 + site)


Model = Union[OscillatorChainModel, RandomQuditModel]


def system_label(model: Model) -> SpaceLabel:
    return SpaceLabel("sys", model.dim)


def _on_sys(model: Model, matrix: np.ndarray) -> LabeledOperator:
    return LabeledOperator.on(system_label(model), matrix)


def hamiltonian(model: Model) -> LabeledOperator:
    return _on_sys(model, model.hamiltonian_matrix)


@lru_cache(maxsize=256)
def _spectrum(model: Model) -> tuple[np.ndarray, np.ndarray]:
    energies, vecs = np.linalg.eigh(model.hamiltonian_matrix)
    energies.flags.writeable = vecs.flags.writeable = False
    return energies, vecs


def ground_energy(model: Model) -> float:
    return float(_spectrum(model)[0][0])


def ground_state(model: Model) -> LabeledVector:
    """Lowest eigenvector, phase fixed so its largest-magnitude entry is real positive.

    A degenerate ground space triggers ``DegenerateGroundStateWarning`` and the
    first eigenvector by index is returned.
    """
    energies, vecs = _spectrum(model)
    if len(energies) > 1 and energies[1] - energies[0] < 1e-10 * max(1.0, abs(energies[0])):
        warnings.warn(
            f"ground space of {model} is degenerate (gap {energies[1] - energies[0]:.3g})",
            DegenerateGroundStateWarning,
            stacklevel=2,
        )
    v = vecs[:, 0]
    k = int(np.argmax(np.abs(v)))
    v = v * np.exp(-1j * np.angle(v[k]))
    v[k] = abs(v[k])
    v = v / np.linalg.norm(v)
    return LabeledVector((system_label(model),), v)


def evolution(model: Model, dt: float) -> LabeledOperator:
    """``exp(-i H dt)`` by spectral decomposition."""
    if not np.isfinite(dt):
        raise ModelError(f"non-finite time step {dt!r}")
    energies, vecs = _spectrum(model)
    return _on_sys(model, (vecs * np.exp(-1j * energies * dt)) @ vecs.conj().T)


def field_operator(model: Model, site: int) -> LabeledOperator:
    """Schrödinger-picture field at ``site``.

    For chains this is the quadrature ``(a + a†)/sqrt(2)``; multiply by
    ``1/sqrt(frequency)`` to get the position operator.
    """
    return _on_sys(model, model.field_matrix(site))


def schrodinger_state(model: Model, t: float) -> LabeledVector:
    """Vacuum evolved to time ``t``, dynamical phase included."""
    omega = ground_state(model)
    return LabeledVector(omega.labels, evolution(model, t).matrix @ omega.coeffs)
