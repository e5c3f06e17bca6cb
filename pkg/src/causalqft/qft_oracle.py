"""Ordinary-QFT reference correlators on a single global Hilbert space.

Nothing here touches process vectors. Time evolution is computed with
``scipy.linalg.expm`` rather than the spectral route of ``field_model``, so
agreement between the two packages is a genuine cross-check.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from . import field_model
from .field_model import Model

__all__ = [
    "ROUTE_TOL",
    "OracleError",
    "CorrelatorRequest",
    "heisenberg_two_point",
    "commutator_oracle",
    "analytic_single_oscillator",
]

ROUTE_TOL = 1e-12


class OracleError(RuntimeError):
    """The Heisenberg and Schrödinger routes disagree."""


@dataclass(frozen=True)
class CorrelatorRequest:
    model: Model
    t_x: float
    t_y: float
    site_x: int = 0
    site_y: int = 0

    def __post_init__(self):
        for site in (self.site_x, self.site_y):
            if not 0 <= site < self.model.sites:
                raise field_model.ModelError(f"site {site} out of range for {self.model}")

    def swapped(self) -> "CorrelatorRequest":
        return CorrelatorRequest(self.model, self.t_y, self.t_x, self.site_y, self.site_x)


def _vacuum(model: Model) -> np.ndarray:
    return np.linalg.eigh(model.hamiltonian_matrix)[1][:, 0]


def heisenberg_two_point(req: CorrelatorRequest) -> complex:
    """``<Ω| φ_H(t_x, x) φ_H(t_y, y) |Ω>`` computed two ways.

    Heisenberg route: ``φ_H(t) = U(t)† φ_S U(t)`` and a vacuum expectation.
    Schrödinger route: ``<Ω(t_x)| φ_S U(t_x - t_y) φ_S |Ω(t_y)>``.

    Raises
    ------
    OracleError
        If the two routes differ by more than ``ROUTE_TOL``.
    """
    H = req.model.hamiltonian_matrix
    phi_x = req.model.field_matrix(req.site_x)
    phi_y = req.model.field_matrix(req.site_y)
    omega = _vacuum(req.model)

    def U(t):
        return expm(-1j * t * H)

    ux, uy = U(req.t_x), U(req.t_y)
    heis_x = ux.conj().T @ phi_x @ ux
    heis_y = uy.conj().T @ phi_y @ uy
    heisenberg = np.vdot(omega, heis_x @ (heis_y @ omega))

    schrodinger = np.vdot(ux @ omega, phi_x @ U(req.t_x - req.t_y) @ phi_y @ (uy @ omega))

    gap = abs(heisenberg - schrodinger)
    if gap > ROUTE_TOL:
        raise OracleError(f"Heisenberg and Schrödinger routes differ by {gap:.3e} for {req}")
    return complex(heisenberg)


def commutator_oracle(req: CorrelatorRequest) -> complex:
    """``<[φ(x), φ(y)]>`` in the vacuum."""
    return heisenberg_two_point(req) - heisenberg_two_point(req.swapped())


def analytic_single_oscillator(omega: float, dt: float) -> complex:
    """Closed form ``<0| q(t) q(0) |0> = exp(-i omega dt) / 2`` for the quadrature q."""
    if not omega > 0:
        raise ValueError(f"omega must be positive, got {omega!r}")
    return 0.5 * np.exp(-1j * omega * dt)
