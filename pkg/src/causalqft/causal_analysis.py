"""Commutators, causal verdicts and correlation-spreading reports.

The causal indicator is the commutator magnitude ``|<φ(x)φ(y)> - <φ(y)φ(x)>|``
read off a process vector. Spread reports only record numbers; whether
superposing causal orders weakens correlations is left to whoever reads them.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .process_state import (
    InsertionQuadruple,
    LabeledOperator,
    ProcessVector,
    cross_term,
    evaluate,
    superpose,
    two_point_forward,
    two_point_reverse,
)

__all__ = [
    "DEFAULT_EPSILON",
    "HERMITIAN_TOL",
    "Verdict",
    "CausalVerdict",
    "SpreadReport",
    "causal_verdict",
    "spread_report",
    "normalization_value",
    "sesquilinear_combination",
]

DEFAULT_EPSILON = 1e-9
HERMITIAN_TOL = 1e-12


class Verdict(str, enum.Enum):
    CAUSALLY_RELATED = "causally_related"
    NO_DETECTED_RELATION = "no_detected_relation"


@dataclass(frozen=True)
class CausalVerdict:
    forward: complex
    reverse: complex
    verdict: Verdict
    epsilon: float

    @property
    def commutator(self) -> complex:
        return self.forward - self.reverse

    @property
    def anticommutator(self) -> complex:
        return self.forward + self.reverse


@dataclass(frozen=True)
class SpreadReport:
    weights: tuple[complex, ...]
    branch_forward: tuple[complex, ...]
    superposed_forward: complex
    superposed_reverse: complex
    cross_terms: np.ndarray  # E[i, j] = <W_i| O_forward |W_j>
    normalization: complex
    normalization_cross_terms: np.ndarray  # N[i, j] = <W_i| O_identity |W_j>

    @property
    def branch_forward_abs(self) -> tuple[float, ...]:
        return tuple(abs(v) for v in self.branch_forward)

    @property
    def commutator(self) -> complex:
        return self.superposed_forward - self.superposed_reverse

    def consistency_residual(self) -> float:
        """Largest gap between a superposed value and its cross-term expansion."""
        return max(
            abs(self.superposed_forward
                - sesquilinear_combination(self.weights, self.cross_terms)),
            abs(self.normalization
                - sesquilinear_combination(self.weights, self.normalization_cross_terms)),
        )

    def max_off_diagonal(self) -> float:
        """Largest |cross term| between distinct branches, forward or identity insertion."""
        if len(self.weights) < 2:
            return 0.0
        off = ~np.eye(len(self.weights), dtype=bool)
        return float(max(np.abs(self.cross_terms[off]).max(),
                         np.abs(self.normalization_cross_terms[off]).max()))


def _check_hermitian(op: LabeledOperator, what: str) -> None:
    m = op.matrix
    resid = float(np.max(np.abs(m - m.conj().T))) if m.size else 0.0
    if resid > HERMITIAN_TOL:
        raise ValueError(f"{what} is not Hermitian (residual {resid:.3e})")


def causal_verdict(W: ProcessVector, phi_x: LabeledOperator, phi_y: LabeledOperator,
                   epsilon: float = DEFAULT_EPSILON, strategy: str = "dense") -> CausalVerdict:
    """Classify x, y as causally related iff the commutator exceeds ``epsilon``."""
    if not epsilon > 0:
        raise ValueError(f"epsilon must be positive, got {epsilon!r}")
    _check_hermitian(phi_x, "phi_x")
    _check_hermitian(phi_y, "phi_y")
    fwd = two_point_forward(W, phi_x, phi_y, strategy)
    rev = two_point_reverse(W, phi_x, phi_y, strategy)
    verdict = (Verdict.CAUSALLY_RELATED if abs(fwd - rev) > epsilon
               else Verdict.NO_DETECTED_RELATION)
    return CausalVerdict(fwd, rev, verdict, epsilon)


def normalization_value(W: ProcessVector, strategy: str = "dense") -> complex:
    """All-identity insertion; 1 for a consistent definite-order vector."""
    return evaluate(W, InsertionQuadruple.identity(W.dim), strategy)


def sesquilinear_combination(weights: Sequence[complex], E: np.ndarray) -> complex:
    w = np.asarray(weights, dtype=np.complex128)
    return complex(w.conj() @ np.asarray(E) @ w)


def spread_report(weights: Sequence[complex], branches: Sequence[ProcessVector],
                  phi_x: LabeledOperator, phi_y: LabeledOperator,
                  strategy: str = "dense") -> SpreadReport:
    weights = tuple(complex(w) for w in weights)
    W = superpose(weights, branches)
    one = LabeledOperator.on(phi_x.domain[0], np.eye(W.dim))
    fwd_ins = InsertionQuadruple(phi_x, phi_y, one, one)
    id_ins = InsertionQuadruple.identity(W.dim)
    E = np.array([[cross_term(bi, bj, fwd_ins, strategy) for bj in branches]
                  for bi in branches])
    N = np.array([[cross_term(bi, bj, id_ins, strategy) for bj in branches]
                  for bi in branches])
    return SpreadReport(
        weights=weights,
        branch_forward=tuple(complex(E[k, k]) for k in range(len(branches))),
        superposed_forward=two_point_forward(W, phi_x, phi_y, strategy),
        superposed_reverse=two_point_reverse(W, phi_x, phi_y, strategy),
        cross_terms=E,
        normalization=normalization_value(W, strategy),
        normalization_cross_terms=N,
    )
