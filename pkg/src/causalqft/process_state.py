"""Process vectors over the six registers x1, x2, xdot, y1, y2, ydot.

A process vector ``|W>`` wires vacuum states, a maximally entangled pair and
the Choi vector of an evolution so that sandwiching a six-factor insertion
between ``<W|`` and ``|W>`` reproduces ordinary two-point functions. Two
contraction strategies are provided:

* ``dense`` materializes the D**6 coefficient tensor and applies the six
  insertion factors to it with one einsum (the Kronecker operator itself is
  never formed, see ``insertion_operator`` for that).
* ``factored`` keeps every branch as its list of small product factors and
  contracts each (bra branch, ket branch) pair as a closed network, O(D**3).

Wiring note: the unitary enters the branch complex-conjugated on the dotted
register, ``(conj(U) ⊗ id)|+>``. The bra side of the sandwich conjugates the
Choi factor a second time, so the contraction yields ``<Ω(t_x)|φ U φ|Ω(t_y)>``
rather than the same expression with ``conj(U)``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import field_model
from .tensor_core import (
    LabelError,
    LabeledOperator,
    LabeledVector,
    SpaceLabel,
    adjoint,
    apply,
    choi_vector,
    contract_expectation,
    contract_network,
    inner_product,
    maximally_entangled,
    operator_tensor,
    relabel_identity,
    tensor_product,
)

__all__ = [
    "REGISTER_NAMES",
    "UNITARITY_TOL",
    "CONSISTENCY_TOL",
    "NonUnitaryError",
    "ConsistencyWarning",
    "RegisterSet",
    "Branch",
    "ProcessVector",
    "InsertionQuadruple",
    "build_definite_y_to_x",
    "build_definite_x_to_y",
    "model_branches",
    "superpose",
    "insertion_factors",
    "insertion_operator",
    "evaluate",
    "cross_term",
    "two_point_forward",
    "two_point_reverse",
]

REGISTER_NAMES = ("x1", "x2", "xdot", "y1", "y2", "ydot")
UNITARITY_TOL = 1e-10
CONSISTENCY_TOL = 1e-8
STRATEGIES = ("dense", "factored")


class NonUnitaryError(ValueError):
    pass


class ConsistencyWarning(UserWarning):
    """Vacuum states and evolution do not chain into ordinary-QFT recovery."""


@dataclass(frozen=True)
class RegisterSet:
    dim: int

    def __post_init__(self):
        if int(self.dim) != self.dim or self.dim < 1:
            raise LabelError(f"register dimension must be a positive integer, got {self.dim!r}")

    def __getitem__(self, name: str) -> SpaceLabel:
        if name not in REGISTER_NAMES:
            raise KeyError(name)
        return SpaceLabel(name, self.dim)

    @property
    def labels(self) -> tuple[SpaceLabel, ...]:
        return tuple(self[n] for n in REGISTER_NAMES)


@dataclass(frozen=True)
class Branch:
    weight: complex
    factors: tuple[LabeledVector, ...]


@dataclass(frozen=True, eq=False)
class ProcessVector:
    """Dense vector over the canonical six registers plus optional product structure.

    ``branches``, when present, expands to ``vector``:
    ``vector == sum(b.weight * tensor_product(*b.factors) for b in branches)``.
    """

    registers: RegisterSet
    vector: LabeledVector
    branches: Optional[tuple[Branch, ...]] = None

    @property
    def dim(self) -> int:
        return self.registers.dim

    def expand_branches(self) -> LabeledVector:
        if self.branches is None:
            raise ValueError("process vector carries no branch metadata")
        return _dense(self.registers, self.branches)


@dataclass(frozen=True)
class InsertionQuadruple:
    chi_x: LabeledOperator
    chi_y: LabeledOperator
    psi_x: LabeledOperator
    psi_y: LabeledOperator

    @classmethod
    def from_matrices(cls, chi_x, chi_y, psi_x, psi_y) -> "InsertionQuadruple":
        ops = []
        for m in (chi_x, chi_y, psi_x, psi_y):
            m = np.asarray(m)
            ops.append(LabeledOperator.on(SpaceLabel("sys", m.shape[0]), m))
        return cls(*ops)

    @classmethod
    def identity(cls, dim: int) -> "InsertionQuadruple":
        return cls.from_matrices(*[np.eye(dim)] * 4)

    def __post_init__(self):
        for name in ("chi_x", "chi_y", "psi_x", "psi_y"):
            m = getattr(self, name).matrix
            if m.shape[0] != m.shape[1]:
                raise LabelError(f"{name} must be square, got shape {m.shape}")
        if len({getattr(self, n).matrix.shape for n in ("chi_x", "chi_y", "psi_x", "psi_y")}) != 1:
            raise LabelError("insertion operators must all be D x D for one D")

    @property
    def dim(self) -> int:
        return self.chi_x.matrix.shape[0]


def _dense(registers: RegisterSet, branches: Sequence[Branch]) -> LabeledVector:
    """Materialize the branch sum in canonical register order (one einsum per branch)."""
    letters = dict(zip(REGISTER_NAMES, "abcdef"))
    total = np.zeros((registers.dim,) * 6, dtype=np.complex128)
    for b in branches:
        subs = ",".join("".join(letters[n] for n in f.names) for f in b.factors)
        total += b.weight * np.einsum(f"{subs}->abcdef", *(f.tensor for f in b.factors))
    return LabeledVector(registers.labels, total.ravel())


def _matrix(op, dim: int, what: str) -> np.ndarray:
    m = op.matrix if isinstance(op, LabeledOperator) else np.asarray(op, dtype=np.complex128)
    if m.shape != (dim, dim):
        raise LabelError(f"{what} must be {dim}x{dim}, got {m.shape}")
    return m


def _state(v, what: str) -> np.ndarray:
    c = v.coeffs if isinstance(v, LabeledVector) else np.asarray(v, dtype=np.complex128).ravel()
    if isinstance(v, LabeledVector) and len(v.labels) != 1:
        raise LabelError(f"{what} must live on a single register")
    return c


def _check_unitary(m: np.ndarray, what: str) -> None:
    resid = np.max(np.abs(m.conj().T @ m - np.eye(len(m)))) if m.size else 0.0
    if resid > UNITARITY_TOL:
        raise NonUnitaryError(f"{what} is not unitary: max |{what}†{what} - 1| = {resid:.3e}")


def _prepare(omega_x, omega_y, unitary, what: str):
    ox, oy = _state(omega_x, "omega_x"), _state(omega_y, "omega_y")
    dim = ox.size
    if oy.size != dim:
        raise LabelError(f"omega_x and omega_y have dims {dim} and {oy.size}")
    if dim > field_model.MAX_PROCESS_DIM:
        raise LabelError(
            f"dimension {dim} exceeds the process-vector bound {field_model.MAX_PROCESS_DIM}"
        )
    m = _matrix(unitary, dim, what)
    _check_unitary(m, what)
    return RegisterSet(dim), ox, oy, m


def _consistency(overlap: complex, what: str) -> None:
    if abs(abs(overlap) - 1.0) > CONSISTENCY_TOL:
        warnings.warn(
            f"|{what}| = {abs(overlap):.12g} differs from 1; "
            "two-point functions will not match ordinary QFT",
            ConsistencyWarning,
            stacklevel=3,
        )


def _conj_choi(m: np.ndarray, a: SpaceLabel, b: SpaceLabel) -> LabeledVector:
    return choi_vector(LabeledOperator.on(a, m.conj()), a, b)


def _product_vector(registers: RegisterSet, factors: tuple[LabeledVector, ...]) -> ProcessVector:
    branches = (Branch(1.0 + 0j, factors),)
    return ProcessVector(registers, _dense(registers, branches), branches)


def build_definite_y_to_x(omega_x, omega_y, U) -> ProcessVector:
    """``|+>^{x1 xdot} |Ω(t_y)>^{y1} |Ω(t_x)>^{x2} |U>^{ydot y2}``: y precedes x.

    ``U`` should be the evolution from t_y to t_x; exact recovery of ordinary
    two-point functions needs ``|Ω(t_x)> = U |Ω(t_y)>``, and a
    ``ConsistencyWarning`` is issued when ``|<Ω(t_x)|U|Ω(t_y)>|`` is off 1.
    """
    reg, ox, oy, u = _prepare(omega_x, omega_y, U, "U")
    _consistency(np.vdot(ox, u @ oy), "<omega_x|U|omega_y>")
    factors = (
        maximally_entangled(reg["x1"], reg["xdot"]),
        LabeledVector((reg["y1"],), oy),
        LabeledVector((reg["x2"],), ox),
        _conj_choi(u, reg["ydot"], reg["y2"]),
    )
    return _product_vector(reg, factors)


def build_definite_x_to_y(omega_x, omega_y, V) -> ProcessVector:
    """``|Ω(t_x)>^{x1} |+>^{ydot y1} |V>^{x2 xdot} |Ω(t_y)>^{y2}``: x precedes y.

    ``V`` should carry x's time slice to y's, ``|Ω(t_y)> = V |Ω(t_x)>``.
    """
    reg, ox, oy, v = _prepare(omega_x, omega_y, V, "V")
    _consistency(np.vdot(oy, v @ ox), "<omega_y|V|omega_x>")
    factors = (
        LabeledVector((reg["x1"],), ox),
        maximally_entangled(reg["ydot"], reg["y1"]),
        _conj_choi(v, reg["xdot"], reg["x2"]),
        LabeledVector((reg["y2"],), oy),
    )
    return _product_vector(reg, factors)


def model_branches(model, t_x: float, t_y: float, U=None, V=None
                   ) -> tuple[ProcessVector, ProcessVector]:
    """``(W_{y->x}, W_{x->y})`` from a field model.

    ``U`` defaults to the evolution over ``t_x - t_y`` and ``V`` to its
    inverse, so both branches are consistent with the model's vacua.
    """
    ox = field_model.schrodinger_state(model, t_x)
    oy = field_model.schrodinger_state(model, t_y)
    if U is None:
        U = field_model.evolution(model, t_x - t_y)
    if V is None:
        V = field_model.evolution(model, t_y - t_x)
    return build_definite_y_to_x(ox, oy, U), build_definite_x_to_y(ox, oy, V)


def superpose(weights: Sequence[complex], branches: Sequence[ProcessVector]) -> ProcessVector:
    """Unnormalized weighted sum; product metadata is carried along when every input has it."""
    weights, branches = [complex(w) for w in weights], list(branches)
    if not branches:
        raise ValueError("superpose needs at least one branch")
    if len(weights) != len(branches):
        raise ValueError(f"{len(weights)} weights for {len(branches)} branches")
    reg = branches[0].registers
    if any(b.registers != reg for b in branches):
        raise LabelError("branches live on different register sets")
    coeffs = sum(w * b.vector.reordered(REGISTER_NAMES).coeffs
                 for w, b in zip(weights, branches))
    meta = None
    if all(b.branches is not None for b in branches):
        meta = tuple(Branch(w * sub.weight, sub.factors)
                     for w, b in zip(weights, branches) for sub in b.branches)
    return ProcessVector(reg, LabeledVector(reg.labels, coeffs), meta)


def insertion_factors(registers: RegisterSet, ins: InsertionQuadruple) -> list[LabeledOperator]:
    """The six register maps sandwiched between ``<W|`` and ``|W>``.

    chi_x: x1 -> x2, chi_y: y1 -> y2, id: xdot -> ydot,
    psi_x†: x2 -> x1, psi_y†: y2 -> y1, id: ydot -> xdot.
    """
    D = registers.dim
    if ins.dim != D:
        raise LabelError(f"insertion operators are {ins.dim}x{ins.dim}, registers have dim {D}")
    r = registers
    return [
        LabeledOperator.on(r["x1"], ins.chi_x.matrix, r["x2"]),
        LabeledOperator.on(r["y1"], ins.chi_y.matrix, r["y2"]),
        relabel_identity(r["xdot"], r["ydot"]),
        LabeledOperator.on(r["x2"], adjoint(ins.psi_x).matrix, r["x1"]),
        LabeledOperator.on(r["y2"], adjoint(ins.psi_y).matrix, r["y1"]),
        relabel_identity(r["ydot"], r["xdot"]),
    ]


def insertion_operator(registers: RegisterSet, ins: InsertionQuadruple) -> LabeledOperator:
    """Materialized D**6 x D**6 insertion operator; only sensible for tiny D."""
    return operator_tensor(insertion_factors(registers, ins))


def _pair_network(bra: Sequence[LabeledVector], ket: Sequence[LabeledVector],
                  ops: Sequence[LabeledOperator]) -> complex:
    tensors, indices = [], []
    for f in bra:
        tensors.append(f.tensor.conj())
        indices.append(["b:" + n for n in f.names])
    for f in ket:
        tensors.append(f.tensor)
        indices.append(["k:" + n for n in f.names])
    for op in ops:
        tensors.append(op.tensor)
        indices.append(["b:" + lab.name for lab in op.image]
                       + ["k:" + lab.name for lab in op.domain])
    return complex(contract_network(tensors, indices))


def _branches_of(W: ProcessVector) -> tuple[Branch, ...]:
    if W.branches is None:
        raise ValueError("factored strategy needs branch metadata; use strategy='dense'")
    return W.branches


def _check_strategy(strategy: str) -> None:
    if strategy not in STRATEGIES:
        raise ValueError(f"unknown strategy {strategy!r}, expected one of {STRATEGIES}")


def cross_term(W1: ProcessVector, W2: ProcessVector, ins: InsertionQuadruple,
               strategy: str = "dense") -> complex:
    """``<W1| O |W2>`` with O the six-factor insertion of ``ins``."""
    _check_strategy(strategy)
    if W1.registers != W2.registers:
        raise LabelError("process vectors live on different register sets")
    ops = insertion_factors(W1.registers, ins)
    if strategy == "dense":
        return inner_product(W1.vector, apply(ops, W2.vector))
    return sum(
        (np.conj(b1.weight) * b2.weight * _pair_network(b1.factors, b2.factors, ops)
         for b1 in _branches_of(W1) for b2 in _branches_of(W2)),
        0j,
    )


def evaluate(W: ProcessVector, ins: InsertionQuadruple, strategy: str = "dense") -> complex:
    """Generalized state value ``w(chi, psi) = <W| chi ⊗ chi ⊗ id ⊗ psi† ⊗ psi† ⊗ id |W>``.

    ``psi_x``/``psi_y`` are passed plain; their adjoints are inserted, so the
    value is linear in the chi slots and antilinear in the psi slots.
    """
    _check_strategy(strategy)
    if strategy == "dense":
        return contract_expectation(W.vector, insertion_factors(W.registers, ins))
    return cross_term(W, W, ins, strategy="factored")


def _identity_on(W: ProcessVector) -> LabeledOperator:
    return LabeledOperator.on(SpaceLabel("sys", W.dim), np.eye(W.dim))


def two_point_forward(W: ProcessVector, phi_x: LabeledOperator, phi_y: LabeledOperator,
                      strategy: str = "dense") -> complex:
    """``w(phi_x ⊗ phi_y, id)``; on a consistent ``W_{y->x}`` this is <φ(x)φ(y)>."""
    one = _identity_on(W)
    return evaluate(W, InsertionQuadruple(phi_x, phi_y, one, one), strategy)


def two_point_reverse(W: ProcessVector, phi_x: LabeledOperator, phi_y: LabeledOperator,
                      strategy: str = "dense") -> complex:
    """``w(id, phi_x ⊗ phi_y)`` with adjoints inserted; on ``W_{y->x}`` this is <φ(y)φ(x)>."""
    one = _identity_on(W)
    return evaluate(W, InsertionQuadruple(one, one, phi_x, phi_y), strategy)
