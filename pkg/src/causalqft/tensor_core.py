"""Labeled finite-dimensional vectors and operators.

Every tensor factor carries a named register (``SpaceLabel``). Coefficients are
stored flat in row-major order over the ordered label list, and all alignment
between differently ordered operands is done by explicit axis permutation.
"""

from __future__ import annotations

import string
from dataclasses import dataclass, field
from math import prod
from typing import Iterable, Sequence, Union

import numpy as np

__all__ = [
    "LabelError",
    "SpaceLabel",
    "LabeledVector",
    "LabeledOperator",
    "maximally_entangled",
    "choi_vector",
    "tensor_product",
    "inner_product",
    "adjoint",
    "operator_tensor",
    "identity",
    "relabel_identity",
    "apply",
    "contract_expectation",
    "contract_network",
    "greedy_path",
]


class LabelError(ValueError):
    """Raised on duplicate, missing or dimension-inconsistent register labels."""


@dataclass(frozen=True)
class SpaceLabel:
    name: str
    dim: int

    def __post_init__(self):
        if not isinstance(self.name, str) or not self.name:
            raise LabelError(f"label name must be a non-empty string, got {self.name!r}")
        if int(self.dim) != self.dim or self.dim < 1:
            raise LabelError(f"label {self.name!r} needs a positive integer dim, got {self.dim!r}")

    def __str__(self):
        return f"{self.name}[{self.dim}]"


def _check_distinct(labels: Sequence[SpaceLabel], what: str = "labels") -> None:
    names = [lab.name for lab in labels]
    if len(set(names)) != len(names):
        dupes = sorted({n for n in names if names.count(n) > 1})
        raise LabelError(f"duplicate {what}: {dupes}")


def _check_consistent(*groups: Iterable[SpaceLabel]) -> None:
    """Equal names within one expression must carry equal dims."""
    seen: dict[str, int] = {}
    for group in groups:
        for lab in group:
            if seen.setdefault(lab.name, lab.dim) != lab.dim:
                raise LabelError(
                    f"register {lab.name!r} used with dims {seen[lab.name]} and {lab.dim}"
                )


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class LabeledVector:
    labels: tuple[SpaceLabel, ...]
    coeffs: np.ndarray = field(repr=False)

    def __post_init__(self):
        labels = tuple(self.labels)
        _check_distinct(labels)
        coeffs = np.array(self.coeffs, dtype=np.complex128).reshape(-1)
        if coeffs.size != prod(lab.dim for lab in labels):
            raise LabelError(
                f"{coeffs.size} coefficients do not fit labels "
                f"{[str(lab) for lab in labels]}"
            )
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "coeffs", _frozen(coeffs))

    @classmethod
    def from_tensor(cls, labels: Sequence[SpaceLabel], tensor) -> "LabeledVector":
        return cls(tuple(labels), np.asarray(tensor).reshape(-1))

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(lab.name for lab in self.labels)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(lab.dim for lab in self.labels)

    @property
    def tensor(self) -> np.ndarray:
        return self.coeffs.reshape(self.shape)

    def norm2(self) -> float:
        return float(np.vdot(self.coeffs, self.coeffs).real)

    def reordered(self, names: Sequence[str]) -> "LabeledVector":
        """Same vector with the stored label order changed to ``names``."""
        if sorted(names) != sorted(self.names):
            raise LabelError(f"cannot reorder {self.names} as {tuple(names)}")
        if tuple(names) == self.names:
            return self
        perm = [self.names.index(n) for n in names]
        return LabeledVector.from_tensor(
            [self.labels[p] for p in perm], np.transpose(self.tensor, perm)
        )

    def __repr__(self):
        return f"LabeledVector({', '.join(map(str, self.labels))})"


@dataclass(frozen=True, eq=False)
class LabeledOperator:
    """Matrix from the ``domain`` registers to the ``image`` registers.

    ``matrix`` has shape (prod of image dims, prod of domain dims); rows and
    columns are row-major over the respective label lists.
    """

    domain: tuple[SpaceLabel, ...]
    image: tuple[SpaceLabel, ...]
    matrix: np.ndarray = field(repr=False)

    def __post_init__(self):
        domain, image = tuple(self.domain), tuple(self.image)
        _check_distinct(domain, "domain labels")
        _check_distinct(image, "image labels")
        matrix = np.array(self.matrix, dtype=np.complex128)
        want = (prod(lab.dim for lab in image), prod(lab.dim for lab in domain))
        if matrix.shape != want:
            raise LabelError(f"matrix shape {matrix.shape} does not match labels, expected {want}")
        object.__setattr__(self, "domain", domain)
        object.__setattr__(self, "image", image)
        object.__setattr__(self, "matrix", _frozen(matrix))

    @classmethod
    def on(cls, label: SpaceLabel, matrix, image: SpaceLabel | None = None) -> "LabeledOperator":
        """Single-register operator ``label -> image`` (``image`` defaults to ``label``)."""
        return cls((label,), (image or label,), matrix)

    @property
    def tensor(self) -> np.ndarray:
        return self.matrix.reshape(
            tuple(lab.dim for lab in self.image) + tuple(lab.dim for lab in self.domain)
        )

    def __matmul__(self, other: "LabeledOperator") -> "LabeledOperator":
        """Composition ``self ∘ other``; requires ``other.image`` to match ``self.domain``."""
        if [lab.name for lab in other.image] != [lab.name for lab in self.domain]:
            raise LabelError("composition needs other.image == self.domain (in order)")
        _check_consistent(other.image, self.domain)
        return LabeledOperator(other.domain, self.image, self.matrix @ other.matrix)

    def __add__(self, other: "LabeledOperator") -> "LabeledOperator":
        if (self.domain, self.image) != (other.domain, other.image):
            raise LabelError("operators with different labels cannot be added")
        return LabeledOperator(self.domain, self.image, self.matrix + other.matrix)

    def __mul__(self, scalar: complex) -> "LabeledOperator":
        return LabeledOperator(self.domain, self.image, scalar * self.matrix)

    __rmul__ = __mul__

    def __repr__(self):
        dom = ",".join(lab.name for lab in self.domain)
        img = ",".join(lab.name for lab in self.image)
        return f"LabeledOperator({dom} -> {img})"


def identity(labels: Sequence[SpaceLabel]) -> LabeledOperator:
    labels = tuple(labels)
    n = prod(lab.dim for lab in labels)
    return LabeledOperator(labels, labels, np.eye(n))


def relabel_identity(domain: SpaceLabel, image: SpaceLabel) -> LabeledOperator:
    """The wire ``id_domain^image`` moving a register to a new name."""
    if domain.dim != image.dim:
        raise LabelError(f"cannot relabel {domain} as {image}")
    return LabeledOperator.on(domain, np.eye(domain.dim), image)


def maximally_entangled(a: SpaceLabel, b: SpaceLabel) -> LabeledVector:
    """Unnormalized ``sum_i |i>_a |i>_b``."""
    if a.name == b.name:
        raise LabelError(f"duplicate label name {a.name!r}")
    if a.dim != b.dim:
        raise LabelError(f"dimension mismatch: {a} vs {b}")
    return LabeledVector((a, b), np.eye(a.dim).reshape(-1))


def choi_vector(U: LabeledOperator, a: SpaceLabel, b: SpaceLabel) -> LabeledVector:
    """``(U ⊗ id_b)|+>^{ab}``; component ``(l, m)`` equals ``U[l, m]``."""
    if U.matrix.shape != (a.dim, a.dim) or len(U.domain) != 1 or len(U.image) != 1:
        raise LabelError(f"choi_vector needs a single-register {a.dim}x{a.dim} operator")
    plus = maximally_entangled(a, b)
    return LabeledVector((a, b), (U.matrix @ plus.tensor).reshape(-1))


def tensor_product(u: LabeledVector, v: LabeledVector) -> LabeledVector:
    clash = set(u.names) & set(v.names)
    if clash:
        raise LabelError(f"duplicate label name(s) {sorted(clash)}")
    return LabeledVector(u.labels + v.labels, np.outer(u.coeffs, v.coeffs).reshape(-1))


def inner_product(u: LabeledVector, v: LabeledVector) -> complex:
    """``<u|v>``, antilinear in ``u``; ``v`` is aligned to ``u``'s label order first."""
    if sorted(u.names) != sorted(v.names):
        raise LabelError(f"label sets differ: {u.names} vs {v.names}")
    _check_consistent(u.labels, v.labels)
    return complex(np.vdot(u.coeffs, v.reordered(u.names).coeffs))


def adjoint(O: LabeledOperator) -> LabeledOperator:
    return LabeledOperator(O.image, O.domain, O.matrix.conj().T)


def operator_tensor(ops: Sequence[LabeledOperator]) -> LabeledOperator:
    """Kronecker product of ``ops`` in the concatenated label order."""
    ops = list(ops)
    domain = tuple(lab for op in ops for lab in op.domain)
    image = tuple(lab for op in ops for lab in op.image)
    _check_distinct(domain, "domain labels")
    _check_distinct(image, "image labels")
    matrix = np.ones((1, 1), dtype=np.complex128)
    for op in ops:
        matrix = np.kron(matrix, op.matrix)
    return LabeledOperator(domain, image, matrix)


OperatorLike = Union[LabeledOperator, Sequence[LabeledOperator]]


def _as_factors(O: OperatorLike) -> list[LabeledOperator]:
    if isinstance(O, LabeledOperator):
        return [O]
    factors = list(O)
    _check_distinct([lab for op in factors for lab in op.domain], "domain labels")
    _check_distinct([lab for op in factors for lab in op.image], "image labels")
    return factors


def apply(O: OperatorLike, v: LabeledVector) -> LabeledVector:
    """Apply ``O`` to the registers of ``v`` named in its domain.

    ``O`` may also be a sequence of operators with disjoint domains and images;
    it then acts as their tensor product without the Kronecker matrix ever
    being formed. Registers of ``v`` outside the domain pass through
    untouched. When domain and image have equal length, image labels take
    the positions of the domain labels; otherwise they are placed first.
    """
    factors = _as_factors(O)
    domain = [lab for op in factors for lab in op.domain]
    image = [lab for op in factors for lab in op.image]
    missing = [lab.name for lab in domain if lab.name not in v.names]
    if missing:
        raise LabelError(f"vector has no register(s) {missing}")
    _check_consistent(domain, v.labels)
    dom_names = {lab.name for lab in domain}
    rest = [lab for lab in v.labels if lab.name not in dom_names]
    _check_distinct(image + rest, "labels after apply")

    letters = iter(string.ascii_letters)
    sym = {lab.name: next(letters) for lab in v.labels}
    out_sym = {lab.name: next(letters) for lab in image}
    operands, subs = [], []
    for op in factors:
        operands.append(op.tensor)
        subs.append("".join(out_sym[lab.name] for lab in op.image)
                    + "".join(sym[lab.name] for lab in op.domain))
    operands.append(v.tensor)
    subs.append("".join(sym[n] for n in v.names))

    # (label, comes-from-image) pairs in output order
    if len(domain) == len(image):
        swap = {d.name: i for d, i in zip(domain, image)}
        placed = [(swap[lab.name], True) if lab.name in swap else (lab, False)
                  for lab in v.labels]
    else:
        placed = [(lab, True) for lab in image] + [(lab, False) for lab in rest]
    out = "".join(out_sym[lab.name] if fresh else sym[lab.name] for lab, fresh in placed)
    out_labels = [lab for lab, _ in placed]
    result = np.einsum(",".join(subs) + "->" + out, *operands, optimize=True)
    return LabeledVector.from_tensor(out_labels, result)


def contract_expectation(W: LabeledVector, O: OperatorLike) -> complex:
    """``<W| O |W>`` for an operator that permutes W's own register set."""
    factors = _as_factors(O)
    names = set(W.names)
    dom = {lab.name for op in factors for lab in op.domain}
    img = {lab.name for op in factors for lab in op.image}
    if dom != names or img != names:
        raise LabelError(
            f"operator must map {sorted(names)} onto itself, got {sorted(dom)} -> {sorted(img)}"
        )
    return inner_product(W, apply(factors, W))


# -- tensor networks ---------------------------------------------------------

def greedy_path(index_sets: Sequence[Sequence[str]], sizes: dict[str, int],
                keep: Sequence[str] = ()) -> list[tuple[int, int]]:
    """Pairwise contraction order minimizing each intermediate's size.

    Pairs sharing an index are preferred over outer products; ties go to the
    lowest positions so the order is deterministic. Positions refer to the
    working list, where contracted pairs are removed and their result is
    appended.
    """
    work = [frozenset(s) for s in index_sets]
    keep = frozenset(keep)
    path = []
    while len(work) > 1:
        best = None
        for i in range(len(work)):
            for j in range(i + 1, len(work)):
                shared = work[i] & work[j]
                others = keep.union(*(work[k] for k in range(len(work)) if k not in (i, j)))
                out = (work[i] | work[j]) & others | (work[i] ^ work[j])
                cost = (not shared, prod(sizes[x] for x in out))
                if best is None or cost < best[0]:
                    best = (cost, i, j, out)
        _, i, j, out = best
        path.append((i, j))
        work = [w for k, w in enumerate(work) if k not in (i, j)] + [frozenset(out)]
    return path


def contract_network(tensors: Sequence[np.ndarray], indices: Sequence[Sequence[str]],
                     output: Sequence[str] = ()) -> np.ndarray:
    """Contract a network of dense tensors pairwise along a greedy path.

    ``indices[k]`` names the axes of ``tensors[k]``. An index shared by two
    tensors is summed; indices in ``output`` are kept in that order.
    """
    tensors = [np.asarray(t) for t in tensors]
    indices = [list(ix) for ix in indices]
    sizes: dict[str, int] = {}
    for t, ix in zip(tensors, indices):
        if t.ndim != len(ix):
            raise LabelError(f"tensor of rank {t.ndim} given indices {ix}")
        for name, n in zip(ix, t.shape):
            if sizes.setdefault(name, n) != n:
                raise LabelError(f"index {name!r} has inconsistent sizes")
    letters = iter(string.ascii_letters)
    sym = {name: next(letters) for name in sizes}

    work = list(zip(tensors, indices))
    for i, j in greedy_path([ix for _, ix in work], sizes, output):
        (a, ia), (b, ib) = work[i], work[j]
        rest = [w for k, w in enumerate(work) if k not in (i, j)]
        needed = set(output).union(*(ix for _, ix in rest))
        out = [x for x in dict.fromkeys(ia + ib) if x in needed or (x in ia) != (x in ib)]
        spec = "".join(sym[x] for x in ia) + "," + "".join(sym[x] for x in ib)
        c = np.einsum(spec + "->" + "".join(sym[x] for x in out), a, b)
        work = rest + [(c, out)]
    (result, final), = work
    return np.einsum("".join(sym[x] for x in final) + "->" + "".join(sym[x] for x in output),
                     result)
