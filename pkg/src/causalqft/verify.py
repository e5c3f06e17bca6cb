"""Seeded property checks behind ``causalqft verify``."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Iterator

import numpy as np

from . import causal_analysis as ca
from . import field_model as fm
from . import process_state as ps
from . import qft_oracle as qo
from .config import ExperimentConfig

__all__ = [
    "CheckResult",
    "random_state",
    "random_unitary",
    "random_hermitian",
    "random_process_vector",
    "run_checks",
    "format_table",
]


@dataclass(frozen=True)
class CheckResult:
    name: str
    cases: int
    max_error: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return bool(self.max_error <= self.tolerance)


def random_state(rng: np.random.Generator, dim: int) -> np.ndarray:
    v = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return v / np.linalg.norm(v)


def random_unitary(rng: np.random.Generator, dim: int) -> np.ndarray:
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / math.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


def random_hermitian(rng: np.random.Generator, dim: int) -> np.ndarray:
    a = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    return (a + a.conj().T) / 2


def random_matrix(rng: np.random.Generator, dim: int) -> np.ndarray:
    return rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))


def random_process_vector(rng: np.random.Generator, dim: int, n_branches: int = 1
                          ) -> tuple[ps.ProcessVector, list[ps.ProcessVector], list[complex]]:
    """Random (generally inconsistent) definite branches and their superposition."""
    branches = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ps.ConsistencyWarning)
        for k in range(n_branches):
            build = ps.build_definite_y_to_x if k % 2 == 0 else ps.build_definite_x_to_y
            branches.append(build(random_state(rng, dim), random_state(rng, dim),
                                  random_unitary(rng, dim)))
    weights = [complex(*rng.standard_normal(2)) for _ in branches]
    return ps.superpose(weights, branches), branches, weights


def _op(m: np.ndarray) -> ps.LabeledOperator:
    return ps.LabeledOperator.on(ps.SpaceLabel("sys", len(m)), m)


def _dims(rng, n, max_dim):
    return [int(d) for d in rng.integers(2, max_dim + 1, size=n)]


def _oracle_recovery(cfg: ExperimentConfig, rng) -> Iterator[float]:
    for d in _dims(rng, cfg.raw["verify"]["cases"], cfg.raw["verify"]["max_dim"]):
        model = fm.RandomQuditModel(d, seed=int(rng.integers(2**63)))
        t_x, t_y = rng.uniform(-3, 3, size=2)
        W, _ = ps.model_branches(model, t_x, t_y)
        px, py = fm.field_operator(model, 0), fm.field_operator(model, 1)
        req = qo.CorrelatorRequest(model, t_x, t_y, 0, 1)
        yield abs(ps.two_point_forward(W, px, py) - qo.heisenberg_two_point(req))
        yield abs(ps.two_point_reverse(W, px, py) - qo.heisenberg_two_point(req.swapped()))


def _configured_recovery(cfg: ExperimentConfig, rng) -> Iterator[float]:
    model = cfg.model()
    W, _ = ps.model_branches(model, cfg.t_x, cfg.t_y)
    px, py = fm.field_operator(model, cfg.site_x), fm.field_operator(model, cfg.site_y)
    req = qo.CorrelatorRequest(model, cfg.t_x, cfg.t_y, cfg.site_x, cfg.site_y)
    yield abs(ps.two_point_forward(W, px, py) - qo.heisenberg_two_point(req))
    yield abs(ps.two_point_reverse(W, px, py) - qo.heisenberg_two_point(req.swapped()))
    yield abs(ca.causal_verdict(W, px, py).commutator - qo.commutator_oracle(req))


def _conjugate_symmetry(cfg: ExperimentConfig, rng) -> Iterator[float]:
    for d in _dims(rng, cfg.raw["verify"]["cases"], cfg.raw["verify"]["max_dim"]):
        W, _, _ = random_process_vector(rng, d, n_branches=int(rng.integers(1, 3)))
        px, py = _op(random_hermitian(rng, d)), _op(random_hermitian(rng, d))
        fwd, rev = ps.two_point_forward(W, px, py), ps.two_point_reverse(W, px, py)
        yield abs(rev - np.conj(fwd))
        yield abs(abs(fwd) ** 2 - abs(rev) ** 2)


def _random_insertion(rng, d) -> ps.InsertionQuadruple:
    return ps.InsertionQuadruple.from_matrices(*(random_matrix(rng, d) for _ in range(4)))


def _strategy_equivalence(cfg: ExperimentConfig, rng) -> Iterator[float]:
    for d in _dims(rng, cfg.raw["verify"]["cases"], cfg.raw["verify"]["max_dim"]):
        W, _, _ = random_process_vector(rng, d, n_branches=int(rng.integers(1, 3)))
        ins = _random_insertion(rng, d)
        yield abs(ps.evaluate(W, ins, "dense") - ps.evaluate(W, ins, "factored"))


def _sesquilinearity(cfg: ExperimentConfig, rng) -> Iterator[float]:
    for d in _dims(rng, cfg.raw["verify"]["cases"], cfg.raw["verify"]["max_dim"]):
        W, branches, weights = random_process_vector(rng, d, n_branches=2)
        ins = _random_insertion(rng, d)
        E = np.array([[ps.cross_term(a, b, ins) for b in branches] for a in branches])
        yield abs(ps.evaluate(W, ins) - ca.sesquilinear_combination(weights, E))


def _normalization(cfg: ExperimentConfig, rng) -> Iterator[float]:
    model = cfg.model()
    for W in ps.model_branches(model, cfg.t_x, cfg.t_y):
        yield abs(ca.normalization_value(W) - 1)
    for d in _dims(rng, cfg.raw["verify"]["cases"], cfg.raw["verify"]["max_dim"]):
        u = random_unitary(rng, d)
        oy = random_state(rng, d)
        yield abs(ca.normalization_value(ps.build_definite_y_to_x(u @ oy, oy, u)) - 1)
        # orthogonal to u|oy>
        ox = random_state(rng, d)
        target = u @ oy
        ox = ox - np.vdot(target, ox) * target
        ox /= np.linalg.norm(ox)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", ps.ConsistencyWarning)
            yield abs(ca.normalization_value(ps.build_definite_y_to_x(ox, oy, u)))


def _evolution_group_law(cfg: ExperimentConfig, rng) -> Iterator[float]:
    model = cfg.model()
    for s, t in rng.uniform(-5, 5, size=(cfg.raw["verify"]["cases"], 2)):
        us, ut = fm.evolution(model, s).matrix, fm.evolution(model, t).matrix
        yield float(np.max(np.abs(us @ ut - fm.evolution(model, s + t).matrix)))
        yield float(np.max(np.abs(us.conj().T @ us - np.eye(model.dim))))


CHECKS: list[tuple[str, float, Callable]] = [
    ("oracle_recovery_random_models", 1e-10, _oracle_recovery),
    ("oracle_recovery_config_model", 1e-10, _configured_recovery),
    ("conjugate_symmetry", 1e-12, _conjugate_symmetry),
    ("strategy_equivalence", 1e-11, _strategy_equivalence),
    ("sesquilinear_expansion", 1e-12, _sesquilinearity),
    ("normalization", 1e-12, _normalization),
    ("evolution_group_law", 1e-11, _evolution_group_law),
]


def run_checks(cfg: ExperimentConfig) -> list[CheckResult]:
    seeds = np.random.SeedSequence(cfg.seed).spawn(len(CHECKS))
    results = []
    for (name, tol, check), seed in zip(CHECKS, seeds):
        errors = list(check(cfg, np.random.default_rng(seed)))
        results.append(CheckResult(name, len(errors), max(errors), tol))
    return results


def format_table(results: list[CheckResult]) -> str:
    lines = [f"{'check':<32} {'cases':>5} {'max_error':>10} {'tol':>7}  status"]
    for r in results:
        lines.append(f"{r.name:<32} {r.cases:>5} {r.max_error:>10.3e} {r.tolerance:>7.0e}  "
                     f"{'PASS' if r.passed else 'FAIL'}")
    failed = sum(not r.passed for r in results)
    lines.append(f"{len(results) - failed} passed, {failed} failed")
    return "\n".join(lines) + "\n"
