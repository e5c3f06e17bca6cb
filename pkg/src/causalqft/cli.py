"""Command-line experiment runner: ``causalqft {verify,correlate,superpose,bench}``.

Exit codes: 0 success, 1 failed check or value disagreement, 2 usage or
config error. Every CSV starts with a ``#`` comment line naming the engine
version and the SHA-256 of the effective config; floats are written with 17
significant digits so identical inputs give byte-identical files.
"""

from __future__ import annotations

import argparse
import csv
import io
import math
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from . import __version__
from . import causal_analysis as ca
from . import field_model as fm
from . import process_state as ps
from . import qft_oracle as qo
from .config import ConfigError, ExperimentConfig, load_config
from .verify import format_table, random_process_vector, random_matrix, run_checks

__all__ = ["main", "cmd_verify", "cmd_correlate", "cmd_superpose", "cmd_bench", "fmt"]

STRATEGY_TOL = 1e-11


class CheckFailure(RuntimeError):
    pass


def fmt(x: float) -> str:
    if isinstance(x, str):
        return x
    if math.isnan(x):
        return "nan"
    return format(float(x), ".17g")


def _csv_text(cfg: ExperimentConfig, command: str, header: Sequence[str],
              rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    buf.write(f"# causalqft {__version__} command={command} config_sha256={cfg.digest()}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt(v) for v in row])
    return buf.getvalue()


def _emit(text: str, out: Optional[str]) -> None:
    if out:
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _sweep(fn: Callable, points: Sequence) -> list:
    """Evaluate ``fn`` over ``points`` concurrently; results keep grid order."""
    with ThreadPoolExecutor(max_workers=min(len(points), os.cpu_count() or 1) or 1) as pool:
        return list(pool.map(fn, points))


def _insertions(cfg: ExperimentConfig, model) -> tuple[ps.LabeledOperator, ps.LabeledOperator]:
    ins = cfg.raw["insertion"]
    one = ps.LabeledOperator.on(fm.system_label(model), np.eye(model.dim))
    phi_x = fm.field_operator(model, cfg.site_x) if ins["phi_x"] == "field" else one
    phi_y = fm.field_operator(model, cfg.site_y) if ins["phi_y"] == "field" else one
    return phi_x, phi_y


def _branches(cfg: ExperimentConfig, model, t_x: float, t_y: float):
    return ps.model_branches(model, t_x, t_y, U=cfg.unitary("U"), V=cfg.unitary("V"))


def _strategies(cfg: ExperimentConfig) -> list[str]:
    return ["dense", "factored"] if cfg.strategy == "both" else [cfg.strategy]


def _agreeing(values: Sequence[complex], what: str) -> complex:
    spread = max(abs(v - values[0]) for v in values)
    if spread > STRATEGY_TOL:
        raise CheckFailure(f"dense and factored {what} disagree by {spread:.3e}")
    return values[0]


# -- subcommands -------------------------------------------------------------

def cmd_verify(cfg: ExperimentConfig) -> tuple[int, str]:
    """Run the seeded property suite and print a per-check table."""
    results = run_checks(cfg)
    header = (f"# causalqft {__version__} command=verify seed={cfg.seed} "
              f"config_sha256={cfg.digest()}\n")
    return (0 if all(r.passed for r in results) else 1), header + format_table(results)


CORRELATE_HEADER = ["dt", "re_forward", "im_forward", "re_reverse", "im_reverse",
                    "re_commutator", "im_commutator", "oracle_abs_error"]


def _correlate_row(cfg: ExperimentConfig, model, dt: float) -> list:
    t_y = cfg.t_y
    t_x = t_y + dt
    W_yx, W_xy = _branches(cfg, model, t_x, t_y)
    W = {"y_to_x": W_yx, "x_to_y": W_xy}.get(cfg.branch_kind)
    if W is None:
        W = ps.superpose(cfg.weights, [W_xy, W_yx])
    phi_x, phi_y = _insertions(cfg, model)
    fwd = _agreeing([ps.two_point_forward(W, phi_x, phi_y, s) for s in _strategies(cfg)],
                    "forward values")
    rev = _agreeing([ps.two_point_reverse(W, phi_x, phi_y, s) for s in _strategies(cfg)],
                    "reverse values")
    err = float("nan")
    if cfg.branch_kind != "superposition" and cfg.unitary("U") is None \
            and cfg.unitary("V") is None and cfg.raw["insertion"] == {"phi_x": "field",
                                                                      "phi_y": "field"}:
        req = qo.CorrelatorRequest(model, t_x, t_y, cfg.site_x, cfg.site_y)
        xy, yx = qo.heisenberg_two_point(req), qo.heisenberg_two_point(req.swapped())
        # W_{x->y} runs the same sandwich with the time order mirrored
        if cfg.branch_kind == "x_to_y":
            xy, yx = yx, xy
        err = max(abs(fwd - xy), abs(rev - yx))
    com = fwd - rev
    return [dt, fwd.real, fwd.imag, rev.real, rev.imag, com.real, com.imag, err]


def cmd_correlate(cfg: ExperimentConfig) -> tuple[int, str]:
    """Sweep t_x - t_y and tabulate forward/reverse two-points and commutators."""
    model = cfg.model()
    rows = _sweep(lambda dt: _correlate_row(cfg, model, float(dt)), cfg.grid("dt"))
    return 0, _csv_text(cfg, "correlate", CORRELATE_HEADER, rows)


SUPERPOSE_HEADER = ["theta", "abs_forward_x_to_y", "abs_forward_y_to_x",
                    "abs_forward_superposed", "abs_commutator", "re_normalization",
                    "im_normalization", "re_cross_forward", "im_cross_forward",
                    "re_cross_normalization", "im_cross_normalization", "spread_residual"]


def _superpose_row(cfg: ExperimentConfig, model, W_yx, W_xy, theta: float) -> list:
    phi_x, phi_y = _insertions(cfg, model)
    weights = (math.cos(theta), math.sin(theta))
    reports = [ca.spread_report(weights, [W_xy, W_yx], phi_x, phi_y, s)
               for s in _strategies(cfg)]
    for what in ("superposed_forward", "superposed_reverse", "normalization"):
        _agreeing([getattr(r, what) for r in reports], what)
    rep = reports[0]
    return [theta, abs(rep.branch_forward[0]), abs(rep.branch_forward[1]),
            abs(rep.superposed_forward), abs(rep.commutator), rep.normalization.real,
            rep.normalization.imag, rep.cross_terms[0, 1].real, rep.cross_terms[0, 1].imag,
            rep.normalization_cross_terms[0, 1].real, rep.normalization_cross_terms[0, 1].imag,
            rep.consistency_residual()]


def cmd_superpose(cfg: ExperimentConfig) -> tuple[int, str]:
    """Sweep the mixing angle between the two causal orders."""
    model = cfg.model()
    W_yx, W_xy = _branches(cfg, model, cfg.t_x, cfg.t_y)
    rows = _sweep(lambda th: _superpose_row(cfg, model, W_yx, W_xy, float(th)),
                  cfg.grid("theta"))
    return 0, _csv_text(cfg, "superpose", SUPERPOSE_HEADER, rows)


BENCH_HEADER = ["dim", "dense_seconds", "factored_seconds", "speedup", "abs_diff", "status"]

# complex128 copies of the D**6 tensor alive during one dense evaluation
_DENSE_COPIES = 4


def _best_time(fn: Callable[[], complex], repeats: int) -> tuple[float, complex]:
    best, value = math.inf, None
    for _ in range(repeats):
        start = time.perf_counter()
        value = fn()
        best = min(best, time.perf_counter() - start)
    return best, value


def cmd_bench(cfg: ExperimentConfig) -> tuple[int, str]:
    """Time dense against factored evaluation over a dimension grid."""
    bench = cfg.raw["bench"]
    rng = np.random.default_rng(cfg.seed)
    rows, code = [], 0
    for d in bench["dims"]:
        W, _, _ = random_process_vector(rng, d, n_branches=2)
        ins = ps.InsertionQuadruple.from_matrices(*(random_matrix(rng, d) for _ in range(4)))
        t_fac, v_fac = _best_time(lambda: ps.evaluate(W, ins, "factored"), bench["repeats"])
        mem_mb = _DENSE_COPIES * 16 * d ** 6 / 2**20
        if mem_mb > bench["memory_budget_mb"]:
            rows.append([d, float("nan"), t_fac, float("nan"), float("nan"), "dense_skipped"])
            continue
        t_den, v_den = _best_time(lambda: ps.evaluate(W, ins, "dense"), bench["repeats"])
        diff = abs(v_den - v_fac)
        status = "ok" if diff <= STRATEGY_TOL else "MISMATCH"
        if status != "ok":
            code = 1
        rows.append([d, t_den, t_fac, t_den / t_fac, diff, status])
    return code, _csv_text(cfg, "bench", BENCH_HEADER, rows)


COMMANDS = {
    "verify": cmd_verify,
    "correlate": cmd_correlate,
    "superpose": cmd_superpose,
    "bench": cmd_bench,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="causalqft",
        description="Process-vector correlators with indefinite causal order.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in COMMANDS.items():
        p = sub.add_parser(name, help=fn.__doc__ or name)
        p.add_argument("--config", metavar="PATH", help="JSON experiment file")
        p.add_argument("--seed", type=int, help="64-bit seed (overrides the config)")
        p.add_argument("--strategy", choices=["dense", "factored", "both"])
        p.add_argument("--out", metavar="PATH", help="write the report here instead of stdout")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0) and 2
    try:
        cfg = load_config(args.config, seed=args.seed, strategy=args.strategy, output=args.out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    try:
        code, text = COMMANDS[args.command](cfg)
    except CheckFailure as exc:
        print(f"check failed: {exc}", file=sys.stderr)
        return 1
    except (ps.NonUnitaryError, fm.ModelError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    _emit(text, cfg.output)
    return code


def main_entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    main_entry()
