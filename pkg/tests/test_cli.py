import csv
import io
import json
import math
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from causalqft import cli
from causalqft.config import ConfigError, load_config

GOLDEN = Path(__file__).parent / "golden"


def run(argv, capsys):
    code = cli.main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def parse(text):
    lines = text.splitlines()
    assert lines[0].startswith("# causalqft ")
    return list(csv.DictReader(io.StringIO("\n".join(lines[1:]))))


def write_config(tmp_path, data, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(data))
    return str(p)


def test_fmt():
    assert cli.fmt(0.1) == "0.10000000000000001"
    assert cli.fmt(float("nan")) == "nan"
    assert cli.fmt("ok") == "ok"
    assert float(cli.fmt(math.pi)) == math.pi


class TestVerify:
    def test_passes(self, capsys):
        code, out, _ = run(["verify"], capsys)
        assert code == 0
        assert out.rstrip().endswith("7 passed, 0 failed")
        assert "FAIL" not in out

    def test_small_config(self, tmp_path, capsys):
        cfg = write_config(tmp_path, {"verify": {"cases": 3, "max_dim": 3}})
        code, out, _ = run(["verify", "--config", cfg, "--seed", "9"], capsys)
        assert code == 0 and "seed=9" in out

    def test_seed_reproducible(self, capsys):
        a = run(["verify", "--seed", "42"], capsys)
        b = run(["verify", "--seed", "42"], capsys)
        assert a == b


class TestConfigErrors:
    def test_non_unitary_override(self, tmp_path, capsys):
        bad = [[[1, 0], [0, 0]], [[0, 0], [1.001, 0]]]
        cfg = write_config(tmp_path, {"model": {"kind": "chain", "truncation": 2},
                                      "unitaries": {"U": bad}})
        code, out, err = run(["correlate", "--config", cfg], capsys)
        assert code == 2
        assert "not unitary" in err and out == ""

    def test_unknown_key(self, tmp_path, capsys):
        cfg = write_config(tmp_path, {"modle": {}})
        code, _, err = run(["correlate", "--config", cfg], capsys)
        assert code == 2 and "config error" in err

    def test_dimension_bound(self, tmp_path, capsys):
        cfg = write_config(tmp_path, {"model": {"kind": "chain", "sites": 2, "truncation": 5}})
        assert run(["correlate", "--config", cfg], capsys)[0] == 2

    def test_site_out_of_range(self, tmp_path, capsys):
        cfg = write_config(tmp_path, {"sites": {"x": 1}})
        assert run(["correlate", "--config", cfg], capsys)[0] == 2

    def test_missing_file(self, tmp_path, capsys):
        assert run(["correlate", "--config", str(tmp_path / "nope.json")], capsys)[0] == 2

    def test_malformed_json(self, tmp_path, capsys):
        p = tmp_path / "x.json"
        p.write_text("{not json")
        assert run(["verify", "--config", str(p)], capsys)[0] == 2

    def test_bad_usage(self, capsys):
        assert run(["frobnicate"], capsys)[0] == 2
        assert run([], capsys)[0] == 2
        assert run(["correlate", "--strategy", "fast"], capsys)[0] == 2

    def test_load_config_defaults(self):
        cfg = load_config()
        assert cfg.t_x == 1.0 and cfg.strategy == "both"
        assert cfg.model().dim == 4
        with pytest.raises(ConfigError):
            load_config(seed=-1)

    def test_digest_tracks_content(self):
        assert load_config().digest() == load_config().digest()
        assert load_config().digest() != load_config(seed=1).digest()


class TestCorrelate:
    def test_default_rows(self, capsys):
        code, out, _ = run(["correlate"], capsys)
        assert code == 0
        rows = parse(out)
        assert len(rows) == 33
        assert list(rows[0]) == cli.CORRELATE_HEADER
        for r in rows:
            dt = float(r["dt"])
            fwd = complex(float(r["re_forward"]), float(r["im_forward"]))
            assert fwd == pytest.approx(0.5 * np.exp(-1j * dt), abs=1e-12)
            assert float(r["oracle_abs_error"]) < 1e-10
            assert float(r["im_commutator"]) == pytest.approx(-math.sin(dt), abs=1e-12)
        assert float(rows[0]["re_commutator"]) == pytest.approx(0, abs=1e-15)
        assert float(rows[0]["im_commutator"]) == pytest.approx(0, abs=1e-15)

    def test_quarter_period_row(self, tmp_path, capsys):
        cfg = write_config(tmp_path, {"sweep": {"dt": {"start": math.pi / 2, "stop": 0,
                                                       "points": 1}}})
        rows = parse(run(["correlate", "--config", cfg], capsys)[1])
        (r,) = rows
        assert float(r["im_forward"]) == pytest.approx(-0.5, abs=1e-12)
        assert float(r["im_commutator"]) == pytest.approx(-1, abs=1e-12)

    def test_x_to_y_branch_oracle(self, tmp_path, capsys):
        cfg = write_config(tmp_path, {
            "model": {"kind": "random_qudit", "dimension": 5, "seed": 3},
            "sites": {"x": 0, "y": 1},
            "branch": {"kind": "x_to_y"},
            "sweep": {"dt": {"start": -2, "stop": 2, "points": 5}}})
        code, out, _ = run(["correlate", "--config", cfg], capsys)
        assert code == 0
        assert all(float(r["oracle_abs_error"]) < 1e-10 for r in parse(out))

    def test_superposition_has_no_oracle(self, tmp_path, capsys):
        cfg = write_config(tmp_path, {"branch": {"kind": "superposition",
                                                 "weights": [[0.6, 0], [0, 0.8]]}})
        rows = parse(run(["correlate", "--config", cfg], capsys)[1])
        assert all(r["oracle_abs_error"] == "nan" for r in rows)

    def test_deterministic_bytes(self, tmp_path, capsys):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        assert cli.main(["correlate", "--seed", "42", "--out", str(a)]) == 0
        assert cli.main(["correlate", "--seed", "42", "--out", str(b)]) == 0
        assert a.read_bytes() == b.read_bytes()

    @pytest.mark.parametrize("strategy", ["dense", "factored"])
    def test_single_strategy_matches_both(self, strategy, capsys):
        rows_both = parse(run(["correlate"], capsys)[1])
        rows_one = parse(run(["correlate", "--strategy", strategy], capsys)[1])
        for a, b in zip(rows_both, rows_one):
            assert float(a["re_forward"]) == pytest.approx(float(b["re_forward"]), abs=1e-12)

    def test_strategy_disagreement_exit_1(self, monkeypatch, capsys):
        real = cli.ps.two_point_forward

        def skewed(W, px, py, strategy="dense"):
            return real(W, px, py, strategy) + (1e-6 if strategy == "factored" else 0)

        monkeypatch.setattr(cli.ps, "two_point_forward", skewed)
        code, out, err = run(["correlate"], capsys)
        assert code == 1 and "disagree" in err


class TestSuperpose:
    def test_golden(self, capsys):
        code, out, _ = run(["superpose", "--config", str(GOLDEN / "superpose_n1.json")], capsys)
        assert code == 0
        golden = (GOLDEN / "superpose_n1.csv").read_text()
        assert out.splitlines()[:2] == golden.splitlines()[:2]
        got, want = parse(out), parse(golden)
        assert len(got) == len(want)
        for g, w in zip(got, want):
            for key in cli.SUPERPOSE_HEADER:
                assert float(g[key]) == pytest.approx(float(w[key]), abs=1e-12), key

    def test_rows(self, capsys):
        rows = parse(run(["superpose"], capsys)[1])
        first, mid, last = rows[0], rows[len(rows) // 2], rows[-1]
        # theta=0 is pure x->y, theta=pi/2 pure y->x
        for r in (first, last):
            assert float(r["abs_forward_superposed"]) == pytest.approx(0.5, abs=1e-12)
            assert float(r["re_normalization"]) == pytest.approx(1, abs=1e-12)
        assert float(mid["theta"]) == pytest.approx(math.pi / 4)
        assert float(mid["abs_forward_superposed"]) < 0.5
        for r in rows:
            assert float(r["spread_residual"]) <= 1e-12
            assert abs(complex(float(r["re_cross_normalization"]),
                               float(r["im_cross_normalization"]))) > 0.1

    def test_deterministic_bytes(self, capsys):
        assert run(["superpose"], capsys) == run(["superpose"], capsys)


class TestBench:
    def test_small(self, tmp_path, capsys):
        cfg = write_config(tmp_path, {"bench": {"dims": [2, 3], "repeats": 1}})
        code, out, _ = run(["bench", "--config", cfg], capsys)
        assert code == 0
        rows = parse(out)
        assert [r["status"] for r in rows] == ["ok", "ok"]
        assert all(float(r["abs_diff"]) <= 1e-11 for r in rows)

    def test_memory_budget_skips_dense(self, tmp_path, capsys):
        cfg = write_config(tmp_path, {"bench": {"dims": [2, 6], "repeats": 1,
                                                "memory_budget_mb": 1}})
        rows = parse(run(["bench", "--config", cfg], capsys)[1])
        assert [r["status"] for r in rows] == ["ok", "dense_skipped"]
        assert rows[1]["dense_seconds"] == "nan"
        assert float(rows[1]["factored_seconds"]) > 0


def test_module_entry_point(tmp_path):
    out = tmp_path / "o.csv"
    proc = subprocess.run([sys.executable, "-m", "causalqft", "correlate", "--strategy", "dense",
                           "--out", str(out)], capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert out.read_text().startswith("# causalqft ")


def test_version(capsys):
    with pytest.raises(SystemExit):
        cli.build_parser().parse_args(["--version"])
    assert "causalqft" in capsys.readouterr().out


def test_top_level_array_config(tmp_path, capsys):
    p = tmp_path / "a.json"
    p.write_text("[1, 2]")
    code, _, err = run(["verify", "--config", str(p)], capsys)
    assert code == 2 and "JSON object" in err
