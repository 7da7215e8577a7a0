"""Command-line surface: coupling grammar, grid specs, subcommands,
deterministic output, and exit codes."""

import csv
import io
import json
import math

import pytest

from deltasa import PowerLogGrid, PowerSumAlpha, ScaledInverseGapsAlpha
from deltasa.cli import CliError, build_grid, main, parse_alpha


GRID = PowerLogGrid(gamma=1.0)


def run(argv, capsys):
    code = main(argv)
    out, err = capsys.readouterr()
    return code, out, err


class TestAlphaGrammar:
    def test_zero(self):
        a = parse_alpha("zero", GRID)
        assert a.alpha(5) == 0.0

    def test_scaled_form(self):
        a = parse_alpha("-0.5*(1/d_n+1/d_{n+1})", GRID)
        assert isinstance(a, ScaledInverseGapsAlpha)
        assert a.a == -0.5
        assert a.perturbation is None

    def test_scaled_form_with_perturbation(self):
        a = parse_alpha("-2*(1/d_n+1/d_{n+1})+1/n", GRID)
        assert a.a == -2.0
        assert a.perturbation is not None
        assert a.alpha(3) == pytest.approx(-2.0 * (3 + 4) + 1.0 / 3.0, rel=1e-13)

    def test_scaled_form_unit_coefficients(self):
        assert parse_alpha("(1/d_n+1/d_{n+1})", GRID).a == 1.0
        assert parse_alpha("-(1/d_n+1/d_{n+1})", GRID).a == -1.0

    @pytest.mark.parametrize(
        "text,n,value",
        [
            ("3", 9, 3.0),
            ("n", 9, 9.0),
            ("1/n", 4, 0.25),
            ("3*n^2-1/n^0.5+2", 4, 3 * 16 - 0.5 + 2),
            ("ln(n)^2", 5, math.log(5) ** 2),
            ("2*ln(n)", 5, 2 * math.log(5)),
            ("2/ln(n)", 5, 2 / math.log(5)),
            ("5/(n^2*ln(n)^3)", 4, 5 / (16 * math.log(4) ** 3)),
            ("2*n^0.5*ln(n)^2", 9, 2 * 3 * math.log(9) ** 2),
            ("-n+4", 6, -2.0),
        ],
    )
    def test_power_sum_values(self, text, n, value):
        a = parse_alpha(text, GRID)
        assert isinstance(a, PowerSumAlpha)
        assert a.alpha(n) == pytest.approx(value, rel=1e-12)

    @pytest.mark.parametrize(
        "bad", ["", "n**2", "sin(n)", "2^n", "1/d_n", "n^", "3..5", "import os"]
    )
    def test_rejected_forms(self, bad):
        with pytest.raises(CliError):
            parse_alpha(bad, GRID)

    def test_whitespace_ignored(self):
        a = parse_alpha(" -0.5 * (1/d_n + 1/d_{n+1}) + 1/n ".replace("  ", " "), GRID)
        assert a.a == -0.5


class TestGridSpecs:
    def test_constant(self):
        ns = type("NS", (), {"grid": "constant:1.5"})()
        g = build_grid(ns)
        assert g.gap(3) == 1.5

    def test_explicit_with_tail(self):
        ns = type("NS", (), {"grid": "explicit:0.5,0.25:hold"})()
        g = build_grid(ns)
        assert g.gap(9) == 0.25

    def test_powerlog_from_flags(self):
        ns = type("NS", (), {"grid": None, "gamma": 0.75, "eta": 0.25, "d1": 2.0})()
        g = build_grid(ns)
        assert isinstance(g, PowerLogGrid)
        assert g.gamma == 0.75 and g.eta == 0.25 and g.d1 == 2.0

    def test_unknown_kind(self):
        ns = type("NS", (), {"grid": "fractal:3"})()
        with pytest.raises(CliError):
            build_grid(ns)

    def test_missing_grid(self):
        ns = type("NS", (), {"grid": None, "gamma": None})()
        with pytest.raises(CliError):
            build_grid(ns)


class TestAnalyze:
    ARGS = [
        "analyze", "--gamma", "1.0",
        "--alpha=-0.5*(1/d_n+1/d_{n+1})+1/n",
        "--horizons", "10000",
    ]

    def test_reports_deficient(self, capsys):
        code, out, _ = run(self.ARGS, capsys)
        assert code == 0
        report = json.loads(out)
        assert report["schema"] == "deltasa-analyze-v1"
        assert report["verdict"]["verdict"] == "Deficient"
        assert report["verdict"]["certificate"] == "periodic-comparison"
        assert report["horizons"] == [10000]

    def test_output_is_deterministic(self, capsys):
        _, first, _ = run(self.ARGS, capsys)
        _, second, _ = run(self.ARGS, capsys)
        assert first == second
        assert "timings" not in json.loads(first)

    def test_timings_opt_in(self, capsys):
        code, out, _ = run(self.ARGS + ["--timings"], capsys)
        assert code == 0
        assert "timings" in json.loads(out)

    def test_env_horizon(self, capsys, monkeypatch):
        monkeypatch.setenv("DELTA_SPEC_HORIZON", "20000")
        code, out, _ = run(
            ["analyze", "--gamma", "1.0", "--alpha", "zero"], capsys
        )
        assert code == 0
        assert json.loads(out)["horizons"] == [10000, 20000]

    def test_flag_overrides_env(self, capsys, monkeypatch):
        monkeypatch.setenv("DELTA_SPEC_HORIZON", "20000")
        code, out, _ = run(
            ["analyze", "--gamma", "1.0", "--alpha", "zero", "--horizons", "10000"],
            capsys,
        )
        assert json.loads(out)["horizons"] == [10000]

    def test_output_file(self, capsys, tmp_path):
        target = tmp_path / "report.json"
        code, out, _ = run(self.ARGS + ["--output", str(target)], capsys)
        assert code == 0 and out == ""
        assert json.loads(target.read_text())["verdict"]["verdict"] == "Deficient"

    def test_config_error_exit_code(self, capsys):
        code, _, err = run(["analyze", "--alpha", "zero"], capsys)
        assert code == 1
        assert "error:" in err
        code, _, err = run(
            ["analyze", "--gamma", "1.0", "--alpha", "sin(n)"], capsys
        )
        assert code == 1

    def test_usage_error_exit_code(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["frobnicate"])
        assert exc.value.code == 2


class TestSweep:
    def test_single_cell(self, capsys):
        code, out, _ = run(
            [
                "sweep", "--gammas", "1.0", "--a-values=-0.5,0.5",
                "--horizons", "10000",
            ],
            capsys,
        )
        assert code == 0
        rows = list(csv.DictReader(io.StringIO(out)))
        assert [r["a"] for r in rows] == ["-0.5", "0.5"]
        assert rows[0]["verdict"] == "Deficient"
        assert rows[0]["certifying_test"] == "periodic-comparison"
        assert rows[1]["verdict"] == "SelfAdjoint"
        # delta0 at the critical coupling: 2 (a+1)^2 - 1
        assert float(rows[0]["delta0"]) == pytest.approx(-0.5, abs=1e-9)
        assert float(rows[0]["u_odd"]) == pytest.approx(math.pi, abs=1e-6)
        assert float(rows[0]["u_even"]) == pytest.approx(4 / math.pi, abs=1e-6)
        for row in rows:
            for col in ("minimal_C1", "minimal_C2"):
                assert row[col] != ""

    def test_columns_fixed(self, capsys):
        code, out, _ = run(
            ["sweep", "--gammas", "1.0", "--a-values", "0.5", "--horizons", "10000"],
            capsys,
        )
        header = out.splitlines()[0]
        assert header == (
            "gamma,eta,a,verdict,certifying_test,u_odd,u_even,delta0,"
            "minimal_C1,minimal_C2"
        )


class TestVerifyPaper:
    def test_single_check(self, capsys):
        code, out, _ = run(
            ["verify-paper", "--only", "wallis", "--horizon", "10000"], capsys
        )
        assert code == 0
        assert "[PASS]" in out
        assert "1/1 checks passed" in out

    def test_json_mode(self, capsys):
        code, out, _ = run(
            ["verify-paper", "--only", "wallis", "--horizon", "10000", "--json"],
            capsys,
        )
        assert code == 0
        report = json.loads(out)
        assert report["passed"] is True

    def test_unknown_filter_fails(self, capsys):
        code, _, err = run(
            ["verify-paper", "--only", "nonexistent", "--horizon", "10000"], capsys
        )
        assert code == 1


class TestPlotData:
    def test_curvature_samples(self, capsys):
        code, out, _ = run(
            [
                "plot-data", "--gamma", "0.6", "--quantity", "F",
                "--lo", "2", "--hi", "500", "--points", "12",
            ],
            capsys,
        )
        assert code == 0
        payload = json.loads(out)
        ns = [n for n, _ in payload["samples"]]
        assert ns == sorted(ns) and len(ns) <= 12
        assert payload["quantity"] == "F"

    def test_block_norms_need_alpha(self, capsys):
        code, _, err = run(
            ["plot-data", "--gamma", "1.0", "--quantity", "block_norms"], capsys
        )
        assert code == 1
        code, out, _ = run(
            [
                "plot-data", "--gamma", "1.0", "--quantity", "block_norms",
                "--alpha=-0.5*(1/d_n+1/d_{n+1})", "--lam", "1j", "--hi", "4096",
            ],
            capsys,
        )
        assert code == 0
        payload = json.loads(out)
        masses = [m for _, m in payload["samples"]]
        # square-summable solution: dyadic block masses decrease
        assert masses[-1] < masses[0]
