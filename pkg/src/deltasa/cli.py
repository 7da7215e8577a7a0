"""Command-line interface.

Subcommands:
  analyze      decide SelfAdjoint / Deficient / Inconclusive for one
               (grid, coupling) pair and emit a JSON report
  sweep        scan coupling strengths a over one or more gap exponents
               and emit a CSV table
  verify-paper run the ten-check reproduction battery
  plot-data    emit (n, value) samples of diagnostic quantities as JSON

Output is byte-deterministic for fixed inputs: JSON is sorted-key with
two-space indent, floats go through repr, and wall-clock timings are
omitted unless --timings is passed.  The horizon ladder comes from
--horizons when given, else from the DELTA_SPEC_HORIZON environment
variable, else defaults to 10^4, 10^5, 10^6.

The coupling mini-language deliberately avoids a general expression
evaluator.  Accepted forms (whitespace ignored):

  zero
  a*(1/d_n+1/d_{n+1})            optionally followed by +/- power-sum terms
  power-sum terms joined by +/-, each one of
      c | c*n^p | c/n^p | n^p | 1/n^p
      c*ln(n)^q | c/ln(n)^q | ln(n)^q
      c*n^p*ln(n)^q | c/(n^p*ln(n)^q)

Examples: "-2*(1/d_n+1/d_{n+1})+1/n", "3*n^2-1/n^0.5", "zero".
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import re
import sys
import time
from typing import Optional

import numpy as np

from .criteria import (
    F,
    check_condition_B,
    select_G,
    test_bound_II,
    test_bound_III,
)
from .deficiency import (
    VerdictConfig,
    deficiency_verdict,
    floquet_discriminant,
    l2_probe,
    solve_recurrence,
)
from .grid import ConstantGrid, ExplicitGrid, GridError, GridSequence, PowerLogGrid
from .jacobi import (
    AlphaSequence,
    JacobiOperator,
    PowerSumAlpha,
    ScaledInverseGapsAlpha,
    TildeSequence,
    rho_block,
)
from .verify import run_battery

__all__ = ["main", "parse_alpha", "build_grid"]

_DEFAULT_LADDER = (10**4, 10**5, 10**6)


class CliError(Exception):
    """Configuration problem the user can fix; maps to exit code 1."""


# ---------------------------------------------------------------------------
# coupling mini-language

_NUM = r"[+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?"
_SCALED = re.compile(
    rf"^(?P<coef>{_NUM}|[+-]?)\*?\(1/d_n\+1/d_\{{n\+1\}}\)(?P<rest>[+-].*)?$"
)
_TERM = re.compile(
    rf"^(?P<sign>[+-]?)"
    rf"(?:(?P<coef>{_NUM})(?P<op>[*/])?)?"
    rf"(?P<body>"
    rf"\(?n(?:\^(?P<p>{_NUM}))?(?:\*ln\(n\)(?:\^(?P<q>{_NUM}))?)?\)?"
    rf"|ln\(n\)(?:\^(?P<q2>{_NUM}))?"
    rf")?$"
)


def _split_terms(text: str) -> list[str]:
    """Split on top-level + and - (every sign starts a new term)."""
    terms = []
    cur = ""
    for i, ch in enumerate(text):
        if ch in "+-" and i > 0 and text[i - 1] not in "eE^*/(+-":
            terms.append(cur)
            cur = ch
        else:
            cur += ch
    terms.append(cur)
    return [t for t in terms if t]


def _parse_power_sum(text: str) -> tuple[tuple[float, float, float], ...]:
    terms = []
    for raw in _split_terms(text):
        m = _TERM.match(raw)
        if not m or (m.group("coef") is None and m.group("body") is None):
            raise CliError(f"cannot parse coupling term {raw!r}")
        sign = -1.0 if m.group("sign") == "-" else 1.0
        coef = float(m.group("coef")) if m.group("coef") else 1.0
        body = m.group("body")
        if body is None:
            terms.append((sign * coef, 0.0, 0.0))
            continue
        invert = m.group("op") == "/"
        if m.group("coef") and not m.group("op"):
            raise CliError(f"missing * or / between coefficient and n in {raw!r}")
        if body.startswith("ln"):
            p = 0.0
            q = float(m.group("q2")) if m.group("q2") else 1.0
        else:
            p = float(m.group("p")) if m.group("p") else 1.0
            q = float(m.group("q")) if m.group("q") else (1.0 if "ln" in body else 0.0)
        if invert:
            p, q = -p, -q
        terms.append((sign * coef, p + 0.0, q + 0.0))
    return tuple(terms)


def parse_alpha(text: str, grid: GridSequence) -> AlphaSequence:
    """Parse the coupling mini-language against a grid."""
    s = text.replace(" ", "")
    if not s:
        raise CliError("empty coupling expression")
    if s == "zero":
        return PowerSumAlpha(terms=((0.0, 0.0, 0.0),))
    m = _SCALED.match(s)
    if m:
        coef_text = m.group("coef")
        if coef_text in ("", "+"):
            a = 1.0
        elif coef_text == "-":
            a = -1.0
        else:
            a = float(coef_text)
        rest = m.group("rest")
        pert = PowerSumAlpha(terms=_parse_power_sum(rest)) if rest else None
        return ScaledInverseGapsAlpha(grid, a, perturbation=pert)
    return PowerSumAlpha(terms=_parse_power_sum(s))


# ---------------------------------------------------------------------------
# grid construction


def build_grid(args: argparse.Namespace) -> GridSequence:
    spec = getattr(args, "grid", None)
    if spec and spec != "powerlog":
        kind, _, rest = spec.partition(":")
        if kind == "constant":
            try:
                return ConstantGrid(d=float(rest or "1"))
            except (ValueError, GridError) as e:
                raise CliError(f"bad constant grid: {e}")
        if kind == "explicit":
            parts = rest.split(":")
            tail = parts[1] if len(parts) > 1 else "cycle"
            try:
                values = tuple(float(v) for v in parts[0].split(",") if v)
                return ExplicitGrid(values=values, tail=tail)
            except (ValueError, GridError) as e:
                raise CliError(f"bad explicit grid: {e}")
        raise CliError(f"unknown grid kind {kind!r} (use powerlog, constant:D, explicit:V1,V2[:tail])")
    gamma = getattr(args, "gamma", None)
    if gamma is None:
        raise CliError("no grid given: pass --gamma (power-log family) or --grid")
    try:
        return PowerLogGrid(gamma=gamma, eta=getattr(args, "eta", 0.0), d1=getattr(args, "d1", 1.0))
    except GridError as e:
        raise CliError(str(e))


def _horizon_ladder(args: argparse.Namespace) -> tuple[int, ...]:
    raw = getattr(args, "horizons", None)
    if raw:
        try:
            hs = tuple(int(h) for h in raw.split(","))
        except ValueError:
            raise CliError(f"bad --horizons {raw!r}")
        if not hs or any(b <= a for a, b in zip(hs, hs[1:])):
            raise CliError("--horizons must be strictly increasing integers")
        return hs
    env = os.environ.get("DELTA_SPEC_HORIZON")
    if env:
        try:
            top = int(env)
        except ValueError:
            raise CliError(f"bad DELTA_SPEC_HORIZON {env!r}")
        if top < 10**3:
            raise CliError("DELTA_SPEC_HORIZON must be >= 1000")
        return tuple(h for h in _DEFAULT_LADDER if h < top) + (top,)
    return _DEFAULT_LADDER


def _json_default(obj):
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    raise TypeError(f"not JSON serializable: {type(obj)}")


def _emit(payload, out_path: Optional[str]) -> None:
    text = json.dumps(payload, sort_keys=True, indent=2, default=_json_default) + "\n"
    if out_path:
        with open(out_path, "w") as f:
            f.write(text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# subcommands


def _cmd_analyze(args: argparse.Namespace) -> int:
    t_start = time.time()
    grid = build_grid(args)
    alpha = parse_alpha(args.alpha, grid)
    horizons = _horizon_ladder(args)
    cfg = VerdictConfig(
        horizons=horizons,
        oracle_horizon=min(args.oracle_horizon or 10**5, horizons[-1]),
    )
    t0 = time.time()
    verdict = deficiency_verdict(grid, alpha, cfg)
    t_verdict = time.time() - t0
    report = {
        "schema": "deltasa-analyze-v1",
        "grid": grid.describe(),
        "alpha": alpha.describe(),
        "horizons": list(horizons),
        "verdict": verdict.to_json(),
    }
    if args.timings:
        report["timings"] = {
            "verdict_s": round(t_verdict, 6),
            "total_s": round(time.time() - t_start, 6),
        }
    _emit(report, args.output)
    return 0


def _cmd_sweep(args: argparse.Namespace) -> int:
    try:
        gammas = [float(g) for g in args.gammas.split(",") if g]
        a_values = [float(a) for a in args.a_values.split(",") if a]
    except ValueError as e:
        raise CliError(f"bad sweep values: {e}")
    if not gammas or not a_values:
        raise CliError("sweep needs at least one gamma and one a value")
    horizons = _horizon_ladder(args)
    cfg = VerdictConfig(horizons=horizons, oracle_horizon=min(10**5, horizons[-1]))
    pert = PowerSumAlpha(terms=_parse_power_sum(args.alpha_pert.replace(" ", ""))) if args.alpha_pert else None

    rows = []
    bound_N = horizons[-1] if len(horizons) == 1 else horizons[-2]
    for gamma in gammas:
        grid = PowerLogGrid(gamma=gamma, eta=args.eta, d1=args.d1)
        cond_b = check_condition_B(grid, horizon=horizons[-1])
        G = select_G(grid, horizon=min(bound_N, 10**5))
        for a in a_values:
            alpha = ScaledInverseGapsAlpha(grid, a, perturbation=pert)
            verdict = deficiency_verdict(grid, alpha, cfg)
            if verdict.certificate is None:
                certifying = "inconclusive"
            elif verdict.advisory:
                certifying = "numerical-advisory"
            else:
                certifying = verdict.certificate
            fl = floquet_discriminant(cond_b.u, a, 0.0)
            b2 = test_bound_II(grid, alpha, G, N=bound_N)
            b3 = test_bound_III(grid, alpha, G, N=bound_N)
            rows.append(
                {
                    "gamma": gamma,
                    "eta": args.eta,
                    "a": a,
                    "verdict": verdict.verdict.value,
                    "certifying_test": certifying,
                    "u_odd": cond_b.u.odd,
                    "u_even": cond_b.u.even,
                    "delta0": fl.discriminant,
                    "minimal_C1": b2.minimal_constant,
                    "minimal_C2": b3.minimal_constant,
                }
            )

    fieldnames = [
        "gamma", "eta", "a", "verdict", "certifying_test",
        "u_odd", "u_even", "delta0", "minimal_C1", "minimal_C2",
    ]
    out = open(args.output, "w", newline="") if args.output else sys.stdout
    try:
        writer = csv.DictWriter(out, fieldnames=fieldnames, lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in row.items()})
    finally:
        if args.output:
            out.close()
    return 0


def _cmd_verify(args: argparse.Namespace) -> int:
    horizon = args.horizon
    if horizon is None:
        env = os.environ.get("DELTA_SPEC_HORIZON")
        horizon = int(env) if env else 10**6
    try:
        report = run_battery(only=args.only, horizon=horizon)
    except ValueError as e:
        raise CliError(str(e))
    if args.json:
        _emit(report.to_json(), args.output)
    else:
        text = "\n".join(report.lines()) + "\n"
        if args.output:
            with open(args.output, "w") as f:
                f.write(text)
        else:
            sys.stdout.write(text)
    return 0 if report.passed else 1


def _log_sample(lo: int, hi: int, points: int) -> np.ndarray:
    ns = np.unique(np.geomspace(lo, hi, points).astype(np.int64))
    return ns


def _cmd_plot_data(args: argparse.Namespace) -> int:
    grid = build_grid(args)
    lo, hi = args.lo, args.hi
    if lo < 1 or hi <= lo:
        raise CliError("need 1 <= lo < hi")
    q = args.quantity
    samples: list = []
    if q in ("F", "F_over_d"):
        for n in _log_sample(max(lo, 1), hi, args.points):
            v = F(grid, int(n))
            if q == "F_over_d":
                v /= grid.gap(int(n))
            samples.append([int(n), v])
    elif q == "rho":
        tilde = TildeSequence(grid)
        for n in _log_sample(max(lo, 1), hi, args.points):
            samples.append([int(n), float(rho_block(grid, int(n), int(n) + 1, tilde)[0])])
    elif q in ("block_norms", "residuals"):
        if args.alpha is None:
            raise CliError(f"--alpha is required for {q}")
        alpha = parse_alpha(args.alpha, grid)
        op = JacobiOperator(grid, alpha)
        lam = complex(args.lam) if args.lam else 0.0
        if isinstance(lam, complex) and lam.imag == 0.0:
            lam = lam.real
        sol = solve_recurrence(op, lam, hi)
        if q == "block_norms":
            samples = [[k, m] for k, m in sol.block_log_masses]
        else:
            pure = int(sol.meta.get("head_pure_until", 0))
            head = sol.head_values()
            top = min(pure, len(head)) - 1
            for n in _log_sample(max(lo, 2), max(top, 3), min(args.points, max(top - 1, 1))):
                n = int(n)
                if n + 1 > top:
                    continue
                row = (
                    op.off(n - 1) * head[n - 2]
                    + (op.diag(n) - lam) * head[n - 1]
                    + op.off(n) * head[n]
                )
                scale = (
                    abs(op.off(n - 1) * head[n - 2])
                    + abs((op.diag(n) - lam) * head[n - 1])
                    + abs(op.off(n) * head[n])
                )
                samples.append([n, abs(row) / scale if scale > 0.0 else 0.0])
    else:
        raise CliError(f"unknown quantity {q!r}")
    payload = {
        "schema": "deltasa-plot-v1",
        "quantity": q,
        "grid": grid.describe(),
        "samples": samples,
    }
    _emit(payload, args.output)
    return 0


# ---------------------------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="deltasa",
        description=(
            "Self-adjointness and deficiency-index analysis for half-line "
            "Jacobi matrices built from point-interaction grids."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_grid_args(p: argparse.ArgumentParser) -> None:
        p.add_argument("--gamma", type=float, default=None, help="power-law gap exponent")
        p.add_argument("--eta", type=float, default=0.0, help="log-power gap exponent (default 0)")
        p.add_argument("--d1", type=float, default=1.0, help="first gap value (default 1)")
        p.add_argument(
            "--grid",
            default=None,
            help="grid spec: powerlog (default, uses --gamma/--eta/--d1), "
            "constant:D, or explicit:V1,V2,...[:cycle|hold|error]",
        )

    p = sub.add_parser("analyze", help="decide self-adjointness for one grid + coupling")
    add_grid_args(p)
    p.add_argument(
        "--alpha",
        required=True,
        help="coupling expression (use --alpha=EXPR when EXPR starts with '-')",
    )
    p.add_argument("--horizons", default=None, help="comma-separated increasing horizons")
    p.add_argument("--oracle-horizon", type=int, default=None, help="oracle solve length")
    p.add_argument("--timings", action="store_true", help="include wall-clock timings")
    p.add_argument("--output", default=None, help="write JSON here instead of stdout")
    p.set_defaults(fn=_cmd_analyze)

    p = sub.add_parser("sweep", help="scan coupling strength a over gap exponents")
    p.add_argument("--gammas", default="0.6,0.75,1.0", help="comma-separated gamma values")
    p.add_argument("--a-values", default="-1.5,-0.5,0.5", help="comma-separated a values")
    p.add_argument("--eta", type=float, default=0.0)
    p.add_argument("--d1", type=float, default=1.0)
    p.add_argument("--alpha-pert", default=None, help="power-sum perturbation added to a*(1/d_n+1/d_{n+1})")
    p.add_argument("--horizons", default=None)
    p.add_argument("--output", default=None, help="write CSV here instead of stdout")
    p.set_defaults(fn=_cmd_sweep)

    p = sub.add_parser("verify-paper", help="run the ten-check reproduction battery")
    p.add_argument("--only", default=None, help="run only checks whose name contains this")
    p.add_argument("--horizon", type=int, default=None, help="battery horizon (default 10^6)")
    p.add_argument("--json", action="store_true", help="JSON report instead of lines")
    p.add_argument("--output", default=None)
    p.set_defaults(fn=_cmd_verify)

    p = sub.add_parser("plot-data", help="emit diagnostic samples as JSON")
    add_grid_args(p)
    p.add_argument(
        "--quantity",
        required=True,
        choices=["F", "F_over_d", "rho", "block_norms", "residuals"],
    )
    p.add_argument("--lo", type=int, default=2)
    p.add_argument("--hi", type=int, default=10**4)
    p.add_argument("--points", type=int, default=64)
    p.add_argument("--alpha", default=None, help="coupling (required for block_norms/residuals)")
    p.add_argument("--lam", default=None, help="spectral point, e.g. 0, 1j, -1j")
    p.add_argument("--output", default=None)
    p.set_defaults(fn=_cmd_plot_data)
    return parser


def main(argv: Optional[list[str]] = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except CliError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except (GridError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except OSError as e:
        print(f"io error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
