"""Command-line front end.

Subcommands: moments, resonances, scatter, sweep, converge, resolve.
Shapes are read from JSON files; results go to CSV (one header line,
shortest round-trip floats) or JSON. Exit status is 0 on success, 2 for
invalid input and 3 for numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path

from .errors import NumericalError
from .ode_core import SolverSettings
from .potential import PiecewisePolynomial, ShapePotential, load_shape, moments
from .resolvent_lab import ResolventProbe, resolvent_error, solve_limit_resolvent
from .resonance import scan_resonances, shooting_residual, resonance_record, RECORD_RESIDUAL_TOL
from .scattering import DEFAULT_EPS_LIST, scatter_finite, scatter_limit, scattering_convergence, sweep

EXIT_OK, EXIT_INVALID, EXIT_NUMERICAL = 0, 2, 3

_VALUE_OPTIONS = {"--window", "--alpha", "--beta", "--eps", "--k", "--zeta", "--step"}


def fmt(x) -> str:
    x = float(x)
    if math.isnan(x):
        raise NumericalError("refusing to write NaN")
    return repr(x + 0.0)


def parse_grid(text: str) -> list[float]:
    """``a:b:step`` (endpoints inclusive within half a step), ``a,b,c`` or ``a``."""
    values: list[float] = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        fields = part.split(":")
        if len(fields) == 1:
            values.append(float(fields[0]))
        elif len(fields) == 3:
            lo, hi, step = (float(f) for f in fields)
            if not step > 0 or hi < lo:
                raise ValueError(f"bad grid {part!r}")
            n = int(math.floor((hi - lo) / step + 0.5))
            values.extend(lo + i * step for i in range(n + 1))
        else:
            raise ValueError(f"bad grid {part!r}; expected start:stop:step")
    if not values:
        raise ValueError("empty grid")
    return values


def parse_window(text: str) -> tuple[float, float]:
    fields = text.split(":")
    if len(fields) != 2:
        raise ValueError(f"bad window {text!r}; expected min:max")
    return float(fields[0]), float(fields[1])


def _scalar(text: str) -> float:
    vals = parse_grid(text)
    if len(vals) != 1:
        raise ValueError(f"expected a single number, got {text!r}")
    return vals[0]


def _settings(args) -> SolverSettings:
    return SolverSettings(args.rel_tol, args.abs_tol, args.max_step, args.min_step)


def _psi(args) -> ShapePotential:
    return load_shape(args.psi) if args.psi else ShapePotential.zero()


def _write(args, text: str) -> None:
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    return buf.getvalue()


def _complex(z) -> dict:
    return {"re": float(z.real), "im": float(z.imag)}


def _json(obj) -> str:
    return json.dumps(obj, indent=2, allow_nan=False) + "\n"


# ---------------------------------------------------------------------------
# commands


def cmd_moments(args) -> None:
    rep = moments(load_shape(args.phi), load_shape(args.psi), args.tol)
    _write(args, _json(rep.to_dict()))


def cmd_resonances(args) -> None:
    rs = scan_resonances(
        load_shape(args.phi), parse_window(args.window), _scalar(args.step), args.root_tol, _psi(args), _settings(args)
    )
    for note in rs.warnings:
        print(f"warning: {note}", file=sys.stderr)
    _write(args, _csv(["alpha", "theta", "kappa", "residual"], [(r.alpha, r.theta, r.kappa, r.residual) for r in rs]))


def _limit_for(phi, psi, alpha, beta, k, settings):
    if abs(shooting_residual(phi, alpha, settings)) <= RECORD_RESIDUAL_TOL:
        return scatter_limit(resonance_record(phi, psi, alpha, settings=settings), beta, k)
    return scatter_limit(None, beta, k)


def cmd_scatter(args) -> None:
    phi, psi, settings = load_shape(args.phi), _psi(args), _settings(args)
    alpha, beta, eps, k = (_scalar(v) for v in (args.alpha, args.beta, args.eps, args.k))
    d = scatter_finite(phi, psi, alpha, beta, eps, k, settings)
    lim = _limit_for(phi, psi, alpha, beta, k, settings)
    out = {
        "alpha": alpha,
        "beta": beta,
        "eps": eps,
        "k": k,
        "R": _complex(d.R),
        "T": _complex(d.T),
        "T2": d.T2,
        "flux_defect": d.flux_defect,
        "limit": {"resonant": lim.resonant, "R": _complex(lim.R), "T": _complex(lim.T), "T2": abs(lim.T) ** 2},
    }
    if lim.resonant:
        out["limit"].update(theta=lim.theta, kappa=lim.kappa)
    _write(args, _json(out))


def cmd_sweep(args) -> None:
    phi, psi = load_shape(args.phi), _psi(args)
    rows = sweep(phi, psi, _scalar(args.beta), parse_grid(args.alpha), parse_grid(args.k), parse_grid(args.eps), _settings(args))
    header = ["alpha", "k", "eps", "ReR", "ImR", "ReT", "ImT", "T2"]
    _write(args, _csv(header, [(d.alpha, d.k, d.eps, d.R.real, d.R.imag, d.T.real, d.T.imag, d.T2) for d in rows]))


def cmd_converge(args) -> None:
    phi, psi = load_shape(args.phi), _psi(args)
    eps = parse_grid(args.eps) if args.eps else list(DEFAULT_EPS_LIST)
    rep = scattering_convergence(phi, psi, _scalar(args.alpha), _scalar(args.beta), _scalar(args.k), eps, _settings(args))
    rows = [(e, r, t, rep.order) for e, r, t in zip(rep.eps, rep.err_R, rep.err_T)]
    _write(args, _csv(["eps", "errR", "errT", "fitted_order"], rows))


def cmd_resolve(args) -> None:
    phi, psi = load_shape(args.phi), _psi(args)
    f = PiecewisePolynomial.from_dict(json.loads(Path(args.f).read_text())) if args.f else PiecewisePolynomial.constant(1.0, 1.0, 2.0)
    probe = ResolventProbe(f, complex(args.zeta.replace(" ", "")), args.halfwidth)
    eps = parse_grid(args.eps) if args.eps else [2.0**-n for n in range(3, 8)]
    rep = resolvent_error(
        phi, psi, _scalar(args.alpha), _scalar(args.beta), eps, probe, args.cells_per_eps,
        settings=_settings(args), keep_solutions=bool(args.trace_dir),
    )
    _write(args, _csv(["eps", "h", "error_L2", "fitted_order"], [(e, h, err, rep.order) for e, h, err in zip(rep.eps, rep.h, rep.errors)]))
    if args.trace_dir:
        out = Path(args.trace_dir)
        out.mkdir(parents=True, exist_ok=True)
        lim = solve_limit_resolvent(rep.limit, probe)
        for i, sol in enumerate(rep.solutions):
            rows = [(x, y.real, y.imag) for x, y in zip(sol.x, sol.y)]
            (out / f"eps_{i}.csv").write_text(_csv(["x", "ReY", "ImY"], rows), encoding="utf-8")
        x = rep.solutions[-1].x
        rows = [(xx, y.real, y.imag) for xx, y in zip(x, lim(x))]
        (out / "limit.csv").write_text(_csv(["x", "ReY", "ImY"], rows), encoding="utf-8")


COMMANDS = {
    "moments": (cmd_moments, "moments"),
    "resonances": (cmd_resonances, "scan_resonances"),
    "scatter": (cmd_scatter, "scatter_finite"),
    "sweep": (cmd_sweep, "sweep_alpha"),
    "converge": (cmd_converge, "scattering_convergence"),
    "resolve": (cmd_resolve, "resolvent_error"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dplab", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, help_, phi=True):
        p = sub.add_parser(name, help=help_)
        if phi:
            p.add_argument("--phi", required=True, help="shape file for Phi")
        p.add_argument("--psi", help="shape file for Psi (default: zero)")
        p.add_argument("--out", help="output file (default: stdout)")
        p.add_argument("--rel-tol", type=float, default=1e-10)
        p.add_argument("--abs-tol", type=float, default=1e-12)
        p.add_argument("--max-step", type=float, default=0.05)
        p.add_argument("--min-step", type=float, default=1e-9)
        return p

    p = add("moments", "exact moments and distributional-limit class")
    p.add_argument("--tol", type=float, default=1e-10)

    p = add("resonances", "resonant couplings with theta and kappa (CSV)")
    p.add_argument("--window", default="-50:50")
    p.add_argument("--step", default="0.05")
    p.add_argument("--root-tol", type=float, default=1e-10)

    p = add("scatter", "finite-eps and limit scattering coefficients (JSON)")
    for name in ("--alpha", "--eps", "--k"):
        p.add_argument(name, required=True)
    p.add_argument("--beta", default="0")

    p = add("sweep", "|T_eps|^2 over a grid of couplings (CSV)")
    p.add_argument("--alpha", required=True, help="grid start:stop:step")
    p.add_argument("--beta", default="0")
    p.add_argument("--eps", required=True)
    p.add_argument("--k", required=True)

    p = add("converge", "convergence of scattering data as eps -> 0 (CSV)")
    p.add_argument("--alpha", required=True)
    p.add_argument("--beta", default="0")
    p.add_argument("--k", default="1")
    p.add_argument("--eps", help="decreasing eps values (default 2^-3..2^-9)")

    p = add("resolve", "resolvent error against the limit operator (CSV)")
    p.add_argument("--alpha", required=True)
    p.add_argument("--beta", default="0")
    p.add_argument("--eps", help="decreasing eps values (default 2^-3..2^-7)")
    p.add_argument("--zeta", default="2j")
    p.add_argument("--f", help="right-hand side as a piecewise-polynomial JSON file (default: 1 on [1,2])")
    p.add_argument("--halfwidth", type=float, default=None)
    p.add_argument("--cells-per-eps", type=int, default=64)
    p.add_argument("--trace-dir", help="directory for x,ReY,ImY solution traces")
    return parser


def _join_negative_values(argv: list[str]) -> list[str]:
    # "--window -1:30" would otherwise be read as an unknown option
    out, i = [], 0
    while i < len(argv):
        tok = argv[i]
        if tok in _VALUE_OPTIONS and i + 1 < len(argv) and argv[i + 1].startswith("-") and argv[i + 1][1:2].isdigit() | (argv[i + 1][1:2] == "."):
            out.append(f"{tok}={argv[i + 1]}")
            i += 2
        else:
            out.append(tok)
            i += 1
    return out


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(_join_negative_values(argv))
    except SystemExit as exc:
        return EXIT_INVALID if exc.code else EXIT_OK
    func, operation = COMMANDS[args.command]
    try:
        func(args)
    except NumericalError as exc:
        print(f"dplab {args.command}: {operation} failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ValueError, OSError, KeyError) as exc:
        print(f"dplab {args.command}: invalid input for {operation}: {exc}", file=sys.stderr)
        return EXIT_INVALID
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
