"""Experiment runner: one entry point, one subcommand per experiment.

Each subcommand writes deterministic CSV files plus a gnuplot script that
renders them.  Flags override config-file values (flat key=value lines),
which override defaults.  Exit codes: 0 on success, 1 on numeric failure
(partial outputs are removed), 2 on usage errors.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from .diagnostics import SaturatedSequenceError, convergence_order
from .functions import FUNCTIONS, builtin_function
from .integrators import (
    Method,
    NewtonDivergenceError,
    SingularJacobianError,
    StepperConfig,
    evolve,
)
from .propagator import (
    OscillatorNetwork,
    SingularPropagatorError,
    build_propagator,
    evolve_linear,
    mol_advection_operator,
    oscillator_generator,
)
from .quadrature import QuadratureRule, TauPolicy, integrate, remainder_bound
from .stability import IncrementFunction, PoleError, scan_region
from .systems import PhaseState, builtin_system

ENV_OUTDIR = "LDINT_OUTDIR"

NUMERIC_ERRORS = (
    NewtonDivergenceError,
    SingularJacobianError,
    SingularPropagatorError,
    PoleError,
    SaturatedSequenceError,
    FloatingPointError,
    ArithmeticError,
)


class UsageError(Exception):
    pass


class OutputDir:
    """Tracks written files so a failing run leaves no partial outputs."""

    def __init__(self, path: Path):
        self.path = Path(path)
        self.path.mkdir(parents=True, exist_ok=True)
        self.created: list[Path] = []

    def open(self, name: str):
        target = self.path / name
        self.created.append(target)
        return open(target, "w")

    def discard(self) -> None:
        for target in self.created:
            try:
                target.unlink()
            except FileNotFoundError:
                pass


def _load_config(path) -> dict:
    conf = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected key=value, got {line!r}")
            key, _, value = line.partition("=")
            conf[key.strip().replace("-", "_")] = value.strip()
    return conf


def _opt(args, config, key, conv, default):
    value = getattr(args, key, None)
    if value is not None:
        return value
    if key in config:
        try:
            return conv(config[key])
        except ValueError as err:
            raise UsageError(f"config key {key}: {err}") from None
    return default


def _parse_methods(text: str) -> list[Method]:
    methods = []
    for token in text.split(","):
        token = token.strip().lower()
        if not token:
            continue
        try:
            methods.append(Method(token))
        except ValueError:
            known = ",".join(m.value for m in Method)
            raise ValueError(f"unknown method {token!r} (known: {known})") from None
    if not methods:
        raise ValueError("empty method list")
    return methods


def _parse_orders(text: str) -> list[int]:
    out = []
    for token in text.split(","):
        token = token.strip()
        if not token:
            continue
        if "-" in token and not token.startswith("-"):
            lo, hi = token.split("-", 1)
            out.extend(range(int(lo), int(hi) + 1))
        else:
            out.append(int(token))
    if not out or any(n < 1 for n in out):
        raise ValueError(f"orders must be positive integers, got {text!r}")
    return out


def _parse_interval(text: str) -> tuple[float, float]:
    parts = [float(v) for v in text.split(",")]
    if len(parts) != 2:
        raise ValueError(f"an interval needs two comma-separated numbers, got {text!r}")
    return parts[0], parts[1]


def _parse_floats(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v.strip()]


def _config_flag(config: dict, key: str) -> bool:
    value = config.get(key, "")
    if value.lower() in ("", "0", "false", "no", "off"):
        return False
    if value.lower() in ("1", "true", "yes", "on"):
        return True
    raise UsageError(f"config key {key} must be a boolean, got {value!r}")


def _fmt(x) -> str:
    return f"{x:.17g}"


# ---------------------------------------------------------------------------
# quad-compare

def cmd_quad_compare(args, config, out: OutputDir) -> None:
    fn_name = _opt(args, config, "function", str, "gaussian")
    try:
        fn = builtin_function(fn_name)
    except ValueError as err:
        raise UsageError(str(err)) from None
    orders = _opt(args, config, "orders", _parse_orders, list(range(1, 17)))
    t1, t2 = _opt(args, config, "interval", _parse_interval, (-0.5, 0.5))
    exact_mode = bool(getattr(args, "exact_rational", False)) or _config_flag(
        config, "exact_rational"
    )
    dt = t2 - t1
    mid = 0.5 * (t1 + t2)
    reference = fn.integral(t1, t2)
    exact_ref = None
    if exact_mode and fn.name == "cubic":
        a, b = Fraction(t1), Fraction(t2)
        exact_ref = (b**4 - a**4) / 4

    max_order = max(2 * n for n in orders)
    mid_jet = fn.jet(mid, max_order + 2)

    with out.open("quad_compare.csv") as fh:
        fh.write(
            "n,ld_value,ld_error,ld_remainder,em_value,em_error,em_remainder,"
            "taylor_value,taylor_error,taylor_remainder\n"
        )
        for n in orders:
            jet1 = fn.jet(t1, n - 1)
            jet2 = fn.jet(t2, n - 1)
            row = [str(n)]
            for kind in ("ld", "em", "taylor"):
                if kind == "ld":
                    rule = QuadratureRule.lanczos_dyche(n)
                    value = integrate(rule, jet1, jet2, exact=exact_mode)
                elif kind == "em":
                    rule = QuadratureRule.euler_maclaurin(n)
                    value = integrate(rule, jet1, jet2, exact=exact_mode)
                else:
                    rule = QuadratureRule.taylor(n)
                    value = integrate(rule, jet1, dt=dt, exact=exact_mode)
                if exact_mode and exact_ref is not None:
                    error = abs(float(value - exact_ref))
                else:
                    error = abs(float(value) - reference)
                if kind == "em" and n % 2 != 0:
                    rem = ""
                else:
                    est = remainder_bound(
                        rule, dt, mid_jet.values[_remainder_derivative(kind, n)],
                        TauPolicy.MIDPOINT,
                    )
                    rem = _fmt(abs(est.bound))
                row += [_fmt(float(value)), _fmt(error), rem]
            fh.write(",".join(row) + "\n")

    with out.open("quad_compare.gnuplot") as fh:
        fh.write(
            "set datafile separator ','\n"
            "set logscale y\n"
            "set xlabel 'order n'\n"
            "set ylabel 'absolute error'\n"
            "set key left bottom\n"
            "plot 'quad_compare.csv' using 1:3 with linespoints title 'LD', \\\n"
            "     '' using 1:6 with linespoints title 'EM', \\\n"
            "     '' using 1:9 with linespoints title 'Taylor'\n"
        )


def _remainder_derivative(kind: str, n: int) -> int:
    if kind == "ld":
        return 2 * n
    if kind == "em":
        return n + 2
    return n


# ---------------------------------------------------------------------------
# stability

def cmd_stability(args, config, out: OutputDir) -> None:
    kinds = _opt(args, config, "kind", str, "rk,ld").split(",")
    orders = _opt(args, config, "n", _parse_orders, [1, 2, 3, 4])
    re_range = _opt(args, config, "re_range", _parse_interval, (-5.0, 5.0))
    im_range = _opt(args, config, "im_range", _parse_interval, (-5.0, 5.0))
    resolution = _opt(args, config, "resolution", int, 401)
    files = []
    for kind in [k.strip().lower() for k in kinds if k.strip()]:
        if kind == "exact":
            grids = [(IncrementFunction.exact(), "exact")]
        elif kind == "rk":
            grids = [(IncrementFunction.runge_kutta(n), f"rk{n}") for n in orders]
        elif kind == "ld":
            grids = [(IncrementFunction.lanczos_dyche(n), f"ld{n}") for n in orders]
        else:
            raise UsageError(f"unknown stability kind {kind!r} (exact, rk, ld)")
        for fun, label in grids:
            name = f"stability_{label}.csv"
            smap = scan_region(fun, re_range, im_range, resolution)
            with out.open(name) as fh:
                smap.write_csv(fh)
            files.append(name)
    with out.open("stability.gnuplot") as fh:
        fh.write("set datafile separator ','\nset view map\nset size square\n")
        for name in files:
            fh.write(
                f"set title '{name}'\n"
                f"splot '{name}' using 1:2:($4) with points pt 5 ps 0.4 "
                "palette notitle\npause -1\n"
            )


# ---------------------------------------------------------------------------
# oscillator experiments

def _run_series(out, prefix, system, methods, dt, steps, q0, p0, tol, max_iter):
    files = []
    for method in methods:
        config = StepperConfig(
            method=method, dt=dt, newton_tol=tol, newton_max_iter=max_iter
        )
        series = evolve(system, config, PhaseState(q=q0, p=p0), steps)
        name = f"{prefix}_{method.value}.csv"
        with out.open(name) as fh:
            series.write_csv(fh)
        files.append(name)
    return files


def _series_plot(out, prefix, files, column, ylabel):
    with out.open(f"{prefix}.gnuplot") as fh:
        fh.write(
            "set datafile separator ','\n"
            "set logscale y\n"
            f"set xlabel 't'\nset ylabel '{ylabel}'\nset key left top\n"
        )
        parts = [
            f"'{name}' using 2:{column} with lines title '{name.split('_')[-1].split('.')[0]}'"
            for name in files
        ]
        fh.write("plot " + ", \\\n     ".join(parts) + "\n")


def _oscillator_cmd(prefix, default_steps, system_factory):
    def run(args, config, out: OutputDir) -> None:
        methods = _opt(args, config, "method", _parse_methods,
                       [Method.LD2, Method.LD4, Method.RK2, Method.RK4])
        dt = _opt(args, config, "dt", float, 0.1)
        steps = _opt(args, config, "steps", int, default_steps)
        q0 = _opt(args, config, "q0", float, 1.0)
        p0 = _opt(args, config, "p0", float, 0.0)
        tol = _opt(args, config, "newton_tol", float, 1e-14)
        max_iter = _opt(args, config, "newton_max_iter", int, 25)
        system = system_factory(args, config)
        files = _run_series(out, prefix, system, methods, dt, steps, q0, p0, tol, max_iter)
        if prefix == "damped":
            _series_plot(out, prefix, files, 8, "relative drift of C")
        else:
            _series_plot(out, prefix, files, 6, "relative energy error")
        if prefix == "sho":
            with out.open("sho_phase.gnuplot") as fh:
                fh.write("set datafile separator ','\nset size square\n")
                parts = [
                    f"'{name}' using 3:4 with lines title "
                    f"'{name.split('_')[-1].split('.')[0]}'"
                    for name in files
                ]
                fh.write("plot " + ", \\\n     ".join(parts) + "\n")

    return run


cmd_sho = _oscillator_cmd("sho", 62832, lambda args, config: builtin_system("sho"))
cmd_pendulum = _oscillator_cmd(
    "pendulum", 10000, lambda args, config: builtin_system("pendulum")
)
cmd_damped = _oscillator_cmd(
    "damped",
    10000,
    lambda args, config: builtin_system(
        "damped", gamma=_opt(args, config, "gamma", float, 1e-4)
    ),
)


# ---------------------------------------------------------------------------
# coupled oscillators

def cmd_coupled(args, config, out: OutputDir) -> None:
    matrix_file = _opt(args, config, "matrix_file", str, None)
    if matrix_file is None:
        raise UsageError("coupled needs --matrix-file (N, then N rows of M, N rows of K)")
    n_order = _opt(args, config, "n", int, 2)
    dt = _opt(args, config, "dt", float, 0.1)
    steps = _opt(args, config, "steps", int, 1000)
    try:
        net = OscillatorNetwork.from_file(matrix_file)
    except (OSError, ValueError) as err:
        raise UsageError(f"cannot load oscillator network: {err}") from None
    gen = oscillator_generator(net)
    prop = build_propagator(gen, dt, n_order)
    u0 = np.zeros(2 * net.dim)
    u0[0] = 1.0
    traj = evolve_linear(prop, u0, steps)
    energies = np.array(
        [net.energy(traj.states[k, : net.dim], traj.states[k, net.dim :])
         for k in range(steps + 1)]
    )
    e0 = energies[0]
    drift = np.abs(energies - e0) / abs(e0) if e0 != 0 else np.abs(energies)
    with out.open("coupled.csv") as fh:
        fh.write("step,t,norm,E,dE_rel\n")
        for k in range(steps + 1):
            fh.write(
                f"{k},{_fmt(k * dt)},{_fmt(traj.norms[k])},"
                f"{_fmt(energies[k])},{_fmt(drift[k])}\n"
            )
    with out.open("coupled.gnuplot") as fh:
        fh.write(
            "set datafile separator ','\nset logscale y\n"
            "set xlabel 't'\nset ylabel 'relative energy drift'\n"
            "plot 'coupled.csv' using 2:5 with lines title 'LD propagator'\n"
        )


# ---------------------------------------------------------------------------
# method of lines

def cmd_mol_advect(args, config, out: OutputDir) -> None:
    n_grid = _opt(args, config, "grid", int, 64)
    courants = _opt(args, config, "courant", _parse_floats, [0.5, 1.0, 2.0, 4.0])
    n_order = _opt(args, config, "n", int, 2)
    steps = _opt(args, config, "steps", int, 1000)
    scheme = _opt(args, config, "scheme", str, "cd2")
    dx = 1.0 / n_grid
    op = mol_advection_operator(n_grid, dx, scheme)
    dense = op.dense()
    x = np.arange(n_grid) * dx
    u0 = np.sin(2.0 * np.pi * x)
    files = []
    for courant in courants:
        dt = courant * dx
        for kind in ("ld", "rk"):
            prop = build_propagator(dense, dt, n_order, kind=kind)
            with np.errstate(over="ignore", invalid="ignore"):
                traj = evolve_linear(prop, u0, steps)
            label = f"mol_c{courant:g}_{kind}.csv"
            with out.open(label) as fh:
                traj.write_csv(fh)
            files.append(label)
    with out.open("mol_advect.gnuplot") as fh:
        fh.write(
            "set datafile separator ','\nset logscale y\n"
            "set xlabel 't'\nset ylabel '|u|_2'\nset key left top\n"
        )
        parts = [f"'{name}' using 2:3 with lines title '{name[4:-4]}'" for name in files]
        fh.write("plot " + ", \\\n     ".join(parts) + "\n")


# ---------------------------------------------------------------------------
# convergence orders

def cmd_convergence(args, config, out: OutputDir) -> None:
    rows = []

    fn = builtin_function("sin")
    for n in range(1, 5):
        total = 2.0
        errors, dts = [], []
        for panels in (1, 2, 4, 8):
            dt = total / panels
            rule = QuadratureRule.lanczos_dyche(n)
            acc = 0.0
            for i in range(panels):
                a, b = i * dt, (i + 1) * dt
                acc += integrate(rule, fn.jet(a, n - 1), fn.jet(b, n - 1))
            errors.append(abs(acc - fn.integral(0.0, total)))
            dts.append(dt)
        rows.append(("quadrature", f"ld{n}", _order_or_saturated(errors, dts), 2 * n))

    for n in range(1, 5):
        errors, dts = [], []
        for dt in (0.2, 0.1, 0.05, 0.025):
            rule = QuadratureRule.taylor(n)
            a = 0.3
            approx = integrate(rule, fn.jet(a, n - 1), dt=dt)
            errors.append(abs(approx - fn.integral(a, a + dt)))
            dts.append(dt)
        rows.append(("quadrature", f"taylor{n}", _order_or_saturated(errors, dts), n + 1))

    system = builtin_system("sho")
    expected = {"euler": 1, "rk2": 2, "rk4": 4, "ld2": 2, "ld4": 4}
    total_time = 2.0
    for name, order in expected.items():
        errors, dts = [], []
        for dt in (0.2, 0.1, 0.05):
            steps = round(total_time / dt)
            series = evolve(
                system, StepperConfig(method=name, dt=dt), PhaseState(q=1.0, p=0.0), steps
            )
            t_end = steps * dt
            err = math.hypot(
                series.q[-1, 0] - math.cos(t_end), series.p[-1, 0] + math.sin(t_end)
            )
            errors.append(err)
            dts.append(dt)
        rows.append(("ode", name, _order_or_saturated(errors, dts), order))

    with out.open("convergence.csv") as fh:
        fh.write("family,name,measured_order,expected_order\n")
        for family, name, measured, expect in rows:
            fh.write(f"{family},{name},{measured},{expect}\n")
    with out.open("convergence.gnuplot") as fh:
        fh.write(
            "set datafile separator ','\nset ylabel 'order'\nset xtics rotate\n"
            "plot 'convergence.csv' using 3:xtic(2) with points pt 7 title 'measured', \\\n"
            "     '' using 4 with points pt 4 title 'expected'\n"
        )


def _order_or_saturated(errors, dts) -> str:
    try:
        return _fmt(convergence_order(errors, dts))
    except SaturatedSequenceError:
        return "saturated"


# ---------------------------------------------------------------------------
# driver

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ldint",
        description="Time-symmetric multi-derivative integration experiments",
    )
    parser.add_argument("--version", action="version", version=f"ldint {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--out", help="output directory (default $LDINT_OUTDIR or ./ldint-out)")
        p.add_argument("--config", help="flat key=value config file")

    p = sub.add_parser("quad-compare", help="single-interval rule error comparison")
    common(p)
    p.add_argument("--function", help="builtin integrand: " + ",".join(sorted(FUNCTIONS)))
    p.add_argument("--orders", type=_parse_orders, help="orders, e.g. 1-16 or 1,2,4")
    p.add_argument("--interval", type=_parse_interval, help="integration interval a,b")
    p.add_argument("--exact-rational", action="store_true",
                   help="evaluate rules in exact rational arithmetic")

    p = sub.add_parser("stability", help="A-stability region grids")
    common(p)
    p.add_argument("--kind", help="comma list of exact,rk,ld")
    p.add_argument("--n", type=_parse_orders, help="method orders, e.g. 1-4")
    p.add_argument("--re-range", dest="re_range", type=_parse_interval, help="real axis range a,b")
    p.add_argument("--im-range", dest="im_range", type=_parse_interval, help="imaginary axis range a,b")
    p.add_argument("--resolution", type=int, help="grid points per axis")

    for name, blurb in (
        ("sho", "harmonic oscillator conservation runs"),
        ("pendulum", "pendulum conservation runs"),
        ("damped", "damped oscillator invariant runs"),
    ):
        p = sub.add_parser(name, help=blurb)
        common(p)
        p.add_argument("--method", type=_parse_methods, help="comma list of euler,rk2,rk4,verletq,verletp,ld2,ld4")
        p.add_argument("--dt", type=float)
        p.add_argument("--steps", type=int)
        p.add_argument("--q0", type=float)
        p.add_argument("--p0", type=float)
        p.add_argument("--newton-tol", dest="newton_tol", type=float)
        p.add_argument("--newton-max-iter", dest="newton_max_iter", type=int)
        if name == "damped":
            p.add_argument("--gamma", type=float)

    p = sub.add_parser("coupled", help="coupled oscillator network propagator run")
    common(p)
    p.add_argument("--matrix-file", dest="matrix_file")
    p.add_argument("--n", type=int, help="propagator order")
    p.add_argument("--dt", type=float)
    p.add_argument("--steps", type=int)

    p = sub.add_parser("mol-advect", help="periodic advection, Courant sweep")
    common(p)
    p.add_argument("--grid", type=int)
    p.add_argument("--courant", type=_parse_floats, help="comma list of Courant numbers")
    p.add_argument("--n", type=int, help="propagator order")
    p.add_argument("--steps", type=int)
    p.add_argument("--scheme", help="cd2 or cd4")

    p = sub.add_parser("convergence", help="measured order table")
    common(p)

    return parser


COMMANDS = {
    "quad-compare": cmd_quad_compare,
    "stability": cmd_stability,
    "sho": cmd_sho,
    "pendulum": cmd_pendulum,
    "damped": cmd_damped,
    "coupled": cmd_coupled,
    "mol-advect": cmd_mol_advect,
    "convergence": cmd_convergence,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = _load_config(args.config) if args.config else {}
    except OSError as err:
        print(f"ldint: cannot read config: {err}", file=sys.stderr)
        return 2
    except UsageError as err:
        print(f"ldint: {err}", file=sys.stderr)
        return 2

    out_path = args.out or config.get("out") or os.environ.get(ENV_OUTDIR) or "ldint-out"
    out = OutputDir(Path(out_path))
    try:
        COMMANDS[args.command](args, config, out)
    except UsageError as err:
        out.discard()
        print(f"ldint: {err}", file=sys.stderr)
        return 2
    except NUMERIC_ERRORS as err:
        out.discard()
        print(f"ldint: numeric failure: {err}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
