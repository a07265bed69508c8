"""Command-line experiment runner.

Subcommands ``run``, ``spectrum``, ``converge`` and ``sweep`` read one JSON
config file, write CSV artifacts (plus matplotlib figures and gnuplot
scripts) to the output directory, and finish with a ``manifest.json``
listing every file written.

Exit codes: 0 success, 1 invalid configuration, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import plotting
from .dgoperator import AdmissibilityWarning, BoundarySpec, CouplingConfig, MODES
from .diagnostics import error_norms, write_energy_csv, write_error_csv
from .hyperbolic import (
    FLUXES,
    WAVE_MATRIX,
    ExactSolution,
    GaussianPulse,
    ScalarAdvection,
    SinusoidalSolution,
    make_system,
)
from .mesh import build_mesh, uniform_subdomain
from .polybasis import build_basis
from .spectrum import EigenSolverError, analyze, assemble, write_spectrum_csv
from .timeloop import SCHEMES, NumericalFailure, RunConfig, integrate

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 1, 2

SCHEMA = {
    "equation": {"scalar": {"alpha"}, "system2": {"matrix"}},
    "geometry": {"a", "b", "c", "d", "offset"},
    "mesh": {"k_u", "k_v", "n"},
    "flux": None,
    "coupling": {"mode", "gamma_u", "gamma_v", "m", "epsilon", "eta"},
    "bc": None,
    "initial": None,
    "time": {"final_t", "cfl", "scheme", "sample_every"},
    "output": None,
}
SWEEP_PARAMS = ("gamma_v", "epsilon")


class ConfigError(ValueError):
    def __init__(self, message, path=(), line=None):
        super().__init__(message)
        self.path = tuple(path)
        self.line = line

    def __str__(self):
        where = ".".join(str(p) for p in self.path) or "<root>"
        loc = f"line {self.line}: " if self.line else ""
        return f"{loc}{where}: {self.args[0]}"


def _line_of(text: str, path) -> int | None:
    """Best-effort line number of the key at ``path`` in the JSON source."""
    pos, found = 0, None
    for key in path:
        if not isinstance(key, str):
            continue
        i = text.find(f'"{key}"', pos)
        if i < 0:
            break
        pos, found = i, i
    return None if found is None else text.count("\n", 0, found) + 1


@dataclass
class ExperimentConfig:
    """A validated experiment, with every model object already built."""

    system: object
    mesh: object
    N: int
    coupling: CouplingConfig
    bc: BoundarySpec
    initial: ExactSolution
    reference: ExactSolution | None
    final_t: float
    cfl: float
    scheme: str | None
    sample_every: int
    output: str | None
    exact_k: float | None

    @property
    def overset(self) -> bool:
        return not hasattr(self.mesh, "x_left")

    def run_config(self, default_scheme="rk3") -> RunConfig:
        return RunConfig(
            T=self.final_t, cfl=self.cfl, sample_every=self.sample_every, scheme=self.scheme or default_scheme
        )


class _Reader:
    def __init__(self, text):
        self.text = text

    def fail(self, message, path):
        raise ConfigError(message, path, _line_of(self.text, path))

    def section(self, data, key, path, required=False):
        if key not in data:
            if required:
                self.fail("missing required section", path + (key,))
            return {}
        val = data[key]
        if not isinstance(val, dict):
            self.fail("expected an object", path + (key,))
        allowed = SCHEMA.get(key) if not path else None
        if isinstance(allowed, set):
            for k in val:
                if k not in allowed:
                    self.fail(f"unknown key (allowed: {', '.join(sorted(allowed))})", path + (key, k))
        return val

    def number(self, data, key, path, default=None, required=False, integer=False, check=None, what=""):
        if key not in data:
            if required:
                self.fail("missing required value", path + (key,))
            return default
        v = data[key]
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
            self.fail(f"expected a finite number, got {v!r}", path + (key,))
        if integer:
            if int(v) != v:
                self.fail(f"expected an integer, got {v!r}", path + (key,))
            v = int(v)
        if check is not None and not check(v):
            self.fail(f"value {v!r} violates {what}", path + (key,))
        return v


def parse_config(text: str) -> ExperimentConfig:
    """Validate a JSON config document and build the model objects.

    Every precondition of the numerical modules is checked here, so a
    config that parses can be run.
    """
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc.msg}", (), exc.lineno) from None
    r = _Reader(text)
    if not isinstance(data, dict):
        r.fail("the config must be a JSON object", ())
    for k in data:
        if k not in SCHEMA:
            r.fail(f"unknown key (allowed: {', '.join(sorted(SCHEMA))})", (k,))

    # equation
    eq = data.get("equation")
    if not isinstance(eq, dict) or len(eq) != 1 or next(iter(eq)) not in SCHEMA["equation"]:
        r.fail("expected exactly one of 'scalar' or 'system2'", ("equation",))
    kind, body = next(iter(eq.items()))
    if not isinstance(body, dict):
        r.fail("expected an object", ("equation", kind))
    for k in body:
        if k not in SCHEMA["equation"][kind]:
            r.fail("unknown key", ("equation", kind, k))
    if kind == "scalar":
        alpha = r.number(body, "alpha", ("equation", "scalar"), default=1.0, check=lambda a: a > 0, what="alpha > 0")
        system = ScalarAdvection(alpha).system
    else:
        rows = body.get("matrix")
        path = ("equation", "system2", "matrix")
        ok = (
            isinstance(rows, list)
            and len(rows) == 2
            and all(isinstance(row, list) and len(row) == 2 for row in rows)
            and all(isinstance(x, (int, float)) and not isinstance(x, bool) for row in rows for x in row)
        )
        if not ok:
            r.fail("expected a 2x2 list of numbers", path)
        try:
            system = make_system(rows)
        except ValueError as exc:
            r.fail(str(exc), path)
        if system.spectral_radius == 0:
            r.fail("the coefficient matrix must be nonzero", path)

    # geometry and mesh
    geo = r.section(data, "geometry", (), required=True)
    gp = ("geometry",)
    offset = r.number(geo, "offset", gp, default=0.0)
    a = r.number(geo, "a", gp, required=True) + offset
    d = r.number(geo, "d", gp, required=True)
    has_b, has_c = "b" in geo, "c" in geo
    if has_b != has_c:
        r.fail("give both b and c for an overset mesh, or neither for a single domain", gp + ("b" if has_b else "c",))
    msh = r.section(data, "mesh", (), required=True)
    mp = ("mesh",)
    N = r.number(msh, "n", mp, required=True, integer=True, check=lambda n: n >= 1, what="n >= 1")
    k_u = r.number(msh, "k_u", mp, required=True, integer=True, check=lambda k: k >= 1, what="k_u >= 1")
    if has_b:
        b = r.number(geo, "b", gp)
        c = r.number(geo, "c", gp) + offset
        if not b < c:
            r.fail(f"empty overlap: need b < c, got b={b}, c={c}", gp + ("c",))
        if not (a < b and c < d):
            r.fail(f"need a < b < c < d, got a={a}, b={b}, c={c}, d={d}", gp)
        k_v = r.number(msh, "k_v", mp, required=True, integer=True, check=lambda k: k >= 1, what="k_v >= 1")
        mesh = build_mesh(a, b, c, d, k_u, k_v)
    else:
        if not a < d:
            r.fail(f"need a < d, got a={a}, d={d}", gp)
        mesh = uniform_subdomain(a, d, k_u)

    # flux and coupling
    flux = data.get("flux", "upwind")
    if flux not in FLUXES:
        r.fail(f"unknown flux {flux!r}; expected one of {sorted(FLUXES)}", ("flux",))
    cpl = r.section(data, "coupling", ())
    cp = ("coupling",)
    mode = cpl.get("mode", "characteristic")
    if mode not in MODES:
        r.fail(f"unknown mode {mode!r}; expected one of {list(MODES)}", cp + ("mode",))
    gamma_u = r.number(cpl, "gamma_u", cp, default=1.0)
    gamma_v = r.number(cpl, "gamma_v", cp, default=1.0)
    M = r.number(cpl, "m", cp, default=0, integer=True, check=lambda m: m >= 0, what="m >= 0")
    eps = r.number(cpl, "epsilon", cp, default=0.0, check=lambda e: e >= 0, what="epsilon >= 0")
    eta = r.number(cpl, "eta", cp, default=0.5, check=lambda e: 0 < e < 1, what="0 < eta < 1")
    coupling = CouplingConfig(
        mode=mode,
        flux=flux,
        gamma_u=gamma_u,
        gamma_v=gamma_v,
        M=M,
        epsilon=eps,
        eta=eta,
        allow_central_coupling=(flux == "central"),
    )

    # boundary data and initial condition
    bcv = data.get("bc", "zero")
    exact_k = None
    if bcv == "zero":
        bc = BoundarySpec.zero()
    elif isinstance(bcv, dict) and set(bcv) == {"exact"} and isinstance(bcv["exact"], dict):
        for k in bcv["exact"]:
            if k != "k":
                r.fail("unknown key", ("bc", "exact", k))
        exact_k = r.number(bcv["exact"], "k", ("bc", "exact"), default=4.0, check=lambda k: k > 0, what="k > 0")
        if system.size != 2 or not np.allclose(system.A, WAVE_MATRIX, rtol=0, atol=1e-14):
            r.fail("exact data is the sinusoidal solution of the system [[0, 1], [1, 0]]", ("bc", "exact"))
        bc = BoundarySpec.exact(SinusoidalSolution(exact_k))
    else:
        r.fail("expected \"zero\" or {\"exact\": {\"k\": ...}}", ("bc",))
    if mode == "decoupled-exact" and exact_k is None and not hasattr(mesh, "x_left"):
        r.fail("decoupled-exact coupling needs exact boundary data", cp + ("mode",))

    init = data.get("initial", "exact" if exact_k is not None else {"gaussian": {}})
    lo, hi = (mesh.x_left, mesh.x_right) if hasattr(mesh, "x_left") else (mesh.a, mesh.d)
    if init == "exact":
        if exact_k is None:
            r.fail("initial 'exact' requires exact boundary data", ("initial",))
        initial = reference = SinusoidalSolution(exact_k)
    elif isinstance(init, dict) and set(init) == {"gaussian"} and isinstance(init["gaussian"], dict):
        g = init["gaussian"]
        ip = ("initial", "gaussian")
        for k in g:
            if k not in ("center", "width"):
                r.fail("unknown key", ip + (k,))
        center = r.number(g, "center", ip, default=0.5 * (lo + hi))
        width = r.number(g, "width", ip, default=0.1 * (hi - lo), check=lambda w: w > 0, what="width > 0")
        initial = GaussianPulse(system, center, width)
        reference = initial if exact_k is None else None
    else:
        r.fail("expected \"exact\" or {\"gaussian\": {...}}", ("initial",))

    # time
    tm = r.section(data, "time", ())
    tp = ("time",)
    final_t = r.number(tm, "final_t", tp, default=25.0, check=lambda t: t >= 0, what="final_t >= 0")
    cfl = r.number(tm, "cfl", tp, default=0.5, check=lambda c: 0 < c <= 1, what="0 < cfl <= 1")
    scheme = tm.get("scheme")
    if scheme is not None and scheme not in SCHEMES:
        r.fail(f"unknown scheme {scheme!r}; expected one of {list(SCHEMES)}", tp + ("scheme",))
    sample_every = r.number(tm, "sample_every", tp, default=1, integer=True, check=lambda s: s >= 1, what="sample_every >= 1")

    output = data.get("output")
    if output is not None and not isinstance(output, str):
        r.fail("expected a directory path string", ("output",))

    return ExperimentConfig(
        system=system,
        mesh=mesh,
        N=N,
        coupling=coupling,
        bc=bc,
        initial=initial,
        reference=reference,
        final_t=final_t,
        cfl=cfl,
        scheme=scheme,
        sample_every=sample_every,
        output=output,
        exact_k=exact_k,
    )


def load_config(path) -> ExperimentConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror}", (str(path),)) from None
    return parse_config(text)


# ---------------------------------------------------------------- plot scripts


def _csv_header(path) -> list[str]:
    with open(path, newline="") as fh:
        return next(csv.reader(fh), [])


def emit_plot_script(csv_paths) -> str:
    """Gnuplot script text for the given CSV artifacts.

    The figure type follows each file's header: eigenvalue scatter with
    unstable points in red, semilog error against N, energy history, or a
    parameter sweep. File names are written relative to the CSV directory.
    """
    lines = ['set datafile separator ","', "set terminal pngcairo size 640,480", ""]
    for p in csv_paths:
        p = Path(p)
        name = p.name
        head = _csv_header(p)
        lines.append(f"set output '{p.stem}_gnuplot.png'")
        if head[:3] == ["re", "im", "stable"]:
            lines += [
                'set xlabel "Re(lambda)"',
                'set ylabel "Im(lambda)"',
                "unset logscale y",
                f"plot '{name}' using 1:($3==1 ? $2 : 1/0) with points pt 7 ps 0.6 lc rgb 'black' title 'stable', \\",
                f"     '{name}' using 1:($3==0 ? $2 : 1/0) with points pt 7 ps 0.8 lc rgb 'red' title 'unstable'",
            ]
        elif head[:4] == ["N", "err_u", "err_v", "err_total"]:
            lines += [
                'set xlabel "N"',
                'set ylabel "error"',
                "set logscale y",
                f"plot '{name}' using 1:2 with linespoints pt 7 title 'base', \\",
                f"     '{name}' using 1:3 with linespoints pt 5 title 'overset', \\",
                f"     '{name}' using 1:5 with linespoints dt 2 pt 6 title 'base, optimal', \\",
                f"     '{name}' using 1:6 with linespoints dt 2 pt 4 title 'overset, optimal'",
            ]
        elif head[:1] == ["t"]:
            lines += [
                'set xlabel "t"',
                'set ylabel "energy"',
                "unset logscale y",
                f"plot '{name}' using 1:4 with lines title 'combined', \\",
                f"     '{name}' using 1:5 with lines dt 2 title 'overset-domain norm'",
            ]
        elif head[:2] == ["value", "err_total"]:
            lines += [
                'set xlabel "parameter"',
                'set ylabel "total error"',
                "unset logscale y",
                f"plot '{name}' using 1:2 with linespoints pt 7 title 'total error'",
            ]
        else:
            raise ValueError(f"unrecognised CSV header in {p}: {head}")
        lines.append("")
    return "\n".join(lines)


# ---------------------------------------------------------------- commands


class _Outputs:
    def __init__(self, root):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self.files = []

    def path(self, name):
        p = self.root / name
        self.files.append(name)
        return p

    def script(self, name, csvs):
        self.path(name).write_text(emit_plot_script([self.root / c for c in csvs]))

    def manifest(self, command):
        self.files.append("manifest.json")
        files = sorted(set(self.files))
        (self.root / "manifest.json").write_text(json.dumps({"command": command, "files": files}, indent=2) + "\n")


def _run_errors(cfg: ExperimentConfig, coupling: CouplingConfig, N: int, default_scheme: str):
    basis = build_basis(N)
    res = integrate(cfg.mesh, basis, cfg.system, coupling, cfg.bc, cfg.run_config(default_scheme), cfg.initial)
    return res, error_norms(res.state, cfg.mesh, basis, cfg.reference, res.t)


def cmd_run(cfg: ExperimentConfig, out: _Outputs) -> int:
    basis = build_basis(cfg.N)
    res = integrate(cfg.mesh, basis, cfg.system, cfg.coupling, cfg.bc, cfg.run_config("rk3"), cfg.initial)
    write_energy_csv(out.path("energy.csv"), res.series)
    plotting.plot_energy(res.series, out.path("energy.png"))
    out.script("energy.gp", ["energy.csv"])
    if cfg.reference is not None:
        rep = error_norms(res.state, cfg.mesh, basis, cfg.reference, res.t)
        write_error_csv(out.path("errors.csv"), [rep])
        print(f"final error: t={res.t:.6g} err_u={rep.err_u:.6e} err_v={rep.err_v:.6e} err_total={rep.err_total:.6e}")
    else:
        print(f"final time {res.t:.6g}: no exact reference for this configuration")
    return EXIT_OK


def cmd_spectrum(cfg: ExperimentConfig, out: _Outputs) -> int:
    L = assemble(cfg.mesh, build_basis(cfg.N), cfg.system, cfg.coupling)
    spec = analyze(L)
    write_spectrum_csv(out.path("spectrum.csv"), spec)
    plotting.plot_spectrum(spec.eigenvalues, ~spec.unstable_mask, out.path("spectrum.png"))
    out.script("spectrum.gp", ["spectrum.csv"])
    print(f"n={spec.eigenvalues.size} max_re={spec.max_real:.6e} unstable={spec.unstable_count}")
    return EXIT_OK


def _require_convergence_setup(cfg: ExperimentConfig, what: str):
    if not cfg.overset:
        raise ConfigError(f"{what} needs an overset geometry (b and c)", ("geometry",))
    if cfg.exact_k is None:
        raise ConfigError(f"{what} needs exact boundary data", ("bc",))


def cmd_converge(cfg: ExperimentConfig, out: _Outputs, n_list) -> int:
    _require_convergence_setup(cfg, "converge")
    optimal = replace(cfg.coupling, mode="decoupled-exact")
    jobs = [(c, N) for N in n_list for c in (cfg.coupling, optimal)]
    with ThreadPoolExecutor(max_workers=os.cpu_count() or 1) as pool:
        results = list(pool.map(lambda job: _run_errors(cfg, job[0], job[1], "exponential")[1], jobs))
    reports = [results[2 * i].with_optimal(results[2 * i + 1]) for i in range(len(n_list))]
    write_error_csv(out.path("errors.csv"), reports)
    plotting.plot_errors(reports, out.path("errors.png"))
    out.script("errors.gp", ["errors.csv"])
    for r in reports:
        print(f"N={r.N} err_u={r.err_u:.6e} err_v={r.err_v:.6e} err_total={r.err_total:.6e} opt_total={r.opt_total:.6e}")
    return EXIT_OK


def cmd_sweep(cfg: ExperimentConfig, out: _Outputs, param: str, values) -> int:
    _require_convergence_setup(cfg, "sweep")
    configs = [replace(cfg.coupling, **{param: v}) for v in values]
    with ThreadPoolExecutor(max_workers=os.cpu_count() or 1) as pool:
        reps = list(pool.map(lambda c: _run_errors(cfg, c, cfg.N, "exponential")[1], configs))
    errs = [r.err_total for r in reps]
    with open(out.path("sweep.csv"), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["value", "err_total"])
        for v, e in zip(values, errs):
            w.writerow([f"{v:.17g}", f"{e:.17g}"])
    plotting.plot_sweep(values, errs, out.path("sweep.png"), param)
    out.script("sweep.gp", ["sweep.csv"])
    best = int(np.argmin(errs))
    print(f"{param}: argmin={values[best]:.6g} min_err_total={errs[best]:.6e} max/min={max(errs) / min(errs):.6g}")
    return EXIT_OK


def _number_list(text, kind, name):
    items = [s for s in text.replace(",", " ").split()]
    if not items:
        raise ConfigError(f"{name} is empty", (name,))
    try:
        vals = [kind(s) for s in items]
    except ValueError:
        raise ConfigError(f"cannot parse {name} {text!r}", (name,)) from None
    if not all(math.isfinite(v) for v in vals):
        raise ConfigError(f"{name} must be finite", (name,))
    return vals


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="oversetdg", description="1-D overset-grid DGSEM experiments")
    sub = p.add_subparsers(dest="command", required=True)
    for name, help_ in (
        ("run", "time-integrate one configuration; write the energy series and final errors"),
        ("spectrum", "assemble the semi-discrete operator and write its eigenvalues"),
        ("converge", "error against N with paired decoupled-exact (optimal) runs"),
        ("sweep", "total error against gamma_v or epsilon"),
    ):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("--config", required=True, help="JSON experiment config")
        sp.add_argument("--out", help="output directory (overrides the config's output)")
        if name == "converge":
            sp.add_argument("--n-list", help="polynomial orders, e.g. '4,6,8'; default: the config's mesh.n")
        if name == "sweep":
            sp.add_argument("--param", required=True, choices=SWEEP_PARAMS)
            sp.add_argument("--values", required=True, help="parameter values, e.g. '0.5,0.75,1.0'")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        n_list = values = None
        if args.command == "converge":
            n_list = _number_list(args.n_list, int, "--n-list") if args.n_list else [cfg.N]
            if min(n_list) < 1:
                raise ConfigError("polynomial orders must be >= 1", ("--n-list",))
        if args.command == "sweep":
            values = _number_list(args.values, float, "--values")
            if args.param == "epsilon" and min(values) < 0:
                raise ConfigError("epsilon values must be >= 0", ("--values",))
        if args.command in ("converge", "sweep"):
            _require_convergence_setup(cfg, args.command)
        outdir = args.out or cfg.output
        if not outdir:
            raise ConfigError("no output directory: pass --out or set 'output'", ("output",))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    out = _Outputs(outdir)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("always", AdmissibilityWarning)
            if args.command == "run":
                code = cmd_run(cfg, out)
            elif args.command == "spectrum":
                code = cmd_spectrum(cfg, out)
            elif args.command == "converge":
                code = cmd_converge(cfg, out, n_list)
            else:
                code = cmd_sweep(cfg, out, args.param, values)
    except (NumericalFailure, EigenSolverError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        code = EXIT_NUMERICAL
    out.manifest(args.command)
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
