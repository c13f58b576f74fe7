"""Command-line front end.

Subcommands: ``green``, ``dlm``, ``table1``, ``spectrum`` and ``check``.
Lengths are in units of the lattice period (``|a1|`` for planar lattices)
unless ``--unit absolute`` is given.  ``--theta`` fixes ``k_par = sigma sin(theta)``
along the chain, or ``sigma sin(theta) (cos phi, sin phi)`` in the plane; this is
the convention that reproduces the reference table (``table1``).

Exit codes: 0 success, 2 configuration error, 3 tolerance failure, 4 singular input.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import re
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Optional, Sequence

import click
import numpy as np

from qpgreen import checks, greens, latsums, spectral
from qpgreen.errors import ConfigError, DomainError, SingularInputError, ToleranceError
from qpgreen.lattice import BlochContext, Case, Cutoffs, QuasiLattice, build
from qpgreen.specfun import AngularIndex

SCHEMA_VERSION = 1

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_TOLERANCE = 3
EXIT_SINGULAR = 4

GREEN_COLUMNS_2D = ("x", "y", "re_g", "im_g", "representation", "est_error", "terms_used", "flags")
GREEN_COLUMNS_3D = ("x", "y", "z", "re_g", "im_g", "representation", "est_error", "terms_used", "flags")
DLM_COLUMNS = (
    "eta", "l", "m", "re_d1", "im_d1", "re_d2", "im_d2", "re_d3", "im_d3", "re_total", "im_total", "flags",
)
SPECTRUM_COLUMNS = ("k", "alpha_tilde", "z")
TABLE1_COLUMNS = ("x", "y", "route", "re_g", "im_g", "re_ref", "im_ref", "abs_diff_re", "abs_diff_im")


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------

_PI_TOKEN = re.compile(r"^\s*(-?\d*\.?\d*)\s*\*?\s*pi\s*(?:/\s*(\d+(?:\.\d*)?))?\s*$", re.IGNORECASE)


def parse_angle(text) -> float:
    """A real literal, or ``pi``, ``pi/N``, ``c*pi/N`` (``c pi/N``)."""
    if isinstance(text, (int, float)):
        return float(text)
    m = _PI_TOKEN.match(str(text))
    if m:
        c = m.group(1)
        coef = -1.0 if c == "-" else (float(c) if c else 1.0)
        den = float(m.group(2)) if m.group(2) else 1.0
        if den == 0.0:
            raise ConfigError(f"bad angle {text!r}")
        return coef * math.pi / den
    try:
        return float(text)
    except ValueError as exc:
        raise ConfigError(f"bad angle {text!r}") from exc


def parse_floats(text, n: Optional[int] = None) -> list[float]:
    if isinstance(text, (list, tuple)):
        vals = [float(v) for v in text]
    else:
        try:
            vals = [float(v) for v in str(text).split(",") if v.strip()]
        except ValueError as exc:
            raise ConfigError(f"expected comma-separated numbers, got {text!r}") from exc
    if n is not None and len(vals) != n:
        raise ConfigError(f"expected {n} numbers, got {text!r}")
    return vals


def parse_points(spec: Sequence[str], dim: int) -> list[tuple[float, ...]]:
    """Points separated by ``;`` or given as repeated options, coordinates by ``,``."""
    out = []
    for item in spec:
        for chunk in str(item).split(";"):
            if chunk.strip():
                out.append(tuple(parse_floats(chunk, dim)))
    return out


def parse_range(text: str) -> np.ndarray:
    """``a:b:N`` (linear, N samples) or ``a:b:logsN`` (N log-spaced samples)."""
    parts = str(text).split(":")
    if len(parts) != 3:
        raise ConfigError(f"range must be a:b:N or a:b:logsN, got {text!r}")
    try:
        a, b = float(parts[0]), float(parts[1])
        spec = parts[2].strip().lower()
        if spec.startswith("logs"):
            n = int(spec[4:])
            if a <= 0.0 or b <= 0.0:
                raise ConfigError("log-spaced range needs positive ends")
            vals = np.geomspace(a, b, n)
        else:
            n = int(spec)
            vals = np.linspace(a, b, n)
    except ValueError as exc:
        raise ConfigError(f"bad range {text!r}") from exc
    if n < 1:
        raise ConfigError("range needs at least one sample")
    return vals


def parse_grid(text: str, dim: int) -> list[tuple[float, ...]]:
    """``x0:x1:nx,y0:y1:ny[,z0:z1:nz]``; points ordered with the last axis fastest."""
    axes = [parse_range(p) for p in str(text).split(",")]
    if len(axes) != dim:
        raise ConfigError(f"grid needs {dim} axes")
    mesh = np.meshgrid(*axes, indexing="ij")
    return [tuple(float(c) for c in row) for row in np.stack([m.ravel() for m in mesh], axis=1)]


def parse_indices(text: str, dim: int) -> list[AngularIndex]:
    """2D: ``0,1,-1``; 3D: ``l:m`` pairs separated by commas."""
    out = []
    try:
        for tok in str(text).split(","):
            tok = tok.strip()
            if not tok:
                continue
            if dim == 2:
                out.append(AngularIndex.d2(int(tok)))
            else:
                l, m = tok.split(":")
                out.append(AngularIndex.d3(int(l), int(m)))
    except (ValueError, DomainError) as exc:
        raise ConfigError(f"bad index list {text!r}: {exc}") from exc
    return out


# ---------------------------------------------------------------------------
# Configuration
# ---------------------------------------------------------------------------


@dataclass
class RunConfig:
    """Resolved run configuration; lattice, wavenumber and Bloch momentum in absolute units."""

    case: Case
    lattice: QuasiLattice
    sigma: float
    k_par: np.ndarray
    eta: float
    cutoffs: Cutoffs
    l_max: Optional[int] = None
    points: list = field(default_factory=list)
    fmt: str = "csv"
    output: Optional[str] = None
    length_unit: float = 1.0

    def context(self, eta: Optional[float] = None, sigma: Optional[complex] = None) -> BlochContext:
        return BlochContext(self.sigma if sigma is None else sigma, self.k_par, self.eta if eta is None else eta, self.cutoffs)


def load_config_file(path: Optional[str]) -> dict[str, Any]:
    if not path:
        return {}
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config file must hold a JSON object")
    return {str(k).replace("-", "_"): v for k, v in data.items()}


def merge(file_values: dict[str, Any], flags: dict[str, Any]) -> dict[str, Any]:
    """Flags override file values; ``None`` and empty tuples count as unset."""
    out = dict(file_values)
    for k, v in flags.items():
        if v is None or (isinstance(v, tuple) and not v):
            continue
        out[k] = v
    return out


def _positive(name: str, v: float) -> float:
    v = float(v)
    if not v > 0.0:
        raise ConfigError(f"{name} must be positive")
    return v


def resolve(opts: dict[str, Any], need_wave: bool = True) -> RunConfig:
    """Validate merged options into a ``RunConfig``."""
    case = Case.parse(opts.get("case", "1in2"))
    unit = str(opts.get("unit", "period")).lower()
    if unit not in ("period", "absolute"):
        raise ConfigError("--unit must be 'period' or 'absolute'")
    if case.lattice_dim == 1:
        period = _positive("period", opts.get("period", 1.0))
        basis: Any = period
        L = period
    else:
        raw = opts.get("basis", [[1.0, 0.0], [0.0, 1.0]])
        vals = parse_floats(raw if not isinstance(raw, list) or not raw or not isinstance(raw[0], list) else sum(raw, []), 4)
        basis = np.array(vals).reshape(2, 2)
        L = float(np.linalg.norm(basis[0]))
    try:
        lat = build(case, basis)
    except DomainError as exc:
        raise ConfigError(str(exc)) from exc
    scale = L if unit == "period" else 1.0

    sigma = 0.0
    k_par = np.zeros(case.lattice_dim)
    if need_wave:
        have_s = opts.get("sigma") is not None
        have_r = opts.get("lambda_ratio") is not None
        if have_s == have_r:
            raise ConfigError("give exactly one of --sigma and --lambda-ratio")
        if have_s:
            sigma = _positive("sigma", opts["sigma"]) / scale
        else:
            # lambda / v0 for chains; lambda / |a1| for planar lattices
            lam = _positive("lambda-ratio", opts["lambda_ratio"]) * (lat.v0 if case.lattice_dim == 1 else L)
            sigma = 2.0 * math.pi / lam
        k_par = _resolve_kpar(opts, case, sigma, scale)
    elif opts.get("kpar") is not None:
        k_par = np.array(parse_floats(opts["kpar"], case.lattice_dim)) / scale

    eta = _positive("eta", opts.get("eta", 1.0)) * scale * scale
    tol = float(opts.get("tol", 1e-17))
    try:
        cutoffs = Cutoffs(tol=tol)
    except DomainError as exc:
        raise ConfigError(str(exc)) from exc
    l_max = opts.get("lmax")
    if l_max is not None:
        l_max = int(l_max)
        if l_max < 0:
            raise ConfigError("--lmax must be nonnegative")
    fmt = str(opts.get("format", "csv")).lower()
    if fmt not in ("csv", "json"):
        raise ConfigError("--format must be csv or json")
    return RunConfig(case, lat, sigma, k_par, eta, cutoffs, l_max, [], fmt, opts.get("output"), scale)


def _resolve_kpar(opts: dict[str, Any], case: Case, sigma: float, scale: float) -> np.ndarray:
    have_t = opts.get("theta") is not None
    have_k = opts.get("kpar") is not None
    if have_t and have_k:
        raise ConfigError("give at most one of --theta and --kpar")
    if have_k:
        return np.array(parse_floats(opts["kpar"], case.lattice_dim)) / scale
    theta = parse_angle(opts.get("theta", 0.0))
    kp = sigma * math.sin(theta)
    if case.lattice_dim == 1:
        return np.array([kp])
    phi = parse_angle(opts.get("phi", 0.0))
    return np.array([kp * math.cos(phi), kp * math.sin(phi)])


# ---------------------------------------------------------------------------
# Output
# ---------------------------------------------------------------------------


def fmt_num(v) -> str:
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def render(records: list[dict[str, Any]], columns: Sequence[str], fmt: str) -> str:
    if fmt == "json":
        rows = [{"schema_version": SCHEMA_VERSION, **{c: r[c] for c in columns}} for r in records]
        return json.dumps(rows, indent=1) + "\n"
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in records:
        w.writerow([fmt_num(r[c]) for c in columns])
    return buf.getvalue()


def emit(text: str, output: Optional[str]) -> None:
    if output:
        with open(output, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        click.echo(text, nl=False)


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------


def reduce_to_cell(lat: QuasiLattice, k_par: np.ndarray, point) -> tuple[np.ndarray, complex]:
    """Shift ``R`` by a lattice vector ``r_m`` into the central cell; ``G(R) = e^{ik.r_m} G(R - r_m)``."""
    R = np.asarray(point, dtype=float).copy()
    par, _ = lat.split(R)
    coeff = np.rint(np.linalg.solve(lat.basis.T, par))
    shift = coeff @ lat.basis
    R[: lat.lattice_dim] -= shift
    return R, complex(np.exp(1j * float(shift @ k_par)))


def evaluate_point(cfg: RunConfig, rep: str, damping: float, point) -> dict[str, Any]:
    lat = cfg.lattice
    R = np.asarray(point, dtype=float) * cfg.length_unit
    phase = 1.0 + 0j
    if rep == "ewald":
        R, phase = reduce_to_cell(lat, cfg.k_par, R)
        g = greens.green_ewald(lat, cfg.context(), R, l_max=cfg.l_max)
    elif rep == "dual":
        g = greens.green_dual(lat, cfg.context(), R)
    elif rep == "direct":
        g = greens.green_direct_damped(lat, cfg.context(sigma=cfg.sigma * (1.0 + 1j * damping)), R)
    elif rep == "laplace":
        g = greens.green_laplace_ewald(lat, cfg.k_par, R, eta=cfg.eta, cutoffs=cfg.cutoffs)
    else:
        raise ConfigError(f"unknown representation {rep!r}")
    v = phase * g.value
    rec = {name: float(c) for name, c in zip(("x", "y", "z"), point)}
    rec.update(
        re_g=float(v.real),
        im_g=float(v.imag),
        representation=g.representation.value,
        est_error=float(g.est_error),
        terms_used=int(g.terms_used),
        flags="|".join(g.flags),
    )
    return rec


def _worker(args):
    cfg, rep, damping, point = args
    return evaluate_point(cfg, rep, damping, point)


def evaluate_all(cfg: RunConfig, rep: str, damping: float, workers: int) -> list[dict[str, Any]]:
    jobs = [(cfg, rep, damping, p) for p in cfg.points]
    if workers <= 1 or len(jobs) < 2:
        return [_worker(j) for j in jobs]
    # map preserves input order, so the output does not depend on scheduling
    with ProcessPoolExecutor(max_workers=min(workers, len(jobs))) as pool:
        return list(pool.map(_worker, jobs, chunksize=max(1, len(jobs) // (4 * workers))))


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def _run(fn):
    """Map package errors onto exit codes."""
    try:
        return fn()
    except SingularInputError as exc:
        click.echo(f"error: singular input: {exc}", err=True)
        sys.exit(EXIT_SINGULAR)
    except ToleranceError as exc:
        click.echo(f"error: tolerance: {exc}", err=True)
        sys.exit(EXIT_TOLERANCE)
    except (ConfigError, DomainError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_CONFIG)


def lattice_options(f):
    opts = [
        click.option("--config", "config_file", type=click.Path(), default=None, help="JSON file of option values."),
        click.option("--case", default=None, help="Geometry: 1in2, 1in3 or 2in3."),
        click.option("--period", type=float, default=None, help="Chain period."),
        click.option("--basis", default=None, help="Planar basis a1x,a1y,a2x,a2y."),
        click.option("--eta", type=float, default=None, help="Ewald splitting parameter."),
        click.option("--tol", type=float, default=None, help="Inner-series tolerance."),
        click.option("--unit", default=None, help="'period' (default) or 'absolute'."),
        click.option("--format", "format", default=None, help="csv or json."),
        click.option("--output", "-o", default=None, help="Output file (default stdout)."),
    ]
    for o in reversed(opts):
        f = o(f)
    return f


def wave_options(f):
    opts = [
        click.option("--sigma", type=float, default=None, help="Wavenumber."),
        click.option("--lambda-ratio", type=float, default=None, help="Wavelength over the period."),
        click.option("--theta", default=None, help="Incidence angle, real or pi/N."),
        click.option("--phi", default=None, help="In-plane azimuth for 2in3."),
        click.option("--kpar", default=None, help="Bloch momentum, comma-separated."),
        click.option("--lmax", type=int, default=None, help="Angular truncation."),
    ]
    for o in reversed(opts):
        f = o(f)
    return f


@click.group()
@click.version_option(package_name="artifact")
def main() -> None:
    """Quasi-periodic Green's functions and lattice sums."""


@main.command()
@lattice_options
@wave_options
@click.option("--points", multiple=True, help="Points 'x,y[,z]', separated by ';' or repeated.")
@click.option("--grid", default=None, help="Grid x0:x1:nx,y0:y1:ny[,z0:z1:nz].")
@click.option("--rep", default=None, help="ewald (default), dual, direct or laplace.")
@click.option("--damping", type=float, default=None, help="Relative damping eps for --rep direct.")
@click.option("--workers", type=int, default=None, help="Worker processes (default: CPU count).")
def green(config_file, **flags):
    """Evaluate the quasi-periodic Green's function at points."""

    def run():
        opts = merge(load_config_file(config_file), flags)
        rep = str(opts.get("rep", "ewald")).lower()
        cfg = resolve(opts, need_wave=rep != "laplace")
        dim = cfg.case.dimension
        pts = parse_points(opts.get("points", ()) if not isinstance(opts.get("points"), str) else [opts["points"]], dim)
        if opts.get("grid"):
            pts += parse_grid(opts["grid"], dim)
        if not pts:
            raise ConfigError("no evaluation points given")
        cfg.points = pts
        damping = float(opts.get("damping", 1e-3))
        if rep == "direct" and not damping > 0.0:
            raise ConfigError("--damping must be positive")
        workers = int(opts.get("workers") or os.cpu_count() or 1)
        records = evaluate_all(cfg, rep, damping, workers)
        cols = GREEN_COLUMNS_2D if dim == 2 else GREEN_COLUMNS_3D
        emit(render(records, cols, cfg.fmt), cfg.output)

    _run(run)


@main.command()
@lattice_options
@wave_options
@click.option("--indices", default=None, help="2D: '0,1,-1'; 3D: 'l:m,...'.")
@click.option("--eta-sweep", default=None, help="a:b:N or a:b:logsN; one block per eta.")
def dlm(config_file, **flags):
    """Tabulate the lattice sums D_L and their three parts."""

    def run():
        opts = merge(load_config_file(config_file), flags)
        cfg = resolve(opts)
        if opts.get("indices"):
            idx = parse_indices(opts["indices"], cfg.case.dimension)
        else:
            idx = latsums.all_indices(cfg.case, 4 if cfg.l_max is None else cfg.l_max)
        etas = parse_range(opts["eta_sweep"]) * cfg.length_unit**2 if opts.get("eta_sweep") else [cfg.eta]
        records = []
        for eta in etas:
            sums = latsums.lattice_sum(cfg.lattice, cfg.context(eta=float(eta)), idx)
            for i in idx:
                c = sums[i]
                rec: dict[str, Any] = {"eta": float(eta), "l": i.l, "m": "" if i.m is None else i.m}
                for name, v in (("d1", c.d1), ("d2", c.d2), ("d3", c.d3), ("total", c.total)):
                    rec[f"re_{name}"], rec[f"im_{name}"] = float(v.real), float(v.imag)
                rec["flags"] = "|".join(c.diagnostics.flags)
                records.append(rec)
        emit(render(records, DLM_COLUMNS, cfg.fmt), cfg.output)

    _run(run)


@main.command()
@click.option("--stats", is_flag=True, help="Report term counts against the damped image sum.")
@click.option("--format", "fmt", default="table", help="table, csv or json.")
def table1(stats, fmt):
    """Reproduce the reference table with the dual and Ewald routes."""

    def run():
        lat = build("1in2", 1.0)
        ctx = checks.table1_context()
        records = []
        worst_e = 0.0
        for p, d_ref, e_ref in zip(checks.TABLE1_POINTS, checks.TABLE1_ROW_D, checks.TABLE1_ROW_E):
            gd = greens.green_dual(lat, ctx, p).value
            ge = greens.green_ewald(lat, ctx, p).value
            for route, v, ref in (("dual", gd, d_ref), ("ewald", ge, e_ref)):
                d = v - ref
                records.append(
                    dict(x=p[0], y=p[1], route=route, re_g=v.real, im_g=v.imag, re_ref=ref.real, im_ref=ref.imag,
                         abs_diff_re=abs(d.real), abs_diff_im=abs(d.imag))
                )
            worst_e = max(worst_e, abs((ge - e_ref).real), abs((ge - e_ref).imag))
            records.append(dict(x=p[0], y=p[1], route="dual-ewald", re_g=(gd - ge).real, im_g=(gd - ge).imag,
                                re_ref=0.0, im_ref=0.0, abs_diff_re=abs((gd - ge).real), abs_diff_im=abs((gd - ge).imag)))
        if fmt in ("csv", "json"):
            click.echo(render(records, TABLE1_COLUMNS, fmt), nl=False)
        else:
            click.echo(f"{'point':>14} {'route':>10} {'value':>40} {'reference':>40} {'|dRe|':>9} {'|dIm|':>9}")
            for r in records:
                val = f"{r['re_g']:.15f}{r['im_g']:+.15f}i"
                ref = f"{r['re_ref']:.15f}{r['im_ref']:+.15f}i" if r["route"] != "dual-ewald" else "-"
                pt = f"({r['x']}, {r['y']})"
                click.echo(f"{pt:>14} {r['route']:>10} {val:>40} {ref:>40} "
                           f"{r['abs_diff_re']:9.1e} {r['abs_diff_im']:9.1e}")
        if stats:
            click.echo("term counts: ewald route vs damped image sum (eps, eps/2, eps/4 extrapolated) at 1e-6")
            for p, e_ref in zip(checks.TABLE1_POINTS, checks.TABLE1_ROW_E):
                n_e, err_e = checks.ewald_terms(p)
                n_d, eps, err_d = checks.damped_direct_terms(p, 1e-6, e_ref)
                click.echo(f"  ({p[0]}, {p[1]}): ewald {n_e} terms (|d| {err_e:.1e}); direct {n_d} terms "
                           f"(eps {eps:.2e}, |d| {err_d:.1e}); ratio {n_d / n_e:.0f}")
        if worst_e > 1e-12:
            raise ToleranceError(f"Ewald route differs from row E by {worst_e:.2e}")

    _run(run)


@main.command()
@click.option("--config", "config_file", type=click.Path(), default=None)
@click.option("--k-grid", default=None, help="Bloch momenta a:b:N.")
@click.option("--k", "k_values", default=None, help="Comma-separated Bloch momenta.")
@click.option("--alpha", default=None, help="Coupling alpha_tilde (comma-separated for several).")
@click.option("--bracket", default=None, help="lo,hi for z; default: search below k^2.")
@click.option("--period", type=float, default=None)
@click.option("--format", "format", default=None)
@click.option("--output", "-o", default=None)
def spectrum(config_file, **flags):
    """Solve D00(sqrt(z), k) = alpha_tilde for a chain of point interactions in 3D."""

    def run():
        opts = merge(load_config_file(config_file), flags)
        a = _positive("period", opts.get("period", 1.0))
        ks: list[float] = []
        if opts.get("k_grid"):
            ks += list(parse_range(opts["k_grid"]))
        if opts.get("k_values") is not None:
            ks += parse_floats(opts["k_values"])
        if not ks:
            raise ConfigError("give --k-grid or --k")
        if opts.get("alpha") is None:
            raise ConfigError("--alpha is required")
        alphas = parse_floats(opts["alpha"])
        fmt = str(opts.get("format", "csv")).lower()
        bracket = parse_floats(opts["bracket"], 2) if opts.get("bracket") else None
        records = []
        for k in ks:
            for al in alphas:
                br = tuple(bracket) if bracket else spectral.bracket_for(k, al, a)
                z = spectral.solve_point_interaction(spectral.SpectralQuery(float(k), al, br), a)
                records.append({"k": float(k), "alpha_tilde": al, "z": float(z)})
        emit(render(records, SPECTRUM_COLUMNS, fmt), opts.get("output"))

    _run(run)


@main.command()
@click.option("--criteria", default=None, help="Comma-separated criterion numbers (default: all).")
@click.option("--quick", is_flag=True, help="Skip the oracle-bound checks 5 and 8.")
def check(criteria, quick):
    """Run the acceptance checks; exit 3 if any fails."""

    def run():
        chosen = [int(c) for c in criteria.split(",")] if criteria else list(checks.CRITERIA)
        if quick:
            chosen = [c for c in chosen if c not in (5, 8)]
        failed = 0
        for n in chosen:
            if n not in checks.CRITERIA:
                raise ConfigError(f"no criterion {n}")
            res = checks.CRITERIA[n]()
            click.echo(res.line())
            failed += not res.passed
        if failed:
            raise ToleranceError(f"{failed} check(s) failed")

    _run(run)


if __name__ == "__main__":  # pragma: no cover
    main()
