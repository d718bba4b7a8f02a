"""Command-line driver.

Exit codes: 0 success, 2 invalid configuration or arguments, 3 numerical
failure, 4 resource limit.
"""

from __future__ import annotations

import cmath
import csv
import datetime as _dt
import hashlib
import io
import json
import logging
import math
import os
import sys
import traceback
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import click
import jsonschema
import numpy as np

from . import bogolyubov, decoherence, dynamics, fock, gaussian, oracle
from .errors import DomainError, ResourceError, ValidationError
from .symplectic import PARAM_NAMES, SqueezeRotParams, algebra_check, symplectic_residual

log = logging.getLogger("foursqueeze")

SCHEMA_VERSION = 1
THREADS_ENV = "FOURSQUEEZE_THREADS"
EXIT_SCHEMA, EXIT_NUMERICAL, EXIT_RESOURCE = 2, 3, 4
FOCK_LARGE_R = 2.0

_RANGE3 = {"type": "array", "items": {"type": "number"}, "minItems": 3, "maxItems": 3}
_SCALE_FACTOR = {
    "oneOf": [
        {
            "type": "object",
            "properties": {"type": {"const": "de_sitter"}, "H": {"type": "number", "exclusiveMinimum": 0}},
            "required": ["type"],
            "additionalProperties": False,
        },
        {
            "type": "object",
            "properties": {
                "type": {"const": "power_law"},
                "a0": {"type": "number", "exclusiveMinimum": 0},
                "eta0": {"type": "number"},
                "exponent": {"type": "number"},
            },
            "required": ["type", "exponent"],
            "additionalProperties": False,
        },
        {
            "type": "object",
            "properties": {"type": {"const": "table"}, "path": {"type": "string"}},
            "required": ["type", "path"],
            "additionalProperties": False,
        },
    ]
}
_PARAM_OBJECT = {
    "type": "object",
    "properties": {name: {"type": "number"} for name in (*PARAM_NAMES, "r1", "r2", "tau_abs", "tau_arg")},
    "additionalProperties": False,
}

CONFIG_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "properties": {
        "model": {
            "oneOf": [
                {
                    "type": "object",
                    "properties": {
                        "type": {"const": "cosmology"},
                        "zeta": {"type": "number"},
                        "lambda": {"type": "number"},
                        "scale_factor": _SCALE_FACTOR,
                    },
                    "required": ["type", "zeta", "lambda", "scale_factor"],
                    "additionalProperties": False,
                },
                {
                    "type": "object",
                    "properties": {"type": {"const": "table"}, "path": {"type": "string"}},
                    "required": ["type", "path"],
                    "additionalProperties": False,
                },
            ]
        },
        "k": {
            "oneOf": [
                {"type": "number", "exclusiveMinimum": 0},
                {
                    "type": "object",
                    "properties": {
                        "grid": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}, "minItems": 1}
                    },
                    "required": ["grid"],
                    "additionalProperties": False,
                },
            ]
        },
        "time": {
            "type": "object",
            "properties": {
                "start": {"type": "number"},
                "end": {"type": "number"},
                "steps": {"type": "integer", "minimum": 1},
                "stride": {"type": "integer", "minimum": 1},
            },
            "required": ["start", "end", "steps"],
            "additionalProperties": False,
        },
        "methods": {
            "type": "array",
            "items": {"enum": ["gaussian", "perturbative", "fock"]},
            "uniqueItems": True,
        },
        "cutoff": {"type": "integer", "minimum": 0},
        "thresholds": {
            "type": "object",
            "properties": {
                "gamma": {"type": "number", "exclusiveMinimum": 0},
                "distortion": {"type": "number", "exclusiveMinimum": 0},
            },
            "additionalProperties": False,
        },
        "sweep": {
            "type": "object",
            "properties": {"tau": _RANGE3, "r": _RANGE3, "base": _PARAM_OBJECT},
            "required": ["tau", "r"],
            "additionalProperties": False,
        },
        "output": {
            "type": "object",
            "properties": {"dir": {"type": "string"}},
            "additionalProperties": False,
        },
        "seed": {"type": "integer"},
    },
    "required": ["model", "k", "time"],
    "additionalProperties": False,
}


# ------------------------------------------------------------------ helpers

class ConfigError(click.ClickException):
    exit_code = EXIT_SCHEMA


def config_hash(obj):
    blob = json.dumps(obj, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()


def load_config(path):
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    validate_config(cfg)
    return cfg


def validate_config(cfg):
    try:
        jsonschema.validate(cfg, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"config schema violation at {where}: {exc.message}") from exc
    t = cfg["time"]
    if not t["end"] > t["start"]:
        raise ConfigError("config schema violation at time: end must exceed start")


def _fmt(v):
    if isinstance(v, bool):
        return str(int(v))
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_csv(path, columns, rows, comments=()):
    """CSV with '#' comment lines, a header row, and round-trip float formatting."""
    buf = io.StringIO()
    for c in comments:
        buf.write(f"# {c}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    if path is None or str(path) == "-":
        click.echo(buf.getvalue(), nl=False)
    else:
        Path(path).write_text(buf.getvalue())


def parse_range(text):
    """'a:b:n' -> n evenly spaced values from a to b inclusive."""
    parts = text.split(":")
    try:
        if len(parts) == 1:
            return [float(parts[0])]
        a, b, n = float(parts[0]), float(parts[1]), int(parts[2])
    except (ValueError, IndexError) as exc:
        raise click.BadParameter(f"expected a:b:n, got {text!r}") from exc
    if n < 1 or not (math.isfinite(a) and math.isfinite(b)):
        raise click.BadParameter(f"range {text!r} must be finite with n >= 1")
    return [float(x) for x in np.linspace(a, b, n)]


def params_from_mapping(values):
    """Build parameters from names in PARAM_NAMES plus r1, r2, tau_abs, tau_arg."""
    values = dict(values)
    unknown = set(values) - set(PARAM_NAMES) - {"r1", "r2", "tau_abs", "tau_arg"}
    if unknown:
        raise DomainError(f"unknown parameter names {sorted(unknown)}")
    r1, r2 = values.pop("r1", None), values.pop("r2", None)
    tau_abs, tau_arg = values.pop("tau_abs", None), values.pop("tau_arg", 0.0)
    if r1 is not None or r2 is not None:
        if "d1" in values or "d2" in values:
            raise DomainError("give either r1/r2 or d1/d2, not both")
        p = SqueezeRotParams.from_squeezing(r1 or 0.0, r2 or 0.0, **values)
    else:
        p = SqueezeRotParams(**values)
    if tau_abs is not None:
        if "theta5" in values or "theta6" in values:
            raise DomainError("give either tau_abs/tau_arg or theta5/theta6, not both")
        p = p.with_tau(tau_abs * cmath.exp(1j * tau_arg))
    return p


def _param_option(f):
    return click.option(
        "-p",
        "--param",
        "param_items",
        multiple=True,
        metavar="NAME=VALUE",
        help="Bloch-Messiah parameter (theta3..6, d1, d2, phi3..6, or r1, r2, tau_abs, tau_arg).",
    )(f)


def _parse_params(items):
    out = {}
    for item in items:
        name, sep, value = item.partition("=")
        if not sep:
            raise click.BadParameter(f"expected NAME=VALUE, got {item!r}", param_hint="--param")
        try:
            out[name.strip()] = float(value)
        except ValueError as exc:
            raise click.BadParameter(f"{item!r} is not numeric", param_hint="--param") from exc
    try:
        return params_from_mapping(out), out
    except DomainError as exc:
        raise click.BadParameter(str(exc), param_hint="--param") from exc


def thread_count(option):
    if option:
        return max(1, int(option))
    env = os.environ.get(THREADS_ENV)
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            log.warning("ignoring non-integer %s=%r", THREADS_ENV, env)
    return 1


def ordered_map(fn, items, threads):
    """Map preserving input order; worker count never changes the results."""
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def _failing_module(exc):
    for frame in reversed(traceback.extract_tb(exc.__traceback__)):
        p = Path(frame.filename)
        if p.parent.name == "foursqueeze":
            return f"foursqueeze.{p.stem}"
    return "foursqueeze"


class _Group(click.Group):
    """Maps library exceptions onto the documented exit codes."""

    def invoke(self, ctx):
        try:
            return super().invoke(ctx)
        except (click.ClickException, click.exceptions.Exit, click.Abort, SystemExit):
            raise
        except ResourceError as exc:
            hint = f" (suggested cutoff {exc.suggested_cutoff})" if exc.suggested_cutoff is not None else ""
            click.echo(f"error: resource limit: {exc}{hint}", err=True)
            ctx.exit(EXIT_RESOURCE)
        except (DomainError, ValidationError) as exc:
            click.echo(f"error: {exc}", err=True)
            ctx.exit(EXIT_SCHEMA)
        except (ArithmeticError, np.linalg.LinAlgError, FloatingPointError) as exc:
            stamp = _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")
            click.echo(f"error: numerical failure in {_failing_module(exc)} at {stamp}: {exc}", err=True)
            ctx.exit(EXIT_NUMERICAL)


@click.group(cls=_Group)
@click.option("-v", "--verbose", count=True, help="Repeat for more logging.")
def main(verbose):
    """Four-mode squeezing toolkit."""
    level = logging.WARNING - 10 * min(verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")


def _tolerances(**items):
    click.echo("# tolerances: " + ", ".join(f"{k}={v:g}" for k, v in items.items()), err=True)


# ------------------------------------------------------------------ algebra-check

@main.command("algebra-check")
def algebra_check_cmd():
    """Compare every commutator of the ten generators with the stored table."""
    _tolerances(commutator_residual=0)
    rows = algebra_check()
    for i, j, ok in rows:
        click.echo(f"[L{i}, L{j}]  {'exact' if ok else 'MISMATCH'}")
    good = sum(ok for *_, ok in rows)
    click.echo(f"{good}/{len(rows)} commutators exact")
    if good != len(rows):
        sys.exit(EXIT_NUMERICAL)


# ------------------------------------------------------------------ runs

def build_kernel(cfg, base_dir=Path(".")):
    model = cfg["model"]
    if model["type"] == "table":
        src = dynamics.TableKernel.from_csv(base_dir / model["path"])
        return lambda k: src
    sf = model["scale_factor"]
    if sf["type"] == "de_sitter":
        a = dynamics.de_sitter(sf.get("H", 1.0))
    elif sf["type"] == "power_law":
        a = dynamics.power_law(sf.get("a0", 1.0), sf.get("eta0", 1.0), sf["exponent"])
    else:
        rows = np.loadtxt(base_dir / sf["path"], delimiter=",", comments="#", skiprows=1, ndmin=2)
        a = dynamics.tabulated(rows[:, 0], rows[:, 1])

    def for_k(k):
        m = dynamics.CosmologyModel(model["zeta"], model["lambda"], a, k)
        return lambda eta: dynamics.cosmology_kernel(m, eta)

    return for_k


def k_grid(cfg):
    k = cfg["k"]
    return [float(k)] if not isinstance(k, dict) else [float(x) for x in k["grid"]]


def warn_initial_kernel(p, k, t):
    if any(abs(getattr(p, n)) > 0 for n in ("R1", "R2", "R12", "F12")):
        click.echo(
            f"warning: kernel at t_in={t} for k={k} has squeezing or coupling terms "
            f"(R1={p.R1:.3g}, R2={p.R2:.3g}, R12={p.R12:.3g}, F12={p.F12:.3g}); "
            "the vacuum at t_in is only approximately the instantaneous ground state",
            err=True,
        )


TRAJECTORY_COLUMNS = ("k", "t", *bogolyubov.CSV_COLUMNS, *PARAM_NAMES, "symplectic_residual")


def integrate(cfg, kernel_for, k):
    t = cfg["time"]
    kern = kernel_for(k)
    warn_initial_kernel(kern(t["start"]), k, t["start"])
    traj = dynamics.evolve_green(kern, t["start"], t["end"], t["steps"], k=k)
    stride = t.get("stride", 1)
    idx = list(range(0, len(traj.times), stride))
    if idx[-1] != len(traj.times) - 1:
        idx.append(len(traj.times) - 1)
    return traj, idx


def trajectory_rows(traj, idx):
    rows = []
    for i in idx:
        p = traj.params[i]
        rows.append(
            [traj.k, float(traj.times[i]), *traj.bogolyubov(i).csv_row(), *p.as_array().tolist(),
             symplectic_residual(traj.matrices[i])]
        )
    return rows


SPECTRA_CSV_COLUMNS = ("k", "t", *gaussian.SPECTRA_COLUMNS, "gamma", "sigma", "entropy")
PURITY_COLUMNS = ("k", "t", "gamma_gaussian", "gamma_pert", "gamma_fock", "fock_tail")


def observable_rows(traj, idx, methods, cutoff):
    spectra, purity = [], []
    skipped = False
    for i in idx:
        t = float(traj.times[i])
        blocks = gaussian.covariance_from_helicity(traj.helicity[i], traj.k)
        g = gaussian.purity_gaussian(gaussian.reduce(blocks))
        spectra.append([traj.k, t, *blocks.entries(), g.gamma, g.sigma, g.entropy])
        p = traj.params[i]
        pert = gaussian.purity_perturbative(p) if "perturbative" in methods else ""
        fock_v, tail = "", ""
        if "fock" in methods:
            if max(abs(p.r1), abs(p.r2)) > FOCK_LARGE_R:
                skipped = True
            else:
                est = decoherence.purity_fock(p, cutoff)
                fock_v, tail = est.value, est.tail
        purity.append([traj.k, t, g.gamma, pert, fock_v, tail])
    if skipped:
        click.echo(
            f"warning: Fock route skipped where r > {FOCK_LARGE_R:g} (slow/unreliable); "
            "the Gaussian purity is authoritative there",
            err=True,
        )
    return spectra, purity


def sweep_rows(base, taus, rs, gamma_max, distortion_max):
    rows = decoherence.decoherence_sweep(base, taus, rs, gamma_max, distortion_max)
    return [[r.tau, r.r, r.gamma, r.gamma_pert, r.distortion, r.flag] for r in rows]


def run_config(cfg, out_dir, threads=1, base_dir=Path("."), trajectory_only=False):
    """Execute a validated configuration; returns the manifest dictionary."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    digest = config_hash(cfg)
    comment = f"config_sha256={digest} schema={SCHEMA_VERSION}"
    methods = cfg.get("methods", ["gaussian"])
    cutoff = cfg.get("cutoff", 20)
    kernel_for = build_kernel(cfg, base_dir)
    ks = k_grid(cfg)

    def work(k):
        traj, idx = integrate(cfg, kernel_for, k)
        traj_rows = trajectory_rows(traj, idx)
        if trajectory_only:
            return traj_rows, [], []
        return (traj_rows, *observable_rows(traj, idx, methods, cutoff))

    results = ordered_map(work, ks, threads)
    files = []

    def emit(name, columns, rows):
        write_csv(out_dir / name, columns, rows, [comment])
        files.append({"path": name, "columns": list(columns), "schema_version": SCHEMA_VERSION})

    emit("trajectory.csv", TRAJECTORY_COLUMNS, [r for res in results for r in res[0]])
    if not trajectory_only:
        emit("spectra.csv", SPECTRA_CSV_COLUMNS, [r for res in results for r in res[1]])
        emit("purity.csv", PURITY_COLUMNS, [r for res in results for r in res[2]])
        if "sweep" in cfg:
            sw = cfg["sweep"]
            th = cfg.get("thresholds", {})
            base = params_from_mapping(sw.get("base", {}))
            taus = np.linspace(sw["tau"][0], sw["tau"][1], int(sw["tau"][2]))
            rs = np.linspace(sw["r"][0], sw["r"][1], int(sw["r"][2]))
            rows = sweep_rows(base, taus, rs, th.get("gamma", 0.5), th.get("distortion", 0.05))
            emit("sweep.csv", decoherence.SWEEP_COLUMNS, rows)
    manifest = {
        "schema_version": SCHEMA_VERSION,
        "config_sha256": digest,
        "seed": cfg.get("seed", 0),
        "files": files,
    }
    (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return manifest


def _out_dir(cfg, out):
    if out:
        return Path(out)
    return Path(cfg.get("output", {}).get("dir", "out"))


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(dir_okay=False))
@click.option("--out", type=click.Path(file_okay=False), help="Output directory (overrides the config).")
@click.option("--threads", type=int, default=None, help=f"Worker threads over the k grid (default ${THREADS_ENV} or 1).")
def run(config_path, out, threads):
    """Evolve, extract parameters, and write spectra, purity and sweep tables."""
    cfg = load_config(config_path)
    _tolerances(constraint=bogolyubov.CONSTRAINT_TOL, projection_series=dynamics.PROJECTION_SERIES_BELOW)
    m = run_config(cfg, _out_dir(cfg, out), thread_count(threads), Path(config_path).parent)
    for f in m["files"]:
        click.echo(f"wrote {f['path']}")


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(dir_okay=False))
@click.option("--out", type=click.Path(file_okay=False))
@click.option("--threads", type=int, default=None)
def evolve(config_path, out, threads):
    """Integrate the Green matrix and write the Bogolyubov/parameter trajectory."""
    cfg = load_config(config_path)
    _tolerances(constraint=bogolyubov.CONSTRAINT_TOL)
    run_config(cfg, _out_dir(cfg, out), thread_count(threads), Path(config_path).parent, trajectory_only=True)
    click.echo("wrote trajectory.csv")


# ------------------------------------------------------------------ parameter-level commands

@main.command()
@_param_option
@click.option("--cutoff", type=int, required=True)
@click.option("--truncation", type=click.Choice(["label", "total"]), default="label")
@click.option("--out", type=click.Path(dir_okay=False), default="-")
def state(param_items, cutoff, truncation, out):
    """Dump the closed-form amplitudes c(n, m, s, t)."""
    p, raw = _parse_params(param_items)
    table = fock.state_table(p, cutoff, truncation=truncation)
    _tolerances(tail_bound=table.tail_bound)
    rows = [[*key, c.real, c.imag, abs(c) ** 2] for key, c in sorted(table.amplitudes.items())]
    comments = [f"params {json.dumps(raw, sort_keys=True)} cutoff={cutoff} truncation={truncation}",
                f"config_sha256={config_hash({'params': raw, 'cutoff': cutoff, 'truncation': truncation})}"]
    write_csv(out, ("n", "m", "s", "t", "re", "im", "abs2"), rows, comments)


@main.command()
@_param_option
@click.option("--k", "ks", type=float, multiple=True, default=(1.0,), show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), default="-")
def spectra(param_items, ks, out):
    """Covariance entries, purity, symplectic eigenvalue and entropy."""
    p, raw = _parse_params(param_items)
    _tolerances(wigner_det_floor=gaussian.WIGNER_DET_FLOOR)
    click.echo("# Wigner densities use the (2 pi)^4 normalization of the 8x8 covariance", err=True)
    g = gaussian.purity_params(p)
    rows = []
    for k in ks:
        if not k > 0:
            raise DomainError("k must be positive")
        blocks = gaussian.covariance_from_params(p, k)
        rows.append([k, *blocks.entries(), g.gamma, g.sigma, g.entropy])
    write_csv(out, ("k", *gaussian.SPECTRA_COLUMNS, "gamma", "sigma", "entropy"), rows,
              [f"config_sha256={config_hash({'params': raw, 'k': list(ks)})}"])


@main.command()
@_param_option
@click.option("--method", type=click.Choice(["fock", "gaussian", "perturbative", "oracle"]), default="gaussian")
@click.option("--cutoff", type=int, default=20, show_default=True)
def purity(param_items, method, cutoff):
    """Purity of field 1 after tracing out field 2."""
    p, _ = _parse_params(param_items)
    if method == "gaussian":
        _tolerances(determinant_floor=0)
        g = gaussian.purity_params(p)
        click.echo(f"gamma={g.gamma!r} sigma={g.sigma!r} entropy={g.entropy!r}")
    elif method == "perturbative":
        click.echo(f"gamma={decoherence.purity_perturbative(p)!r}")
    elif method == "fock":
        if max(abs(p.r1), abs(p.r2)) > FOCK_LARGE_R:
            click.echo(f"warning: r > {FOCK_LARGE_R:g}: the Fock route is slow/unreliable; "
                       "use --method gaussian (authoritative)", err=True)
        est = decoherence.purity_fock(p, cutoff)
        _tolerances(tail_bound=est.tail)
        click.echo(f"gamma={est.value!r} tail_bound={est.tail!r} cutoff={cutoff}")
    else:
        psi, leak = oracle.circuit_state(p, cutoff)
        _tolerances(leakage=leak)
        val = oracle.partial_trace_purity(psi, oracle.TruncatedSpace(cutoff), renormalize=False)
        click.echo(f"gamma={val!r} leakage={leak!r} cutoff={cutoff}")


@main.command()
@_param_option
@click.option("--tau", "tau_range", default="0:0.2:9", show_default=True, help="|tau| range a:b:n")
@click.option("--r", "r_range", default="3", show_default=True, help="squeezing range a:b:n (r1 = r2 = r)")
@click.option("--gamma-max", type=float, default=0.5, show_default=True)
@click.option("--distortion-max", type=float, default=0.05, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), default="-")
def sweep(param_items, tau_range, r_range, gamma_max, distortion_max, out):
    """Purity and spectra distortion over a |tau| x r grid."""
    base, raw = _parse_params(param_items)
    _tolerances(gamma_max=gamma_max, distortion_max=distortion_max)
    rows = sweep_rows(base, parse_range(tau_range), parse_range(r_range), gamma_max, distortion_max)
    digest = config_hash({"params": raw, "tau": tau_range, "r": r_range, "gamma_max": gamma_max,
                          "distortion_max": distortion_max})
    write_csv(out, decoherence.SWEEP_COLUMNS, rows, [f"config_sha256={digest}"])


@main.command("oracle-compare")
@_param_option
@click.option("--cutoff", type=int, default=7, show_default=True)
def oracle_compare(param_items, cutoff):
    """Closed-form amplitudes and purities against the truncated-Fock circuit."""
    p, _ = _parse_params(param_items)
    box, leak = oracle.circuit_tensor(p, cutoff)
    closed = fock.state_table(p, cutoff).ket_array()
    diff = float(np.max(np.abs(box - closed)))
    psi, leak_total = oracle.circuit_state(p, cutoff)
    g_oracle = oracle.partial_trace_purity(psi, oracle.TruncatedSpace(cutoff), renormalize=False)
    est = decoherence.purity_fock(p, cutoff)
    g_gauss = gaussian.purity_params(p).gamma
    _tolerances(amplitude=1e-8, fock_tail=est.tail)
    click.echo(f"max amplitude discrepancy: {diff:.3e}")
    click.echo(f"leakage: box={leak:.3e} total={leak_total:.3e}")
    click.echo(f"purity oracle={g_oracle!r} fock={est.value!r} gaussian={g_gauss!r}")


if __name__ == "__main__":  # pragma: no cover
    main()
