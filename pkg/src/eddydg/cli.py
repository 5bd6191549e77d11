"""Command line driver with solve, verify and convergence modes.

Configuration is a flat ``key = value`` file with three sections,

    [materials]  omega, mu0, mu.<name>, sigma.<name>
    [penalties]  a_conductor, a_insulator, alpha (blank = degree default)
    [run]        mode, mesh, degree, entry, levels, output, eoc_threshold,
                 vtk, precision, nsamples, seed

and every key can be overridden on the command line as ``--key value``.
Logs go to standard error; data products (solution.npz, errors.csv,
report.txt, fields.vtk) go to the output directory.  Exit codes: 0 ok,
2 configuration error, 3 mesh error, 4 solver failure, 5 verification
failure.
"""

import argparse
import configparser
import csv
import logging
import sys
from pathlib import Path

import numpy as np

from .analysis import (
    NormContext,
    check_coercivity,
    check_symmetry,
    dg_error,
    eoc,
    trace_constant,
)
from .assembly import assemble_exact_load, assemble_system
from .cohomology import build_harmonic, validate_harmonic_field
from .config import ConfigError, MaterialConfig, PenaltyConfig
from .fespace import DgSpace, potential_interpolant
from .fixtures import fixture
from .mesh import MeshError, load_msh
from .mms import ManufacturedSolutionError, manufactured_solution
from .solver import SolverError, electric_field, solve_system

__all__ = ["main"]

EXIT_CONFIG, EXIT_MESH, EXIT_SOLVER, EXIT_VERIFY = 2, 3, 4, 5

CSV_HEADER = "level,h,dg_error,err_curl,err_l2C,err_gradI,jumpC,jumpI,jumpE,eoc"

DEFAULTS = {
    "materials": {
        "omega": "1.0",
        "mu0": "1.0",
        "mu.conductor": "1.0",
        "sigma.conductor": "1.0",
    },
    "penalties": {"a_conductor": "", "a_insulator": "", "alpha": ""},
    "run": {
        "mode": "solve",
        "mesh": "boxed_cube:3",
        "degree": "1",
        "entry": "gradient_pair",
        "levels": "3",
        "output": ".",
        "eoc_threshold": "0.85",
        "vtk": "no",
        "precision": "auto",
        "nsamples": "100",
        "seed": "20260814",
    },
}

log = logging.getLogger("eddydg")


class VerificationFailure(Exception):
    """One or more verification checks missed their tolerance."""


# -- configuration ---------------------------------------------------------

def _section_of(key):
    for section, keys in DEFAULTS.items():
        if key in keys:
            return section
    if key.startswith(("mu.", "sigma.")):
        return "materials"
    raise ConfigError(f"unknown configuration key {key!r}")


def read_settings(path, overrides):
    """Parse the config file and apply --key value overrides."""
    parser = configparser.ConfigParser(interpolation=None)
    parser.read_dict(DEFAULTS)
    try:
        with open(path) as handle:
            parser.read_file(handle)
    except OSError as exc:
        raise ConfigError(f"cannot read config file: {exc}") from exc
    except configparser.Error as exc:
        raise ConfigError(f"malformed config file: {exc}") from exc
    for section in parser.sections():
        if section not in DEFAULTS:
            raise ConfigError(f"unknown config section [{section}]")
        for key in parser[section]:
            if _section_of(key) != section:
                raise ConfigError(f"key {key!r} does not belong in [{section}]")
    for key, value in overrides:
        parser[_section_of(key)][key] = value
    mode = parser["run"]["mode"]
    if mode not in ("solve", "verify", "convergence"):
        raise ConfigError(
            f"run.mode must be solve, verify or convergence, got {mode!r}"
        )
    precision = parser["run"]["precision"]
    if precision not in ("auto", "double", "single"):
        raise ConfigError(
            f"run.precision must be auto, double or single, got {precision!r}"
        )
    try:
        parser.getboolean("run", "vtk")
    except ValueError:
        raise ConfigError(
            f"run.vtk must be a boolean, got {parser['run']['vtk']!r}"
        ) from None
    return parser


def _number(parser, section, key):
    raw = parser[section][key]
    try:
        return float(raw)
    except ValueError:
        raise ConfigError(f"{section}.{key}: not a number: {raw!r}") from None


def _integer(parser, section, key, minimum):
    value = _number(parser, section, key)
    if value != int(value) or int(value) < minimum:
        raise ConfigError(f"{section}.{key}: need an integer >= {minimum}")
    return int(value)


def build_materials(parser):
    section = parser["materials"]
    mu, sigma = {}, {}
    for key in section:
        if key.startswith("mu."):
            mu[key[3:]] = _number(parser, "materials", key)
        elif key.startswith("sigma."):
            sigma[key[6:]] = _number(parser, "materials", key)
    return MaterialConfig(
        omega=_number(parser, "materials", "omega"),
        mu0=_number(parser, "materials", "mu0"),
        mu=mu,
        sigma=sigma,
    )


def build_penalties(parser, degree):
    raw = [parser["penalties"][k] for k in ("a_conductor", "a_insulator", "alpha")]
    default = PenaltyConfig.default(degree)
    values = []
    for key, text, fallback in zip(
        ("a_conductor", "a_insulator", "alpha"),
        raw,
        (default.a_conductor, default.a_insulator, default.alpha),
    ):
        values.append(fallback if not text else _number(parser, "penalties", key))
    return PenaltyConfig(*values)


def build_mesh(spec):
    if spec.endswith(".msh"):
        return load_msh(spec)
    try:
        return fixture(spec)
    except ValueError as exc:
        raise MeshError(str(exc)) from exc


def _refined_spec(spec, factor):
    name, _, arg = spec.partition(":")
    if not arg:
        raise ConfigError(
            f"mesh {spec!r} is not a refinable fixture family (name:n)"
        )
    return f"{name}:{int(arg) * factor}"


# -- shared pipeline -------------------------------------------------------

def _build_space(mesh, degree):
    harmonic = build_harmonic(mesh)
    return DgSpace(mesh, degree, harmonic)


def _solve_entry(space, materials, penalties, entry, precision):
    exact = manufactured_solution(entry, space, materials)
    system = assemble_system(space, materials, penalties)
    system.rhs[:] = assemble_exact_load(space, materials, penalties, exact)
    solution = solve_system(system, precision=precision)
    return system, exact, solution


def _error_row(level, h, err, rate):
    return [
        level,
        f"{h:.6e}",
        f"{err['dg']:.12e}",
        f"{err['curlC']:.12e}",
        f"{err['l2C']:.12e}",
        f"{err['gradI']:.12e}",
        f"{err['jumpC']:.12e}",
        f"{err['jumpI']:.12e}",
        f"{err['jumpE']:.12e}",
        "" if rate is None else f"{rate:.4f}",
    ]


# -- vtk export ------------------------------------------------------------

def write_vtk(path, space, materials, x, source=None):
    """Legacy ASCII VTK export of cellwise |h|, |e| and Re psi."""
    mesh = space.mesh
    center = np.array([[0.25, 0.25, 0.25]])
    h_mag = np.zeros(mesh.num_cells)
    e_mag = np.zeros(mesh.num_cells)
    psi_re = np.zeros(mesh.num_cells)
    field = electric_field(space, materials, x, source=source)
    for cell in range(mesh.num_cells):
        dofs = space.cell_dofs(cell)
        elem = space.element(cell)
        vals = elem.eval(center)  # (1, nd)
        if space.cell_elem_key[cell] == "vec":
            coeff = x[dofs].reshape(-1, 3)
            h_here = vals @ coeff
            h_mag[cell] = np.linalg.norm(np.abs(h_here))
            pts = space.from_reference(cell, center)
            e_mag[cell] = np.linalg.norm(np.abs(field(cell, pts)))
        else:
            psi_re[cell] = float(np.real(vals @ x[dofs])[0])
    lines = [
        "# vtk DataFile Version 3.0",
        "eddy current fields",
        "ASCII",
        "DATASET UNSTRUCTURED_GRID",
        f"POINTS {mesh.num_vertices} double",
    ]
    lines.extend(" ".join(f"{v:.9g}" for v in row) for row in mesh.vertices)
    lines.append(f"CELLS {mesh.num_cells} {5 * mesh.num_cells}")
    lines.extend("4 " + " ".join(str(v) for v in row) for row in mesh.cells)
    lines.append(f"CELL_TYPES {mesh.num_cells}")
    lines.extend(["10"] * mesh.num_cells)
    lines.append(f"CELL_DATA {mesh.num_cells}")
    for name, data in (("h_mag", h_mag), ("e_mag", e_mag), ("psi_re", psi_re)):
        lines.append(f"SCALARS {name} double 1")
        lines.append("LOOKUP_TABLE default")
        lines.extend(f"{v:.9g}" for v in data)
    Path(path).write_text("\n".join(lines) + "\n")


# -- modes -----------------------------------------------------------------

def run_solve(parser, outdir):
    run = parser["run"]
    degree = _integer(parser, "run", "degree", 1)
    materials = build_materials(parser)
    penalties = build_penalties(parser, degree)
    mesh = build_mesh(run["mesh"])
    space = _build_space(mesh, degree)
    log.info("mesh %s: %d cells, %d dofs", run["mesh"], mesh.num_cells, space.ndofs)
    system, exact, solution = _solve_entry(
        space, materials, penalties, run["entry"], run["precision"]
    )
    err = dg_error(space, materials, solution.x, exact)
    np.savez(
        outdir / "solution.npz",
        x=solution.x,
        residual_inf=solution.residual_inf,
        certificate_bound=solution.certificate_bound,
        precision=solution.precision,
        ndofs=space.ndofs,
        dg_error=err["dg"],
    )
    log.info(
        "residual %.3e <= certificate %.3e (%s precision), dg error %.6e",
        solution.residual_inf,
        solution.certificate_bound,
        solution.precision,
        err["dg"],
    )
    if parser.getboolean("run", "vtk"):
        write_vtk(outdir / "fields.vtk", space, materials, solution.x)
        log.info("wrote %s", outdir / "fields.vtk")
    log.info("wrote %s", outdir / "solution.npz")
    return 0


def _verify_checks(parser):
    """Yield (name, value, threshold, passed) rows for the report."""
    run = parser["run"]
    degree = _integer(parser, "run", "degree", 1)
    nsamples = _integer(parser, "run", "nsamples", 1)
    seed = _integer(parser, "run", "seed", 0)
    materials = build_materials(parser)
    penalties = build_penalties(parser, degree)
    mesh = build_mesh(run["mesh"])
    space = _build_space(mesh, degree)
    log.info("verify on %s: %d cells, %d dofs", run["mesh"], mesh.num_cells, space.ndofs)
    system = assemble_system(space, materials, penalties)
    norms = NormContext(space, materials)

    sym = check_symmetry(system, nsamples=nsamples, seed=seed)
    yield "structural symmetry", sym, 1e-12, sym <= 1e-12

    coer = check_coercivity(system, norms, nsamples=nsamples, seed=seed)
    yield "rotated coercivity >= 1/2", coer, 0.5 - 1e-9, coer >= 0.5 - 1e-9

    exact = manufactured_solution("gradient_pair", space, materials)
    chi = exact.meta["potential"]
    xi = potential_interpolant(space, lambda c, p: chi(p), lambda c, p: chi(p))
    err = dg_error(space, materials, xi, exact)
    volume = np.sqrt(err["l2C"] ** 2 + err["curlC"] ** 2 + err["gradI"] ** 2)
    jump = max(err["jumpC"], err["jumpI"], err["jumpE"])
    yield "conforming jump annihilation", jump, 1e-10 * volume, jump <= 1e-10 * volume

    constant = trace_constant(space)
    try:
        fine = build_mesh(_refined_spec(run["mesh"], 2))
    except (ConfigError, MeshError):
        yield "trace inequality constant", constant, np.inf, np.isfinite(constant)
    else:
        other = trace_constant(DgSpace(fine, degree))
        drift = abs(other - constant) / constant
        yield "trace constant h-drift", drift, 0.2, drift <= 0.2

    _, pexact, psol = _solve_entry(
        space, materials, penalties, "polynomial_pair", run["precision"]
    )
    perr = dg_error(space, materials, psol.x, pexact)["dg"]
    yield "degree-m consistency", perr, 1e-8, perr <= 1e-8

    if space.harmonic is not None:
        report = validate_harmonic_field(mesh, space.harmonic)
        yield "generator curl", report["curl_max"], 0.0, report["curl_max"] == 0.0
        tang = report["sigma_tangential_max"]
        yield "generator boundary trace", tang, 1e-12, tang <= 1e-12
        circ = abs(abs(report["circulation"]) - 1.0)
        yield "generator circulation", circ, 1e-10, circ <= 1e-10


def run_verify(parser, outdir):
    rows = list(_verify_checks(parser))
    lines = []
    for name, value, threshold, passed in rows:
        status = "PASS" if passed else "FAIL"
        lines.append(f"{name}: {value:.6e} (tolerance {threshold:.6e}) {status}")
        log.info("%s", lines[-1])
    failed = [r[0] for r in rows if not r[3]]
    lines.append(f"{len(rows) - len(failed)}/{len(rows)} checks passed")
    (outdir / "report.txt").write_text("\n".join(lines) + "\n")
    log.info("wrote %s", outdir / "report.txt")
    if failed:
        raise VerificationFailure(", ".join(failed))
    return 0


def run_convergence(parser, outdir):
    run = parser["run"]
    degree = _integer(parser, "run", "degree", 1)
    levels = _integer(parser, "run", "levels", 2)
    threshold = _number(parser, "run", "eoc_threshold")
    materials = build_materials(parser)
    penalties = build_penalties(parser, degree)
    hs, errors, rows = [], [], []
    for level in range(levels):
        mesh = build_mesh(_refined_spec(run["mesh"], level + 1))
        space = _build_space(mesh, degree)
        _, exact, solution = _solve_entry(
            space, materials, penalties, run["entry"], run["precision"]
        )
        err = dg_error(space, materials, solution.x, exact)
        h = float(mesh.cell_h.max())
        hs.append(h)
        errors.append(err["dg"])
        rate = eoc(hs[-2:], errors[-2:])[0] if level else None
        rows.append(_error_row(level, h, err, rate))
        log.info(
            "level %d: h=%.4e dg=%.6e%s",
            level,
            h,
            err["dg"],
            "" if rate is None else f" eoc={rate:.3f}",
        )
    with open(outdir / "errors.csv", "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(CSV_HEADER.split(","))
        writer.writerows(rows)
    log.info("wrote %s", outdir / "errors.csv")
    final = eoc(hs[-2:], errors[-2:])[0]
    if final < threshold:
        raise VerificationFailure(
            f"final EOC {final:.3f} below threshold {threshold:.3f}"
        )
    return 0


# -- entry point -----------------------------------------------------------

def _parse_argv(argv):
    parser = argparse.ArgumentParser(
        prog="eddydg",
        description="Hybrid DG eddy current solver driver.",
        epilog="Any configuration key can be overridden as --key value.",
    )
    parser.add_argument("config", help="path to the key = value config file")
    args, extra = parser.parse_known_args(argv)
    if len(extra) % 2:
        raise ConfigError(f"override list must be --key value pairs: {extra}")
    overrides = []
    for flag, value in zip(extra[::2], extra[1::2]):
        if not flag.startswith("--"):
            raise ConfigError(f"expected --key, got {flag!r}")
        overrides.append((flag[2:], value))
    return args.config, overrides


def main(argv=None):
    logging.basicConfig(
        stream=sys.stderr, level=logging.INFO, format="%(levelname)s %(message)s"
    )
    try:
        config_path, overrides = _parse_argv(argv)
        settings = read_settings(config_path, overrides)
        mode = settings["run"]["mode"]
        outdir = Path(settings["run"]["output"])
        outdir.mkdir(parents=True, exist_ok=True)
        runner = {
            "solve": run_solve,
            "verify": run_verify,
            "convergence": run_convergence,
        }[mode]
        return runner(settings, outdir)
    except (ConfigError, ManufacturedSolutionError) as exc:
        log.error("configuration error: %s", exc)
        return EXIT_CONFIG
    except MeshError as exc:
        log.error("mesh error: %s", exc)
        return EXIT_MESH
    except SolverError as exc:
        log.error("solver failure: %s", exc)
        return EXIT_SOLVER
    except VerificationFailure as exc:
        log.error("verification failure: %s", exc)
        return EXIT_VERIFY


if __name__ == "__main__":
    sys.exit(main())
