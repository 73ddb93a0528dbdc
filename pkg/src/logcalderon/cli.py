"""Command-line workbench: one JSON config in, CSV/JSON artifacts out.

Exit codes: 0 when every asserted check passes, 1 when a numerical check
fails (the report path is printed), 2 on a schema violation (nothing is
written).
"""

from __future__ import annotations

import argparse
import datetime as _dt
import hashlib
import logging
import math
import platform
import sys
from functools import cached_property
from pathlib import Path

import numpy as np

from . import __version__
from .config import EXPERIMENTS, ConfigError, ResolvedExperiment, load_config
from .dnmap import DNOracle, assemble_dn_map, integral_identity_residual
from .forms import (
    assemble_fractional_form,
    assemble_h0_form,
    assemble_log_form,
    assemble_potential,
    mass_matrix,
    symmetry_defect,
)
from .fourier import assemble_abslog_gram, assemble_log_form_fourier
from .grid import CellField, resolve_cells
from .inversion import grouped_basis, localized_potential, monotonicity_compare, reconstruct_potential, runge_fit
from .io import envelope, write_json, write_matrix_csv, write_table_csv
from .solver import CoercivityError, DirichletProblem, solve_dirichlet, stability_audit
from .spectral import coercivity_check, dirichlet_spectrum, fractional_expansion_check, rayleigh_audit

log = logging.getLogger("logcalderon")


class Workbench:
    """Lazily assembled forms and an output sink for one resolved config."""

    def __init__(self, resolved: ResolvedExperiment, out: Path, threads: int = 1):
        self.r = resolved
        self.cfg = resolved.config
        self.grid = resolved.grid
        self.regions = resolved.regions
        self.out = out
        self.threads = threads
        self.files: list[Path] = []
        self.checks: dict[str, bool] = {}

    @cached_property
    def K(self):
        log.info("assembling log form on %d cells", self.grid.num_cells)
        return assemble_log_form(self.grid, self.cfg.quadrature)

    @cached_property
    def G(self):
        return assemble_abslog_gram(self.grid, self.cfg.quadrature)

    def Q(self, name):
        return assemble_potential(self.grid, self.r.potential(name))

    # -- output helpers ------------------------------------------------
    def matrix(self, name: str, M, rows=None, cols=None):
        rows = np.arange(M.shape[0]) if rows is None else rows
        cols = np.arange(M.shape[1]) if cols is None else cols
        self.files.append(write_matrix_csv(self.out / name, M, rows, cols, self.cfg.config_hash))

    def table(self, name: str, columns: dict):
        self.files.append(write_table_csv(self.out / name, columns, self.cfg.config_hash))

    def report(self, name: str, data: dict) -> Path:
        payload = envelope(
            self.cfg.experiment,
            data,
            self.cfg.config_hash,
            self.grid.grid_hash,
            self.cfg.quadrature.to_dict(),
        )
        path = write_json(self.out / name, payload)
        self.files.append(path)
        return path

    def check(self, name: str, ok: bool):
        self.checks[name] = bool(ok)
        log.info("check %s: %s", name, "pass" if ok else "FAIL")


# ---------------------------------------------------------------------------
# experiments; each returns the path of its main report


def _run_assemble(wb: Workbench) -> Path:
    p, tol = wb.cfg.params, wb.cfg.tolerances
    data = {"forms": {}}
    for form in p["forms"]:
        if form == "log_B0":
            mats = {}
            for route in p["routes"]:
                if route == "singular":
                    mats[route] = wb.K.matrix
                elif route == "fourier":
                    F = assemble_log_form_fourier(wb.grid, wb.cfg.quadrature)
                    mats[route] = F.matrix
                    data["fourier_meta"] = F.meta
                wb.matrix(f"log_B0_{route}.csv", mats[route])
            if len(mats) == 2:
                A, B = mats["singular"], mats["fourier"]
                entry_rel = float(np.max(np.abs(A - B) / np.abs(A)))
                data["route_discrepancy"] = {
                    "max_entry_relative": entry_rel,
                    "max_relative_to_max": float(np.max(np.abs(A - B)) / np.max(np.abs(A))),
                }
                wb.check("route_equivalence", entry_rel <= tol.route_tol)
            for route, M in mats.items():
                data["forms"][f"log_B0_{route}"] = {"symmetry_defect": symmetry_defect(M)}
            continue
        if form == "mass":
            M = mass_matrix(wb.grid).matrix
        elif form == "h0_seminorm":
            M = assemble_h0_form(wb.grid, wb.cfg.quadrature).matrix
        elif form == "fractional_Bs":
            M = assemble_fractional_form(wb.grid, p["s"], wb.cfg.quadrature).matrix
        elif form == "abslog_gram":
            M = wb.G.matrix
        elif form == "potential":
            for name in sorted(wb.r.potentials):
                M = wb.Q(name).matrix
                wb.matrix(f"potential_{name}.csv", M)
                data["forms"][f"potential_{name}"] = {"symmetry_defect": symmetry_defect(M)}
            continue
        wb.matrix(f"{form}.csv", M)
        data["forms"][form] = {
            "symmetry_defect": symmetry_defect(M),
            "min_eigenvalue": float(np.linalg.eigvalsh(M)[0]),
        }
    for name, info in data["forms"].items():
        wb.check(f"symmetric_{name}", info["symmetry_defect"] <= 1e-12)
    return wb.report("assemble_report.json", data)


def _data_vector(wb: Workbench, spec: dict) -> np.ndarray:
    cells = {"w1": wb.regions.w1, "w2": wb.regions.w2}[spec.get("window", "w1")]
    values = spec.get("values", "ones")
    f = np.zeros(wb.grid.num_cells)
    if values == "ones":
        f[cells] = 1.0
    elif isinstance(values, dict) and set(values) == {"random"}:
        f[cells] = np.random.default_rng(int(values["random"])).standard_normal(cells.size)
    else:
        f[cells] = np.asarray(values, dtype=float)
    return f


def _run_solve(wb: Workbench) -> Path:
    p, tol = wb.cfg.params, wb.cfg.tolerances
    omega = wb.regions.omega
    f = CellField(_data_vector(wb, p["data"]), "exterior", np.ones(wb.grid.num_cells, dtype=bool))
    F = CellField.on(wb.grid, omega, np.asarray(p["source"], dtype=float), "omega")
    Q = wb.Q(p["potential"])
    rep = solve_dirichlet(wb.grid, wb.K, Q, f, F, omega, G=wb.G, tol=math.inf)
    wb.check("linear_residual", rep.linear_residual <= tol.solver_tol)
    wb.check("exterior_imposed", bool(np.array_equal(rep.u.values[wb.regions.windows], f.values[wb.regions.windows])))
    data = rep.to_dict()
    data.pop("u")
    if p["stability_draws"] > 0:
        data["stability"] = stability_audit(
            wb.grid, wb.K, Q, wb.G, omega, wb.regions.windows, p["stability_draws"], p["seed"]
        )
    centers = wb.grid.cell_centers
    cols = {f"x{k}": centers[:, k].tolist() for k in range(wb.grid.n)}
    cols["u"] = rep.u.values.tolist()
    wb.table("solution.csv", cols)
    return wb.report("solve_report.json", data)


def _run_dnmap(wb: Workbench) -> Path:
    p, tol = wb.cfg.params, wb.cfg.tolerances
    Q = wb.Q(p["potential"])
    L = assemble_dn_map(wb.K, Q, wb.regions, wb.grid.grid_hash, precision_bits=p["precision_bits"])
    wb.matrix("dn_map.csv", L.matrix, L.rows, L.cols)
    data = L.to_dict()
    if L.windows_equal:
        data["symmetry_defect"] = L.symmetry_defect()
        wb.check("dn_symmetry", data["symmetry_defect"] <= tol.symmetry_tol)
    # Schur form against an explicit solve and form evaluation
    rng = np.random.default_rng(0)
    problem = DirichletProblem(wb.grid, wb.K, Q, wb.regions.omega)
    worst = 0.0
    for _ in range(10):
        f = np.zeros(wb.grid.num_cells)
        g = np.zeros(wb.grid.num_cells)
        f[L.cols] = rng.standard_normal(L.cols.size)
        g[L.rows] = rng.standard_normal(L.rows.size)
        u, _ = problem.solve_values(f)
        direct = float(g @ problem.A @ u)
        via = L.pair(f[L.cols], g[L.rows])
        worst = max(worst, abs(direct - via) / max(abs(direct), abs(via), 1e-300))
    data["schur_vs_solve"] = worst
    wb.check("schur_vs_solve", worst <= 1e-10)
    return wb.report("dnmap_report.json", data)


def _run_identity(wb: Workbench) -> Path:
    p, tol = wb.cfg.params, wb.cfg.tolerances
    rng = np.random.default_rng(p["seed"])
    q1 = wb.r.potential(p["q1"]).values
    q2 = wb.r.potential(p["q2"]).values
    rows = {"lhs": [], "rhs": [], "residual": [], "relative": []}
    for _ in range(p["draws"]):
        f1 = rng.standard_normal(wb.regions.w1.size)
        f2 = rng.standard_normal(wb.regions.w2.size)
        lhs, rhs, res = integral_identity_residual(wb.grid, wb.K, wb.regions, q1, q2, f1, f2)
        rows["lhs"].append(lhs)
        rows["rhs"].append(rhs)
        rows["residual"].append(res)
        rows["relative"].append(res / max(abs(lhs), abs(rhs), 1.0))
    wb.table("identity.csv", rows)
    worst = max(rows["relative"])
    wb.check("integral_identity", worst <= tol.identity_tol)
    return wb.report("identity_report.json", {"draws": p["draws"], "max_relative_residual": worst})


def _run_monotone(wb: Workbench) -> Path:
    p, tol = wb.cfg.params, wb.cfg.tolerances
    oracle = DNOracle(wb.grid, wb.K, wb.regions, precision_bits=p["precision_bits"])
    q1 = wb.r.potential(p["q1"]).values
    q2 = wb.r.potential(p["q2"]).values
    v = monotonicity_compare(oracle(q1), oracle(q2), tol.psd_tol)
    ordered = bool(np.all(q2 >= q1))
    if ordered:
        wb.check("monotonicity_soundness", v.psd)
    data = v.to_dict()
    data["q2_ge_q1"] = ordered
    return wb.report("monotone_report.json", data)


def _run_reconstruct(wb: Workbench) -> Path:
    p, tol = wb.cfg.params, wb.cfg.tolerances
    oracle = DNOracle(wb.grid, wb.K, wb.regions, precision_bits=p["precision_bits"])
    truth = wb.r.potential(p["truth"]).values
    target = oracle(truth)
    res = reconstruct_potential(
        oracle,
        target,
        wb.regions.partition,
        a_max=2.0 * float(p["q_bound"]),
        bis_tol=tol.bis_tol,
        psd_tol=tol.psd_tol,
        threads=wb.threads,
    )
    expected = np.array([truth[b].min() for b in wb.regions.partition])
    err = np.abs(res.block_values - expected)
    bound = max(tol.bis_tol, 10.0 * res.config["psd_tol"])
    wb.check("reconstruction_error", float(err.max()) <= bound)
    wb.check("no_saturation", not res.flags)
    data = res.to_dict()
    data.update({"expected": expected, "abs_error": err, "error_bound": bound})
    return wb.report("reconstruct_report.json", data)


def _run_runge(wb: Workbench) -> Path:
    p, tol = wb.cfg.params, wb.cfg.tolerances
    alpha = tol.alpha if p["alpha"] is None else float(p["alpha"])
    block = wb.regions.partition[p["target_block"]]
    target = CellField.on(wb.grid, block, 1.0 / math.sqrt(block.size * wb.grid.cell_volume), "omega")
    w = wb.regions.w1
    Q = wb.Q(p["potential"])
    problem = DirichletProblem(wb.grid, wb.K, Q, wb.regions.omega)
    fits = [
        runge_fit(wb.grid, wb.K, Q, target, wb.regions.omega, w, alpha, problem, grouped_basis(w.size, k))
        for k in p["window_groups"]
    ]
    fit = fits[-1]
    wb.table("runge_data.csv", {"cell": w.tolist(), "f": fit.f.values[w].tolist()})
    data = {
        "alpha": alpha,
        "residual": fit.residual,
        "relative_residual": fit.relative_residual,
        "smallest_singular_value": fit.smallest_singular_value,
        "window_groups": list(p["window_groups"]),
        "relative_residuals": [f.relative_residual for f in fits],
    }
    if len(fits) > 1:
        res = data["relative_residuals"]
        wb.check("refinement_decreasing", all(b < a for a, b in zip(res[:-1], res[1:])))
    return wb.report("runge_report.json", data)


def _run_localize(wb: Workbench) -> Path:
    p, tol = wb.cfg.params, wb.cfg.tolerances
    M = resolve_cells(wb.grid, p["M"])
    steps = localized_potential(
        wb.grid, wb.K, wb.Q(p["potential"]), wb.regions.omega, M, wb.regions.w1, p["steps"], p["alphas"]
    )
    ratios = [s.ratio for s in steps]
    wb.table(
        "localized.csv",
        {
            "alpha": [s.alpha for s in steps],
            "ratio": ratios,
            "norm_M": [s.norm_M for s in steps],
            "norm_rest": [s.norm_rest for s in steps],
        },
    )
    wb.check("ratio_increasing", all(b > a for a, b in zip(ratios[:-1], ratios[1:])))
    wb.check("linear_residual", all(s.linear_residual <= tol.solver_tol for s in steps))
    data = {"ratios": ratios, "steps_completed": len(steps), "growth": ratios[-1] / ratios[0] if ratios else None}
    return wb.report("localize_report.json", data)


def _run_spectrum(wb: Workbench) -> Path:
    p = wb.cfg.params
    omega = wb.regions.omega
    mass = mass_matrix(wb.grid)
    k = min(p["k"], omega.size)
    rep = coercivity_check(wb.K, wb.Q(p["potential"]), omega, mass)
    audit = rayleigh_audit(wb.K, mass, omega, p["rayleigh_samples"], p["seed"])
    spec = dirichlet_spectrum(wb.K, mass, omega, k)
    wb.table("eigenvalues.csv", {"eigenvalue": spec.eigenvalues.tolist()})
    wb.check("rayleigh_consistency", audit["violations"] == 0)
    # the condition is sufficient for coercivity; equality of both holds for constant q
    if rep.condition_satisfied:
        wb.check("condition_implies_spd", bool(rep.block_spd))
    data = rep.to_dict()
    data["eigenvalues"] = spec.eigenvalues
    data["rayleigh"] = audit
    return wb.report("spectrum_report.json", data)


def _run_fraclimit(wb: Workbench) -> Path:
    p = wb.cfg.params
    rows = fractional_expansion_check(wb.grid, p["s_list"], wb.cfg.quadrature)
    wb.table("fraclimit.csv", {"s": [r["s"] for r in rows], "error": [r["error"] for r in rows]})
    ratios = [r["ratio"] for r in rows[1:]]
    wb.check("error_decay", all(r <= p["ratio_bound"] for r in ratios))
    return wb.report("fraclimit_report.json", {"table": rows})


RUNNERS = {
    "assemble": _run_assemble,
    "solve": _run_solve,
    "dnmap": _run_dnmap,
    "identity": _run_identity,
    "monotone": _run_monotone,
    "reconstruct": _run_reconstruct,
    "runge": _run_runge,
    "localize": _run_localize,
    "spectrum": _run_spectrum,
    "fraclimit": _run_fraclimit,
}


def _versions() -> dict:
    import flint
    import scipy

    return {
        "logcalderon": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "python-flint": flint.__version__,
    }


def run_experiment(config_path, out_dir=None, experiment=None, threads: int = 1) -> tuple[int, Path | None]:
    """Run one experiment; returns (exit code, main report path)."""
    cfg = load_config(config_path, experiment)
    resolved = cfg.resolve()
    out = Path(out_dir or cfg.output_dir or "out")
    out.mkdir(parents=True, exist_ok=True)
    wb = Workbench(resolved, out, threads)
    try:
        report = RUNNERS[cfg.experiment](wb)
    except CoercivityError as exc:
        wb.check("coercivity", False)
        report = wb.report(f"{cfg.experiment}_error.json", {"error": str(exc), "inertia": exc.inertia})
    ok = all(wb.checks.values())
    manifest = {
        "experiment": cfg.experiment,
        "config_hash": cfg.config_hash,
        "config_path": str(config_path),
        "grid_hash": resolved.grid.grid_hash,
        "status": "pass" if ok else "fail",
        "checks": wb.checks,
        "files": {p.name: hashlib.sha256(p.read_bytes()).hexdigest() for p in wb.files},
        "versions": _versions(),
        "created": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
    }
    write_json(out / "manifest.json", manifest)
    return (0 if ok else 1), report


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="logcalderon", description=__doc__.splitlines()[0])
    ap.add_argument("experiment", choices=EXPERIMENTS)
    ap.add_argument("--config", required=True, help="JSON experiment config")
    ap.add_argument("--out", default=None, help="output directory (overrides the config)")
    ap.add_argument("--threads", type=int, default=1, help="worker threads for per-block bisection")
    ap.add_argument("--verbose", action="store_true")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    if args.threads < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return 2
    try:
        code, report = run_experiment(args.config, args.out, args.experiment, args.threads)
    except ConfigError as exc:
        print(f"config error at {exc}", file=sys.stderr)
        return 2
    if code == 0:
        print(f"ok: {report}")
    else:
        print(f"check failed; see {report}", file=sys.stderr)
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
