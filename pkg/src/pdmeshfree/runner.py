"""Configuration-driven convergence runs.

A run builds a refinement ladder for one (benchmark, formulation, order,
grid, horizon) combination, solves every level and returns a
:class:`ConvergenceReport`. A sweep runs the cross product of list-valued
keys and keeps going past failed cells.
"""

import configparser
import csv
import itertools
import json
import logging
import math
import os
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from .errors import PDError, ValidationError
from .gmls import unisolvency_bound
from .material import Material
from .pointcloud import (BULK, DIRICHLET, FREE_SURFACE, build_families, generate_polar_grid,
                         generate_uniform_grid, load_pointcloud, perturb_then_refine)
from .solver import FORMULATIONS, assemble, build_weights, solve
from .verification import (ConvergenceReport, ConvergenceRow, convergence_rate, manufactured_case,
                           patch_test_case, plate_hole_case, rms_error)
from .weights import dump_weights

log = logging.getLogger(__name__)

BENCHMARKS = ("manufactured", "plate_hole", "patch_test")
ORDERS = (1, 2, 3)
ENV_PREFIX = "PDMESHFREE_"

# horizon per order: multiples of h on square grids and imported sets,
# a constant in the unit-spaced parametric space of polar grids
DEFAULT_DELTA = {
    "uniform": {1: 2.5, 2: 3.5, 3: 4.5},
    "perturbed": {1: 2.5, 2: 3.5, 3: 4.5},
    "file": {1: 2.25, 2: 3.25, 3: 4.25},
    "polar": {1: 1.75, 2: 2.75, 3: 3.75},
}

REPORT_HEADER = ["case", "formulation", "order", "level", "h", "rms", "rate",
                 "grid", "delta", "seed", "status"]


@dataclass
class RunConfig:
    benchmark: str = "manufactured"
    formulation: str = "ba_rk"
    order: int = 2
    grid: str = "uniform"
    delta: float | None = None
    levels: int = 3
    h0: float = 0.2
    sigma: float = 0.03
    E: float = 1e5
    nu: float = 0.3
    seed: int = 0
    a: float = 1.0
    L: float = 4.0
    T: float = 1.0
    n_r: int = 20
    n_theta: int = 20
    plane: str = "strain"
    out: str | None = None
    dump_weights: bool = False
    dump_fields: bool = False
    plot: bool = False

    @property
    def grid_kind(self):
        return "file" if self.grid.startswith("file:") else self.grid

    @property
    def files(self):
        return [p.strip() for p in self.grid[5:].split(",") if p.strip()]

    @property
    def horizon(self):
        if self.delta is not None:
            return float(self.delta)
        return DEFAULT_DELTA[self.grid_kind][self.order]

    @property
    def material(self):
        return Material(self.E, self.nu)

    def validate(self):
        if self.benchmark not in BENCHMARKS:
            raise ValidationError(f"unknown benchmark {self.benchmark!r}")
        if self.formulation not in FORMULATIONS:
            raise ValidationError(f"unknown formulation {self.formulation!r}")
        if self.order not in ORDERS:
            raise ValidationError(f"order must be one of {ORDERS}")
        if self.grid_kind not in DEFAULT_DELTA:
            raise ValidationError(f"unknown grid {self.grid!r}")
        if self.grid_kind == "file" and not self.files:
            raise ValidationError("file grid needs at least one path")
        if self.benchmark == "manufactured" and self.grid_kind == "polar":
            raise ValidationError("the manufactured problem lives on a square grid")
        if self.benchmark == "plate_hole" and self.grid_kind in ("uniform", "perturbed"):
            raise ValidationError("the plate-with-hole problem needs a polar or file grid")
        if self.levels < 1:
            raise ValidationError("need at least one level")
        if self.horizon <= 0:
            raise ValidationError("horizon must be positive")
        try:
            self.material.lame
        except ValueError as exc:
            raise ValidationError(str(exc)) from None
        if self.grid_kind != "file":
            _check_lattice_horizon(self.horizon, self.order)
        return self


def _check_lattice_horizon(delta, order, d=2):
    """Unisolvency on a unit lattice: ``delta > n`` and enough offsets."""
    need = unisolvency_bound(order, d)
    r = int(math.floor(delta))
    k = np.arange(-r, r + 1)
    gx, gy = np.meshgrid(k, k)
    dist2 = gx**2 + gy**2
    count = int(np.sum((dist2 > 0) & (dist2 <= delta * delta * (1 + 1e-12))))
    if delta <= order or count < need:
        raise ValidationError(
            f"horizon {delta} (in units of the spacing) is too small for order {order}: "
            f"{count} neighbors, need {need} and delta > {order}")


# ---------------------------------------------------------------------------
# config parsing


def _coerce(name, value):
    types = {f.name: f.type for f in fields(RunConfig)}
    kind = types[name]
    text = str(value).strip()
    if kind in (bool, "bool"):
        return text.lower() in ("1", "true", "yes", "on")
    if kind in (int, "int"):
        return int(text)
    if kind in (float, "float"):
        return float(text)
    if name == "delta":
        return None if text.lower() in ("", "default", "none") else float(text)
    return text


def read_config(path=None, overrides=None, environ=None):
    """Raw key -> string mapping: config file, then environment, then overrides.

    Every section of the INI file is flattened; later sections win.
    """
    raw = {}
    if path is not None:
        parser = configparser.ConfigParser()
        if not parser.read(path, encoding="utf-8"):
            raise ValidationError(f"cannot read config {path}")
        for section in parser.sections():
            raw.update(parser[section])
    environ = os.environ if environ is None else environ
    for key, val in environ.items():
        if key.startswith(ENV_PREFIX):
            raw[key[len(ENV_PREFIX):].lower()] = val
    for key, val in (overrides or {}).items():
        if val is not None:
            raw[key] = val
    known = {f.name for f in fields(RunConfig)}
    unknown = set(raw) - known
    if unknown:
        raise ValidationError(f"unknown config keys: {', '.join(sorted(unknown))}")
    return raw


def _split(text):
    if isinstance(text, (list, tuple)):
        return list(text)
    text = str(text)
    if text.startswith("file:"):
        return [text]
    return [t.strip() for t in text.split(",") if t.strip()]


def config_matrix(raw):
    """Expand list-valued keys into the cross product of run configs."""
    swept = ("formulation", "order", "delta", "grid")
    base = {}
    for key, val in raw.items():
        if key not in swept:
            base[key] = _coerce(key, val)
    axes = []
    for key in swept:
        if key in raw:
            axes.append([(key, _coerce(key, v)) for v in _split(raw[key])] or [(key, None)])
    configs = []
    for combo in itertools.product(*axes):
        try:
            configs.append(RunConfig(**base, **dict(combo)))
        except TypeError as exc:
            raise ValidationError(str(exc)) from None
    return configs


def load_run_config(raw):
    configs = config_matrix(raw)
    if len(configs) != 1:
        raise ValidationError("run takes single-valued keys; use sweep for lists")
    return configs[0]


# ---------------------------------------------------------------------------
# ladders


def build_ladder(cfg):
    """``[(cloud, families), ...]`` for every level of ``cfg``."""
    delta = cfg.horizon
    kind = cfg.grid_kind
    clouds = []
    if kind == "uniform":
        for k in range(cfg.levels):
            h = cfg.h0 / 2**k
            clouds.append(generate_uniform_grid((-1.0, -1.0), (1.0, 1.0), h, delta * h))
    elif kind == "perturbed":
        base = generate_uniform_grid((-1.0, -1.0), (1.0, 1.0), cfg.h0, delta * cfg.h0)
        clouds = perturb_then_refine(base, cfg.sigma, cfg.levels - 1, cfg.seed)
    elif kind == "polar":
        rings = int(math.ceil(delta))
        for k in range(cfg.levels):
            clouds.append(generate_polar_grid(cfg.a, cfg.L, cfg.n_r * 2**k, cfg.n_theta * 2**k, rings))
    else:
        clouds = [load_pointcloud(p) for p in cfg.files]

    if cfg.benchmark == "patch_test":
        for c in clouds:
            c.role[c.role == FREE_SURFACE] = DIRICHLET

    ladder = []
    for c in clouds:
        if kind == "polar":
            fam = build_families(c, delta, "parametric")
        else:
            fam = build_families(c, delta * c.h_avg, "physical")
        ladder.append((c, fam))
    return ladder


def benchmark_case(cfg):
    if cfg.benchmark == "manufactured":
        return manufactured_case(cfg.material)
    if cfg.benchmark == "plate_hole":
        return plate_hole_case(cfg.material, cfg.T, cfg.a, cfg.plane)
    return patch_test_case(cfg.material)


def _tag(cfg):
    return f"{cfg.benchmark}_{cfg.formulation}_n{cfg.order}_{cfg.grid_kind}_d{cfg.horizon:g}"


def write_fields(path, cloud, u, exact):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["id", "x", "y", "u1", "u2", "e1", "e2"])
        for i in np.flatnonzero(cloud.role != FREE_SURFACE):
            e = u[i] - exact[i]
            w.writerow([int(i), repr(float(cloud.X[i, 0])), repr(float(cloud.X[i, 1])),
                        repr(float(u[i, 0])), repr(float(u[i, 1])),
                        repr(float(e[0])), repr(float(e[1]))])


@dataclass
class RunResult:
    config: RunConfig
    report: ConvergenceReport
    diagnostics: list = field(default_factory=list)
    solutions: list = field(default_factory=list, repr=False)


def run(cfg, keep_solutions=False):
    """Solve every level of ``cfg``; raises on the first failure."""
    cfg.validate()
    case = benchmark_case(cfg)
    out = Path(cfg.out) if cfg.out else None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
    report = ConvergenceReport()
    diagnostics = []
    solutions = []
    errs, hs = [], []
    for level, (cloud, fam) in enumerate(build_ladder(cfg)):
        weights = build_weights(cloud, fam, cfg.formulation, cfg.order)
        system = assemble(cloud, fam, weights, case.material, cfg.formulation,
                          case.body_force, case.exact)
        sol = solve(system)
        bulk = cloud.role == BULK
        exact = np.zeros_like(sol.u)
        exact[cloud.role != FREE_SURFACE] = case.exact(cloud.X[cloud.role != FREE_SURFACE])
        err = rms_error(sol.u, exact, bulk)
        if cfg.benchmark == "plate_hole":
            err /= float(np.max(np.abs(exact[bulk])))
        errs.append(err)
        hs.append(cloud.h_avg)
        rate = float("nan")
        if level > 0:
            rate = convergence_rate(errs[-2:], hs[-2:])[0]
        report.rows.append(ConvergenceRow(cfg.benchmark, cfg.formulation, cfg.order, level,
                                          cloud.h_avg, err, rate, cfg.grid_kind, cfg.horizon,
                                          cfg.seed))
        diag = dict(sol.info, level=level, nodes=int(cloud.N), bulk=int(bulk.sum()),
                    h=cloud.h_avg, residual=sol.residual_norm, rhs_norm=sol.rhs_norm, rms=err)
        diagnostics.append(diag)
        log.info("%s L%d h=%.4g rms=%.4e", _tag(cfg), level, cloud.h_avg, err)
        if out is not None:
            if cfg.dump_fields:
                write_fields(out / f"fields_{_tag(cfg)}_L{level}.csv", cloud, sol.u, exact)
            if cfg.dump_weights:
                dump_weights(out / f"weights_{_tag(cfg)}_L{level}.csv",
                             {"kinematic": weights.kinematic, "force": weights.force})
            if cfg.plot and cfg.dump_fields:
                from .plotting import plot_field
                plot_field(cloud, sol.u[:, 0], out / f"u1_{_tag(cfg)}_L{level}.png",
                           title=f"{cfg.formulation} n={cfg.order} L{level}: u1")
        if keep_solutions:
            solutions.append((cloud, sol))
    return RunResult(cfg, report, diagnostics, solutions)


def sweep(configs):
    """Run every config; a failed cell becomes a single ``status`` row."""
    if not configs:
        raise ValidationError("empty sweep matrix")
    report = ConvergenceReport()
    results = []
    for cfg in configs:
        try:
            res = run(replace(cfg, plot=False) if cfg.plot else cfg)
        except (PDError, ValueError) as exc:
            log.warning("sweep cell %s failed: %s", _tag(cfg), exc)
            report.rows.append(ConvergenceRow(cfg.benchmark, cfg.formulation, cfg.order, -1,
                                              float("nan"), float("nan"), float("nan"),
                                              cfg.grid_kind, cfg.horizon, cfg.seed,
                                              f"error: {type(exc).__name__}: {exc}"))
            continue
        report.extend(res.report)
        results.append(res)
    return report, results


# ---------------------------------------------------------------------------
# output


def _fmt(v):
    if isinstance(v, float):
        return "" if math.isnan(v) else repr(v)
    return str(v)


def write_report(path, report):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(REPORT_HEADER)
        for r in report.rows:
            w.writerow([_fmt(getattr(r, k)) for k in REPORT_HEADER])


def read_report(path):
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        for rec in csv.DictReader(fh):
            def num(key):
                return float(rec[key]) if rec[key] else float("nan")
            rows.append(ConvergenceRow(rec["case"], rec["formulation"], int(rec["order"]),
                                       int(rec["level"]), num("h"), num("rms"), num("rate"),
                                       rec.get("grid", ""), num("delta") if rec.get("delta") else float("nan"),
                                       int(rec.get("seed") or 0), rec.get("status", "ok")))
    return ConvergenceReport(rows)


def write_diagnostics(path, results):
    payload = [{"config": {k: v for k, v in vars(r.config).items()}, "levels": r.diagnostics}
               for r in results]
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True, default=float)
        fh.write("\n")
