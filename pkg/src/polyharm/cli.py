"""Command-line front end: one subcommand per computation, plus the ``all`` pipeline.

Every run produces a report (JSON) and, for numeric series, a CSV table.
Reports echo the full configuration, its hash and the tool version; wall-clock
timings sit in a separate section that the determinism hash ignores.

Exit codes: 0 success, 1 a check failed or a computation raised, 2 usage error.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import io
import json
import logging
import math
import re
import sys
import time
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np
import yaml

from . import __version__, balls, dimension, groups, harmonic, inequalities, rough, volume

log = logging.getLogger("polyharm")

COMMANDS = ("growth", "pansu", "rvc", "dirichlet", "poincare", "meanvalue", "harnack", "dim",
            "oracle", "rough-check", "rough-extend", "rough-mvl", "all")


class UsageError(ValueError):
    pass


# --------------------------------------------------------------------------
# configuration
# --------------------------------------------------------------------------

@dataclass
class RoughConfig:
    enabled: bool = True
    D: int = 2
    radii: list[int] = field(default_factory=lambda: [10, 20, 40])
    n_fields: int = 20
    window: int = 15
    graph: str = "subdivided"
    map: str | None = None
    a: float | None = None
    b: float | None = None


@dataclass
class RunConfig:
    group: str = "z2"
    generators: list[list[int]] | None = None
    nmax: int = 60
    radius: int = 20
    inner: int | None = None
    D: int | None = None
    d: int = 2
    schedule: list[int] = field(default_factory=lambda: list(dimension.DEFAULT_SCHEDULE))
    rel_tol: float = dimension.DEFAULT_REL_TOL
    solver_tol: float | None = None
    thetas: list[str] = field(default_factory=lambda: ["0.1", "0.5", "1", "10"])
    scales: list[int] = field(default_factory=lambda: [2, 4, 8])
    boundary: str = "random"
    seed: int = inequalities.DEFAULT_SEED
    cache_dir: str | None = None
    format: str = "csv"
    jobs: int = 1
    rough: RoughConfig = field(default_factory=RoughConfig)

    def validate(self) -> "RunConfig":
        try:
            self.spec
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        if self.rel_tol <= 0 or (self.solver_tol is not None and self.solver_tol <= 0):
            raise UsageError("tolerances must be > 0")
        try:
            if any(Fraction(t) <= 0 for t in self.thetas):
                raise UsageError("theta values must be > 0")
        except (ValueError, ZeroDivisionError):
            raise UsageError(f"bad theta grid {self.thetas!r}") from None
        if len(self.schedule) < 2 or any(b <= a for a, b in zip(self.schedule, self.schedule[1:])) \
                or self.schedule[0] < 1:
            raise UsageError("schedule must be positive, strictly increasing, with at least two radii")
        if self.nmax < 1 or self.radius < 1 or self.jobs < 1 or self.d < 0:
            raise UsageError("nmax, radius and jobs must be >= 1, d >= 0")
        if self.D is not None and self.D < 1:
            raise UsageError("D must be >= 1")
        if not self.scales or min(self.scales) < 1:
            raise UsageError("scales must be positive")
        if self.format not in ("csv", "json"):
            raise UsageError("format must be csv or json")
        r = self.rough
        if r.D not in (1, 2, 3) or not r.radii or min(r.radii) < 1 or r.n_fields < 1 or r.window < 1:
            raise UsageError("bad rough settings")
        return self

    @property
    def spec(self) -> groups.GroupSpec:
        return groups.parse_group(self.group)

    @property
    def generating_set(self) -> balls.GeneratingSet:
        els = None if self.generators is None else [tuple(g) for g in self.generators]
        try:
            return balls.generating_set(self.spec, els)
        except ValueError as exc:
            raise UsageError(f"bad generators: {exc}") from None

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        data = dict(data or {})
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise UsageError(f"unknown config keys: {sorted(unknown)}")
        rough_data = dict(data.pop("rough", None) or {})
        rknown = {f.name for f in dataclasses.fields(RoughConfig)}
        if set(rough_data) - rknown:
            raise UsageError(f"unknown rough config keys: {sorted(set(rough_data) - rknown)}")
        try:
            cfg = cls(**data, rough=RoughConfig(**rough_data))
        except TypeError as exc:
            raise UsageError(str(exc)) from None
        cfg.thetas = [str(t) for t in cfg.thetas]
        cfg.schedule = [int(s) for s in cfg.schedule]
        cfg.scales = [int(s) for s in cfg.scales]
        if cfg.generators is not None:
            cfg.generators = [[int(c) for c in g] for g in cfg.generators]
        return cfg.validate()

    def hash(self) -> str:
        return hashlib.sha256(canonical_json(self.to_dict()).encode()).hexdigest()


def load_config(path) -> dict:
    try:
        with open(path) as fh:
            data = yaml.safe_load(fh)
    except (OSError, yaml.YAMLError) as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from None
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise UsageError("config file must hold a mapping")
    return data


def nominal_degree(spec) -> int:
    if isinstance(spec, groups.Lattice):
        return spec.D
    if isinstance(spec, groups.Heisenberg):
        return 4
    return nominal_degree(spec.base)


# --------------------------------------------------------------------------
# serialisation
# --------------------------------------------------------------------------

def jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, Fraction):
        return str(obj)
    if isinstance(obj, (groups.Lattice, groups.Heisenberg, groups.Product)):
        return groups.spec_to_dict(obj)
    if dataclasses.is_dataclass(obj):
        return jsonable(dataclasses.asdict(obj))
    return obj if obj is None or isinstance(obj, str) else str(obj)


def canonical_json(obj) -> str:
    return json.dumps(jsonable(obj), sort_keys=True, separators=(",", ":"), allow_nan=False)


def make_report(command: str, cfg: RunConfig, payload, timings: dict, ok: bool) -> dict:
    body = {
        "tool": "polyharm",
        "version": __version__,
        "command": command,
        "config": cfg.to_dict(),
        "config_hash": cfg.hash(),
        "ok": ok,
        "payload": jsonable(payload),
    }
    body = json.loads(canonical_json(body))
    body["determinism_hash"] = determinism_hash(body)
    body["timings"] = jsonable(timings)
    return body


def determinism_hash(report: dict) -> str:
    core = {k: v for k, v in report.items() if k not in ("timings", "determinism_hash")}
    return hashlib.sha256(canonical_json(core).encode()).hexdigest()


def csv_text(header, rows) -> str:
    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    for row in rows:
        buf.write(",".join(_cell(c) for c in row) + "\n")
    return buf.getvalue()


def _cell(c) -> str:
    if isinstance(c, (float, np.floating)):
        return repr(float(c))
    return str(c)


# --------------------------------------------------------------------------
# boundary data
# --------------------------------------------------------------------------

_TERM = re.compile(r"^([+-]?)\s*(\d+(?:\.\d*)?)?\s*\*?\s*((?:x\d+(?:\^\d+)?\s*\*?\s*)*)$")


def parse_polynomial(text: str, k: int) -> list[tuple[float, tuple[int, ...]]]:
    """``"x1^2 - x2^2 + 3*x1*x2"`` as ``[(coef, exponents)]`` in ``k`` variables."""
    src = text.replace(" ", "")
    if not src:
        raise UsageError("empty polynomial")
    parts = re.findall(r"[+-]?[^+-]+", src)
    if "".join(parts) != src:
        raise UsageError(f"cannot parse polynomial {text!r}")
    terms = []
    for part in parts:
        m = _TERM.match(part)
        if not m or (m.group(2) is None and not m.group(3)):
            raise UsageError(f"cannot parse term {part!r}")
        coef = float(m.group(2)) if m.group(2) else 1.0
        coef = -coef if m.group(1) == "-" else coef
        alpha = [0] * k
        for var, _, power in re.findall(r"x(\d+)(\^(\d+))?", m.group(3) or ""):
            i = int(var) - 1
            if not 0 <= i < k:
                raise UsageError(f"variable x{var} out of range for {k} coordinates")
            alpha[i] += int(power) if power else 1
        terms.append((coef, tuple(alpha)))
    return terms


def polynomial_values(terms, coords: np.ndarray) -> np.ndarray:
    out = np.zeros(len(coords))
    for coef, alpha in terms:
        out += coef * inequalities.monomial_values(coords, alpha)
    return out


def boundary_data(cfg: RunConfig, coords: np.ndarray, positive: bool = False):
    """Values of the configured boundary data and the polynomial terms (None when random)."""
    if cfg.boundary == "random":
        rng = np.random.default_rng([cfg.seed, 3])
        vals = rng.uniform(1.0, 2.0, len(coords)) if positive else rng.standard_normal(len(coords))
        return vals, None
    terms = parse_polynomial(cfg.boundary, coords.shape[1])
    return polynomial_values(terms, coords), terms


# --------------------------------------------------------------------------
# commands: each returns (payload, csv, ok)
# --------------------------------------------------------------------------

def cmd_growth(cfg):
    s = volume.growth_function(cfg.spec, cfg.generating_set, cfg.nmax, cache_dir=cfg.cache_dir)
    return {"beta": list(s.beta), "generators": cfg.generating_set.convention}, \
        csv_text(["n", "beta"], enumerate(s.beta)), True


def _series(cfg):
    return volume.growth_function(cfg.spec, cfg.generating_set, cfg.nmax, cache_dir=cfg.cache_dir)


def cmd_pansu(cfg):
    s = _series(cfg)
    D = cfg.D or nominal_degree(cfg.spec)
    rep = volume.volume_report(s, D, cfg.thetas)
    rows = [(n, s.beta[n], rep.pansu[n - 1]) for n in range(1, s.n_max + 1)]
    return {"D": D, "report": rep}, csv_text(["n", "beta", "pansu_ratio"], rows), True


def cmd_rvc(cfg):
    s = _series(cfg)
    D = cfg.D or nominal_degree(cfg.spec)
    thr = {t: volume.rvc_threshold(s, D, t) for t in cfg.thetas}
    dbl = volume.doubling_ratios_exact(s)
    payload = {"D": D, "R0": thr, "doubling": [str(r) for r in dbl],
               "doubling_max": max(map(float, dbl)) if dbl else None}
    return payload, csv_text(["theta", "R0"], thr.items()), True


def cmd_dirichlet(cfg):
    r = cfg.radius
    ball = balls.cached_ball(cfg.spec, cfg.generating_set, None, r + 1, cfg.cache_dir)
    bidx = balls.boundary(ball, r).indices
    vals, terms = boundary_data(cfg, ball.vertices[bidx])
    sol = harmonic.solve_dirichlet(ball, r, vals, tol=cfg.solver_tol)
    u = sol.field.values
    m = ball.size(r)
    payload = {"radius": r, "residual": sol.residual, "tolerance": sol.tolerance,
               "iterations": sol.iterations, "method": sol.method,
               "max_principle": bool(u[:m].max() <= vals.max() and u[:m].min() >= vals.min()),
               "n_interior": m, "boundary": cfg.boundary}
    if terms is not None:
        exact = polynomial_values(terms, sol.field.ball.vertices[:m])
        payload["max_deviation_from_boundary_polynomial"] = float(np.abs(u[:m] - exact).max())
    rows = [tuple(int(c) for c in v) + (float(x),) for v, x in zip(sol.field.ball.vertices, u)]
    k = groups.dim(cfg.spec)
    return payload, csv_text([f"x{i + 1}" for i in range(k)] + ["u"], rows), payload["max_principle"]


def _battery(cfg):
    return inequalities.battery(cfg.spec, cfg.scales, seed=cfg.seed, jobs=cfg.jobs)


def cmd_poincare(cfg):
    rep = _battery(cfg)["poincare"]
    return {"report": rep}, rep.as_csv(), True


def cmd_meanvalue(cfg):
    rep = _battery(cfg)["mean_value"]
    return {"report": rep}, rep.as_csv(), True


def cmd_harnack(cfg):
    r = cfg.radius
    n = cfg.inner if cfg.inner is not None else r // 2
    if not 0 <= n < r:
        raise UsageError("harnack needs 0 <= inner < radius")
    ball = balls.cached_ball(cfg.spec, cfg.generating_set, None, r + 1, cfg.cache_dir)
    bidx = balls.boundary(ball, r).indices
    vals, _ = boundary_data(cfg, ball.vertices[bidx], positive=True)
    if np.any(vals <= 0):
        raise UsageError("Harnack boundary data must be positive")
    sol = harmonic.solve_dirichlet(ball, r, vals, tol=cfg.solver_tol)
    ratio = harmonic.harnack_ratio(sol.field, n)
    return {"radius": r, "inner": n, "ratio": ratio, "residual": sol.residual}, \
        csv_text(["inner", "ratio"], [(n, ratio)]), True


def cmd_dim(cfg):
    try:
        dimension.check_schedule(cfg.spec, cfg.d, cfg.schedule)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    est = dimension.estimate_dimension(cfg.spec, cfg.d, cfg.schedule, cfg.rel_tol, cfg.generating_set,
                                       cfg.cache_dir)
    payload = est.as_dict()
    payload["eigenvalues"] = est.eigenvalues
    ok = est.saturated and (est.oracle is None or est.saturated_rank == est.oracle)
    return payload, csv_text(["R", "rank"], zip(est.schedule, est.ranks)), ok


def cmd_oracle(cfg):
    D = cfg.D
    if D is None:
        if not isinstance(cfg.spec, groups.Lattice):
            raise UsageError("oracle needs --D or a lattice group")
        D = cfg.spec.D
    value = dimension.symbolic_kernel_dim(D, cfg.d)
    return {"D": D, "d": cfg.d, "dimension": value}, f"{value}\n", True


def _rough_map(cfg, window=None) -> rough.RoughIsometry:
    rc = cfg.rough
    if rc.graph == "subdivided":
        return make_subdivided(rc.D, rc.window if window is None else window)
    if rc.map is None or rc.a is None or rc.b is None:
        raise UsageError("a graph file needs rough.map, rough.a and rough.b")
    try:
        g = rough.load_graph_csv(rc.graph)
        return rough.load_map_csv(rc.map, g, cfg.spec, rc.a, rc.b)
    except OSError as exc:
        raise UsageError(str(exc)) from None


def make_subdivided(D, window):
    return rough.make_subdivided_lattice(D, window)


def cmd_rough_check(cfg):
    phi = _rough_map(cfg)
    chk = rough.check_rough_isometry(phi)
    payload = {"graph": cfg.rough.graph, "n_vertices": phi.graph.n, "check": chk}
    ok = chk.ok
    if chk.ok:
        try:
            psi = rough.rough_inverse(phi)
            inv, comp = rough.check_inverse(psi), rough.check_composition(psi)
            payload.update(inverse=inv, composition=comp)
            ok = inv.ok and comp.ok
        except rough.RoughIsometryError as exc:
            payload["inverse_error"] = str(exc)
            ok = False
    rows = [("lower",) + v for v in chk.lower] + [("upper",) + v for v in chk.upper] \
        + [("density", ";".join(map(str, z)), "", "", "") for z in chk.density]
    return payload, csv_text(["kind", "x", "y", "d_source", "d_target"], rows), ok


def cmd_rough_extend(cfg):
    rc = cfg.rough
    T = cfg.radius
    probe = make_subdivided(rc.D, 1)
    q = probe.graph.degree_bound ** (int(math.floor(probe.a * probe.b)) + 1)
    phi = make_subdivided(rc.D, T + int(probe.b) + q // 2 + 1)
    inj = rough.injectivize(phi)
    ints = rough.seeded_integer_fields(phi.graph, rc.n_fields, cfg.seed)
    props = rough.operator_E_properties(inj, ints, T)
    ext = rough.extend(inj, ints[:, 0], T)
    payload = {"q": inj.q, "b_extension": inj.b, "radius": T, "E": props,
               "n_direct": int(ext.direct.sum()), "n_averaged": int((~ext.direct).sum())}
    k = ext.ball.vertices.shape[1]
    rows = [tuple(int(c) for c in v) + (float(x), p)
            for v, x, p in zip(ext.ball.vertices, ext.values, ext.provenance)]
    return payload, csv_text([f"y{i + 1}" for i in range(k)] + ["Eu", "provenance"], rows), props.ok


MVL_SPREAD_LIMIT = 10.0


def cmd_rough_mvl(cfg):
    rc = cfg.rough
    rep = rough.rough_suite(rc.D, rc.radii, rc.n_fields, cfg.seed, rc.window)
    ok = rep["ok"] and rep["mvl"]["spread"] <= MVL_SPREAD_LIMIT
    rows = [(row["R"], row["max"]) for row in rep["mvl"]["rows"]]
    return rep, csv_text(["R", "max_C"], rows), ok


# --------------------------------------------------------------------------
# pipeline
# --------------------------------------------------------------------------

def pipeline_all(cfg: RunConfig) -> tuple[dict, dict, bool]:
    """growth -> rvc -> dim -> inequalities -> rough; a failing stage is recorded and the rest continue."""
    stages, errors, timings = {}, {}, {}
    state = {}

    def growth():
        state["series"] = _series(cfg)
        return {"beta": list(state["series"].beta)}

    def rvc():
        if "series" not in state:
            raise RuntimeError("growth stage failed")
        D = cfg.D or nominal_degree(cfg.spec)
        return {"D": D, "report": volume.volume_report(state["series"], D, cfg.thetas)}

    def dim():
        payload, _, ok = cmd_dim(cfg)
        if not ok:
            payload["check_failed"] = True
        return payload

    def ineq():
        return {k: v for k, v in _battery(cfg).items()}

    def rough_stage():
        rc = cfg.rough
        return rough.rough_suite(rc.D, rc.radii, rc.n_fields, cfg.seed, rc.window)

    plan = [("growth", growth), ("rvc", rvc), ("dim", dim), ("inequalities", ineq)]
    if cfg.rough.enabled:
        plan.append(("rough", rough_stage))
    for name, fn in plan:
        t0 = time.perf_counter()
        try:
            stages[name] = fn()
        except Exception as exc:  # noqa: BLE001 - every stage failure is reported, not raised
            log.warning("stage %s failed: %s", name, exc)
            errors[name] = f"{type(exc).__name__}: {exc}"
        timings[name] = time.perf_counter() - t0
    ok = not errors and not stages.get("dim", {}).get("check_failed", False) \
        and stages.get("rough", {"ok": True})["ok"]
    return {"stages": stages, "errors": errors}, timings, ok


# --------------------------------------------------------------------------
# argument parsing
# --------------------------------------------------------------------------

def _int_list(text):
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _generators(text):
    try:
        return [[int(c) for c in el.split(",")] for el in text.split(";") if el.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError("generators look like '1,0;-1,0;0,1;0,-1'") from None


def _theta_list(text):
    return [t.strip() for t in text.split(",") if t.strip()]


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    S = argparse.SUPPRESS
    a = common.add_argument
    a("--config", default=S, help="YAML file mirroring the run configuration; flags override it")
    a("--group", default=S, help="z<D>, heis, z2xz16, or a JSON group spec")
    a("--generators", type=_generators, default=S, help="symmetric generating set, e.g. '1,0;-1,0;0,1;0,-1'")
    a("--nmax", type=int, default=S)
    a("--radius", type=int, default=S)
    a("--inner", type=int, default=S)
    a("--d", type=int, default=S, help="polynomial growth degree")
    a("--D", type=int, default=S, help="declared homogeneous dimension / lattice rank")
    a("--schedule", type=_int_list, default=S, help="inner radii, e.g. 8,12,16,20")
    a("--rel-tol", dest="rel_tol", type=float, default=S)
    a("--tol", dest="solver_tol", type=float, default=S, help="Dirichlet residual tolerance")
    a("--theta", dest="thetas", type=_theta_list, default=S, help="comma-separated theta grid")
    a("--scales", type=_int_list, default=S)
    a("--boundary", default=S, help="'random' or a polynomial such as 'x1^2-x2^2'")
    a("--seed", type=int, default=S)
    a("--cache-dir", dest="cache_dir", default=S)
    a("--format", choices=("csv", "json"), default=S)
    a("--jobs", type=int, default=S)
    a("--out", default=S, help="directory for <command>.json and <command>.csv")
    a("--graph", dest="rough.graph", default=S, help="'subdivided' or an edge-list CSV")
    a("--map", dest="rough.map", default=S, help="vertex,coords... CSV for a graph file")
    a("--a", dest="rough.a", type=float, default=S)
    a("--b", dest="rough.b", type=float, default=S)
    a("--lattice-D", dest="rough.D", type=int, default=S, help="rank of the subdivided lattice")
    a("--window", dest="rough.window", type=int, default=S)
    a("--radii", dest="rough.radii", type=_int_list, default=S)
    a("--fields", dest="rough.n_fields", type=int, default=S)
    a("--no-rough", dest="rough.enabled", action="store_false", default=S)
    a("-v", "--verbose", action="store_true", default=S)

    p = argparse.ArgumentParser(prog="polyharm", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"polyharm {__version__}")
    sub = p.add_subparsers(dest="command", required=True, metavar="COMMAND")
    for name in COMMANDS:
        sub.add_parser(name, parents=[common])
    return p


def config_from_args(ns: argparse.Namespace) -> RunConfig:
    data = load_config(ns.config) if hasattr(ns, "config") else {}
    data.setdefault("rough", {})
    data["rough"] = dict(data["rough"] or {})
    for key, val in vars(ns).items():
        if key in ("command", "config", "out", "verbose"):
            continue
        if key.startswith("rough."):
            data["rough"][key.split(".", 1)[1]] = val
        else:
            data[key] = val
    return RunConfig.from_dict(data)


HANDLERS = {
    "growth": cmd_growth, "pansu": cmd_pansu, "rvc": cmd_rvc, "dirichlet": cmd_dirichlet,
    "poincare": cmd_poincare, "meanvalue": cmd_meanvalue, "harnack": cmd_harnack, "dim": cmd_dim,
    "oracle": cmd_oracle, "rough-check": cmd_rough_check, "rough-extend": cmd_rough_extend,
    "rough-mvl": cmd_rough_mvl,
}


def execute(command: str, cfg: RunConfig) -> tuple[dict, str | None]:
    t0 = time.perf_counter()
    if command == "all":
        payload, timings, ok = pipeline_all(cfg)
        text = None
    else:
        payload, text, ok = HANDLERS[command](cfg)
        timings = {}
    timings["total"] = time.perf_counter() - t0
    return make_report(command, cfg, payload, timings, ok), text


def write_outputs(report: dict, text: str | None, out: str | None, fmt: str) -> None:
    as_json = json.dumps(report, indent=2, sort_keys=True) + "\n"
    if out is None:
        sys.stdout.write(text if fmt == "csv" and text is not None else as_json)
        return
    d = Path(out)
    d.mkdir(parents=True, exist_ok=True)
    (d / f"{report['command']}.json").write_text(as_json)
    if text is not None:
        (d / f"{report['command']}.csv").write_text(text)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if getattr(ns, "verbose", False) else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = config_from_args(ns)
        report, text = execute(ns.command, cfg)
        write_outputs(report, text, getattr(ns, "out", None), cfg.format)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"polyharm: error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - reported as a failed run
        print(f"polyharm: {ns.command} failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    return 0 if report["ok"] else 1


if __name__ == "__main__":
    sys.exit(main())
