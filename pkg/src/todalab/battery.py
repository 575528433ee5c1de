"""Theorem batteries, JSON reports and plot-ready CSV data.

A battery run turns an :class:`ExperimentConfig` into a list of
:class:`Row` records ``{suite, instance, metric, value, tolerance, pass}``.
A row passes when ``value < tolerance``.  Every suite draws its instances
from its own seeded generator, so a suite's rows do not depend on which
other suites ran.

Report schema (``report.json``)::

    {"seed": int, "suites": [str, ...], "passed": bool,
     "rows": [{"suite": str, "instance": str, "metric": str,
               "value": float | null, "tolerance": float, "pass": bool}, ...]}

Floats are written with 17 significant digits; non-finite values become
``null`` in JSON and ``nan``/``inf`` in CSV.  A suite that raises contributes one failing row whose metric is
``error:<ExceptionType>``; rows produced before the exception are kept.

CSV headers::

    hamiltonian   x,h11,h12,h22
    potential     x,V
    disk trace    x,center_re,center_im,radius
    m trace       x,y,m_plus_re,m_plus_im,m_minus_re,m_minus_im
    band set      lo,hi
    trajectory    t,a_<n>...,b_<n>...
"""
from __future__ import annotations

import copy
import csv
import json
import math
import zlib
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Callable

import numpy as np
import yaml

from . import canonical as cn
from . import cocycle as cc
from . import herglotz as hz
from . import jacobi as jm
from . import mobius
from . import toda

X = jm.as_poly([0, 1])
X2 = jm.as_poly([0, 0, 1])


class ConfigError(ValueError):
    """Malformed or inconsistent experiment configuration."""


DEFAULT_CONFIG: dict = {
    "seed": 2026,
    "jacobi": {
        "sizes": [2, 3, 4, 5, 6],
        "a_range": [0.3, 2.0],
        "b_range": [-1.0, 1.0],
        "isospectral_instances": 20,
        "cocycle_instances": 10,
        "cocycle_sizes": [2, 3, 4],
        "omega_instances": 10,
        "commutativity_instances": 5,
        "lambda_instances": 1,
        "reflection_size": 4,
        "reflection_points": 50,
        "reflection_y": 1e-3,
        "two_periodic": {"a": [1.0, 1.0], "b": [0.4, -0.4]},
    },
    "z_grid": ["1j", "1+1j"],
    "steps": {"isospectral": 2000, "flow_time": 1.0, "commutativity_time": 0.5, "fd_step": 1e-4, "band_grid": 2001},
    "canonical": {
        "x_max": 40.0,
        "dx": 1e-3,
        "z": "1j",
        "roundtrip_interval": [0.0, 1.0],
        "shift": 0.5,
        "shift_domain": [0.0, 2.5],
        "cocycle_domain": [-1.0, 3.0],
        "cocycle_times": [0.3, 0.4],
        "conjugation_B": [[0.2, 0.5], [-0.3, -0.2]],
        "conjugation_t": 0.7,
        "rank2_F": [[0.3, 1.2], [-0.7, -0.3]],
        "radius_tol": 1e-9,
    },
    "tolerances": {
        "isospectral": 1e-8,
        "commutativity": 1e-6,
        "cocycle": 1e-6,
        "m_update": 1e-6,
        "zero_curvature": 1e-10,
        "reflection": 1e-6,
        "band_edge": 1e-10,
        "floquet": 1e-6,
        "omega": 1e-5,
        "lambda": 1e-6,
        "series": 1e-12,
        "evolg": 1e-5,
        "roundtrip": 1e-4,
        "canonical_m": 1e-4,
        "radius_increases": 1.0,
        "disk_in_upper": 1e-9,
        "unimodular": 1e-12,
        "twisted": 1e-6,
        "det_characteristic": 1e-6,
        "combined_law": 1e-4,
        "combined_m": 1e-4,
        "conjugation_m": 1e-4,
        "interchange": 1e-6,
        "twist_inverse": 1e-10,
    },
    "out": "results",
    "suites": None,
}


def _merge(base: dict, override: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in override.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = v
    return out


def _complex(v) -> complex:
    try:
        return complex(str(v).replace(" ", "")) if isinstance(v, str) else complex(v)
    except ValueError as exc:
        raise ConfigError(f"cannot read {v!r} as a complex number") from exc


@dataclass(frozen=True)
class ExperimentConfig:
    seed: int
    jacobi: dict
    z_grid: tuple
    steps: dict
    canonical: dict
    tolerances: dict
    out: str
    suites: tuple | None = None

    @classmethod
    def from_dict(cls, d: dict | None = None) -> "ExperimentConfig":
        d = _merge(DEFAULT_CONFIG, d or {})
        unknown = set(d) - set(DEFAULT_CONFIG)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        for key in ("jacobi", "steps", "canonical", "tolerances"):
            if not isinstance(d[key], dict):
                raise ConfigError(f"{key} must be a mapping")
        try:
            seed = int(d["seed"])
        except (TypeError, ValueError) as exc:
            raise ConfigError("seed must be an integer") from exc
        if isinstance(d["z_grid"], (str, int, float)):
            raise ConfigError("z_grid must be a list")
        z_grid = tuple(_complex(z) for z in d["z_grid"])
        if not z_grid:
            raise ConfigError("z_grid must be non-empty")
        if any(z.imag <= 0 for z in z_grid):
            raise ConfigError("z_grid points must lie in the upper half plane")
        extra = sorted(set(d["tolerances"]) - set(DEFAULT_CONFIG["tolerances"]))
        if extra:
            raise ConfigError(f"unknown tolerances: {extra}")
        tol = {}
        for k, v in d["tolerances"].items():
            try:
                tol[k] = float(v)
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"tolerance {k} is not a number") from exc
            if not tol[k] > 0:
                raise ConfigError(f"tolerance {k} must be > 0")
        jac = d["jacobi"]
        for key in ("sizes", "cocycle_sizes"):
            if not jac[key] or any(int(n) < 1 for n in jac[key]):
                raise ConfigError(f"jacobi.{key} must be a non-empty list of positive sizes")
        if int(jac["reflection_points"]) < 1:
            raise ConfigError("jacobi.reflection_points must be positive")
        can = d["canonical"]
        if not float(can["dx"]) > 0 or not float(can["x_max"]) > 0:
            raise ConfigError("canonical.dx and canonical.x_max must be positive")
        if _complex(can["z"]).imag <= 0:
            raise ConfigError("canonical.z must lie in the upper half plane")
        suites = d["suites"]
        if suites is not None:
            if isinstance(suites, str) or not all(isinstance(x, str) for x in suites):
                raise ConfigError("suites must be a list of suite names")
            unknown = sorted(set(suites) - set(SUITES))
            if unknown:
                raise ConfigError(f"unknown suites {unknown}; choose from {sorted(SUITES)}")
            suites = tuple(suites)
        return cls(seed, jac, z_grid, d["steps"], can, tol, str(d["out"]), suites)

    @classmethod
    def from_yaml(cls, path) -> "ExperimentConfig":
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        try:
            data = yaml.safe_load(text) or {}
        except yaml.YAMLError as exc:
            raise ConfigError(f"invalid YAML in {path}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config file must hold a mapping")
        return cls.from_dict(data)

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "jacobi": self.jacobi,
            "z_grid": [str(z) for z in self.z_grid],
            "steps": self.steps,
            "canonical": self.canonical,
            "tolerances": self.tolerances,
            "out": self.out,
            "suites": None if self.suites is None else list(self.suites),
        }

    def key(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


@dataclass(frozen=True)
class Row:
    suite: str
    instance: str
    metric: str
    value: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return bool(math.isfinite(self.value) and self.value < self.tolerance)


@dataclass
class Report:
    seed: int
    suites: list
    rows: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.rows)

    def to_json(self) -> str:
        return report_json(self)


def _fmt(v: float) -> str:
    v = float(v)
    return format(v, ".17g") if math.isfinite(v) else "null"


def report_json(report: Report) -> str:
    """Deterministic JSON text: fixed key order, floats to 17 digits."""
    lines = []
    for r in report.rows:
        lines.append(
            '    {"suite": %s, "instance": %s, "metric": %s, "value": %s, "tolerance": %s, "pass": %s}'
            % (json.dumps(r.suite), json.dumps(r.instance), json.dumps(r.metric), _fmt(r.value), _fmt(r.tolerance), "true" if r.passed else "false")
        )
    body = ",\n".join(lines)
    return (
        "{\n"
        f'  "seed": {report.seed},\n'
        f'  "suites": {json.dumps(report.suites)},\n'
        f'  "passed": {"true" if report.passed else "false"},\n'
        '  "rows": [\n' + body + ("\n" if lines else "") + "  ]\n}\n"
    )


# --- data files ---------------------------------------------------------


def _write_csv(path: Path, header, rows) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([format(float(v), ".17g") if isinstance(v, (float, np.floating)) else v for v in row])
    return path


def write_hamiltonian(H: cn.Hamiltonian, path) -> Path:
    v = H.values
    return _write_csv(Path(path), ["x", "h11", "h12", "h22"], zip(H.x, v[:, 0, 0], v[:, 0, 1], v[:, 1, 1]))


def read_hamiltonian(path) -> cn.Hamiltonian:
    d = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    vals = np.stack([np.stack([d[:, 1], d[:, 2]], -1), np.stack([d[:, 2], d[:, 3]], -1)], -2)
    return cn.Hamiltonian(d[:, 0], vals)


def write_potential(V: cn.Potential, path) -> Path:
    return _write_csv(Path(path), ["x", "V"], zip(V.x, V.V))


def read_potential(path) -> cn.Potential:
    d = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return cn.Potential(d[:, 0], d[:, 1])


def write_disk_trace(tr: cn.DiskTrace, path) -> Path:
    return _write_csv(Path(path), ["x", "center_re", "center_im", "radius"], zip(tr.x, tr.center.real, tr.center.imag, tr.radius))


def write_band_set(bands: hz.BandSet, path) -> Path:
    return _write_csv(Path(path), ["lo", "hi"], bands.intervals)


def write_jacobi(J: jm.JacobiMatrix, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(J.to_dict(), indent=2) + "\n")
    return path


def m_trace(J: jm.JacobiMatrix, xs, y: float) -> np.ndarray:
    """Rows ``(x, y, Re m_+, Im m_+, Re m_-, Im m_-)`` along ``x + i y``."""
    out = []
    for x in np.asarray(xs, float):
        pr = hz.m_pair(J, complex(x, y))
        mp = complex(pr.m_plus) if pr.m_plus is not mobius.INF else complex(math.inf)
        mm = complex(pr.m_minus) if pr.m_minus is not mobius.INF else complex(math.inf)
        out.append((x, y, mp.real, mp.imag, mm.real, mm.imag))
    return np.array(out)


def emit_plot_data(kind: str, instance, grid, path) -> Path:
    """Write one CSV series.

    ``kind``:
      ``"m-trace"``     instance = JacobiMatrix, grid = ``(xs, y)``
      ``"band-set"``    instance = JacobiMatrix, grid = search grid size
      ``"disk-radii"``  instance = Hamiltonian, grid = ``z``
      ``"trajectory"``  instance = ``(JacobiMatrix, p)``, grid = ``(t, steps, every)``
    """
    path = Path(path)
    if kind == "m-trace":
        xs, y = grid
        return _write_csv(path, ["x", "y", "m_plus_re", "m_plus_im", "m_minus_re", "m_minus_im"], m_trace(instance, xs, y))
    if kind == "band-set":
        J = instance
        return write_band_set(hz.fixed_point_band_set(hz.period_transfer(J), hz.band_search_interval(J), grid=int(grid)), path)
    if kind == "disk-radii":
        return write_disk_trace(cn.weyl_disk_trace(instance, complex(grid)), path)
    if kind == "trajectory":
        J, p = instance
        t, steps, every = grid
        ts, A, B = toda.lax_trajectory(J, p, t, steps, every)
        sites = jm.window_sites(J)
        header = ["t"] + [f"a_{n}" for n in sites] + [f"b_{n}" for n in sites]
        return _write_csv(path, header, (tuple([float(tt)] + list(map(float, a)) + list(map(float, b))) for tt, a, b in zip(ts, A, B)))
    raise ValueError(f"unknown plot data kind {kind!r}")


# --- instances ----------------------------------------------------------


def suite_rng(cfg: ExperimentConfig, name: str) -> np.random.Generator:
    return np.random.default_rng([cfg.seed, zlib.crc32(name.encode())])


def periodic_instances(cfg: ExperimentConfig, name: str, count: int, sizes=None) -> list[jm.JacobiMatrix]:
    rng = suite_rng(cfg, name)
    sizes = list(cfg.jacobi["sizes"] if sizes is None else sizes)
    a_range, b_range = tuple(cfg.jacobi["a_range"]), tuple(cfg.jacobi["b_range"])
    return [jm.random_periodic(rng, int(rng.choice(sizes)), a_range, b_range) for _ in range(int(count))]


def _potential(cfg: ExperimentConfig, f: Callable, lo: float, hi: float) -> cn.Potential:
    return cn.Potential.from_function(f, lo, hi, float(cfg.canonical["dx"]))


@lru_cache(maxsize=4)
def _cocycle_battery(key: str):
    cfg = ExperimentConfig.from_dict(json.loads(key))
    Js = periodic_instances(cfg, "cocycle-joint", cfg.jacobi["cocycle_instances"], cfg.jacobi["cocycle_sizes"])
    elements = [cc.GroupElement((0, 1)), cc.GroupElement((0, 0, 1)), cc.GroupElement((), 1), cc.GroupElement((), -1)]
    return Js, cc.joint_cocycle_battery(Js, elements, np.array(cfg.z_grid))


@lru_cache(maxsize=4)
def _free_hamiltonian(dx: float, lo: float, hi: float):
    V = cn.Potential.from_function(lambda x: 0.0 * x, lo, hi, dx)
    return cn.schrodinger_to_canonical(V)[0]


# --- suites -------------------------------------------------------------


class _Rows(list):
    def __init__(self, suite: str, cfg: ExperimentConfig):
        super().__init__()
        self.suite, self.cfg = suite, cfg

    def add(self, instance: str, metric: str, value: float, tol_key: str):
        self.append(Row(self.suite, instance, metric, float(value), self.cfg.tolerances[tol_key]))


def suite_toda_isospectral(cfg: ExperimentConfig, out: Path, rows: _Rows):
    Js = periodic_instances(cfg, "toda-isospectral", cfg.jacobi["isospectral_instances"])
    t, steps = float(cfg.steps["flow_time"]), int(cfg.steps["isospectral"])
    for label, p in (("x", X), ("x^2", X2)):
        drift = np.zeros(len(Js))
        for N in sorted({J.size for J in Js}):
            idx = [i for i, J in enumerate(Js) if J.size == N]
            flowed = toda.lax_flow_batch([Js[i] for i in idx], p, t, steps)
            for i, K in zip(idx, flowed):
                drift[i] = np.max(np.abs(jm.periodic_spectrum(K) - jm.periodic_spectrum(Js[i])))
        for i, d in enumerate(drift):
            rows.add(f"periodic[{i}] N={Js[i].size}", f"eigenvalue_drift p={label}", d, "isospectral")
    tc = float(cfg.steps["commutativity_time"])
    for i, J in enumerate(Js[: int(cfg.jacobi["commutativity_instances"])]):
        rows.add(f"periodic[{i}] N={J.size}", "commutator_metric p=x q=x^2", toda.commutativity_check(J, X, X2, tc), "commutativity")
    write_jacobi(Js[0], out / "jacobi_isospectral_0.json")
    emit_plot_data("trajectory", (Js[0], X), (t, 1000, 10), out / "trajectory_x.csv")


def suite_cocycle_joint(cfg: ExperimentConfig, out: Path, rows: _Rows):
    Js, bat = _cocycle_battery(cfg.key())
    for i, J in enumerate(Js):
        for k, g in enumerate(bat.elements):
            for l, h in enumerate(bat.elements):
                rows.add(f"periodic[{i}] N={J.size}", f"joint_defect g={g.label()} h={h.label()}", bat.defect[i, k, l], "cocycle")


def suite_m_update(cfg: ExperimentConfig, out: Path, rows: _Rows):
    Js, bat = _cocycle_battery(cfg.key())
    for i, J in enumerate(Js):
        pairs = [hz.m_pair(J, z) for z in bat.z]
        for g in bat.elements:
            gJ, T = bat.acted[i][g]
            worst = 0.0
            for zi, z in enumerate(bat.z):
                pred = mobius.mobius_apply(T[zi], pairs[zi].m_plus)
                worst = max(worst, mobius.chordal_distance(hz.m_pair(gJ, z).m_plus, pred))
            rows.add(f"periodic[{i}] N={J.size}", f"m_plus_chordal g={g.label()}", worst, "m_update")
    can = cfg.canonical
    dx, z = float(can["dx"]), _complex(can["z"])
    H0 = _free_hamiltonian(dx, -1.0, float(can["x_max"]))
    m0 = cn.m_plus_canonical(H0, z, float(can["radius_tol"]))
    s = float(can["shift"])
    spec = cn.SchrodingerShift()
    tol = float(can["radius_tol"])
    Hcos, _ = cn.schrodinger_to_canonical(_potential(cfg, np.cos, -1.0, float(can["x_max"])))
    for label, H in (("V=0", H0), ("V=cos", Hcos)):
        m = m0 if H is H0 else cn.m_plus_canonical(H, z, tol)
        sH = cn.twisted_shift_flow(H, s, spec).H
        pred = mobius.mobius_apply(cn.combined_cocycle(H, s, z, spec), m)
        rows.add(label, f"canonical m_plus update s={s:g}", abs(cn.m_plus_canonical(sH, z, tol) - pred), "combined_m")
    B = np.array(can["conjugation_B"], float)
    flow = cn.conjugation_flow(H0, B, float(can["conjugation_t"]))
    pred = mobius.mobius_apply(flow.cocycle, m0)
    rows.add("V=0", "conjugation m_plus update", abs(cn.m_plus_canonical(flow.H, z, float(can["radius_tol"])) - pred), "conjugation_m")
    emit_plot_data("m-trace", Js[0], (np.linspace(*hz.band_search_interval(Js[0]), 201), 1e-2), out / "m_trace_cocycle_0.csv")


def suite_reflection_invariance(cfg: ExperimentConfig, out: Path, rows: _Rows):
    J = periodic_instances(cfg, "reflection-invariance", 1, [cfg.jacobi["reflection_size"]])[0]
    xs = np.linspace(*hz.band_search_interval(J), int(cfg.jacobi["reflection_points"]))
    y = float(cfg.jacobi["reflection_y"])
    before = hz.reflection_modulus_grid(J, xs, y)
    for label, p in (("x", X), ("x^2", X2)):
        after = hz.reflection_modulus_grid(toda.lax_flow(J, p, float(cfg.steps["flow_time"])), xs, y)
        rows.add(f"periodic N={J.size}", f"reflection_modulus_change p={label} y={y:g}", np.max(np.abs(after - before)), "reflection")
    emit_plot_data("m-trace", J, (xs, y), out / "m_trace_reflection.csv")


def suite_zero_curvature(cfg: ExperimentConfig, out: Path, rows: _Rows):
    Js = periodic_instances(cfg, "zero-curvature", 3)
    zs = np.array(cfg.z_grid)
    fd = float(cfg.steps["fd_step"])
    for i, J in enumerate(Js):
        inst = f"periodic[{i}] N={J.size}"
        for label, p in (("x", X), ("x^2", X2)):
            rows.add(inst, f"zero_curvature p={label}", cc.zero_curvature_residual(J, p, zs), "zero_curvature")
            rows.add(inst, f"evolg_residual q={label}", cc.evolg_residual(J, p, zs[0], fd), "evolg")
        for deg in range(1, 6):
            rows.add(inst, f"series_identity deg={deg}", cc.series_truncation_identity(J, deg), "series")


def suite_omega_symmetry(cfg: ExperimentConfig, out: Path, rows: _Rows):
    Js = periodic_instances(cfg, "omega-symmetry", cfg.jacobi["omega_instances"])
    z, fd = cfg.z_grid[0], float(cfg.steps["fd_step"])
    for i, J in enumerate(Js):
        rows.add(f"periodic[{i}] N={J.size}", "omega_symmetry p=x q=x^2", cc.omega_symmetry_check(J, X, X2, z, fd), "omega")
    for i, J in enumerate(Js[: int(cfg.jacobi["lambda_instances"])]):
        inst = f"periodic[{i}] N={J.size}"
        rows.add(inst, "lambda_conjugation p=x", cc.lambda_cocycle(J, X, z).conjugation_defect, "lambda")
        rows.add(inst, "lambda_multiplicativity p=x q=x^2", cc.lambda_multiplicativity_defect(J, X, X2, z), "lambda")


def suite_band_set(cfg: ExperimentConfig, out: Path, rows: _Rows):
    grid = int(cfg.steps["band_grid"])
    Jf = jm.free()
    free = hz.fixed_point_band_set(hz.period_transfer(Jf), (-2.0, 2.0), grid=grid)
    err = abs(free.endpoints() - np.array([-1.0, 1.0])).max() if len(free) == 1 else math.inf
    rows.add("free a=0.5 b=0", "band_edge_error", err, "band_edge")
    write_band_set(free, out / "bands_free.csv")
    tp = cfg.jacobi["two_periodic"]
    J2 = jm.JacobiMatrix(tp["a"], tp["b"])
    found = hz.fixed_point_band_set(hz.period_transfer(J2), hz.band_search_interval(J2), grid=grid)
    rows.add("two-periodic", "floquet_hausdorff", found.hausdorff(hz.floquet_bands(J2)), "floquet")
    write_band_set(found, out / "bands_two_periodic.csv")


def suite_canonical_roundtrip(cfg: ExperimentConfig, out: Path, rows: _Rows):
    lo, hi = map(float, cfg.canonical["roundtrip_interval"])
    V = _potential(cfg, np.cos, lo, hi)
    H, _ = cn.schrodinger_to_canonical(V)
    back = cn.V_from_H(H)
    rows.add("V=cos", "sup|V_from_H - V|", np.max(np.abs(back.V - V.V)), "roundtrip")
    H0, _ = cn.schrodinger_to_canonical(_potential(cfg, lambda x: 0.0 * x, lo, hi))
    rows.add("V=0", "sup|V_from_H|", np.max(np.abs(cn.V_from_H(H0).V)), "roundtrip")
    write_potential(V, out / "potential_cos.csv")
    write_hamiltonian(H, out / "hamiltonian_cos.csv")


def suite_twisted_shift(cfg: ExperimentConfig, out: Path, rows: _Rows):
    can = cfg.canonical
    dx, s, z = float(can["dx"]), float(can["shift"]), _complex(can["z"])
    lo, hi = map(float, can["shift_domain"])
    H, _ = cn.schrodinger_to_canonical(_potential(cfg, np.cos, lo, hi))
    spec = cn.SchrodingerShift()
    shifted = cn.twisted_shift_flow(H, s, spec).H
    Hs, _ = cn.schrodinger_to_canonical(_potential(cfg, lambda x: np.cos(x + s), lo - s, hi - s))
    rows.add("V=cos", f"sup|s.H - H[V(.+s)]| s={s:g}", cn.sup_distance(shifted, Hs), "twisted")
    rows.add("V=cos", "det_characteristic", cn.det_characteristic_check(H, s, spec), "det_characteristic")
    write_hamiltonian(shifted, out / "hamiltonian_cos_twisted.csv")
    Hr = cn.Hamiltonian.from_function(lambda x: np.diag([1.0 + x * x, 1.0]), -1.0, 2.0, dx)
    rows.add("H=diag(1+x^2,1)", "det_characteristic constant F", cn.det_characteristic_check(Hr, s, cn.ConstantShift(can["rank2_F"])), "det_characteristic")
    clo, chi = map(float, can["cocycle_domain"])
    Hc, _ = cn.schrodinger_to_canonical(_potential(cfg, np.cos, clo, chi))
    t1, t2 = map(float, can["cocycle_times"])
    lhs = cn.combined_cocycle(Hc, t1 + t2, z, spec)
    rhs = cn.combined_cocycle(cn.twisted_shift_flow(Hc, t2, spec).H, t1, z, spec) @ cn.combined_cocycle(Hc, t2, z, spec)
    rows.add("V=cos", "combined_cocycle_law", np.max(np.abs(lhs - rhs)), "combined_law")
    rows.add("V=cos", "interchange", cn.interchange_defect(Hc, t2, t1, z, spec), "interchange")
    rows.add("V=cos", "det T_1 - 1", abs(mobius.det(cn.canonical_transfer(Hc, t1 + t2, z)) - 1.0), "unimodular")
    A = cn.jacobi_twist(0.7, 0.2)
    back = cn.twisted_shift_map(cn.twisted_shift_map(Hc, A, 1), A, -1)
    rows.add("V=cos", "twist (-1)o(1) - id", max(np.abs(back.values - Hc.values).max(), np.abs(back.x - Hc.x).max()), "twist_inverse")


def suite_weyl_disks(cfg: ExperimentConfig, out: Path, rows: _Rows):
    can = cfg.canonical
    z = _complex(can["z"])
    H0 = _free_hamiltonian(float(can["dx"]), 0.0, float(can["x_max"]))
    tr = cn.weyl_disk_trace(H0, z)
    finite = np.isfinite(tr.radius)
    rows.add("V=0", "radius_increases", np.sum(np.diff(tr.radius[finite]) > 0), "radius_increases")
    disk = finite & (tr.kind == "disk")
    rows.add("V=0", "disk_below_real_axis", max(0.0, float(np.max(tr.radius[disk] - tr.center[disk].imag))), "disk_in_upper")
    m = cn.m_plus_canonical(H0, z, float(can["radius_tol"]))
    rows.add("V=0", f"|m_plus({z}) - i sqrt(z)|", abs(m - 1j * np.sqrt(z)), "canonical_m")
    # relative to |T|^2: at x = 40 the entries reach e^28 and det cancels
    scale = np.maximum(1.0, np.max(np.abs(tr.matrices), axis=(-2, -1)) ** 2)
    rows.add("V=0", "|det T_1 - 1| / |T_1|^2", np.max(np.abs(mobius.det(tr.matrices) - 1.0) / scale), "unimodular")
    Hh = cn.Hamiltonian.from_function(lambda x: 0.5 * np.eye(2), 0.0, float(can["x_max"]), float(can["dx"]))
    rows.add("H=I/2", "|m_plus - i|", abs(cn.m_plus_canonical(Hh, z, float(can["radius_tol"])) - 1j), "canonical_m")
    write_disk_trace(tr, out / "disk_trace_free.csv")


SUITES: dict[str, Callable] = {
    "toda-isospectral": suite_toda_isospectral,
    "cocycle-joint": suite_cocycle_joint,
    "m-update": suite_m_update,
    "reflection-invariance": suite_reflection_invariance,
    "zero-curvature": suite_zero_curvature,
    "omega-symmetry": suite_omega_symmetry,
    "band-set": suite_band_set,
    "canonical-roundtrip": suite_canonical_roundtrip,
    "twisted-shift": suite_twisted_shift,
    "weyl-disks": suite_weyl_disks,
}


def run_suite(name: str, cfg: ExperimentConfig, out: Path) -> list[Row]:
    if name not in SUITES:
        raise ConfigError(f"unknown suite {name!r}; choose from {sorted(SUITES)}")
    rows = _Rows(name, cfg)
    try:
        SUITES[name](cfg, out, rows)
    except Exception as exc:  # a failing suite is reported, not fatal
        rows.append(Row(name, "-", f"error:{type(exc).__name__}", math.nan, 1.0))
    return list(rows)


def run_battery(cfg: ExperimentConfig, suites=None, out=None) -> Report:
    """Run ``suites`` and write the report.

    ``suites`` defaults to ``cfg.suites``, and to every suite in registry
    order when that is ``None`` as well.

    ``out`` defaults to ``cfg.out``; data files go to ``out/data``.
    """
    if suites is None:
        suites = cfg.suites
    suites = list(SUITES) if suites is None else list(suites)
    for name in suites:
        if name not in SUITES:
            raise ConfigError(f"unknown suite {name!r}; choose from {sorted(SUITES)}")
    out = Path(cfg.out if out is None else out)
    out.mkdir(parents=True, exist_ok=True)
    report = Report(cfg.seed, suites)
    for name in suites:
        report.rows.extend(run_suite(name, cfg, out / "data"))
        (out / "report.json").write_text(report.to_json())
    (out / "report.json").write_text(report.to_json())
    return report
