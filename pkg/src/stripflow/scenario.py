"""Scenario files, run orchestration and persistence.

A scenario is a flat, sectioned key-value text file (documented in
docs/scenario-format.md) describing the coupling operator, the geometry,
the initial profile, solver tolerances, the time grid, and output routing.
Loading validates the cross-field invariants and embeds the sectoriality /
ellipticity / admissibility reports.  Runs write an output directory
atomically (temp dir, then rename) containing plot-ready CSV tables and a
JSON manifest keyed by the scenario checksum.
"""

import ast
import dataclasses
import hashlib
import json
import os
import shutil
import tempfile
import time
from dataclasses import dataclass

import numpy as np

from ._version import __version__
from .dtn import frozen_set, localization_residual, sector_report
from .errors import (DegenerateDomainError, EllipticityError, ScenarioError)
from .geometry import InterfaceProfile, ellipticity_floor
from .holder import SampledFunction
from .model import coercivity_probe_59
from .operator_core import SectorialOperator, validate_sectorial
from .stepper import STATUS_COMPLETED, EvolutionConfig, evolve
from .strip import coercivity_probe_33

SECTION_ORDER = ("space", "geometry", "initial", "solve", "time", "output")

_SAFE_FUNCS = {
    "sin": np.sin, "cos": np.cos, "tan": np.tan, "tanh": np.tanh,
    "sinh": np.sinh, "cosh": np.cosh, "exp": np.exp, "sqrt": np.sqrt,
    "log": np.log, "abs": np.abs,
}
_SAFE_NAMES = {"pi": np.pi, "e": np.e, "j1": 1j}
_ALLOWED_NODES = (
    ast.Expression, ast.BinOp, ast.UnaryOp, ast.Call, ast.Name, ast.Load,
    ast.Constant, ast.Add, ast.Sub, ast.Mult, ast.Div, ast.Pow, ast.USub,
    ast.UAdd,
)


def safe_eval(expr, variables=None):
    """Evaluate an arithmetic expression against a whitelist grammar.

    Supports numbers, + - * / ** and the elementary functions; names are
    limited to pi/e/j1 plus caller-provided variables.  Anything else is a
    scenario error, never an execution.
    """
    names = dict(_SAFE_NAMES)
    if variables:
        names.update(variables)
    try:
        tree = ast.parse(expr, mode="eval")
    except SyntaxError as exc:
        raise ScenarioError(f"cannot parse expression {expr!r}: {exc.msg}")
    for node in ast.walk(tree):
        if not isinstance(node, _ALLOWED_NODES):
            raise ScenarioError(
                f"expression {expr!r} uses disallowed syntax "
                f"({type(node).__name__})")
        if isinstance(node, ast.Call):
            if (not isinstance(node.func, ast.Name)
                    or node.func.id not in _SAFE_FUNCS or node.keywords):
                raise ScenarioError(
                    f"expression {expr!r} calls something outside the "
                    f"function whitelist")
        if isinstance(node, ast.Constant) and not isinstance(
                node.value, (int, float, complex)):
            raise ScenarioError(
                f"expression {expr!r} contains a non-numeric literal")
        if isinstance(node, ast.Name) and node.id not in names \
                and node.id not in _SAFE_FUNCS:
            raise ScenarioError(
                f"expression {expr!r} references unknown name {node.id!r}")
    env = dict(names)
    env.update(_SAFE_FUNCS)
    return eval(compile(tree, "<scenario>", "eval"), {"__builtins__": {}}, env)


def parse_scenario_text(text, path="<string>"):
    """Parse the sectioned key-value grammar into {section: {key: raw}}."""
    sections = {}
    current = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            current = line[1:-1].strip().lower()
            if not current:
                raise ScenarioError(f"line {lineno}: empty section header",
                                    path=path)
            if current in sections:
                raise ScenarioError(f"line {lineno}: duplicate section",
                                    path=path, section=current)
            sections[current] = {}
            continue
        if "=" not in line:
            raise ScenarioError(
                f"line {lineno}: expected 'key = value', got {line!r}",
                path=path, section=current)
        if current is None:
            raise ScenarioError(
                f"line {lineno}: key/value before any [section] header",
                path=path)
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ScenarioError(f"line {lineno}: empty key", path=path,
                                section=current)
        if key in sections[current]:
            raise ScenarioError(f"line {lineno}: duplicate key",
                                path=path, section=current, key=key)
        sections[current][key] = value
    return sections


def _parse_matrix(raw, path, section, key):
    rows = []
    for chunk in raw.split(";"):
        vals = [float(safe_eval(v)) for v in chunk.split()]
        if not vals:
            raise ScenarioError("empty matrix row", path=path,
                                section=section, key=key)
        rows.append(vals)
    m = len(rows)
    if any(len(r) != m for r in rows):
        raise ScenarioError("coupling matrix must be square", path=path,
                            section=section, key=key)
    return np.array(rows, dtype=float)


@dataclass
class Scenario:
    """A validated scenario plus its embedded validation reports."""
    name: str
    path: str
    m: int
    A: SectorialOperator
    nu: float
    L: float
    nx: int
    ny: int
    alpha: float
    h_min: float
    g0: np.ndarray
    g0_source: str
    mu_solve: float
    rtol: float
    config: EvolutionConfig
    out_dir: str
    formats: tuple
    sectorial_report: object
    ellipticity_report: object
    admissibility_report: object
    checksum: str = ""

    def __post_init__(self):
        if not self.checksum:
            self.checksum = hashlib.sha256(
                self.serialize().encode("utf-8")).hexdigest()

    def profile(self):
        return InterfaceProfile(self.nu, self.L, self.g0, h_floor=self.h_min)

    def serialize(self):
        """Canonical text form; the checksum is taken over these bytes."""
        cfg = self.config
        entries = {
            "space": {
                "m": str(self.m),
                "A": "; ".join(" ".join(repr(v) for v in row)
                               for row in self.A.matrix().real),
                "phi": repr(self.A.sector_angle),
                "M": repr(self.A.bound),
            },
            "geometry": {
                "nu": repr(self.nu), "L": repr(self.L), "nx": str(self.nx),
                "ny": str(self.ny), "alpha": repr(self.alpha),
                "h_min": repr(self.h_min),
            },
            "initial": {"g0": self.g0_source},
            "solve": {"mu": repr(self.mu_solve), "rtol": repr(self.rtol)},
            "time": {
                "dt": repr(cfg.dt), "t_end": repr(cfg.t_end),
                "scheme": cfg.scheme,
                "output_stride": str(cfg.output_stride),
                "norm_cap": ("auto" if cfg.breakdown_norm_cap is None
                             else repr(cfg.breakdown_norm_cap)),
                "margin_floor": ("auto" if cfg.boundary_margin_floor is None
                                 else repr(cfg.boundary_margin_floor)),
            },
            "output": {"directory": self.out_dir,
                       "formats": ",".join(self.formats)},
        }
        lines = []
        for section in SECTION_ORDER:
            lines.append(f"[{section}]")
            for key in sorted(entries[section]):
                lines.append(f"{key} = {entries[section][key]}")
            lines.append("")
        return "\n".join(lines)


def _get(sections, section, key, path, default=None, required=True):
    sec = sections.get(section)
    if sec is None:
        raise ScenarioError("missing required section", path=path,
                            section=section)
    if key not in sec:
        if required and default is None:
            raise ScenarioError("missing required key", path=path,
                                section=section, key=key)
        return default
    return sec[key]


def _num(sections, section, key, path, default=None, required=True,
         integer=False):
    raw = _get(sections, section, key, path, default=default,
               required=required)
    if raw is None or not isinstance(raw, str):
        return raw
    try:
        val = safe_eval(raw)
    except ScenarioError as exc:
        raise ScenarioError(str(exc), path=path, section=section, key=key)
    if integer:
        ival = int(round(float(np.real(val))))
        if abs(ival - val) > 1e-12:
            raise ScenarioError(f"expected an integer, got {raw!r}",
                                path=path, section=section, key=key)
        return ival
    if abs(np.imag(val)) > 0:
        raise ScenarioError(f"expected a real number, got {raw!r}",
                            path=path, section=section, key=key)
    return float(np.real(val))


def _initial_values(sections, path, m, nx, L, nu, x):
    sec = sections.get("initial")
    if sec is None:
        raise ScenarioError("missing required section", path=path,
                            section="initial")
    if "g0" in sec:
        parts = [p.strip() for p in sec["g0"].split(";")]
        if len(parts) == 1:
            parts = parts * m
        if len(parts) != m:
            raise ScenarioError(
                f"g0 has {len(parts)} component expressions, expected {m}",
                path=path, section="initial", key="g0")
        cols = []
        for expr in parts:
            val = safe_eval(expr, {"x": x, "L": L, "nu": nu})
            cols.append(np.broadcast_to(np.asarray(val, dtype=complex),
                                        (nx,)).copy())
        return np.stack(cols, axis=1), sec["g0"]
    table_keys = [f"g0_table_{c + 1}" for c in range(m)]
    if m == 1 and "g0_table" in sec:
        table_keys = ["g0_table"]
    if all(k in sec for k in table_keys):
        cols = []
        for k in table_keys:
            vals = [complex(safe_eval(v)) for v in sec[k].split()]
            if len(vals) != nx:
                raise ScenarioError(
                    f"table has {len(vals)} entries, expected nx = {nx}",
                    path=path, section="initial", key=k)
            cols.append(np.array(vals))
        source = " | ".join(sec[k] for k in table_keys)
        return np.stack(cols, axis=1), source
    raise ScenarioError("need either 'g0' (expression) or g0_table keys",
                        path=path, section="initial", key="g0")


def load_scenario(path):
    """Parse, cross-validate and report-annotate a scenario file."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario: {exc}", path=str(path))
    sections = parse_scenario_text(text, path=str(path))
    for section in SECTION_ORDER:
        if section not in sections:
            raise ScenarioError("missing required section", path=str(path),
                                section=section)

    m = _num(sections, "space", "m", path, integer=True)
    A_raw = _get(sections, "space", "A", path)
    A_mat = _parse_matrix(A_raw, path, "space", "A")
    if A_mat.shape != (m, m):
        raise ScenarioError(f"A is {A_mat.shape[0]}x{A_mat.shape[1]}, "
                            f"but m = {m}", path=str(path), section="space",
                            key="A")
    phi = _num(sections, "space", "phi", path,
               default=np.pi / 2 + 0.35, required=False)
    bound = _num(sections, "space", "M", path, default=20.0, required=False)

    nu = _num(sections, "geometry", "nu", path)
    L = _num(sections, "geometry", "L", path)
    nx = _num(sections, "geometry", "nx", path, integer=True)
    ny = _num(sections, "geometry", "ny", path, integer=True)
    alpha = _num(sections, "geometry", "alpha", path)
    h_min = _num(sections, "geometry", "h_min", path, default=1e-8,
                 required=False)
    if nx < 4 or (nx & (nx - 1)) != 0:
        raise ScenarioError(f"nx must be a power of two >= 4, got {nx}",
                            path=str(path), section="geometry", key="nx")
    if not 0.0 < alpha < 1.0:
        raise ScenarioError(f"alpha must lie in (0,1), got {alpha}",
                            path=str(path), section="geometry", key="alpha")
    if nu <= 0 or L <= 0 or ny < 5:
        raise ScenarioError("need nu > 0, L > 0, ny >= 5",
                            path=str(path), section="geometry")

    mu_solve = _num(sections, "solve", "mu", path)
    rtol = _num(sections, "solve", "rtol", path, default=1e-11,
                required=False)

    def _cap(key):
        raw = _get(sections, "time", key, path, default="auto",
                   required=False)
        if isinstance(raw, str) and raw.strip().lower() == "auto":
            return None
        return _num(sections, "time", key, path)

    try:
        config = EvolutionConfig(
            dt=_num(sections, "time", "dt", path),
            t_end=_num(sections, "time", "t_end", path),
            scheme=_get(sections, "time", "scheme", path,
                        default="semi_implicit_euler", required=False),
            mu_solve=mu_solve,
            breakdown_norm_cap=_cap("norm_cap"),
            boundary_margin_floor=_cap("margin_floor"),
            output_stride=_num(sections, "time", "output_stride", path,
                               default=1, required=False, integer=True),
            ny=ny, alpha=alpha, rtol=rtol)
    except ValueError as exc:
        raise ScenarioError(str(exc), path=str(path), section="time")

    out_dir = _get(sections, "output", "directory", path)
    formats = tuple(f.strip() for f in _get(
        sections, "output", "formats", path, default="csv,json",
        required=False).split(",") if f.strip())
    for fmt in formats:
        if fmt not in ("csv", "json"):
            raise ScenarioError(f"unsupported format {fmt!r}",
                                path=str(path), section="output",
                                key="formats")

    x = np.arange(nx) * (L / nx)
    g0, g0_source = _initial_values(sections, path, m, nx, L, nu, x)

    A = SectorialOperator(A_mat, sector_angle=phi, bound=bound)
    sec_report = validate_sectorial(A)
    if not sec_report.passed:
        raise ScenarioError(
            f"coupling operator failed the sectoriality check: "
            f"{sec_report.message}", path=str(path), section="space", key="A")
    try:
        profile = InterfaceProfile(nu, L, g0, h_floor=h_min)
        from .geometry import coefficients
        from .grids import cheb_lobatto_01
        y, _ = cheb_lobatto_01(ny)
        ell_report = ellipticity_floor(coefficients(profile, y))
    except (EllipticityError, DegenerateDomainError) as exc:
        raise ScenarioError(
            f"initial profile fails the ellipticity/degeneracy validation: "
            f"{exc}", path=str(path), section="initial", key="g0")
    if not ell_report.passed:
        raise ScenarioError(
            f"ellipticity floor violated: least eigenvalue margin "
            f"{ell_report.margin:.3e} below the closed-form floor",
            path=str(path), section="initial", key="g0")
    from .dtn import admissibility
    adm_report = admissibility(profile, A, mu=mu_solve, ny=ny, alpha=alpha,
                               rtol=rtol)

    name = os.path.splitext(os.path.basename(str(path)))[0]
    return Scenario(
        name=name, path=str(path), m=m, A=A, nu=nu, L=L, nx=nx, ny=ny,
        alpha=alpha, h_min=h_min, g0=g0, g0_source=g0_source,
        mu_solve=mu_solve, rtol=rtol, config=config, out_dir=out_dir,
        formats=formats, sectorial_report=sec_report,
        ellipticity_report=ell_report, admissibility_report=adm_report)


# -- persistence ---------------------------------------------------------------


@dataclass
class RunManifest:
    scenario_checksum: str
    scenario_name: str
    artifact_version: str
    mode: str
    grid: dict
    validation: dict
    wall_clock_seconds: float
    status: str
    seed: int
    deterministic: bool

    def to_json(self):
        return json.dumps(dataclasses.asdict(self), indent=2, sort_keys=True)


def _fmt(value):
    """Shortest exact decimal form; complex parts split by the caller."""
    return repr(float(value))


def export(traj, out_dir):
    """Write trajectory.csv, diagnostics.csv into out_dir (which must exist)."""
    if not traj.profiles:
        raise ValueError("cannot export an empty trajectory")
    m = traj.profiles[0].m
    traj_path = os.path.join(out_dir, "trajectory.csv")
    cols = ["t", "x"]
    for c in range(m):
        cols += [f"g{c + 1}_re", f"g{c + 1}_im"]
    with open(traj_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(cols) + "\n")
        for t, prof in zip(traj.times, traj.profiles):
            for i, xv in enumerate(prof.x):
                row = [_fmt(t), _fmt(xv)]
                for c in range(m):
                    row += [_fmt(prof.g[i, c].real), _fmt(prof.g[i, c].imag)]
                fh.write(",".join(row) + "\n")
    diag_path = os.path.join(out_dir, "diagnostics.csv")
    with open(diag_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("t,h2alpha,margin,residual,iterations,status\n")
        for row in traj.diagnostics:
            fh.write(",".join([_fmt(row.t), _fmt(row.h2alpha),
                               _fmt(row.margin), _fmt(row.residual),
                               str(row.iterations), row.status]) + "\n")
    return [traj_path, diag_path]


def read_trajectory(out_dir):
    """Round-trip reader for export(); returns (times, x, g, diagnostics)."""
    traj_path = os.path.join(out_dir, "trajectory.csv")
    with open(traj_path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
        m = (len(header) - 2) // 2
        rows = [line.strip().split(",") for line in fh if line.strip()]
    times_seen, x_seen = [], []
    for cells in rows:
        t = float(cells[0])
        if not times_seen or t != times_seen[-1]:
            times_seen.append(t)
    nx = len(rows) // len(times_seen)
    x_seen = np.array([float(cells[1]) for cells in rows[:nx]])
    g = np.empty((len(times_seen), nx, m), dtype=complex)
    for s in range(len(times_seen)):
        for i in range(nx):
            cells = rows[s * nx + i]
            for c in range(m):
                g[s, i, c] = complex(float(cells[2 + 2 * c]),
                                     float(cells[3 + 2 * c]))
    diag_path = os.path.join(out_dir, "diagnostics.csv")
    diagnostics = []
    with open(diag_path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
        for line in fh:
            if not line.strip():
                continue
            cells = line.strip().split(",")
            diagnostics.append(dict(zip(header, cells)))
    return np.array(times_seen), x_seen, g, diagnostics


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    if isinstance(obj, np.ndarray):
        if np.iscomplexobj(obj):
            return {"re": obj.real.tolist(), "im": obj.imag.tolist()}
        return obj.tolist()
    raise TypeError(f"not JSON-serializable: {type(obj)}")


def _write_json(path, payload):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(json.dumps(payload, indent=2, sort_keys=True,
                            default=_json_default))
        fh.write("\n")


def _validation_summary(scn):
    adm = scn.admissibility_report
    return {
        "sectorial_passed": bool(scn.sectorial_report.passed),
        "sectorial_worst_ratio": float(scn.sectorial_report.worst_ratio),
        "ellipticity_passed": bool(scn.ellipticity_report.passed),
        "ellipticity_margin": float(scn.ellipticity_report.margin),
        "admissibility_in_W1": bool(adm.in_W1),
        "admissibility_margin": float(adm.margin),
        "admissibility_in_Vnu": bool(adm.in_Vnu),
    }


def run(scn, mode="evolve", out_dir=None, deterministic=False, seed=0):
    """Execute one scenario pipeline and persist its outputs atomically.

    Returns (manifest, status).  The output directory appears only after
    every file in it has been written (temp-dir-then-rename), so a crash
    mid-run never leaves a partial result at the advertised path.
    """
    if mode not in ("evolve", "diagnose-frozen", "diagnose-coercivity",
                    "diagnose-localization"):
        raise ValueError(f"unknown mode {mode!r}")
    target = os.path.abspath(out_dir if out_dir is not None else scn.out_dir)
    parent = os.path.dirname(target) or "."
    os.makedirs(parent, exist_ok=True)
    t0 = time.perf_counter()
    status = STATUS_COMPLETED
    tmp = tempfile.mkdtemp(prefix=".stripflow-", dir=parent)
    try:
        extra = {}
        if mode == "evolve":
            status, extra = _run_evolve(scn, tmp)
        elif mode == "diagnose-frozen":
            status, extra = _run_frozen(scn, tmp)
        elif mode == "diagnose-coercivity":
            status, extra = _run_coercivity(scn, tmp, seed)
        else:
            status, extra = _run_localization(scn, tmp)
        wall = 0.0 if deterministic else time.perf_counter() - t0
        manifest = RunManifest(
            scenario_checksum=scn.checksum, scenario_name=scn.name,
            artifact_version=__version__, mode=mode,
            grid={"nx": scn.nx, "ny": scn.ny, "m": scn.m, "L": scn.L},
            validation={**_validation_summary(scn), **extra},
            wall_clock_seconds=wall, status=status, seed=seed,
            deterministic=deterministic)
        with open(os.path.join(tmp, "manifest.json"), "w", encoding="utf-8",
                  newline="\n") as fh:
            fh.write(manifest.to_json())
            fh.write("\n")
        if os.path.isdir(target):
            shutil.rmtree(target)
        os.rename(tmp, target)
    except BaseException:
        shutil.rmtree(tmp, ignore_errors=True)
        raise
    return manifest, status


def _run_evolve(scn, tmp):
    traj = evolve(scn.profile(), scn.A, scn.config)
    export(traj, tmp)
    extra = {"trajectory_samples": len(traj.times),
             "final_time": float(traj.times[-1]),
             "norm_cap": traj.norm_cap, "margin_floor": traj.margin_floor}
    if traj.failure_message:
        extra["failure_message"] = traj.failure_message
    return traj.status, extra


def _run_frozen(scn, tmp):
    profile = scn.profile()
    x0 = scn.admissibility_report.margin_argmin
    fset = frozen_set(profile, scn.A, x0, scn.mu_solve, ny=scn.ny,
                      rtol=scn.rtol)
    report = sector_report(fset, scn.A, alpha=scn.alpha)
    payload = {
        "x0": fset.x0,
        "mu0": report.mu0,
        "entries": {name: dataclasses.asdict(entry)
                    for name, entry in report.entries.items()},
        "c1": report.c1, "c2": report.c2,
        "ratio_spread": report.ratio_spread,
        "generates_analytic_semigroup": report.generates_analytic_semigroup,
        "passed": report.passed,
    }
    _write_json(os.path.join(tmp, "frozen_report.json"), payload)
    return STATUS_COMPLETED, {"frozen_passed": bool(report.passed),
                              "frozen_ratio_spread": report.ratio_spread}


def _ensemble(rng, nx, m, L, count=3):
    ks = np.abs(np.fft.fftfreq(nx, d=1.0 / nx))
    out = []
    for _ in range(count):
        coef = ((rng.standard_normal((nx, m))
                 + 1j * rng.standard_normal((nx, m)))
                / (1.0 + ks[:, None]) ** 4)
        out.append(np.fft.ifft(coef, axis=0))
    return out


def _run_coercivity(scn, tmp, seed):
    profile = scn.profile()
    rng = np.random.default_rng(seed + 7)
    psis = _ensemble(rng, scn.nx, scn.m, scn.L)
    mu_list = (1.0, 2.0, 4.0, 8.0)
    fset = frozen_set(profile, scn.A, scn.admissibility_report.margin_argmin,
                      scn.mu_solve, ny=scn.ny, rtol=scn.rtol)
    half = coercivity_probe_59(fset.fc,
                               [SampledFunction(profile.L, p) for p in psis],
                               mu_list, alpha=scn.alpha)
    ny_probe = min(scn.ny, 17)
    ensemble = []
    for p in psis:
        ensemble.append((None, p, None))
    interior = coercivity_probe_33(profile, scn.A, mu_list, ensemble,
                                   alpha=scn.alpha, ny=ny_probe,
                                   rtol=max(scn.rtol, 1e-10))
    payload = {
        "halfplane": {"rows": [dataclasses.asdict(r) for r in half.rows],
                      "max_ratio": half.max_ratio,
                      "mu_spread": half.mu_spread},
        "interior": {"rows": [dataclasses.asdict(r) for r in interior.rows],
                     "max_ratio": interior.max_ratio,
                     "mu_spread": interior.mu_spread},
    }
    _write_json(os.path.join(tmp, "coercivity.json"), payload)
    return STATUS_COMPLETED, {
        "coercivity_halfplane_spread": half.mu_spread,
        "coercivity_interior_spread": interior.mu_spread,
    }


def _run_localization(scn, tmp):
    profile = scn.profile()
    x = profile.x
    direction = np.stack(
        [np.cos(2 * np.pi * x / scn.L) for _ in range(scn.m)], axis=1
    ).astype(complex)
    deltas = (1.0, 0.5, 0.25)
    reports = [localization_residual(profile, scn.A, d, direction,
                                     mu=scn.mu_solve, ny=scn.ny,
                                     alpha=scn.alpha, rtol=scn.rtol)
               for d in deltas]
    residuals = [r.max_residual for r in reports]
    monotone = all(residuals[i + 1] <= residuals[i]
                   for i in range(len(residuals) - 1))
    payload = {
        "deltas": list(deltas),
        "max_residuals": residuals,
        "monotone_decreasing": monotone,
        "per_patch": [{"delta": r.delta,
                       "centers": list(r.centers),
                       "residuals": list(r.residuals)} for r in reports],
    }
    _write_json(os.path.join(tmp, "localization.json"), payload)
    return STATUS_COMPLETED, {"localization_monotone": bool(monotone),
                              "localization_residuals": residuals}
