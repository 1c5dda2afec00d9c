"""Scenario files: parsing, validation gates, deterministic artifacts."""

import json
import os

import numpy as np
import pytest

from stripflow.errors import ScenarioError
from stripflow.scenario import (
    export,
    load_scenario,
    read_trajectory,
    run,
    safe_eval,
)
from stripflow.stepper import STATUS_BOUNDARY, STATUS_COMPLETED, evolve

MINIMAL = """
[space]
m = 1
A = 1.0

[geometry]
nu = 1.0
L = 16*pi
nx = 32
ny = 9
alpha = 0.5

[initial]
g0 = 0.001*sin(2*pi*x/L)

[solve]
mu = 0.0

[time]
dt = 0.02
t_end = 0.06

[output]
directory = out/minimal
formats = csv,json
"""


def write_scn(tmp_path, text, name="case.scn"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return str(path)


# -------------------------------------------------------------- expressions

def test_safe_eval_arithmetic():
    assert safe_eval("2*pi", {}) == pytest.approx(2 * np.pi)
    assert safe_eval("exp(0) + sqrt(4)", {}) == pytest.approx(3.0)
    assert safe_eval("sin(x)", {"x": np.pi / 2}) == pytest.approx(1.0)


def test_safe_eval_rejects_dunder():
    with pytest.raises(ScenarioError):
        safe_eval("__import__('os').system('true')", {})


def test_safe_eval_rejects_attributes():
    with pytest.raises(ScenarioError):
        safe_eval("(1).__class__", {})


def test_safe_eval_rejects_unknown_names():
    with pytest.raises(ScenarioError):
        safe_eval("open('/etc/passwd')", {})


def test_safe_eval_rejects_strings():
    with pytest.raises(ScenarioError):
        safe_eval("'sh'", {})


# ------------------------------------------------------------------ parsing

def test_minimal_scenario_loads(tmp_path):
    scn = load_scenario(write_scn(tmp_path, MINIMAL))
    assert scn.m == 1
    assert scn.nx == 32 and scn.ny == 9
    assert scn.L == pytest.approx(16 * np.pi)
    assert scn.g0.shape == (32, 1)
    assert scn.config.dt == 0.02
    assert scn.admissibility_report.in_W1


def test_checksum_stable(tmp_path):
    path = write_scn(tmp_path, MINIMAL)
    assert load_scenario(path).checksum == load_scenario(path).checksum


def test_missing_section_rejected(tmp_path):
    text = MINIMAL.replace("[time]\ndt = 0.02\nt_end = 0.06\n", "")
    with pytest.raises(ScenarioError, match="time"):
        load_scenario(write_scn(tmp_path, text))


def test_duplicate_key_rejected(tmp_path):
    text = MINIMAL.replace("nx = 32", "nx = 32\nnx = 64")
    with pytest.raises(ScenarioError, match="nx"):
        load_scenario(write_scn(tmp_path, text))


def test_bad_expression_rejected(tmp_path):
    text = MINIMAL.replace("g0 = 0.001*sin(2*pi*x/L)", "g0 = sin(")
    with pytest.raises(ScenarioError):
        load_scenario(write_scn(tmp_path, text))


def test_non_power_of_two_nx_rejected(tmp_path):
    text = MINIMAL.replace("nx = 32", "nx = 48")
    with pytest.raises(ScenarioError, match="power"):
        load_scenario(write_scn(tmp_path, text))


def test_alpha_range_enforced(tmp_path):
    text = MINIMAL.replace("alpha = 0.5", "alpha = 1.5")
    with pytest.raises(ScenarioError, match="alpha"):
        load_scenario(write_scn(tmp_path, text))


def test_matrix_shape_enforced(tmp_path):
    text = MINIMAL.replace("m = 1", "m = 2")
    with pytest.raises(ScenarioError):
        load_scenario(write_scn(tmp_path, text))


def test_degenerate_initial_profile_rejected(tmp_path):
    text = MINIMAL.replace("g0 = 0.001*sin(2*pi*x/L)",
                           "g0 = -1.5*exp(cos(2*pi*x/L) - 1)")
    with pytest.raises(ScenarioError, match="[Ee]llipticity|degener"):
        load_scenario(write_scn(tmp_path, text))


def test_unknown_output_format_rejected(tmp_path):
    text = MINIMAL.replace("formats = csv,json", "formats = csv,hdf5")
    with pytest.raises(ScenarioError, match="format"):
        load_scenario(write_scn(tmp_path, text))


def test_coupled_matrix_rows(tmp_path):
    text = MINIMAL.replace("m = 1", "m = 2")
    text = text.replace("A = 1.0", "A = 2.0 0.5; 0.0 1.0")
    text = text.replace("g0 = 0.001*sin(2*pi*x/L)",
                        "g0 = 0.001*sin(2*pi*x/L); 0.001*sin(2*pi*x/L)")
    scn = load_scenario(write_scn(tmp_path, text))
    assert scn.m == 2
    assert scn.A.entries.shape == (2, 2)
    assert scn.A.entries[0, 1] == 0.5
    assert scn.g0.shape == (32, 2)


# ----------------------------------------------------------------- artifacts

def test_export_round_trip(tmp_path):
    scn = load_scenario(write_scn(tmp_path, MINIMAL))
    traj = evolve(scn.profile(), scn.A, scn.config)
    out = str(tmp_path / "out")
    os.makedirs(out)
    export(traj, out)
    times, x, g, diags = read_trajectory(out)
    assert times.shape[0] == len(traj.times)
    assert np.allclose(times, traj.times)
    for s, prof in enumerate(traj.profiles):
        assert np.array_equal(g[s], prof.g)      # repr round-trip is exact
    assert len(diags) == len(traj.diagnostics)
    assert diags[-1]["status"] in (STATUS_COMPLETED, "OK")


def test_run_writes_manifest_and_outputs(tmp_path):
    scn = load_scenario(write_scn(tmp_path, MINIMAL))
    out = str(tmp_path / "run_out")
    manifest, status = run(scn, out_dir=out)
    assert status == STATUS_COMPLETED
    assert manifest.scenario_checksum == scn.checksum
    assert sorted(os.listdir(out)) == ["diagnostics.csv", "manifest.json",
                                       "trajectory.csv"]
    with open(os.path.join(out, "manifest.json"), encoding="utf-8") as fh:
        data = json.load(fh)
    assert data["status"] == STATUS_COMPLETED
    assert data["grid"]["nx"] == 32


def test_run_is_atomic_on_failure(tmp_path, monkeypatch):
    """A crash mid-write must not leave a partial output directory."""
    import stripflow.scenario as scn_mod
    scn = load_scenario(write_scn(tmp_path, MINIMAL))
    out = str(tmp_path / "never_appears")

    def boom(*a, **k):
        raise RuntimeError("disk on fire")

    monkeypatch.setattr(scn_mod, "_run_evolve", boom)
    with pytest.raises(RuntimeError):
        run(scn, out_dir=out)
    assert not os.path.exists(out)


def test_deterministic_run_zeroes_wall_clock(tmp_path):
    scn = load_scenario(write_scn(tmp_path, MINIMAL))
    out = str(tmp_path / "det")
    manifest, _ = run(scn, out_dir=out, deterministic=True)
    assert manifest.wall_clock_seconds == 0.0


def test_breakdown_run_still_writes_outputs(tmp_path):
    text = MINIMAL.replace("g0 = 0.001*sin(2*pi*x/L)",
                           "g0 = -0.85*exp(cos(2*pi*x/L) - 1)")
    text = text.replace("[time]", "[time]\nmargin_floor = 0.2")
    scn = load_scenario(write_scn(tmp_path, text))
    out = str(tmp_path / "bd")
    manifest, status = run(scn, out_dir=out)
    assert status == STATUS_BOUNDARY
    assert os.path.exists(os.path.join(out, "trajectory.csv"))
    assert manifest.status == STATUS_BOUNDARY


def test_reload_same_file_same_g0(tmp_path):
    path = write_scn(tmp_path, MINIMAL)
    a = load_scenario(path)
    b = load_scenario(path)
    assert np.array_equal(a.g0, b.g0)
