import json
from pathlib import Path

import numpy as np
import pytest

from horizonfv import ConfigError
from horizonfv.cli import main
from horizonfv.config import parse_config, resolved_config_text

MINIMAL = """
[model]
model = burgers

[geometry]
mass = 1.0
r_max = 12.0
cells = 200

[evolution]
t_end = 1.0
"""


def write_config(tmp_path: Path, body: str, name: str = "run.ini") -> Path:
    path = tmp_path / name
    path.write_text(body)
    return path


def test_minimal_config_defaults(tmp_path):
    cfg = parse_config(write_config(tmp_path, MINIMAL))
    assert cfg.model == "burgers"
    assert cfg.flux == "godunov"
    assert cfg.cfl_fraction == 0.9
    assert cfg.outer_boundary == "copy"
    assert cfg.kruzhkov_levels == (-0.75, -0.25, 0.0, 0.25, 0.75)
    assert cfg.seed == 0


def test_resolved_config_roundtrip(tmp_path):
    cfg = parse_config(write_config(tmp_path, MINIMAL))
    text = resolved_config_text(cfg)
    reparsed = parse_config(write_config(tmp_path, text, "resolved.ini"))
    assert resolved_config_text(reparsed) == text


def test_cells_constraint_names_key(tmp_path):
    body = MINIMAL.replace("cells = 200", "cells = 1")
    with pytest.raises(ConfigError) as err:
        parse_config(write_config(tmp_path, body))
    assert "cells" in str(err.value)
    assert ">= 2" in str(err.value)


def test_unknown_key_named_with_line(tmp_path):
    body = MINIMAL + "\nfluxx = godunov\n"
    with pytest.raises(ConfigError) as err:
        parse_config(write_config(tmp_path, body))
    assert "fluxx" in str(err.value)
    assert "line" in str(err.value)


def test_unknown_section_rejected(tmp_path):
    body = MINIMAL + "\n[vibes]\nlevel = 11\n"
    with pytest.raises(ConfigError) as err:
        parse_config(write_config(tmp_path, body))
    assert "vibes" in str(err.value)


def test_type_mismatch_names_key(tmp_path):
    body = MINIMAL.replace("mass = 1.0", "mass = heavy")
    with pytest.raises(ConfigError) as err:
        parse_config(write_config(tmp_path, body))
    assert "geometry.mass" in str(err.value)


def test_missing_required_keys(tmp_path):
    with pytest.raises(ConfigError) as err:
        parse_config(write_config(tmp_path, "[geometry]\nmass = 1.0\n"))
    assert "r_max" in str(err.value)


def test_fixed_boundary_parse(tmp_path):
    body = MINIMAL.replace("[evolution]", "outer_boundary = fixed:0.25\n\n[evolution]")
    cfg = parse_config(write_config(tmp_path, body))
    outer = cfg.build_outer_boundary()
    assert outer.kind == "fixed" and outer.value == 0.25
    bad = MINIMAL.replace("[evolution]", "outer_boundary = fixed:2.5\n\n[evolution]")
    with pytest.raises(ConfigError):
        parse_config(write_config(tmp_path, bad))


def test_custom_model_coeff_parsing(tmp_path):
    body = """
[model]
model = custom
f_coeffs = -0.5, 0.0, 0.5
h_coeffs = 0.0

[geometry]
mass = 1.0
r_max = 12.0
cells = 100

[evolution]
t_end = 0.5
"""
    cfg = parse_config(write_config(tmp_path, body))
    m = cfg.build_model()
    assert m.f(0.0) == -0.5
    assert m.f_poly == (-0.5, 0.0, 0.5)


def _run_cli(tmp_path, body, command, name="cfg.ini"):
    path = write_config(tmp_path, body, name)
    return main([command, str(path)])


def test_cli_exit_codes(tmp_path):
    body = MINIMAL + f"\n[run]\noutput_dir = {tmp_path/'out'}\n"
    assert _run_cli(tmp_path, body, "check-model") == 0
    bad = body.replace("cells = 200", "cells = 1")
    assert _run_cli(tmp_path, bad, "check-model", "bad.ini") == 2


def test_cli_check_model_reports_flags(tmp_path, capsys):
    body = MINIMAL + f"\n[run]\noutput_dir = {tmp_path/'out'}\n"
    assert _run_cli(tmp_path, body, "check-model") == 0
    payload = json.loads((tmp_path / "out" / "structure_report.json").read_text())
    assert payload["ok"] is True
    assert payload["boundary_roots_ok"] is True
    assert payload["flux_monotone_shape_ok"] is True
    # a model failing the structure checks exits 1
    broken = body.replace('model = burgers', 'model = custom\nf_coeffs = 0.0, 1.0\nh_coeffs = 0.0')
    assert _run_cli(tmp_path, broken, "check-model", "broken.ini") == 1


def test_cli_run_artifacts(tmp_path):
    out = tmp_path / "artifacts"
    body = MINIMAL.replace("cells = 200", "cells = 60") + f"""
t_end_override_marker = ignored

[diagnostics]
entropy_diagnostics = true

[run]
seed = 11
output_dir = {out}
"""
    body = body.replace("t_end_override_marker = ignored\n", "")
    body = body.replace("t_end = 1.0", "t_end = 0.2")
    assert _run_cli(tmp_path, body, "run") == 0
    snapshots = (out / "snapshots.csv").read_text().splitlines()
    assert snapshots[0] == "t,r,v"
    assert len(snapshots) > 60
    ledger = (out / "entropy_ledger.csv").read_text().splitlines()
    assert ledger[0] == "step,k,worst_residual,balance_gap,dissipation_sum"
    summary = json.loads((out / "summary.json").read_text())
    assert summary["worst_entropy_residual"] <= 1e-13
    assert (out / "resolved_config.ini").exists()
    # final snapshot lands exactly on t_end
    last_t = float(snapshots[-1].split(",")[0])
    assert last_t == 0.2


def test_cli_run_determinism(tmp_path):
    out = tmp_path / "det"
    body = MINIMAL.replace("cells = 200", "cells = 50").replace("t_end = 1.0", "t_end = 0.1") + f"""
[diagnostics]
entropy_diagnostics = true

[run]
seed = 3
output_dir = {out}
"""
    assert _run_cli(tmp_path, body, "run") == 0
    first = {p.name: p.read_bytes() for p in out.iterdir()}
    assert _run_cli(tmp_path, body, "run") == 0
    second = {p.name: p.read_bytes() for p in out.iterdir()}
    assert first == second


def test_cli_characteristics_csv(tmp_path):
    out = tmp_path / "chars"
    body = MINIMAL + f"""
[characteristics]
r0 = 8.0
u0 = 0.6
ds = 0.001
s_max = 1.0

[run]
output_dir = {out}
"""
    assert _run_cli(tmp_path, body, "characteristics") == 0
    lines = (out / "characteristic.csv").read_text().splitlines()
    assert lines[0] == "s,t,r,u,invariant"
    summary = json.loads((out / "summary.json").read_text())
    assert summary["invariant_drift"] <= 1e-8


def test_cli_characteristics_interior(tmp_path):
    out = tmp_path / "chars_int"
    body = MINIMAL + f"""
[characteristics]
r0 = 8.0
u0 = 0.6
ds = 0.001
s_max = 1.0
coordinates = interior
interior_shift = 0.5

[run]
output_dir = {out}
"""
    assert _run_cli(tmp_path, body, "characteristics") == 0
    summary = json.loads((out / "summary.json").read_text())
    assert summary["coordinates"] == "interior"
    assert summary["invariant_drift"] <= 1e-8


def test_cli_steady_and_drift(tmp_path):
    out = tmp_path / "steady"
    body = MINIMAL.replace("cells = 200", "cells = 50").replace("t_end = 1.0", "t_end = 0.5") + f"""
[steady]
r0 = 4.0
u0 = 0.9

[run]
output_dir = {out}
"""
    assert _run_cli(tmp_path, body, "steady") == 0
    lines = (out / "steady.csv").read_text().splitlines()
    assert lines[0] == "r,u"
    u_values = np.array([float(line.split(",")[1]) for line in lines[1:]])
    assert np.all(np.diff(u_values) < 0.0)  # decreasing for a positive anchor

    assert _run_cli(tmp_path, body, "steady-drift") == 0
    drift = json.loads((out / "steady_drift.json").read_text())
    assert 0.0 < drift["l1_drift"] < 0.1
    assert (out / "drift_profile.csv").read_text().splitlines()[0] == "r,v_initial,v_final"


def test_cli_converge_summary(tmp_path):
    out = tmp_path / "conv"
    body = MINIMAL + f"""
[converge]
preset = flat
levels = 3

[run]
output_dir = {out}
"""
    assert _run_cli(tmp_path, body, "converge") == 0
    payload = json.loads((out / "convergence.json").read_text())
    assert payload["preset"] == "flat"
    assert payload["pass"] is True
    assert len(payload["levels"]) == 2
    assert all(rec["l1_diff"] == 0.0 for rec in payload["levels"])
    for cells in (100, 200, 400):
        assert (out / f"level_{cells}.csv").exists()


def test_cli_oracle_summary(tmp_path):
    out = tmp_path / "oracle"
    body = MINIMAL + f"""
[oracle]
preset = smooth
cells = 60

[run]
output_dir = {out}
"""
    assert _run_cli(tmp_path, body, "oracle") == 0
    payload = json.loads((out / "oracle.json").read_text())
    assert payload["cells"] == 60
    assert payload["l1_error"] > 0.0
    lines = (out / "oracle_solution.csv").read_text().splitlines()
    assert lines[0] == "r,v,v_exact"
    assert len(lines) == 61


def test_cli_fuzz(tmp_path):
    out = tmp_path / "fuzz"
    body = MINIMAL + f"""
[fuzz]
trials = 2

[run]
seed = 5
output_dir = {out}
"""
    assert _run_cli(tmp_path, body, "fuzz") == 0
    payload = json.loads((out / "fuzz_report.json").read_text())
    assert payload["ok"] is True
    assert payload["trials"] == 2


def test_cli_fuzz_tau_override_is_config_error(tmp_path):
    body = MINIMAL + "\n[fuzz]\ntrials = 1\ntau_scale = 2.0\n"
    assert _run_cli(tmp_path, body, "fuzz") == 2


def test_cli_writes_only_inside_output_dir(tmp_path):
    out = tmp_path / "only"
    body = MINIMAL.replace("t_end = 1.0", "t_end = 0.05").replace("cells = 200", "cells = 40") + f"""
[run]
output_dir = {out}
"""
    cfg_path = write_config(tmp_path, body)
    before = set(p for p in tmp_path.rglob("*") if p.is_file())
    assert main(["run", str(cfg_path)]) == 0
    after = set(p for p in tmp_path.rglob("*") if p.is_file())
    new_files = after - before
    assert new_files
    assert all(out in p.parents for p in new_files)
