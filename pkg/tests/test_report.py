"""Report pipeline and command-line interface.

Deterministic oracles:
* invalid configs name the offending field with a dotted path, exit code 2
* two identical runs (same config, same seed) produce byte-identical
  report.json and sweeps.csv, in separate processes
* report.json validates against the shipped schema
* the non-minimal control exits 0 (its expected failures are inapplicable)
  but --strict turns its estimator warning into a real failure
* the hemisphere line-counting identity is exact, so the crofton subcommand
  must pass with zero confidence interval
"""
import csv
import json
import os
import subprocess
import sys

import jsonschema
import numpy as np
import pytest

from mingauge.errors import ConfigError
from mingauge.report import (
    compute_report,
    parse_config,
    report_schema,
    run_report,
)

PLANE_CONFIG = {
    "surface": {"name": "plane", "params": {"r_max": 120.0},
                "resolution": "coarse"},
    "levels": {"count": 16},
    "mc": {"seed": 7, "samples": 3000},
}

SPHERE_CONFIG = {
    "surface": {"name": "sphere", "resolution": "coarse"},
    "levels": {"count": 12},
    "mc": {"seed": 3, "samples": 2000},
}


def run_cli(args, cwd=None):
    env = dict(os.environ, MINGAUGE_THREADS="1")
    return subprocess.run(
        [sys.executable, "-m", "mingauge.cli", *args],
        capture_output=True, text=True, env=env, cwd=cwd,
    )


@pytest.fixture(scope="module")
def plane_runs(tmp_path_factory):
    """The same plane config run twice, in separate processes."""
    root = tmp_path_factory.mktemp("plane_runs")
    cfg = root / "config.json"
    cfg.write_text(json.dumps(PLANE_CONFIG))
    outs = []
    for tag in ("a", "b"):
        out = root / tag
        proc = run_cli(["report", "--config", str(cfg), "--out", str(out)])
        assert proc.returncode == 0, proc.stdout + proc.stderr
        outs.append(out)
    return outs


# --------------------------------------------------------------------------
# config validation


def test_parse_config_minimal():
    config = parse_config({"surface": {"name": "plane"}})
    assert config.surface_name == "plane"
    assert config.resolution == "default"
    assert not config.counting_enabled
    assert config.num_levels == 24


@pytest.mark.parametrize("raw, field", [
    ([1, 2], "config"),
    ({}, "surface"),
    ({"surface": {"name": "plane"}, "extra": 1}, "extra"),
    ({"surface": {"name": 5}}, "surface.name"),
    ({"surface": {"name": "plane", "junk": 1}}, "surface.junk"),
    ({"surface": {"name": "plane", "params": {"r_max": "big"}}},
     "surface.params.r_max"),
    ({"surface": {"name": "plane", "resolution": 9}}, "surface.resolution"),
    ({"surface": {"name": "plane", "resolution": {"rings": 0}}},
     "surface.resolution.rings"),
    ({"surface": {"name": "plane"}, "base_point": [1.0]}, "base_point"),
    ({"surface": {"name": "plane"}, "base_point": [0.0, "x", 1.0]},
     "base_point[1]"),
    ({"surface": {"name": "plane"}, "levels": {"count": 2}}, "levels.count"),
    ({"surface": {"name": "plane"}, "mc": {"samples": 500}}, "mc.seed"),
    ({"surface": {"name": "plane"}, "mc": {"seed": 1, "samples": 10}},
     "mc.samples"),
    ({"surface": {"name": "plane"}, "mc": {"seed": 1, "radii": [2.0, 1.0]}},
     "mc.radii"),
    ({"surface": {"name": "plane"}, "mc": {"seed": 1, "extra": 2}},
     "mc.extra"),
])
def test_parse_config_rejects(raw, field):
    with pytest.raises(ConfigError) as err:
        parse_config(raw)
    assert err.value.field == field


def test_unknown_surface_names_the_surface():
    with pytest.raises(ConfigError) as err:
        parse_config({"surface": {"name": "torus"}})
    assert err.value.field == "surface.name"
    assert "torus" in str(err.value)


def test_base_point_dimension_checked_against_surface():
    config = parse_config({
        "surface": {"name": "complex_parabola_r4", "resolution": "coarse"},
        "base_point": [0.0, 0.0, -1.0],
    })
    with pytest.raises(ConfigError) as err:
        compute_report(config)
    assert err.value.field == "base_point"
    assert "4" in str(err.value)


# --------------------------------------------------------------------------
# report content


def test_reports_are_byte_identical(plane_runs):
    a, b = plane_runs
    assert (a / "report.json").read_bytes() == (b / "report.json").read_bytes()
    assert (a / "sweeps.csv").read_bytes() == (b / "sweeps.csv").read_bytes()
    # run.log carries wall time and is allowed to differ; it must still exist
    assert (a / "run.log").exists() and (b / "run.log").exists()


def test_report_validates_against_shipped_schema(plane_runs):
    report = json.loads((plane_runs[0] / "report.json").read_text())
    jsonschema.validate(report, report_schema())
    assert report["version"] == "1"
    assert report["passed"] is True


def test_report_estimates_cover_both_volume_routes(plane_runs):
    report = json.loads((plane_runs[0] / "report.json").read_text())
    methods = {e["method"] for e in report["estimates"]
               if e["quantity"] == "projective_volume"}
    assert methods == {"flux_limit", "log_slope"}
    values = [e["value"] for e in report["estimates"]
              if e["quantity"] == "projective_volume"]
    assert values == pytest.approx([2 * np.pi] * 2, rel=2e-2)
    defect = [e for e in report["estimates"]
              if e["quantity"] == "radial_defect"][0]
    assert defect["value"] == pytest.approx(np.pi, rel=2e-2)
    assert report["ends"]["estimate"] == 1
    assert report["counting"]["seed"] == 7
    assert report["counting"]["samples"] == 3000


def test_sweeps_csv_exposes_all_four_quantities(plane_runs):
    with open(plane_runs[0] / "sweeps.csv", newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["quantity", "R_or_t", "value", "error"]
    body = rows[1:]
    quantities = {row[0] for row in body}
    assert quantities == {"flux_normalized", "inverse_power_over_log",
                          "ends_count", "section_count_mean"}
    for row in body:
        float(row[1]), float(row[2]), float(row[3])
    # the flux rows approach the projective volume from below, up to
    # discretization wiggle within the monotonicity tolerance
    flux = np.array([float(row[2]) for row in body
                     if row[0] == "flux_normalized"])
    drop = np.max(np.maximum.accumulate(flux) - flux)
    assert drop <= 1e-3 * flux.max()
    assert flux[-1] == pytest.approx(2 * np.pi, rel=2e-2)


def test_run_report_without_mc_skips_counting(tmp_path):
    config = parse_config({
        "surface": {"name": "plane", "params": {"r_max": 120.0},
                    "resolution": "coarse"},
        "levels": {"count": 12},
    })
    report = run_report(config, tmp_path)
    assert report["exit_code"] == 0
    assert report["counting"] is None
    by_name = {c["name"]: c for c in report["checks"]}
    assert not by_name["defect_counting_bound"]["applicable"]
    assert not by_name["ends_counting_bound"]["applicable"]
    assert "mc" in by_name["defect_counting_bound"]["note"]
    quantities = {row[0] for row in report.get("_sweeps", [])} or {
        row.split(",")[0]
        for row in (tmp_path / "sweeps.csv").read_text().splitlines()[1:]
    }
    assert "section_count_mean" not in quantities


def test_base_point_on_surface_skips_counting_only(tmp_path):
    # sections through a point of the surface are pinned there, so only the
    # counting checks become inapplicable; the identity check subtracts the
    # on-surface density and must still pass
    config = parse_config({
        "surface": {"name": "enneper", "resolution": "coarse"},
        "base_point": [0.0, 0.0, 0.0],
        "levels": {"count": 12},
        "mc": {"seed": 5, "samples": 500},
    })
    report = run_report(config, tmp_path)
    assert report["exit_code"] == 0
    assert report["counting"] is None
    by_name = {c["name"]: c for c in report["checks"]}
    for name in ("defect_counting_bound", "ends_counting_bound"):
        assert not by_name[name]["applicable"]
        assert "base point" in by_name[name]["note"]
    ident = by_name["defect_volume_identity"]
    assert ident["applicable"] and ident["passed"]
    assert ident["detail"]["on_surface_multiplicity"] == 1


def test_explicit_counting_radii_beyond_mesh(tmp_path):
    config = parse_config({
        "surface": {"name": "plane", "params": {"r_max": 120.0},
                    "resolution": "coarse"},
        "levels": {"count": 12},
        "mc": {"seed": 5, "samples": 500, "radii": [10.0, 5000.0]},
    })
    with pytest.raises(ConfigError) as err:
        run_report(config, tmp_path)
    assert err.value.field == "mc.radii"


def test_shell_anchor_clears_closest_approach(tmp_path):
    # the catenoid's waist keeps every surface point at distance >= 1 from
    # the origin; levels just above that distance are near-critical for the
    # restricted distance function, so the shell must start beyond twice it
    config = parse_config({
        "surface": {"name": "catenoid", "resolution": "coarse"},
        "levels": {"count": 16},
    })
    report = run_report(config, tmp_path)
    by_name = {c["name"]: c for c in report["checks"]}
    shell = by_name["flux_shell_identity"]
    assert shell["applicable"] and shell["passed"]
    assert shell["detail"]["t_lo"] >= 2.0


def test_control_surface_passes_normally_fails_strict(tmp_path):
    config = parse_config(SPHERE_CONFIG)
    report = run_report(config, tmp_path / "normal")
    assert report["exit_code"] == 0
    by_name = {c["name"]: c for c in report["checks"]}
    mono = by_name["flux_monotone"]
    # the expected counterexample is recorded but does not count
    assert mono["applicable"] is False
    assert mono["passed"] is False
    assert mono["detail"]["rel_violation"] > 0.5
    assert by_name["defect_counting_bound"]["applicable"] is True
    assert by_name["defect_counting_bound"]["passed"] is True
    assert any("disagree" in w for w in report["warnings"])

    strict = run_report(config, tmp_path / "strict", strict=True)
    assert strict["exit_code"] == 1
    by_name = {c["name"]: c for c in strict["checks"]}
    assert by_name["volume_estimate_reliable"]["applicable"] is True
    assert by_name["volume_estimate_reliable"]["passed"] is False


# --------------------------------------------------------------------------
# command-line interface


def test_cli_rejects_unknown_surface(tmp_path):
    cfg = tmp_path / "bad.json"
    cfg.write_text(json.dumps({"surface": {"name": "torus"}}))
    proc = run_cli(["report", "--config", str(cfg), "--out", str(tmp_path)])
    assert proc.returncode == 2
    assert "surface.name" in proc.stderr
    assert "torus" in proc.stderr


def test_cli_rejects_malformed_json(tmp_path):
    cfg = tmp_path / "broken.json"
    cfg.write_text("{not json")
    proc = run_cli(["report", "--config", str(cfg), "--out", str(tmp_path)])
    assert proc.returncode == 2
    assert "config" in proc.stderr


def test_cli_reports_field_path_for_missing_seed(tmp_path):
    cfg = tmp_path / "no_seed.json"
    cfg.write_text(json.dumps({"surface": {"name": "plane"},
                               "mc": {"samples": 500}}))
    proc = run_cli(["report", "--config", str(cfg), "--out", str(tmp_path)])
    assert proc.returncode == 2
    assert "mc.seed" in proc.stderr


def test_cli_catalog_lists_every_surface():
    proc = run_cli(["catalog"])
    assert proc.returncode == 0
    for name in ("plane", "catenoid", "enneper", "helicoid", "sphere",
                 "complex_parabola_r4"):
        assert name in proc.stdout
    assert "non-minimal control" in proc.stdout
    assert "12.5663706" in proc.stdout  # catenoid volume target, 4*pi
    assert "literature" in proc.stdout


def test_cli_crofton_hemisphere_exact():
    proc = run_cli(["crofton", "--set", "hemisphere", "--samples", "2000",
                    "--seed", "4"])
    assert proc.returncode == 0
    assert "passed" in proc.stdout
    lines = dict()
    for line in proc.stdout.splitlines():
        parts = line.split()
        if len(parts) >= 2:
            lines[parts[0]] = parts[-1]
    assert float(lines["gap"]) == 0.0
    assert float(lines["ci95"]) == 0.0


def test_cli_crofton_usage_errors():
    proc = run_cli(["crofton", "--set", "cap", "--samples", "500",
                    "--seed", "1"])
    assert proc.returncode == 2
    assert "angle" in proc.stderr

    proc = run_cli(["crofton", "--n", "4", "--p", "3", "--set", "full",
                    "--samples", "500", "--seed", "1"])
    assert proc.returncode == 2

    proc = run_cli(["crofton", "--set", "full", "--samples", "500"])
    assert proc.returncode == 2  # --seed is required


def test_cli_strict_flag_fails_flagged_estimates(tmp_path):
    cfg = tmp_path / "sphere.json"
    cfg.write_text(json.dumps(SPHERE_CONFIG))
    normal = run_cli(["report", "--config", str(cfg),
                      "--out", str(tmp_path / "n")])
    assert normal.returncode == 0
    strict = run_cli(["report", "--config", str(cfg), "--strict",
                      "--out", str(tmp_path / "s")])
    assert strict.returncode == 1
    assert "warning" in normal.stdout
