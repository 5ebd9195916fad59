"""End-to-end tests of the command-line interface.

Everything runs in-process through main() so exit codes and streams are
checked directly; one subprocess test covers the `python3 -m` path.
"""
import json
import subprocess
import sys

import numpy as np
import pytest

from povmcert.cli import main
from povmcert.experiment import counts_from_csv, trine_experiment
from povmcert.fidelity import EnvelopeBin, EnvelopeCurve


def run(*args):
    return main([str(a) for a in args])


def read_json(capsys):
    out = capsys.readouterr().out
    return json.loads(out)


# ------------------------------------------------------------------- bounds


def test_bounds_sic_default_kinds(capsys):
    rc = run("bounds", "--witness", "sic", "--k", 0.2, "--restarts", 8)
    assert rc == 0
    payload = read_json(capsys)
    assert payload["witness"] == "sic"
    by_kind = {b["kind"]: b for b in payload["bounds"]}
    assert set(by_kind) == {
        "projective-closed-form",
        "three-outcome-numeric",
        "quantum-seesaw",
    }
    assert by_kind["projective-closed-form"]["value"] == pytest.approx(0.7738, abs=5e-4)
    assert by_kind["three-outcome-numeric"]["value"] == pytest.approx(0.7836, abs=1e-3)
    assert by_kind["quantum-seesaw"]["value"] == pytest.approx(0.788675, abs=1e-3)
    assert by_kind["projective-closed-form"]["heuristic"] is False


def test_bounds_trine_default_kinds(capsys):
    rc = run("bounds", "--witness", "trine", "--k", 1, "--kinds", "projective,quantum", "--restarts", 8)
    assert rc == 0
    kinds = [b["kind"] for b in read_json(capsys)["bounds"]]
    assert kinds == ["projective-numeric", "quantum-seesaw"]


def test_bounds_trine_assignment_restriction(capsys):
    # the symmetric-pair restriction reproduces the lower published-style
    # threshold; the unrestricted search finds more
    rc = run("bounds", "--witness", "trine", "--k", 1, "--kinds", "projective",
             "--assignment", "0,1", "--restarts", 16)
    assert rc == 0
    restricted = read_json(capsys)["bounds"][0]
    assert restricted["value"] == pytest.approx(4.89165, abs=1e-3)
    assert restricted["diagnostics"]["assignment"] == [0, 1]

    rc = run("bounds", "--witness", "trine", "--k", 1, "--kinds", "projective", "--restarts", 16)
    assert rc == 0
    free = read_json(capsys)["bounds"][0]
    assert free["value"] >= restricted["value"] + 0.01
    assert free["value"] == pytest.approx(4.91199, abs=1e-3)


def test_bounds_csv_format(capsys):
    rc = run("bounds", "--witness", "sic", "--k", 0.2, "--kinds", "projective", "--format", "csv")
    assert rc == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0] == "kind,value,k,heuristic"
    kind, value, k, heuristic = lines[1].split(",")
    assert kind == "projective-closed-form"
    assert float(value) == pytest.approx(0.7738, abs=5e-4)
    assert float(k) == 0.2
    assert heuristic == "0"


def test_bounds_out_file_and_manifest(tmp_path, capsys):
    rc = run("bounds", "--witness", "sic", "--k", 0.2, "--kinds", "projective",
             "--out", "b.json", "--out-dir", tmp_path)
    assert rc == 0
    assert capsys.readouterr().out.strip() == str(tmp_path / "b.json")
    payload = json.loads((tmp_path / "b.json").read_text())
    assert payload["bounds"][0]["kind"] == "projective-closed-form"
    manifest = json.loads((tmp_path / "b.json.manifest.json").read_text())
    assert manifest["command"] == "bounds"
    assert manifest["seed"] == 0
    assert manifest["outputs"] == ["b.json"]
    assert manifest["parameters"]["witness"] == "sic"
    assert "duration_s" in manifest


def test_missing_k_is_usage_error():
    with pytest.raises(SystemExit) as exc:
        run("bounds", "--witness", "sic")
    assert exc.value.code == 2


def test_unknown_witness_is_usage_error():
    with pytest.raises(SystemExit) as exc:
        run("bounds", "--witness", "qutrit", "--k", 0.2)
    assert exc.value.code == 2


def test_unknown_kind_exits_two(capsys):
    rc = run("bounds", "--witness", "sic", "--k", 0.2, "--kinds", "projective,bogus")
    assert rc == 2
    assert "unknown bound kinds" in capsys.readouterr().err


def test_bad_assignment_exits_two(capsys):
    rc = run("bounds", "--witness", "sic", "--k", 0.2, "--assignment", "0,1,2")
    assert rc == 2
    assert "assignment" in capsys.readouterr().err


def test_version_flag(capsys):
    with pytest.raises(SystemExit) as exc:
        run("--version")
    assert exc.value.code == 0
    assert "povmcert" in capsys.readouterr().out


def test_module_invocation_subprocess():
    proc = subprocess.run(
        [sys.executable, "-m", "povmcert.cli", "--version"],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0
    assert "povmcert" in proc.stdout


# ----------------------------------------------------------------- simulate


def test_simulate_writes_counts_and_manifest(tmp_path, capsys):
    rc = run("simulate", "--witness", "sic", "--k", 0.2, "--seed", 3, "--out-dir", tmp_path)
    assert rc == 0
    path = tmp_path / "counts-sic-k0.2.csv"
    assert capsys.readouterr().out.strip() == str(path)
    records = counts_from_csv(path.read_text())
    # 4 preparations x (3 binary settings x 2 outcomes + 4 POVM outcomes)
    assert len(records) == 40
    manifest = json.loads((tmp_path / "counts-sic-k0.2.csv.manifest.json").read_text())
    assert manifest["command"] == "simulate"
    assert manifest["parameters"]["seed"] == 3


def test_simulate_budget_override(tmp_path, capsys):
    rc = run("simulate", "--witness", "trine", "--k", 1, "--budget", 10000,
             "--out-dir", tmp_path, "--out", "c.csv")
    capsys.readouterr()
    assert rc == 0
    records = counts_from_csv((tmp_path / "c.csv").read_text())
    per_setting = {}
    for r in records:
        per_setting.setdefault((r.x, r.y), 0)
        per_setting[(r.x, r.y)] += r.n
    for total in per_setting.values():
        assert abs(total - 10000) < 5 * np.sqrt(10000)


def test_simulate_sym_trine_has_no_builtin_config(capsys):
    rc = run("simulate", "--witness", "sym-trine", "--k", 0.2)
    assert rc == 2
    assert "no built-in optical configuration" in capsys.readouterr().err


def test_simulate_config_witness_mismatch(tmp_path, capsys):
    cfg = tmp_path / "trine.json"
    cfg.write_text(trine_experiment().to_json())
    rc = run("simulate", "--witness", "sic", "--k", 0.2, "--config", cfg,
             "--out-dir", tmp_path)
    assert rc == 2
    capsys.readouterr()


def test_simulate_seed_changes_counts(tmp_path, capsys):
    run("simulate", "--witness", "trine", "--k", 1, "--seed", 0, "--out", "a.csv", "--out-dir", tmp_path)
    run("simulate", "--witness", "trine", "--k", 1, "--seed", 1, "--out", "b.csv", "--out-dir", tmp_path)
    capsys.readouterr()
    assert (tmp_path / "a.csv").read_bytes() != (tmp_path / "b.csv").read_bytes()


# ------------------------------------------------------- byte reproducibility


def test_seeded_runs_are_byte_identical(tmp_path, capsys):
    a, b = tmp_path / "a", tmp_path / "b"
    for out in (a, b):
        rc = run("simulate", "--witness", "trine", "--k", 4.5, "--seed", 11, "--out-dir", out)
        assert rc == 0
    capsys.readouterr()
    name = "counts-trine-k4.5.csv"
    assert (a / name).read_bytes() == (b / name).read_bytes()


def test_bounds_reruns_byte_identical_across_threads(tmp_path, capsys):
    a, b = tmp_path / "a", tmp_path / "b"
    run("bounds", "--witness", "trine", "--k", 1, "--kinds", "projective",
        "--restarts", 8, "--out", "b.json", "--out-dir", a)
    run("bounds", "--witness", "trine", "--k", 1, "--kinds", "projective",
        "--restarts", 8, "--out", "b.json", "--out-dir", b, "--threads", 1)
    capsys.readouterr()
    assert (a / "b.json").read_bytes() == (b / "b.json").read_bytes()


def test_fidelity_curve_reruns_byte_identical(tmp_path, capsys):
    a, b = tmp_path / "a", tmp_path / "b"
    for out in (a, b):
        rc = run("fidelity-curve", "--witness", "trine", "--k", 1, "--samples", 60,
                 "--seed", 5, "--witness-restarts", 4, "--rotation-restarts", 2,
                 "--out-dir", out)
        assert rc == 0
    capsys.readouterr()
    for name in ("fidelity-trine-k1.samples.csv", "fidelity-trine-k1.envelope.json"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


# ------------------------------------------------------------ fidelity-curve


def test_fidelity_curve_artifacts(tmp_path, capsys):
    rc = run("fidelity-curve", "--witness", "sic", "--k", 0.2, "--samples", 150,
             "--witness-restarts", 4, "--rotation-restarts", 2,
             "--out-dir", tmp_path, "--out", "fc")
    assert rc == 0
    printed = capsys.readouterr().out.splitlines()
    samples = tmp_path / "fc.samples.csv"
    envelope = tmp_path / "fc.envelope.json"
    assert printed == [str(samples), str(envelope)]
    rows = samples.read_text().strip().splitlines()
    assert rows[0] == "sample_id,A,F"
    assert len(rows) == 151
    curve = EnvelopeCurve.from_json(envelope.read_text())
    assert sum(b.count for b in curve.bins) == 150
    manifest = json.loads((tmp_path / "fc.samples.csv.manifest.json").read_text())
    assert manifest["outputs"] == ["fc.samples.csv", "fc.envelope.json"]


# ---------------------------------------------------------- visibility-curve


def test_visibility_curve_single_point(tmp_path, capsys):
    rc = run("visibility-curve", "--witness", "sic", "--kind", "projective",
             "--kgrid", "0.2", "--restarts", 8, "--out-dir", tmp_path)
    assert rc == 0
    capsys.readouterr()
    lines = (tmp_path / "visibility-sic-projective.csv").read_text().strip().splitlines()
    assert lines[0] == "k,bound_kind,bound,v_crit"
    k, kind, bound, v_crit = lines[1].split(",")
    assert float(k) == 0.2
    assert float(v_crit) == pytest.approx(0.970, abs=1e-3)


def test_visibility_curve_range_grid(tmp_path, capsys):
    rc = run("visibility-curve", "--witness", "sic", "--kind", "projective",
             "--kgrid", "0.1:0.3:0.1", "--restarts", 8, "--out-dir", tmp_path)
    assert rc == 0
    capsys.readouterr()
    lines = (tmp_path / "visibility-sic-projective.csv").read_text().strip().splitlines()
    assert [float(line.split(",")[0]) for line in lines[1:]] == [0.1, 0.2, 0.3]


def test_visibility_curve_json_format(tmp_path, capsys):
    rc = run("visibility-curve", "--witness", "sic", "--kind", "projective",
             "--kgrid", "0.2", "--restarts", 8, "--format", "json", "--out-dir", tmp_path)
    assert rc == 0
    capsys.readouterr()
    points = json.loads((tmp_path / "visibility-sic-projective.json").read_text())
    assert points[0]["bound_kind"] == "projective"
    assert points[0]["v_crit"] == pytest.approx(0.970, abs=1e-3)


def test_visibility_curve_three_outcome_trine_rejected(capsys):
    rc = run("visibility-curve", "--witness", "trine", "--kind", "three-outcome",
             "--kgrid", "0.2")
    assert rc == 2
    capsys.readouterr()


@pytest.mark.parametrize("grid", ["0.1:0.5", "0.1:0.5:0", "0.1:0.5:-0.1", "-0.2"])
def test_bad_kgrid_exits_two(grid, capsys):
    rc = run("visibility-curve", "--witness", "sic", "--kind", "projective", "--kgrid", grid)
    assert rc == 2
    capsys.readouterr()


# ------------------------------------------------------------------ certify


@pytest.fixture(scope="module")
def sic_counts(tmp_path_factory):
    out = tmp_path_factory.mktemp("counts")
    rc = main(["simulate", "--witness", "sic", "--k", "0.2", "--seed", "7",
               "--budget", "1000000", "--out-dir", str(out)])
    assert rc == 0
    return out / "counts-sic-k0.2.csv"


@pytest.fixture(scope="module")
def trine_counts(tmp_path_factory):
    out = tmp_path_factory.mktemp("counts")
    rc = main(["simulate", "--witness", "trine", "--k", "4.5", "--seed", "7",
               "--out-dir", str(out)])
    assert rc == 0
    return out / "counts-trine-k4.5.csv"


def test_certify_sic_end_to_end(sic_counts, tmp_path, capsys):
    rc = run("bounds", "--witness", "sic", "--k", 0.2, "--restarts", 8,
             "--out", "bounds.json", "--out-dir", tmp_path)
    assert rc == 0
    capsys.readouterr()
    rc = run("certify", "--counts", sic_counts, "--witness", "sic", "--k", 0.2,
             "--bounds", tmp_path / "bounds.json", "--syst-err", 1e-4)
    assert rc == 0
    report = read_json(capsys)
    assert report["witness"] == "sic"
    assert report["value"] == pytest.approx(0.78615, abs=2e-3)
    assert report["syst_err"] == 1e-4
    assert report["verdicts"]["non_projective_certified"] is True
    assert report["verdicts"]["genuine_four_outcome_certified"] is True
    assert set(report["bounds"]) >= {"projective", "three-outcome"}


def test_certify_computes_bounds_when_not_given(trine_counts, capsys):
    rc = run("certify", "--counts", trine_counts, "--witness", "trine", "--k", 4.5,
             "--restarts", 8)
    assert rc == 0
    report = read_json(capsys)
    assert report["verdicts"]["non_projective_certified"] is True
    assert report["verdicts"]["genuine_four_outcome_certified"] is False
    assert "quantum" in report["bounds"]


def test_certify_failed_certification_still_exits_zero(trine_counts, tmp_path, capsys):
    bounds = {
        "bounds": [
            {"kind": "projective-numeric", "value": 4.999, "k": 4.5, "heuristic": True}
        ]
    }
    path = tmp_path / "impossible.json"
    path.write_text(json.dumps(bounds))
    rc = run("certify", "--counts", trine_counts, "--witness", "trine", "--k", 4.5,
             "--bounds", path)
    assert rc == 0
    report = read_json(capsys)
    assert report["verdicts"]["non_projective_certified"] is False


def test_certify_envelope_gives_fidelity_floor(sic_counts, tmp_path, capsys):
    curve = EnvelopeCurve(
        bin_width=10.0, bins=(EnvelopeBin(a_lo=0.0, a_hi=10.0, min_f=0.93, count=5),)
    )
    path = tmp_path / "env.json"
    path.write_text(curve.to_json())
    rc = run("certify", "--counts", sic_counts, "--witness", "sic", "--k", 0.2,
             "--restarts", 8, "--envelope", path)
    assert rc == 0
    report = read_json(capsys)
    assert report["fidelity_estimate"]["min_fidelity"] == 0.93


def test_certify_syst_runs_uses_builtin_config(trine_counts, capsys):
    rc = run("certify", "--counts", trine_counts, "--witness", "trine", "--k", 4.5,
             "--restarts", 8, "--syst-runs", 200, "--seed", 2)
    assert rc == 0
    report = read_json(capsys)
    # angle-jitter Monte Carlo on the modeled trine setup
    assert 5e-4 < report["syst_err"] < 2.5e-3


def test_certify_out_file(trine_counts, tmp_path, capsys):
    rc = run("certify", "--counts", trine_counts, "--witness", "trine", "--k", 4.5,
             "--restarts", 8, "--out", "report.json", "--out-dir", tmp_path)
    assert rc == 0
    capsys.readouterr()
    report = json.loads((tmp_path / "report.json").read_text())
    assert "verdicts" in report
    assert (tmp_path / "report.json.manifest.json").exists()


def test_certify_csv_format_rejected(trine_counts, capsys):
    rc = run("certify", "--counts", trine_counts, "--witness", "trine", "--k", 4.5,
             "--format", "csv")
    assert rc == 2
    assert "JSON only" in capsys.readouterr().err


def test_certify_malformed_counts_exits_two(tmp_path, capsys):
    path = tmp_path / "bad.csv"
    path.write_text("this,is,not\na,counts,file\n")
    rc = run("certify", "--counts", path, "--witness", "sic", "--k", 0.2)
    assert rc == 2
    capsys.readouterr()


def test_certify_missing_counts_file_exits_two(capsys):
    rc = run("certify", "--counts", "/nonexistent/counts.csv", "--witness", "sic", "--k", 0.2)
    assert rc == 2
    capsys.readouterr()


def test_certify_malformed_bounds_file_exits_two(trine_counts, tmp_path, capsys):
    path = tmp_path / "bounds.json"
    path.write_text('{"bounds": [{"value": 4.8}]}')
    rc = run("certify", "--counts", trine_counts, "--witness", "trine", "--k", 4.5,
             "--bounds", path)
    assert rc == 2
    capsys.readouterr()


def test_certify_uniform_counts_all_verdicts_false(tmp_path, capsys):
    rows = ["x,y,b,n"]
    for x in range(4):
        for y in range(3):
            for b in range(2):
                rows.append(f"{x},{y},{b},500")
        for b in range(4):
            rows.append(f"{x},povm,{b},250")
    path = tmp_path / "uniform.csv"
    path.write_text("\n".join(rows) + "\n")
    rc = run("certify", "--counts", path, "--witness", "sic", "--k", 0.2, "--restarts", 8)
    assert rc == 0
    report = read_json(capsys)
    assert report["verdicts"] == {
        "non_projective_certified": False,
        "genuine_four_outcome_certified": False,
    }


def test_certify_missing_setting_group_exits_two(tmp_path, capsys):
    # preparation 2 never sees binary setting 1
    rows = ["x,y,b,n"]
    for x in range(3):
        for y in range(2):
            if (x, y) == (2, 1):
                continue
            for b in range(2):
                rows.append(f"{x},{y},{b},500")
        for b in range(3):
            rows.append(f"{x},povm,{b},300")
    path = tmp_path / "gap.csv"
    path.write_text("\n".join(rows) + "\n")
    rc = run("certify", "--counts", path, "--witness", "trine", "--k", 1)
    assert rc == 2
    assert "at least one count" in capsys.readouterr().err


def test_certify_syst_flags_mutually_exclusive(trine_counts):
    with pytest.raises(SystemExit) as exc:
        run("certify", "--counts", trine_counts, "--witness", "trine", "--k", 4.5,
            "--syst-err", 0.001, "--syst-runs", 100)
    assert exc.value.code == 2


# ------------------------------------------------------------------ out dirs


def test_out_dir_env_var(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("POVMCERT_OUT_DIR", str(tmp_path / "envdir"))
    rc = run("simulate", "--witness", "trine", "--k", 1, "--out", "c.csv")
    assert rc == 0
    capsys.readouterr()
    assert (tmp_path / "envdir" / "c.csv").exists()


def test_out_dir_flag_beats_env_var(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("POVMCERT_OUT_DIR", str(tmp_path / "envdir"))
    rc = run("simulate", "--witness", "trine", "--k", 1, "--out", "c.csv",
             "--out-dir", tmp_path / "flagdir")
    assert rc == 0
    capsys.readouterr()
    assert (tmp_path / "flagdir" / "c.csv").exists()
    assert not (tmp_path / "envdir" / "c.csv").exists()
