import json
import subprocess
import sys
from importlib import resources

import pytest

import oracles as O
from weightjump import __version__
from weightjump.cli import main

SCENARIOS = resources.files("weightjump") / "scenarios"


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def bundled(name):
    return str(SCENARIOS / name)


def write(tmp_path, body, name="s.scenario"):
    p = tmp_path / name
    p.write_text(body)
    return p


DISCRETE = """\
[scenario]
mode = limit-study
seed = 11
replicates = 3000
times = 0, 1, 5

[target]
density = discrete([0.2, 0.3, 0.5])

[trial]
density = discrete([1/3, 1/3, 1/3])

[scheme]
name = exp
"""


@pytest.mark.parametrize("name", ["example_2_1", "example_3_1", "benchmark_exact_start",
                                  "benchmark_mh", "estimate_mean"])
def test_bundled_scenarios_run(capsys, tmp_path, name):
    code, out, _ = run(capsys, "validate", bundled(f"{name}.scenario"))
    assert code == 0 and json.loads(out)["ok"]
    code, out, err = run(capsys, "run", bundled(f"{name}.scenario"), "--replicates", 1000,
                         "--out-dir", tmp_path)
    assert code == 0, err
    summary = json.loads(out)
    assert summary["out_dir"] == str(tmp_path)
    assert any(tmp_path.iterdir())


def test_limit_study_outputs(capsys, tmp_path):
    code, out, _ = run(capsys, "run", bundled("example_2_1.scenario"), "--replicates", 1000,
                       "--out-dir", tmp_path)
    assert code == 0
    names = sorted(p.name for p in tmp_path.iterdir())
    assert names == ["hist_t1.csv", "hist_t10.csv", "hist_t3.csv", "tv_summary.csv", "tv_summary.json"]
    rows = (tmp_path / "hist_t1.csv").read_text().splitlines()
    assert rows[0] == "bin_left,bin_right,count,reference_prob" and len(rows) == 1 + 62
    assert sum(int(r.split(",")[2]) for r in rows[1:]) == 1000
    report = json.loads((tmp_path / "tv_summary.json").read_text())
    assert report["replicates"] == 1000 and report["times"] == [1.0, 3.0, 10.0]


def test_tv_curve_has_bound(capsys, tmp_path):
    code, out, _ = run(capsys, "tv-curve", bundled("example_3_1.scenario"), "--replicates", 1000,
                       "--out-dir", tmp_path)
    assert code == 0
    lines = (tmp_path / "tv_curve.csv").read_text().splitlines()
    assert lines[0] == "time,tv,bound,mc_error" and len(lines) == 7
    assert float(lines[-1].split(",")[2]) == pytest.approx(O.BOUND_AT_31_8, rel=1e-12)


def test_same_seed_byte_identical(capsys, tmp_path):
    path = write(tmp_path, DISCRETE)
    outs = []
    for k, workers in enumerate([1, 1, 3]):
        d = tmp_path / f"o{k}"
        code, _, _ = run(capsys, "run", path, "--workers", workers, "--out-dir", d)
        assert code == 0
        outs.append({p.name: p.read_bytes() for p in d.iterdir()})
    assert outs[0] == outs[1] == outs[2]
    d = tmp_path / "other"
    run(capsys, "run", path, "--seed", 12, "--out-dir", d)
    assert (d / "hist_t5.csv").read_bytes() != outs[0]["hist_t5.csv"]


def test_block_split_is_worker_independent(capsys, tmp_path):
    # more replicates than one block so workers actually share the load
    path = write(tmp_path, DISCRETE.replace("replicates = 3000", "replicates = 9000"))
    a, b = tmp_path / "a", tmp_path / "b"
    run(capsys, "run", path, "--out-dir", a)
    run(capsys, "run", path, "--workers", 4, "--out-dir", b)
    assert (a / "tv_summary.csv").read_bytes() == (b / "tv_summary.csv").read_bytes()


def test_estimate_json(capsys, tmp_path):
    body = DISCRETE.replace("mode = limit-study", "mode = estimate").replace("times = 0, 1, 5", "n = 500\nh = indicator(2)")
    code, out, _ = run(capsys, "run", write(tmp_path, body), "--replicates", 200, "--out-dir", tmp_path)
    assert code == 0
    res = json.loads((tmp_path / "estimate.json").read_text())
    assert set(res) >= {"scheme", "n_or_t", "estimate", "replicate_se", "ess", "replicates"}
    assert res["replicates"] == 200 and abs(res["estimate"] - 0.5) <= 4 * res["replicate_se"]


def test_exact_start_jsonl(capsys, tmp_path):
    code, out, _ = run(capsys, "exact-start", bundled("benchmark_exact_start.scenario"), "--replicates", 2000,
                       "--out-dir", tmp_path)
    assert code == 0
    summary = json.loads(out)
    assert summary["epsilon_star"] == pytest.approx(O.GEO_EPS)
    assert summary["expected_trials"] == pytest.approx(O.GEO_MEAN_TRIALS)
    recs = [json.loads(line) for line in (tmp_path / "exact_start.jsonl").read_text().splitlines()]
    assert len(recs) == 2000 and recs[0]["replicate"] == 0
    assert set(recs[0]) == {"replicate", "tau", "trials_used", "initial_state", "initial_weight"}
    assert all(r["trials_used"] >= 1 and r["tau"] >= 0 for r in recs)


def test_path_dump(capsys, tmp_path):
    body = DISCRETE + "\n[output]\ndump_path = 20\n"
    code, _, _ = run(capsys, "run", write(tmp_path, body), "--out-dir", tmp_path / "o")
    assert code == 0
    lines = (tmp_path / "o" / "path.csv").read_text().splitlines()
    assert lines[0] == "index,state,weight,epoch_start"
    last = lines[-1].split(",")
    assert float(last[3]) <= 20.0 < float(last[3]) + float(last[2])


def test_parse_error_exit_2(capsys, tmp_path):
    body = DISCRETE.replace("discrete([0.2, 0.3, 0.5])", "discrete([0.2, 0.3, 0.5)")
    code, out, err = run(capsys, "validate", write(tmp_path, body))
    assert code == 2 and out == ""
    payload = json.loads(err)
    assert payload["error"] == "parse" and payload["line"] == 8 and payload["column"] is not None


def test_validation_error_exit_3(capsys, tmp_path):
    code, _, err = run(capsys, "run", write(tmp_path, DISCRETE.replace("0, 1, 5", "5, 1")))
    assert code == 3 and any("sorted" in s for s in json.loads(err)["issues"])
    code, _, _ = run(capsys, "run", write(tmp_path, DISCRETE), "--replicates", 0)
    assert code == 3


def test_command_mode_requirements(capsys, tmp_path):
    # an exact start is undefined for deterministic weights
    code, _, err = run(capsys, "exact-start", write(tmp_path, DISCRETE.replace("name = exp", "name = is")))
    assert code == 3 and "exact-start" in err


def test_runtime_error_exit_4(capsys, tmp_path):
    body = """\
[scenario]
mode = tv-curve
replicates = 10
times = 1

[target]
density = normal(0, 1)

[trial]
density = normal(0, 2)

[scheme]
name = is
"""
    code, _, err = run(capsys, "run", write(tmp_path, body), "--out-dir", tmp_path)
    payload = json.loads(err)
    assert code == 4 and payload["error"] == "runtime" and "1000" in payload["message"]


def test_validate_reports_notes(capsys, tmp_path):
    body = DISCRETE.replace("name = exp", "name = gasemyr\nkappa = 0.5")
    code, out, _ = run(capsys, "validate", write(tmp_path, body))
    assert code == 0 and json.loads(out)["notes"][0].startswith("rejection-sampling regime")


def test_missing_file_exit_2(capsys, tmp_path):
    code, _, _ = run(capsys, "validate", tmp_path / "nope.scenario")
    assert code == 2


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "weightjump.cli", "--version"], capture_output=True, text=True)
    assert res.returncode == 0 and __version__ in res.stdout
