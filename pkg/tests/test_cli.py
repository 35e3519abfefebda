import hashlib
import json
import textwrap

import pytest

from viscohalf import parse_config
from viscohalf.cli import EXIT_CONFIG, main
from viscohalf.jobs import evaluate_records, field_columns, run_job

JOB = textwrap.dedent("""\
    material: {{lambda: 2.0, mu: 1.0, rho: 1.0, q: 0.3, alpha: 0.8}}
    frequencies: [1.0, 2.0]
    source: [0.0, 0.0, -1.0]
    receivers:
      points:
        - [0.5, 0.0, -0.5]
        - [0.2, 0.3, -0.5]
        - [1.0, -0.4, -1.5]
        - [0.0, 0.8, -0.7]
    outputs: {{path: {path}}}
    """)


@pytest.fixture
def job_file(tmp_path):
    p = tmp_path / "job.yaml"
    p.write_text(JOB.format(path=tmp_path / "out" / "green.csv"))
    return p


def digest(path):
    return hashlib.sha256(path.read_bytes()).hexdigest()


def test_columns():
    cols = field_columns()
    assert cols[:5] == ["x1", "x2", "x3", "omega", "re_g11"]
    assert cols[-3:] == ["im_g33", "quad_err", "flags"]
    assert len(cols) == 4 + 18 + 2
    assert len(field_columns("both")) == 4 + 36 + 2


def test_eval_writes_frequency_major_records(job_file, tmp_path):
    assert main(["eval", "--config", str(job_file)]) == 0
    lines = (tmp_path / "out" / "green.csv").read_text().splitlines()
    assert lines[0] == "schema=1"
    assert lines[1].split(",") == field_columns()
    rows = [r.split(",") for r in lines[2:]]
    assert len(rows) == 8
    assert [float(r[3]) for r in rows] == [1.0] * 4 + [2.0] * 4
    assert [r[:3] for r in rows[:4]] == [r[:3] for r in rows[4:]]


def test_rerun_is_byte_identical(job_file, tmp_path):
    out = tmp_path / "out" / "green.csv"
    main(["eval", "--config", str(job_file)])
    first = digest(out)
    main(["eval", "--config", str(job_file), "--workers", "2"])
    assert digest(out) == first


def test_out_dir_override(job_file, tmp_path):
    assert main(["eval", "--config", str(job_file), "--out", str(tmp_path / "alt")]) == 0
    assert (tmp_path / "alt" / "green.csv").exists()


def test_json_field_format(tmp_path):
    text = JOB.format(path=tmp_path / "g.json").replace("{path:", "{format: json, which: traction, path:")
    job = parse_config(text)
    run_job(job)
    body = json.loads((tmp_path / "g.json").read_text())
    assert body["schema"] == 1 and body["columns"] == field_columns("traction")
    assert len(body["records"]) == 8


def test_verify_only_job(tmp_path):
    text = JOB.format(path=tmp_path / "g.csv")
    text = text.split("receivers:")[0] + f"outputs: {{path: {tmp_path / 'g.csv'}}}\n"
    text += "verify: {traction_free: true}\n"
    written = run_job(parse_config(text))
    assert "field" not in written and not (tmp_path / "g.csv").exists()
    report = json.loads((tmp_path / "g.verify.json").read_text())
    assert len(report["reports"]) == 2 and report["all_pass"]
    assert report["reports"][0]["metric_name"] == "traction_free"


def test_config_error_exit_code(tmp_path, capsys):
    bad = tmp_path / "bad.yaml"
    bad.write_text(JOB.format(path="x.csv").replace("alpha: 0.8", "alpha: 1.5"))
    assert main(["eval", "--config", str(bad)]) == EXIT_CONFIG
    assert "alpha" in capsys.readouterr().err


def test_missing_config_exit_code(tmp_path):
    assert main(["eval", "--config", str(tmp_path / "nope.yaml")]) == EXIT_CONFIG


def test_scan_delta(job_file, tmp_path, capsys):
    assert main(["scan-delta", "--config", str(job_file)]) == 0
    scans = json.loads((tmp_path / "out" / "green.scan.json").read_text())["scans"]
    assert len(scans) == 2 and all(s["min_abs_delta_hat"] > 0 for s in scans)


def test_verify_command(job_file, tmp_path, capsys):
    assert main(["verify", "--config", str(job_file)]) == 0
    out = capsys.readouterr().out
    assert "traction_free" in out and "pde_total" in out and "reciprocity" in out
    assert (tmp_path / "out" / "green.verify.json").exists()


def test_weyl_test(capsys):
    assert main(["weyl-test", "--k-re", "1.0", "--k-im", "0.5", "--depth", "1.0"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["relative_error"] < 1e-5
    assert abs(out["constant_times_2pi"] - 1) < 1e-9


def test_records_carry_flags_not_errors(tmp_path):
    text = JOB.format(path=tmp_path / "g.csv") + "quadrature: {max_refine_depth: 0, rel_tol: 1e-14}\n"
    rows = evaluate_records(parse_config(text))
    assert all("NoConvergence" in r[-1] for r in rows)
