import json

import pytest

from dataset_io import HEADER, load_sidecar
from meb_cli import main, parse_args


def gen(tmp_path, name, *extra):
    out = str(tmp_path / name)
    assert main(["gen", "--out", out, *extra]) == 0
    return out


def report_lines(text):
    return [json.loads(line) for line in text.splitlines() if line.strip()]


def test_gen_simplex_file_size(tmp_path):
    out = gen(tmp_path, "s.mebd", "--family", "simplex", "--d", "3")
    assert (tmp_path / "s.mebd").stat().st_size == HEADER.size + 4 * 3 * 8
    sidecar = load_sidecar(out)
    assert sidecar.spec["family"] == "regular-simplex"
    assert sidecar.beta_hint is not None


def test_gen_is_bit_identical(tmp_path):
    gen(tmp_path, "a.mebd", "--family", "uniform-ball", "--n", "500", "--d", "4", "--seed", "9")
    gen(tmp_path, "b.mebd", "--family", "uniform-ball", "--n", "500", "--d", "4", "--seed", "9")
    assert (tmp_path / "a.mebd").read_bytes() == (tmp_path / "b.mebd").read_bytes()


def test_gen_planted_gamma_must_be_integral(tmp_path, capsys):
    out = str(tmp_path / "p.mebd")
    assert main(["gen", "--family", "planted", "--n", "10", "--d", "2", "--gamma", "0.25", "--out", out]) == 2
    assert "not an integer" in capsys.readouterr().err
    gen(tmp_path, "q.mebd", "--family", "planted", "--n", "10", "--d", "2", "--gamma", "0.3")
    assert len(load_sidecar(str(tmp_path / "q.mebd")).inliers) == 7


def test_unknown_family_is_a_usage_error(tmp_path):
    with pytest.raises(SystemExit) as exc:
        parse_args(["gen", "--family", "cube", "--out", str(tmp_path / "c.mebd")])
    assert exc.value.code == 2


def test_run_alg1_singleton_csv(tmp_path, capsys):
    path = tmp_path / "one.csv"
    path.write_text("1.0,2.0\n")
    assert main(["run", "--dataset", str(path), "--algorithm", "alg1", "--beta", "0.1"]) == 0
    (line,) = report_lines(capsys.readouterr().out)
    assert line["radius"] == 0.0
    assert line["coverage_count"] == 1
    assert line["algorithm"] == "alg1"


def test_run_is_deterministic(tmp_path, capsys):
    data = gen(tmp_path, "b.mebd", "--family", "ball", "--n", "2000", "--d", "5", "--seed", "1")
    args = ["run", "--dataset", data, "--algorithm", "alg2", "--beta", "0.05", "--trials", "3", "--seed", "7", "--reference", "none"]
    assert main(args) == 0
    first = report_lines(capsys.readouterr().out)
    assert main(args + ["--threads", "2"]) == 0
    second = report_lines(capsys.readouterr().out)
    for a, b in zip(first, second):
        a.pop("wall_time_ms")
        b.pop("wall_time_ms")
    assert first == second
    assert [r["stream_id"] for r in first] == [7, 8, 9]


def test_run_uses_stored_beta_hint(tmp_path, capsys):
    data = gen(tmp_path, "b.mebd", "--family", "ball", "--n", "1000", "--d", "10", "--epsilon", "0.1")
    assert main(["run", "--dataset", data, "--algorithm", "quick", "--reference", "none", "--out", str(tmp_path / "r.jsonl")]) == 0
    (line,) = report_lines((tmp_path / "r.jsonl").read_text())
    assert line["cfg"]["beta"] == pytest.approx(1 - 0.9**10)


def test_run_without_beta_fails(tmp_path, capsys):
    data = gen(tmp_path, "g.mebd", "--family", "gaussian", "--n", "100", "--d", "3")
    assert main(["run", "--dataset", data, "--algorithm", "alg1"]) == 2
    assert "--beta" in capsys.readouterr().err


def test_run_missing_dataset(tmp_path):
    assert main(["run", "--dataset", str(tmp_path / "none.mebd"), "--beta", "0.1"]) == 2


def test_outlier_run_with_ground_truth(tmp_path):
    data = gen(tmp_path, "p.mebd", "--family", "planted", "--n", "2000", "--d", "5", "--gamma", "0.1")
    out = tmp_path / "r.jsonl"
    assert main(["run", "--dataset", data, "--algorithm", "outlier", "--beta", "0.05", "--epsilon", "0.2", "--trials", "5", "--out", str(out)]) == 0
    lines = report_lines(out.read_text())
    assert len(lines) == 5
    assert all(r["cfg"]["gamma"] == pytest.approx(0.1) and r["target_coverage"] == 1800 for r in lines)
    assert "ground-truth" in load_sidecar(data).references


def test_eval_empty_file(tmp_path, capsys):
    path = tmp_path / "empty.jsonl"
    path.write_text("")
    assert main(["eval", str(path)]) == 1
    assert "no trials" in capsys.readouterr().err


def test_eval_flags_malformed_lines(tmp_path, capsys):
    data = gen(tmp_path, "b.mebd", "--family", "ball", "--n", "1000", "--d", "5")
    out = tmp_path / "r.jsonl"
    assert main(["run", "--dataset", data, "--algorithm", "quick", "--beta", "0.05", "--trials", "5", "--out", str(out)]) == 0
    assert main(["eval", str(out), "--json"]) in (0, 1)
    summary = json.loads(capsys.readouterr().out)
    assert summary["trials"] == 5 and summary["malformed"] == []
    with open(out, "a", encoding="utf-8") as f:
        f.write("{truncated\n")
    assert main(["eval", str(out)]) == 1
    assert "line 6" in capsys.readouterr().err


def test_eval_writes_summary(tmp_path):
    data = gen(tmp_path, "b.mebd", "--family", "ball", "--n", "1000", "--d", "5")
    out = tmp_path / "r.jsonl"
    main(["run", "--dataset", data, "--algorithm", "alg1", "--beta", "0.2", "--trials", "3", "--out", str(out)])
    summary_path = tmp_path / "summary.json"
    assert main(["eval", str(out), "--out", str(summary_path)]) == 0
    summary = json.loads(summary_path.read_text())
    assert summary["passed"] is True
    assert summary["groups"][0]["threshold"] is None


def test_sweep_covers_every_combination(tmp_path, capsys):
    data = gen(tmp_path, "b.mebd", "--family", "ball", "--n", "1000", "--d", "5")
    args = ["sweep", "--dataset", data, "--algorithm", "quick", "--epsilon", "0.1", "0.2", "--beta", "0.05", "0.1", "--trials", "2", "--reference", "none"]
    assert main(args) == 0
    captured = capsys.readouterr()
    lines = report_lines(captured.out)
    assert len(lines) == 8
    combos = {(r["combo"]["epsilon"], r["combo"]["beta"]) for r in lines}
    assert combos == {(0.1, 0.05), (0.1, 0.1), (0.2, 0.05), (0.2, 0.1)}
    assert "Sweep summary" in captured.err


def test_run_on_high_dimensional_ball_uses_capped_hint(tmp_path):
    data = gen(tmp_path, "hd.mebd", "--family", "ball", "--n", "200", "--d", "1000", "--epsilon", "0.1")
    assert load_sidecar(data).beta_hint < 1.0
    out = tmp_path / "r.jsonl"
    assert main(["run", "--dataset", data, "--algorithm", "quick", "--reference", "none", "--out", str(out)]) == 0
    (line,) = report_lines(out.read_text())
    assert line["cfg"]["beta"] < 1.0
