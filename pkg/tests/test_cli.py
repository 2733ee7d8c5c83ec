import json
import subprocess
import sys

import pytest

from carlasso.cli import build_parser, main
from carlasso.data import GUT_ANALOG_FORMULA

from conftest import write_text

QUICK = ["--n-iter", "200", "--burn-in", "50", "--thin", "10", "--quiet"]


def run(argv, capsys):
    code = main(argv)
    cap = capsys.readouterr()
    return code, cap.out, cap.err


def exit_code(argv):
    with pytest.raises(SystemExit) as ei:
        main(argv)
    return ei.value.code


@pytest.fixture
def sim_dir(tmp_path, capsys):
    d = tmp_path / "sim"
    code, _, _ = run(["simulate", "--k", "3", "--p", "2", "--n", "60", "--seed", "1", "--out", str(d)], capsys)
    assert code == 0
    return d


def fit_args(sim_dir, out, *extra):
    return ["fit", "--formula", "y1+y2+y3 ~ x1+x2", "--data", str(sim_dir / "data.csv"), "--out", str(out),
            *QUICK, *extra]


def test_missing_data_flag_is_usage_error(capsys):
    assert exit_code(["fit", "--formula", "y ~ x", "--out", "o"]) == 2
    assert "usage" in capsys.readouterr().err


@pytest.mark.parametrize("argv", [
    ["fit", "--formula", "y ~ x", "--data", "d.csv", "--out", "o", "--bogus"],
    ["fit", "--formula", "y ~ x", "--data", "d.csv", "--out", "o", "--thin", "0"],
    ["fit", "--formula", "y ~ x", "--data", "d.csv", "--out", "o", "--ci-level", "1.5"],
    ["fit", "--formula", "y ~ x", "--data", "d.csv", "--out", "o", "--link", "cloglog"],
    ["graph", "--fit", "f", "--out", "g.dot", "--format", "svg"],
    ["simulate", "--k", "1", "--p", "1", "--n", "10", "--link", "logit", "--out", "s"],
    ["simulate", "--k", "0", "--p", "1", "--n", "10", "--out", "s"],
    [],
])
def test_flag_misuse_exits_2(argv):
    assert exit_code(argv) == 2


def test_help_documents_every_flag_with_default():
    parser = build_parser()
    sub = next(a for a in parser._actions if a.__class__.__name__ == "_SubParsersAction")
    for name, sp in sub.choices.items():
        text = sp.format_help()
        for action in sp._actions:
            if action.dest == "help":
                continue
            assert action.option_strings[0] in text, (name, action.dest)
            if not action.required:
                assert action.help and "%(default)s" not in action.help
        assert text.count("(default:") >= sum(not a.required and a.dest != "help" for a in sp._actions)


def test_fit_summary_graph_round(tmp_path, sim_dir, capsys):
    out = tmp_path / "run"
    code, _, err = run(fit_args(sim_dir, out), capsys)
    assert code == 0, err
    assert sorted(p.name for p in out.iterdir()) == ["chain_1", "summary.json", "timing.json"]
    assert sorted(p.name for p in (out / "chain_1").iterdir()) == ["b.csv", "lambda.csv", "meta.json", "mu.csv",
                                                                   "omega.csv"]
    code, text, _ = run(["summary", "--fit", str(out)], capsys)
    assert code == 0 and json.loads(text)["metadata"]["draw_count"] == 20
    for fmt in ("dot", "graphml", "json"):
        code, text, _ = run(["graph", "--fit", str(out), "--format", fmt, "--out", str(tmp_path / f"g.{fmt}")], capsys)
        assert code == 0 and text.startswith("5 nodes (3 response, 2 predictor)") and "of 9 edges included" in text


def test_progress_goes_to_stderr(tmp_path, sim_dir, capsys):
    argv = [a for a in fit_args(sim_dir, tmp_path / "run") if a != "--quiet"]
    code, out, err = run(argv, capsys)
    assert code == 0 and out == ""
    progress = [line for line in err.splitlines() if "%" in line]
    assert len(progress) == 10 and progress[-1].startswith("carlasso: 100%")


def test_same_seed_byte_identical(tmp_path, sim_dir, capsys):
    for d in ("a", "b"):
        assert run(fit_args(sim_dir, tmp_path / d, "--seed", "42"), capsys)[0] == 0
    for rel in ("summary.json", "chain_1/omega.csv", "chain_1/b.csv", "chain_1/lambda.csv", "chain_1/meta.json"):
        assert (tmp_path / "a" / rel).read_bytes() == (tmp_path / "b" / rel).read_bytes(), rel


def test_non_empty_out_is_refused(tmp_path, sim_dir, capsys):
    out = tmp_path / "run"
    out.mkdir()
    write_text(out / "keep.txt", "x")
    code, _, err = run(fit_args(sim_dir, out), capsys)
    assert code == 1 and "FitDirectoryError" in err
    assert [p.name for p in out.iterdir()] == ["keep.txt"]


def test_pipeline_error_is_structured(tmp_path, capsys):
    bad = write_text(tmp_path / "bad.csv", "y1,x1\n1,2\n3\n")
    code, _, err = run(["fit", "--formula", "y1 ~ x1", "--data", str(bad), "--out", str(tmp_path / "o")], capsys)
    assert code == 1
    assert err.startswith("carlasso: error [RaggedRow]") and "row 3" in err
    assert not (tmp_path / "o").exists()


def test_unknown_column_suggests(tmp_path, sim_dir, capsys):
    code, _, err = run(["fit", "--formula", "y1 + Y2 ~ x1", "--data", str(sim_dir / "data.csv"),
                        "--out", str(tmp_path / "o"), *QUICK], capsys)
    assert code == 1 and "[UnknownColumn]" in err and "y2" in err


def test_corrupted_chain_csv_names_file(tmp_path, sim_dir, capsys):
    out = tmp_path / "run"
    assert run(fit_args(sim_dir, out), capsys)[0] == 0
    f = out / "chain_1" / "omega.csv"
    f.write_text(f.read_text().replace(",", ",x", 1))
    code, _, err = run(["graph", "--fit", str(out), "--out", str(tmp_path / "g.dot")], capsys)
    assert code == 1 and "omega.csv" in err
    assert not (tmp_path / "g.dot").exists()


def test_incomplete_fit_directory(tmp_path, capsys):
    (tmp_path / "empty").mkdir()
    code, _, err = run(["graph", "--fit", str(tmp_path / "empty"), "--out", str(tmp_path / "g.dot")], capsys)
    assert code == 1 and "summary.json" in err


def test_gut_analog_graph_roster_and_nesting(tmp_path, capsys):
    out = tmp_path / "gut"
    code, _, err = run(["fit", "--formula", GUT_ANALOG_FORMULA, "--data", "bundled:gut_analog", "--link", "logit",
                        "--adaptive", "--out", str(out), *QUICK], capsys)
    assert code == 0, err
    summary = json.loads((out / "summary.json").read_text())
    assert len(summary["omega_mean"]) == 4
    assert summary["metadata"]["reference_response"] == "all_others"
    run(["graph", "--fit", str(out), "--format", "dot", "--out", str(tmp_path / "net.dot")], capsys)
    dot = (tmp_path / "net.dot").read_text()
    assert dot.count("shape=circle") == 5 and dot.count("shape=triangle") == 4
    counts = {}
    for level in ("0.5", "0.999"):
        code, text, _ = run(["graph", "--fit", str(out), "--ci-level", level, "--format", "json",
                             "--out", str(tmp_path / f"g{level}.json")], capsys)
        g = json.loads((tmp_path / f"g{level}.json").read_text())
        counts[level] = sum(e["included"] for e in g["edges"])
        assert f"{counts[level]} of" in text
    assert counts["0.999"] <= counts["0.5"]


def test_simulate_writes_files(tmp_path, capsys):
    outs = []
    for d in ("a", "b"):
        code, text, _ = run(["simulate", "--k", "6", "--p", "4", "--n", "300", "--link", "identity", "--seed", "7",
                             "--out", str(tmp_path / d)], capsys)
        assert code == 0 and text.startswith("300 rows")
        outs.append((tmp_path / d / "data.csv").read_bytes())
    lines = outs[0].decode().splitlines()
    assert len(lines) == 301 and all(len(line.split(",")) == 10 for line in lines)
    assert outs[0] == outs[1]
    assert json.loads((tmp_path / "a" / "truth.json").read_text())["k"] == 6


def test_unknown_bundled_dataset(tmp_path, capsys):
    code, _, err = run(["fit", "--formula", "a ~ b", "--data", "bundled:nope", "--out", str(tmp_path / "o")], capsys)
    assert code == 1 and "gut_analog.csv" in err


def test_module_entry_point(tmp_path):
    r = subprocess.run([sys.executable, "-m", "carlasso", "--help"], capture_output=True, text=True)
    assert r.returncode == 0 and "simulate" in r.stdout
    r = subprocess.run([sys.executable, "-m", "carlasso", "graph"], capture_output=True, text=True)
    assert r.returncode == 2
