import csv
import json
import subprocess
import sys

import pytest

from sketchim.cli import BENCH_COLUMNS, EXIT_INVALID, EXIT_IO, EXIT_OK, main


@pytest.fixture
def star_file(tmp_path):
    path = tmp_path / "star.txt"
    path.write_text("# center 100\n" + "".join(f"100 {v}\n" for v in range(1, 51)))
    return path


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def test_select_star(capsys, star_file):
    code, out, err = run(capsys, "select", "--graph", star_file, "--k", 1, "--w", "const:1.0", "--J", 32)
    assert code == EXIT_OK
    doc = json.loads(out)
    assert doc["seeds"] == [100]
    assert doc["format_version"] == 1
    assert doc["config"]["K"] == 1 and doc["config"]["J"] == 32
    assert "rebuilt" in err  # per-step table on stderr


def test_select_defaults_echoed(capsys, star_file):
    _, out, _ = run(capsys, "select", "--graph", star_file, "--k", 2)
    cfg = json.loads(out)["config"]
    assert (cfg["J"], cfg["eps_l"], cfg["eps_g"], cfg["eps_c"]) == (256, 0.3, 0.01, 0.02)
    assert cfg["weights"] == "const:0.01"


def test_select_byte_identical(tmp_path, capsys):
    argv = ["select", "--graph", "gen:gnm:n=300,m=1500,seed=2", "--w", "const:0.1", "--k", 8,
            "--J", 64, "--seed", 5]
    outs = []
    for threads in (1, 2, 1):
        path = tmp_path / f"r{len(outs)}.json"
        assert run(capsys, *argv, "--threads", threads, "-o", path)[0] == EXIT_OK
        outs.append(path.read_bytes())
    assert outs[0] == outs[1] == outs[2]


def test_select_k_zero(capsys, star_file):
    code, out, _ = run(capsys, "select", "--graph", star_file, "--k", 0)
    assert code == EXIT_OK and json.loads(out)["seeds"] == []


def test_select_infinite_thresholds(capsys, star_file):
    code, out, _ = run(capsys, "select", "--graph", star_file, "--k", 3, "--eps-l", "inf", "--eps-g", "inf")
    doc = json.loads(out)
    assert code == EXIT_OK and doc["config"]["eps_l"] == "inf"
    assert doc["builds"] == 1


def test_env_seed(monkeypatch, capsys):
    monkeypatch.setenv("SKETCHIM_SEED", "17")
    _, out, _ = run(capsys, "select", "--graph", "gen:path:n=5", "--k", 1, "--J", 8)
    assert json.loads(out)["config"]["master_seed"] == 17


@pytest.mark.parametrize("argv,code", [
    (["select", "--graph", "/nonexistent/graph.txt", "--k", 1], EXIT_IO),
    (["select", "--graph", "gen:path:n=5", "--k", 9], EXIT_INVALID),
    (["select", "--graph", "gen:path:n=5", "--k", 1, "--w", "const:3"], EXIT_INVALID),
    (["select", "--graph", "gen:path:n=5", "--k", 1, "--eps-l", "-1"], EXIT_INVALID),
    (["select", "--graph", "gen:nope:n=5", "--k", 1], EXIT_INVALID),
])
def test_exit_codes(capsys, argv, code):
    assert run(capsys, *argv)[0] == code


def test_malformed_graph_exit_code(tmp_path, capsys):
    bad = tmp_path / "bad.txt"
    bad.write_text("1 2\n3\n")
    code, _, err = run(capsys, "select", "--graph", bad, "--k", 1)
    assert code == EXIT_INVALID and "line 2" in err


def test_usage_error_exit_code():
    with pytest.raises(SystemExit) as info:
        main(["select"])
    assert info.value.code == 2


def test_evaluate(tmp_path, capsys, star_file):
    seeds = tmp_path / "seeds.txt"
    seeds.write_text("100\n")
    out_csv = tmp_path / "scores.csv"
    code, out, _ = run(capsys, "evaluate", "--graph", star_file, "--w", "const:1.0", "--seeds", seeds,
                       "--R", 50, "-o", out_csv)
    assert code == EXIT_OK and out.startswith("51.0000 ± 0.0000")
    rows = list(csv.DictReader(out_csv.open()))
    assert rows == [{"seed_set_size": "1", "mean": "51.000000", "stderr": "0.000000", "R": "50"}]


def test_evaluate_from_select_json_with_prefixes(tmp_path, capsys, star_file):
    sel = tmp_path / "sel.json"
    run(capsys, "select", "--graph", star_file, "--k", 3, "--w", "const:1.0", "--J", 16, "-o", sel)
    out_csv = tmp_path / "p.csv"
    code, _, _ = run(capsys, "evaluate", "--graph", star_file, "--w", "const:1.0", "--seeds", sel,
                     "--R", 20, "--prefixes", "-o", out_csv)
    rows = list(csv.DictReader(out_csv.open()))
    assert code == EXIT_OK and [r["seed_set_size"] for r in rows] == ["1", "2", "3"]
    assert float(rows[0]["mean"]) == 51.0


def test_evaluate_unknown_vertex(tmp_path, capsys, star_file):
    seeds = tmp_path / "seeds.txt"
    seeds.write_text("100 999\n")
    code, _, err = run(capsys, "evaluate", "--graph", star_file, "--seeds", seeds, "--R", 5,
                       "-o", tmp_path / "x.csv")
    assert code == EXIT_INVALID and "999" in err
    assert not (tmp_path / "x.csv").exists()


def test_bias_stats(tmp_path, capsys):
    out_csv = tmp_path / "bias.csv"
    code, _, _ = run(capsys, "bias-stats", "--graph", "gen:gnm:n=5000,m=4000,seed=1",
                     "--J", 256, "--bins", 20, "-o", out_csv)
    assert code == EXIT_OK
    lines = out_csv.read_text().splitlines()
    assert lines[0] == "bin_lo,bin_hi,count,expected,bias"
    rows = list(csv.DictReader(lines))
    assert len(rows) == 20 and float(rows[-1]["bin_hi"]) == 1.0
    assert max(abs(float(r["bias"])) for r in rows) < 0.02


def test_bias_stats_weighted_file(tmp_path, capsys):
    g = tmp_path / "w.txt"
    g.write_text("1 2 3\n2 3 5\n")
    code, out, _ = run(capsys, "bias-stats", "--graph", g, "--J", 8, "--bins", 4)
    assert code == EXIT_OK and len(out.splitlines()) == 5


def test_bench(tmp_path, capsys):
    sweep = {
        "graphs": [{"generator": "gnm:n=200,m=800,seed=1"}],
        "weights": ["const:0.1"],
        "K": [3],
        "J": [32],
        "policies": ["default", "never"],
        "seeds": [1],
        "oracle": {"R": 200, "rng_seed": 4},
    }
    path = tmp_path / "sweep.json"
    path.write_text(json.dumps(sweep))
    outs = []
    for i in range(2):
        out_csv = tmp_path / f"bench{i}.csv"
        assert run(capsys, "bench", "--sweep", path, "-o", out_csv)[0] == EXIT_OK
        outs.append(list(csv.DictReader(out_csv.open())))
    rows = outs[0]
    assert len(rows) == 2
    assert list(rows[0]) == BENCH_COLUMNS
    assert all(float(r["wall_time_s"]) >= 0 for r in rows)
    assert [r["policy"] for r in rows] == ["default", "never"]
    stable = ["graph", "policy", "builds", "rebuilds", "sigma_final", "oracle_mean", "oracle_stderr"]
    assert [[r[c] for c in stable] for r in outs[1]] == [[r[c] for c in stable] for r in rows]


def test_bench_failure_leaves_no_file(tmp_path, capsys):
    path = tmp_path / "sweep.json"
    path.write_text(json.dumps({"graphs": ["/missing/file.txt"]}))
    out_csv = tmp_path / "bench.csv"
    assert run(capsys, "bench", "--sweep", path, "-o", out_csv)[0] == EXIT_IO
    assert not out_csv.exists()
    path.write_text("{not json")
    assert run(capsys, "bench", "--sweep", path, "-o", out_csv)[0] == EXIT_INVALID


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "sketchim.cli", "-q", "select", "--graph", "gen:star:leaves=10",
         "--k", "1", "--w", "const:1.0", "--J", "8"],
        capture_output=True, text=True, timeout=300)
    assert proc.returncode == 0, proc.stderr
    assert json.loads(proc.stdout)["seeds"] == [0]
