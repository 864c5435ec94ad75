import csv
import io
import json

import numpy as np
import pytest

from lightderiv import cli
from lightderiv.problems.imaging import Image, write_pgm

G1_TEXT = "source 0\ntarget 2\n0 1 1\n1 2 2\n0 2 5\n"
CFG1_TEXT = "start S\nS -> A B : 0.5\nA -> 'a' : 0.1\nB -> 'b' : 0.2\n"


@pytest.fixture
def files(tmp_path):
    g = tmp_path / "g1.txt"
    g.write_text(G1_TEXT)
    u = tmp_path / "unreach.txt"
    u.write_text("source 0\ntarget 2\n0 1 1\n")
    gr = tmp_path / "cfg1.txt"
    gr.write_text(CFG1_TEXT)
    return {"g1": str(g), "unreach": str(u), "cfg1": str(gr), "dir": tmp_path}


def _run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


# -- solve ----------------------------------------------------------------------------

@pytest.mark.parametrize("algo", ["kld", "dp", "hald"])
def test_solve_graph(capsys, files, algo):
    code, out, _ = _run(capsys, "solve", "graph", files["g1"], "--algo", algo)
    assert code == 0 and out.strip() == "3"


def test_solve_graph_unreachable(capsys, files):
    code, out, err = _run(capsys, "solve", "graph", files["unreach"])
    assert code == 2 and out == "" and "no derivation" in err


def test_solve_graph_trace(capsys, files):
    path = files["dir"] / "t.jsonl"
    assert _run(capsys, "solve", "graph", files["g1"], "--trace", str(path))[0] == 0
    recs = [json.loads(line) for line in path.read_text().splitlines()]
    assert [r["seq"] for r in recs] == list(range(len(recs)))
    assert recs[-1]["weight"] == 3.0


def test_solve_parse(capsys, files):
    code, out, _ = _run(capsys, "solve", "parse", files["cfg1"], "--tokens", "a b")
    assert code == 0 and out.strip() == "0.8"
    code, _, _ = _run(capsys, "solve", "parse", files["cfg1"], "--tokens", "b a")
    assert code == 2


def test_solve_parse_unknown_terminal(capsys, files):
    code, out, err = _run(capsys, "solve", "parse", files["cfg1"], "--tokens", "a c")
    assert code == 1 and "error" in err


def test_missing_file(capsys, files):
    assert _run(capsys, "solve", "graph", str(files["dir"] / "nope.txt"))[0] == 1


def test_malformed_pgm(capsys, files):
    bad = files["dir"] / "bad.pgm"
    bad.write_bytes(b"P5\n4 4\n255\n\x00")
    assert _run(capsys, "solve", "convex", "--image", str(bad), "--R", "2", "--N", "4")[0] == 1
    assert _run(capsys, "solve", "curve", "--image", str(bad))[0] == 1


def test_convex_algorithms_agree(capsys):
    outs = set()
    for algo in ("dp", "hald", "kld", "astar-pdb:1"):
        code, out, _ = _run(capsys, "solve", "convex", "--R", "8", "--N", "6",
                            "--seed", "1", "--algo", algo)
        assert code == 0
        outs.add(out)
    assert len(outs) == 1


def test_convex_overlay_and_pgm_input(capsys, files):
    img = Image(np.full((17, 17), 90, dtype=np.uint8))
    pgm = files["dir"] / "flat.pgm"
    write_pgm(pgm, img)
    ppm = files["dir"] / "o.ppm"
    code, out, _ = _run(capsys, "solve", "convex", "--image", str(pgm), "--R", "4", "--N", "4",
                        "--algo", "dp", "--out", str(ppm))
    assert code == 0 and float(out) > 0
    assert ppm.read_bytes().startswith(b"P6\n17 17\n255\n")


def test_astar_pdb_needs_level(capsys):
    code, _, err = _run(capsys, "solve", "convex", "--R", "4", "--N", "4", "--algo", "astar-pdb")
    assert code == 1 and "level" in err


def test_curve_algorithms_agree(capsys):
    vals = []
    for algo in ("kld", "astar-pdb", "dp"):
        code, out, _ = _run(capsys, "solve", "curve", "--size", "12", "--k1", "2",
                            "--levels", "2", "--seed", "1", "--algo", algo)
        assert code == 0
        vals.append(float(out))
    assert max(vals) - min(vals) <= 1e-9


# -- bench ----------------------------------------------------------------------------------

BENCH = ["bench-convex", "--seeds", "0-1", "--R", "8", "--N", "6", "--no-timing"]


def test_bench_rows_and_energies(capsys):
    code, out, _ = _run(capsys, *BENCH, "--algos", "dp,hald,kld")
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert out.splitlines()[0] == ",".join(cli.BENCH_HEADER)
    assert len(rows) == 6
    for seed in ("0", "1"):
        assert len({r["energy"] for r in rows if r["seed"] == seed}) == 1
    assert all(r["ms"] == "" for r in rows)


def test_bench_is_bit_stable(capsys):
    first = _run(capsys, *BENCH)[1]
    assert _run(capsys, *BENCH)[1] == first


def test_bench_to_file(capsys, files):
    path = files["dir"] / "b.csv"
    code, out, _ = _run(capsys, *BENCH, "--out", str(path))
    assert code == 0 and out == ""
    assert len(path.read_text().splitlines()) == 5


def test_bench_empty_seeds(capsys):
    assert _run(capsys, "bench-convex", "--seeds", "")[0] == 1


def test_bench_unknown_algo(capsys):
    assert _run(capsys, *BENCH, "--algos", "dp,magic")[0] == 1


def test_bench_mismatch_exit(capsys, monkeypatch):
    real = cli.solve_convex

    def skewed(spec, algo, *a, **kw):
        rec = real(spec, algo, *a, **kw)
        if algo == "hald":
            rec["energy"] += 1.0
        return rec

    monkeypatch.setattr(cli, "solve_convex", skewed)
    code, out, err = _run(capsys, *BENCH)
    assert code == 3 and "mismatch" in err and len(out.splitlines()) == 5


# -- trace-hald -------------------------------------------------------------------------------

def test_trace_hald_golden(capsys):
    code, out, err = _run(capsys, "trace-hald")
    assert code == 0 and "goal=3" in err
    recs = [json.loads(line) for line in out.splitlines()]
    exp = [(r["statement"], r["weight"], r["priority"]) for r in recs if r["event"] == "expand"]
    assert exp == [
        ("bottom@2", 0.0, 0.0), ("context(bottom)@2", 0.0, 0.0),
        ("X@1", 1.0, 1.0), ("Y@1", 1.0, 1.0), ("goal(1)@1", 3.0, 3.0),
        ("context(goal(1))@1", 0.0, 3.0), ("context(X)@1", 2.0, 3.0),
        ("context(Y)@1", 2.0, 3.0), ("X(1)@0", 1.0, 3.0), ("Y(1)@0", 1.0, 3.0),
        ("goal(0)@0", 3.0, 3.0),
    ]
    pushes = [r for r in recs if r["event"] == "push"]
    assert len(pushes) == 14
    z = [r for r in pushes if r["statement"] == "Z@1"]
    assert len(z) == 1 and z[0]["priority"] == 7.0
    assert "Z@1" not in {e[0] for e in exp}


def test_trace_hald_without_pushes(capsys):
    _, out, _ = _run(capsys, "trace-hald", "--no-pushes")
    recs = [json.loads(line) for line in out.splitlines()]
    assert len(recs) == 11 and all(r["event"] == "expand" for r in recs)


def test_trace_hald_from_file(capsys, files):
    text = (
        "level\ngoal g\nrule 1 a <-\nrule 2 g <- a\n"
        "level\ngoal G\nrule 0 A <-\nrule 2 G <- A\n"
        "map 0 a A\nmap 0 g G\n"
    )
    path = files["dir"] / "h.txt"
    path.write_text(text)
    code, _, err = _run(capsys, "trace-hald", "--hierarchy", str(path), "--no-pushes")
    assert code == 0 and "goal=3" in err
    path.write_text(text.replace("map 0 g G\n", ""))
    assert _run(capsys, "trace-hald", "--hierarchy", str(path))[0] == 1


# -- usage -------------------------------------------------------------------------------------

def test_bad_subcommand(capsys):
    with pytest.raises(SystemExit) as e:
        cli.main(["frobnicate"])
    assert e.value.code == 1


def test_int_list_parsing():
    assert cli.parse_int_list("0-3,7") == [0, 1, 2, 3, 7]
    assert cli.parse_int_list("") == []
    assert cli.format_weight(3.0) == "3" and cli.format_weight(0.8) == "0.8"
