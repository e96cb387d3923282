import io

import numpy as np
import pytest

from pcrca import example3
from pcrca.cli import main
from pcrca.distribution import Dataset
from pcrca.io import dump_distribution, dump_graph, read_records, write_dataset

CONFOUNDED = """nodes:
  - {name: X, kind: endogenous}
  - {name: Y, kind: endogenous}
  - {name: Z, kind: endogenous}
  - {name: U1, kind: exogenous}
  - {name: U2, kind: exogenous}
edges: [[U1, X], [U1, Y], [U2, Z], [X, Z], [Z, Y]]
"""


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def files(tmp_path):
    g = tmp_path / "mediator.yaml"
    g.write_text(dump_graph(example3.graph()))
    d = tmp_path / "example.yaml"
    d.write_text(dump_distribution(example3.distribution()))
    f = tmp_path / "confounded.yaml"
    f.write_text(CONFOUNDED)
    return {"graph": g, "dist": d, "confounded": f, "dir": tmp_path}


def test_validate(capsys, files):
    code, out, _ = run(capsys, "validate", files["confounded"])
    assert code == 0
    assert "2 c-components" in out


def test_validate_malformed_edge(capsys, files):
    bad = files["dir"] / "bad.yaml"
    bad.write_text("nodes: [A, B]\nedges:\n  - [A, B]\n  - 7\n")
    code, _, err = run(capsys, "validate", bad)
    assert code == 2
    assert "bad.yaml:4" in err


def test_validate_cycle(capsys, files):
    bad = files["dir"] / "cyc.yaml"
    bad.write_text("nodes: [A, B]\nedges: [[A, B], [B, A]]\n")
    code, _, err = run(capsys, "validate", bad)
    assert code == 2 and "CycleDetected" in err


def test_bounds_pns(capsys, files):
    code, out, _ = run(capsys, "bounds", files["graph"], files["dist"], "--metric", "PNS", "--cause", "X", "--effect", "Y")
    assert code == 0
    assert "[0.350000, 0.490000]" in out


def test_bounds_records_roundtrip(capsys, files):
    code, out, _ = run(
        capsys, "bounds", files["graph"], files["dist"], "--metric", "PN", "--cause", "X", "--effect", "Y",
        "--format", "records",
    )  # fmt: skip
    assert code == 0
    (rec,) = list(read_records(io.StringIO(out)))
    assert rec["lower"] * rec["denominator"] == pytest.approx(0.175, abs=1e-6)


def test_bounds_not_descendant(capsys, files):
    code, _, err = run(capsys, "bounds", files["graph"], files["dist"], "--cause", "Y", "--effect", "X")
    assert code == 2 and "TargetNotDescendant" in err


def test_bounds_zero_mass_hint(capsys, files):
    d = files["dir"] / "zero.csv"
    buf = io.StringIO()
    write_dataset(Dataset(("X", "Y", "Z"), np.array([[0, 0, 0], [0, 1, 1]])), buf)
    d.write_text(buf.getvalue())
    code, _, err = run(capsys, "bounds", files["confounded"], d, "--metric", "PN", "--cause", "X", "--effect", "Y")
    assert code == 2
    assert "ZeroConditioningEvent" in err and "--smoothing" in err
    code, _, _ = run(capsys, "bounds", files["confounded"], d, "--metric", "PN", "--cause", "X", "--effect", "Y", "--smoothing", "1")
    assert code == 0


def test_bounds_oracle(capsys, files):
    code, out, _ = run(
        capsys, "bounds", files["graph"], files["dist"], "--metric", "PNS", "--cause", "X", "--effect", "Y",
        "--oracle", "2000",
    )  # fmt: skip
    assert code == 0 and "contained" in out


def test_reproduce(capsys):
    code, out, _ = run(capsys, "reproduce-example3")
    assert code == 0
    assert out.count("PASS") == 2
    code, out, _ = run(capsys, "reproduce-example3", "--no-reduce", "--format", "records")
    recs = list(read_records(io.StringIO(out)))
    assert [r["passed"] for r in recs] == [True, True]
    code, out, _ = run(capsys, "reproduce-example3", "--oracle", "3000", "--format", "records")
    assert all(r["oracle_contained"] for r in read_records(io.StringIO(out)))


def test_unknown_metric(capsys, files):
    with pytest.raises(SystemExit) as e:
        main(["bounds", str(files["graph"]), str(files["dist"]), "--metric", "XX", "--cause", "X", "--effect", "Y"])
    assert e.value.code == 2
    assert "unknown metric" in capsys.readouterr().err


def test_bad_alpha(capsys, files):
    code, _, err = run(capsys, "rca", "M1", files["dist"], "--alpha", "1")
    assert code == 2 and "alpha" in err


def test_budget_exit_code(capsys, files):
    code, _, err = run(
        capsys, "bounds", files["graph"], files["dist"], "--cause", "X", "--effect", "Y", "--method", "vertices",
        "--budget", "1",
    )  # fmt: skip
    assert code == 3 and "DegreeTooHigh" in err


def test_rca_on_simulated_data(capsys, files):
    data = files["dir"] / "m1.csv"
    code, _, _ = run(capsys, "simulate", "M1/N1", "-n", "20000", "--seed", "5", "-o", data)
    assert code == 0
    code, out, _ = run(capsys, "rca", "M1", data, "--smoothing", "1")
    assert code == 0 and "top root: MemoryLeak" in out


def _output(capsys, *argv):
    code, out, _ = run(capsys, *argv)
    assert code == 0
    if argv[0] != "simulate":
        list(read_records(io.StringIO(out)))
    return out


def test_determinism_across_runs_and_workers(capsys, files):
    data = files["dir"] / "m2.csv"
    run(capsys, "simulate", "M2/N2", "-n", "20000", "--seed", "1", "-o", data)
    first = data.read_bytes()
    run(capsys, "simulate", "M2/N2", "-n", "20000", "--seed", "1", "-o", data)
    assert data.read_bytes() == first
    commands = [
        ("rca", "M2", data, "--smoothing", "1"),
        ("experiment", "--models", "M1", "--metrics", "PN", "-n", "20000"),
        ("bounds", files["graph"], files["dist"], "--cause", "X", "--effect", "Y", "--oracle", "500"),
        ("simulate", "M3/N1", "-n", "1000"),
    ]
    for cmd in commands:
        base = _output(capsys, *cmd, "--format", "records", "--seed", "4", "--workers", "1")
        assert _output(capsys, *cmd, "--format", "records", "--seed", "4", "--workers", "1") == base
        assert _output(capsys, *cmd, "--format", "records", "--seed", "4", "--workers", "2") == base


def test_debug_commands(capsys, files):
    assert run(capsys, "canonical", files["confounded"])[0] == 0
    code, out, _ = run(capsys, "cfgraph", files["graph"], "--cause", "X", "--effect", "Y", "--metric", "PN", "--data", files["dist"])
    assert code == 0 and "marginal S" in out
    code, out, _ = run(capsys, "program", files["graph"], files["dist"], "--cause", "X", "--effect", "Y", "--metric", "PN")
    assert code == 0 and "dimension 16" in out


def test_exact_distribution_output(capsys, files):
    out = files["dir"] / "exact.yaml"
    assert run(capsys, "simulate", "M1/N1", "--exact", "-o", out)[0] == 0
    code, text, _ = run(capsys, "bounds", "M1", out, "--cause", "MemoryLeak", "--effect", "OutageIncident")
    assert code == 0 and "PN(MemoryLeak -> OutageIncident)" in text
