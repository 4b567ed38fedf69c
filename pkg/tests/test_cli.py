import math

import pytest

from maqcy import cli
from maqcy.compiler import QFT3_CIRCUIT, format_circuit
from maqcy.schedule import Schedule


@pytest.fixture
def qft3_file(tmp_path):
    path = tmp_path / "qft3.txt"
    path.write_text(format_circuit(QFT3_CIRCUIT))
    return str(path)


def run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def table(text):
    lines = text.strip().splitlines()
    return lines[0].split("\t"), [line.split("\t") for line in lines[1:]]


def test_compile_emits_trace(capsys, qft3_file):
    code, out, _ = run(capsys, "compile", "--circuit", qft3_file)
    assert code == 0
    sched = Schedule.from_trace(out)
    assert sched.qubit_count == 3


def test_simulate_qft3_zero_state(capsys, qft3_file):
    code, out, _ = run(capsys, "simulate", "--circuit", qft3_file)
    assert code == 0
    header, rows = table(out)
    assert header == ["index", "bits", "re", "im", "abs"]
    assert len(rows) == 8
    for row in rows:
        assert float(row[4]) == pytest.approx(1 / math.sqrt(8), abs=1e-9)


def test_simulate_deterministic(capsys, qft3_file, tmp_path):
    a, b = tmp_path / "a.tsv", tmp_path / "b.tsv"
    for path in (a, b):
        assert run(capsys, "simulate", "--circuit", qft3_file, "--input", "5",
                   "--out", str(path))[0] == 0
    assert a.read_bytes() == b.read_bytes()


def test_simulate_bad_input_index(capsys, qft3_file):
    code, _, err = run(capsys, "simulate", "--circuit", qft3_file, "--input", "8")
    assert code == 2 and "--input" in err


def test_noise_sweep(capsys):
    code, out, _ = run(capsys, "simulate", "--noise", "--samples", "2000",
                       "--p-sweep", "1e-3:1e-2:3", "--seed", "4")
    assert code == 0
    header, rows = table(out)
    assert header == ["p", "mean_F", "stderr"]
    assert len(rows) == 3
    assert all(0.9 < float(r[1]) <= 1 for r in rows)
    again = run(capsys, "simulate", "--noise", "--samples", "2000",
                "--p-sweep", "1e-3:1e-2:3", "--seed", "4", "--workers", "2")[1]
    assert again == out


@pytest.mark.parametrize("sweep", ["1:2", "0:0.1:3", "0.1:0.01:2", "a:b:c"])
def test_bad_sweep(capsys, sweep):
    code, _, err = run(capsys, "simulate", "--noise", "--p-sweep", sweep)
    assert code == 2 and "p-sweep" in err


def test_noise_needs_samples(capsys):
    assert run(capsys, "simulate", "--noise", "--samples", "0")[0] == 2


def test_parse_error_line_number(capsys, tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text("H 0\nCZ 0 1\nBOGUS 2\n")
    code, _, err = run(capsys, "simulate", "--circuit", str(path))
    assert code == 2
    assert "parse error: line 3" in err


def test_missing_file(capsys, tmp_path):
    code, _, err = run(capsys, "compile", "--circuit", str(tmp_path / "nope.txt"))
    assert code == 2 and "cannot read" in err
    code, _, err = run(capsys, "compile")
    assert code == 2 and "--circuit" in err


def test_verify_passes(capsys):
    code, out, _ = run(capsys, "verify")
    assert code == 0
    header, rows = table(out)
    assert header == ["check", "max_error", "tolerance", "status"]
    names = {r[0] for r in rows}
    assert {"preset.F_T_0.99", "cz.diag", "teleport.max_infidelity"} <= names
    assert all(r[3] == "pass" for r in rows)


def test_verify_injected_failure(capsys):
    code, out, _ = run(capsys, "verify", "--inject-failure", "cz.diag")
    assert code == 1
    assert [r for r in table(out)[1] if r[0] == "cz.diag"][0][3] == "FAIL"


def test_estimate_presets(capsys, qft3_file, tmp_path):
    code, out, _ = run(capsys, "estimate", "--circuit", qft3_file)
    assert code == 0
    values = dict(table(out)[1])
    assert values["p"] == "0.0004"
    assert float(values["F_T"]) == pytest.approx(0.99, abs=0.005)
    params = tmp_path / "fast.txt"
    params.write_text("f_d_mov=0.999\n")
    values = dict(table(run(capsys, "estimate", "--circuit", qft3_file,
                            "--params", str(params))[1])[1])
    assert float(values["F_T"]) == pytest.approx(0.995, abs=0.005)


def test_estimate_empty_circuit(capsys, tmp_path):
    path = tmp_path / "empty.txt"
    path.write_text("# nothing\n")
    code, out, _ = run(capsys, "estimate", "--circuit", str(path))
    assert code == 0
    values = dict(table(out)[1])
    assert values["atom_count"] == "0"
    assert float(values["total_time_s"]) == 0.0


def test_bad_params(capsys, qft3_file, tmp_path):
    params = tmp_path / "p.txt"
    params.write_text("p=2\n")
    code, _, err = run(capsys, "estimate", "--circuit", qft3_file, "--params", str(params))
    assert code == 2 and "error" in err


def test_qft3_demo(capsys):
    code, out, _ = run(capsys, "qft3-demo")
    assert code == 0
    rows = table(out)[1]
    assert len(rows) == 8
    assert max(float(r[2]) for r in rows) < 1e-8


def test_unknown_command():
    with pytest.raises(SystemExit) as exc:
        cli.main(["launch"])
    assert exc.value.code == 2
