import json
from pathlib import Path

import pytest
from click.testing import CliRunner

from qline import qma
from qline.circuit import save_circuit
from qline.cli import main

GOLDEN = Path(__file__).parent / "golden" / "trace_n3_r2.txt"


def run(*args):
    return CliRunner().invoke(main, [str(a) for a in args])


def test_trace_golden_is_byte_identical():
    r = run("trace", "--n", 3, "--r", 2)
    assert r.exit_code == 0
    assert r.output == GOLDEN.read_text()


def test_trace_lengths():
    assert len(run("trace", "--n", 2, "--r", 2).output.splitlines()) == 16
    r = run("trace", "--n", 2, "--r", 2, "--shape", "D D | A G")
    assert r.output.splitlines() == ["D D | A G"]


def test_trace_json_and_file(tmp_path):
    out = tmp_path / "sub" / "t.json"
    r = run("trace", "--n", 2, "--r", 2, "--format", "json", "-o", out)
    assert r.exit_code == 0
    doc = json.loads(out.read_text())
    assert doc  # parses back


def test_trace_other_alphabets():
    assert run("trace", "--n", 2, "--r", 2, "--alphabet", 9).output.splitlines()[0] == "G q | e e"
    assert run("trace", "--n", 2, "--r", 2, "--alphabet", 13).output.splitlines()[0] == "G S | E E"


def test_spectrum_csv():
    r = run("spectrum", "--n", 2, "--r", 2, "--k", 3)
    lines = r.output.splitlines()
    assert r.exit_code == 0 and lines[0] == "index,eigenvalue,residual" and len(lines) == 4


def test_orbits_of_shape():
    r = run("orbits", "--shape", "D L | E E")
    lines = r.output.splitlines()
    assert r.exit_code == 0 and lines[0].startswith("# type 3 size 2")
    assert lines[1:] == ["D L | E E\t0", "D T | E E\t0"]


def test_adiabatic_report(tmp_path):
    out = tmp_path / "a.json"
    r = run("adiabatic", "--n", 2, "--r", 2, "--T", 64, "-o", out, "--gap-csv", tmp_path / "g.csv")
    assert r.exit_code == 0
    doc = json.loads(out.read_text())
    assert 0 <= doc["fidelity"] <= 1 and doc["K"] == 15
    assert (tmp_path / "g.csv").read_text().startswith("s,gap")


def test_adiabatic_is_deterministic(tmp_path):
    a = run("adiabatic", "--n", 2, "--r", 2, "--T", 16).output
    b = run("adiabatic", "--n", 2, "--r", 2, "--T", 16).output
    assert a == b


@pytest.fixture
def instances(tmp_path):
    save_circuit(qma.accept_always(2, 2), tmp_path / "yes.json")
    save_circuit(qma.reject_always(2, 2), tmp_path / "no.json")
    return tmp_path


def test_qma_exit_codes(instances):
    d = instances
    r = run("qma", "--circuit", d / "yes.json", "--E", 1e-6, "--delta", 1e-3, "-o", d / "v.json")
    assert r.exit_code == 0
    assert json.loads((d / "v.json").read_text())["decision"] == "yes"
    # a zero ground energy inside the open window (E, E + delta) breaks the promise
    r = run("qma", "--circuit", d / "no.json", "--E", -1e-3, "--delta", 1e-2)
    assert r.exit_code == 2
    assert run("qma", "--circuit", d / "no.json", "--E", -1.0, "--delta", 0.5).exit_code == 0


def test_qma_instance_file(instances):
    d = instances
    qma.save_instance(d / "inst.json", "yes.json", 1e-6, 1e-3)
    assert run("qma", "--instance", d / "inst.json").exit_code == 0


def test_errors_exit_one(tmp_path):
    assert run("qma", "--circuit", tmp_path / "missing.json", "--E", 0, "--delta", 1).exit_code == 1
    (tmp_path / "bad.json").write_text("{oops")
    assert run("trace", "--circuit", tmp_path / "bad.json").exit_code == 1
    assert run("trace", "--n", 2).exit_code == 1
    assert run("trace", "--n", 2, "--r", 2, "--shape", "X X | E E").exit_code == 1
    assert run("nonsense").exit_code == 1


def test_sectors_outdir_round_trip(tmp_path):
    r = run("sectors", "--n", 2, "--r", 2, "--outdir", tmp_path)
    assert r.exit_code == 0
    recs = [json.loads(x) for x in (tmp_path / "sectors.jsonl").read_text().splitlines()]
    assert len(recs) == 2220
    summary = (tmp_path / "summary.csv").read_text().splitlines()
    assert summary[0].startswith("type,orbits,shapes")
