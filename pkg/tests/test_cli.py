"""Command-line entry points, driven in-process."""

import csv

import pytest

from qtmcircuit.cli import main
from qtmcircuit.machinefile import dumps
from qtmcircuit.toys import m_h, violators


@pytest.fixture
def hadamard_file(tmp_path):
    p = tmp_path / "h.qtm"
    p.write_text(dumps(m_h()))
    return str(p)


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_check_passes(capsys, hadamard_file):
    code, out, _ = run(capsys, "check", hadamard_file)
    lines = out.splitlines()
    assert code == 0 and len(lines) == 4 and all("PASS" in ln for ln in lines)


def test_check_fails_on_violator(capsys, tmp_path):
    p = tmp_path / "bad.qtm"
    p.write_text(dumps(violators()["b"]))
    code, out, _ = run(capsys, "check", str(p))
    assert code == 1 and "FAIL" in out


def test_run_and_verify(capsys, hadamard_file):
    code, out, _ = run(capsys, "run", hadamard_file, "--steps", "1")
    assert code == 0 and "B 1 B" in out
    code, out, _ = run(capsys, "verify", hadamard_file, "--t", "2", "--input", "", "--input", "1")
    assert code == 0 and out.startswith("tv ")


def test_compile_summary(capsys, hadamard_file):
    code, out, _ = run(capsys, "compile", hadamard_file, "--t", "2")
    assert code == 0 and "steps 8" in out


def test_qft_then_execute(capsys, tmp_path):
    _, out, _ = run(capsys, "qft", "--n", "3")
    p = tmp_path / "qft3.code"
    p.write_text(out)
    code, out, _ = run(capsys, "execute", str(p), "--input", "000")
    rows = [ln.split() for ln in out.splitlines()]
    assert code == 0 and len(rows) == 8 and all(float(r[-1]) == pytest.approx(0.125) for r in rows)


def test_angle(capsys):
    code, out, _ = run(capsys, "angle", "--theta", "0", "--eps", "0.5")
    assert code == 0 and out.splitlines()[0] == "k 0"


def test_codec_round_trip(capsys, tmp_path):
    _, code_text, _ = run(capsys, "qft", "--n", "2")
    src = tmp_path / "c.code"
    src.write_text(code_text)
    _, listing, _ = run(capsys, "codec", "decode", str(src))
    lst = tmp_path / "c.txt"
    lst.write_text(listing)
    code, again, _ = run(capsys, "codec", "encode", "--flavor", "PC", str(lst))
    assert code == 0 and again == code_text


def test_bad_code_exits_one(capsys, tmp_path):
    p = tmp_path / "bad.code"
    p.write_text("PC|2|((),((4,1,1)),())")
    code, _, err = run(capsys, "execute", str(p), "--input", "00")
    assert code == 1 and err.startswith("error:")


def test_usage_error_exits_two(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["angle", "--theta", "1"])
    assert exc.value.code == 2
    with pytest.raises(SystemExit) as exc:
        main(["qft", "--bogus"])
    assert exc.value.code == 2


def test_family_size_and_toy(capsys):
    _, out, _ = run(capsys, "family-size", "--n-max", "3")
    assert out.split("\n")[:3] == ["1 2", "2 11", "3 27"]
    code, out, _ = run(capsys, "toy", "hadamard")
    assert code == 0 and out.startswith("states")


def test_recognize_machine(capsys, tmp_path):
    from qtmcircuit.toys import writer_acceptor
    p = tmp_path / "w.qtm"
    p.write_text(dumps(writer_acceptor()))
    code, out, _ = run(capsys, "recognize", "--machine", str(p), "--t", "1", "0", "1")
    assert code == 0 and "zero-error PASS" in out


def test_report_writes_csv_and_png(capsys, tmp_path):
    out_dir = tmp_path / "rep"
    code, out, _ = run(capsys, "report", "--out", str(out_dir))
    assert code == 0
    png = out_dir / "report.png"
    assert png.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"
    with open(out_dir / "qft_sizes.csv", newline="") as fh:
        rows = list(csv.reader(fh))
    assert len(rows) > 2
    assert len(list(out_dir.glob("*.csv"))) == 4
