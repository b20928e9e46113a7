import json
import subprocess
import sys

import numpy as np
import pytest

from kobalab import __version__
from kobalab.cli import main
from kobalab.domains import Ball, Polydisk
from kobalab.polynomial import HermitianPolynomial as H

ORIGIN = "[[0,0],[0,0]]"


@pytest.fixture
def files(tmp_path):
    def write(name, doc):
        path = tmp_path / name
        path.write_text(json.dumps(doc))
        return str(path)

    return {
        "ball": write("ball.json", Ball([0, 0], 1).to_json()),
        "bidisk": write("bidisk.json", Polydisk([0, 0], [1, 1]).to_json()),
        "p24": write("p24.json", (H.abs_power(2, 0, 1) + H.abs_power(2, 1, 2)).to_json()),
        "tmp": tmp_path,
    }


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_distance_on_ball(files, capsys):
    code, out, _ = run(["distance", "--domain", files["ball"], "--p", ORIGIN, "--q", "[[0.5,0],[0,0]]"], capsys)
    assert code == 0
    doc = json.loads(out)
    exact = np.arctanh(0.5)
    assert exact == pytest.approx(0.549306, abs=1e-6)
    assert doc["result"]["lower"] <= exact <= doc["result"]["upper"]
    assert doc["version"] == __version__ and doc["seed"] == 0
    assert doc["config"]["domain"] == files["ball"]


def test_distance_same_point(files, capsys):
    code, out, _ = run(["distance", "--domain", files["ball"], "--p", "[[0.2,0.1],[0,0]]",
                        "--q", "[[0.2,0.1],[0,0]]"], capsys)
    res = json.loads(out)["result"]
    assert code == 0 and res["lower"] == 0 and res["upper"] == 0


def test_multitype(files, capsys):
    code, out, _ = run(["multitype", "--poly", files["p24"]], capsys)
    res = json.loads(out)["result"]
    assert code == 0 and res["m"] == [2, 4]
    assert H.from_json(res["limit"]) == H.from_json(json.load(open(files["p24"])))


def test_parse_error_exit_code(files, capsys):
    assert run(["distance", "--domain", str(files["tmp"] / "missing.json"), "--p", ORIGIN, "--q", ORIGIN],
               capsys)[0] == 2
    assert run(["distance", "--domain", files["ball"], "--p", "[[0,0", "--q", ORIGIN], capsys)[0] == 2


def test_precondition_exit_code(files, capsys):
    code, out, err = run(["distance", "--domain", files["ball"], "--p", ORIGIN, "--q", "[[2,0],[0,0]]"], capsys)
    assert code == 3
    assert "error" in json.loads(out) and err


def test_budget_exit_code_keeps_partial(files, capsys):
    code, out, _ = run(["witness", "--domain", files["bidisk"], "--o", ORIGIN, "--x", "[[0,0],[1,0]]",
                        "--y", "[[1,0],[1,0]]", "--M", "50", "--max-doublings", "2"], capsys)
    doc = json.loads(out)
    assert code == 4
    assert doc["result"]["T"] == 4 and doc["result"]["defect_lower"] > 0


def test_byte_determinism(files, tmp_path):
    argv = [sys.executable, "-m", "kobalab", "hyperbolicity", "--domain", files["bidisk"], "--n", "400",
            "--kmin", "2", "--kmax", "4", "--seed", "7"]
    a = subprocess.run(argv, capture_output=True, check=True).stdout
    b = subprocess.run(argv, capture_output=True, check=True).stdout
    assert a == b and len(a) > 0
    assert json.loads(a)["config"]["seed"] == 7


def test_csv_output(files, capsys):
    code, out, _ = run(["hyperbolicity", "--domain", files["ball"], "--n", "200", "--kmin", "2", "--kmax", "3",
                        "--seed", "3", "--format", "csv"], capsys)
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == f"# kobalab {__version__}"
    assert lines[1].startswith("# config ")
    header = lines[2].split(",")
    assert "seed" in header
    col = header.index("seed")
    assert all(row.split(",")[col] == "3" for row in lines[3:])
    assert len(lines) > 3


def test_output_file(files, capsys):
    path = files["tmp"] / "out.json"
    code, out, _ = run(["linetype", "--domain", files["ball"], "--x", "[[1,0],[0,0]]", "--output", str(path)],
                       capsys)
    assert code == 0 and out == ""
    assert json.loads(path.read_text())["result"]["line_type"] == "2"


def test_version_flag(capsys):
    with pytest.raises(SystemExit) as info:
        main(["--version"])
    assert info.value.code == 0
    assert __version__ in capsys.readouterr().out
