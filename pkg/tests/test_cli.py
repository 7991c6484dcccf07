import csv
import io
import json
import shutil
import subprocess

import numpy as np
import pytest

from octoval import calculus as calc
from octoval import cli
from octoval.errors import ParseError


@pytest.fixture
def body_files(tmp_path):
    a = np.random.default_rng(0).standard_normal((16, 16))
    files = {
        "ellipsoid": {"type": "ellipsoid", "center": [0.1] * 16, "shape": (a @ a.T / 16 + 0.3 * np.eye(16)).tolist()},
        "ball": {"type": "ball", "center": [0.0] * 16, "radius": 1.0},
        "box1": {"type": "box", "lo": [-1.0] * 16, "hi": [1.0] * 16},
        "box2": {"type": "box", "lo": [-1.0] * 15 + [0.0], "hi": [1.0] * 15 + [2.0]},
        "far": {"type": "box", "lo": [3.0] * 16, "hi": [4.0] * 16},
    }
    out = {}
    for name, data in files.items():
        p = tmp_path / f"{name}.json"
        p.write_text(json.dumps(data))
        out[name] = str(p)
    return out


def run(argv, capsys):
    code = cli.main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_parse_field_expressions(rng):
    x = rng.standard_normal((4, 16))
    f = cli.parse_field("2*normsq + gaussian(0.5) - re-q1-conj-q2")
    expect = 2 * calc.normsq()(x) + calc.gaussian(0.5)(x) - calc.re_q1_conj_q2()(x)
    assert np.allclose(f(x), expect)
    g = cli.parse_field("-(normsq1 - 1.5) * 3")
    assert np.allclose(g(x), -3 * (calc.normsq1()(x) - 1.5))
    assert cli.parse_field("abs").smoothness == "continuous"


def test_parse_field_quadform(tmp_path, rng):
    m = rng.standard_normal((16, 16))
    p = tmp_path / "m.json"
    p.write_text(json.dumps({"matrix": m.tolist()}))
    x = rng.standard_normal((3, 16))
    assert np.allclose(cli.parse_field(f"quadform({p})")(x), np.einsum("ni,ij,nj->n", x, m, x))


@pytest.mark.parametrize("text", ["normsq * normsq", "normsq +", "3", "gaussian(-1)", "gaussian(x)", "normsqq",
                                  "(normsq", "quadform(/nonexistent.json)"])
def test_parse_field_errors(text):
    with pytest.raises(ParseError):
        cli.parse_field(text)


def test_parse_vector_and_tolerances():
    assert np.array_equal(cli.parse_vector("0.5"), np.full(16, 0.5))
    assert cli.parse_vector(",".join(["1"] * 16)).shape == (16,)
    with pytest.raises(ParseError):
        cli.parse_vector("1,2")
    assert cli.parse_tolerances(["a=1e-3", "b = 2"]) == {"a": 1e-3, "b": 2.0}
    with pytest.raises(ParseError):
        cli.parse_tolerances(["a"])


def test_hessian_command(capsys):
    code, out, _ = run(["hessian", "--field", "normsq1", "--point", "0.3"], capsys)
    assert code == 0
    rows = {r["id"]: r["value"] for r in json.loads(out)["results"]}
    assert rows["hessian.a"] == pytest.approx(16.0)
    assert rows["det"] == pytest.approx(0.0, abs=1e-9)


def test_psh_check_command(capsys):
    assert run(["psh-check", "--field", "normsq", "--samples", "16"], capsys)[0] == 0
    assert run(["psh-check", "--field", "re-q1-conj-q2", "--samples", "16"], capsys)[0] == cli.EXIT_FAIL
    assert run(["psh-check", "--field", "abs"], capsys)[0] == cli.EXIT_PARSE
    code, out, _ = run(["psh-check", "--field", "abs", "--mollify", "2", "--samples", "4",
                        "--region-lo", "0.2", "--region-hi", "0.6"], capsys)
    assert code == 0


def test_pseudo_volume_is_deterministic(body_files, capsys, tmp_path):
    argv = ["pseudo-volume", "--body", body_files["ellipsoid"], "--samples", "4096", "--seed", "3"]
    outs = []
    for extra in ([], [], ["--threads", "4"]):
        path = tmp_path / f"out{len(outs)}.json"
        assert cli.main(argv + extra + ["--output", str(path)]) == 0
        outs.append(path.read_bytes())
    assert outs[0] == outs[1] == outs[2]
    payload = json.loads(outs[0])
    assert payload["seed"] == 3 and payload["samples"] == 4096
    assert payload["results"][0]["n_samples"] == 4096


def test_pseudo_volume_expectation(body_files, capsys):
    code, out, _ = run(["pseudo-volume", "--body", body_files["ball"], "--samples", "4096", "--expect", "1e9"],
                       capsys)
    assert code == cli.EXIT_FAIL
    assert json.loads(out)["passed"] is False


def test_csv_output(body_files, capsys):
    code, out, _ = run(["pseudo-volume", "--body", body_files["box1"], "--samples", "1024", "--format", "csv"],
                       capsys)
    assert code == 0
    rows = list(csv.reader(io.StringIO(out)))
    assert tuple(rows[0]) == cli.CSV_COLUMNS
    assert rows[1][0] == "pseudo-volume" and float(rows[1][2]) > 0


def test_valuation_commands(body_files, capsys):
    assert run(["psi-valuation", "--body", body_files["ellipsoid"], "--samples", "1024",
                "--support-lo", "0.2", "--support-hi", "1.0"], capsys)[0] == 0
    assert run(["additivity", "--body1", body_files["box1"], "--body2", body_files["box2"], "--samples", "1024",
                "--support-lo", "0.2", "--support-hi", "1.0"], capsys)[0] == 0
    assert run(["t-valuation", "--body", body_files["ball"], "--index", "8", "--samples", "64"], capsys)[0] == 0
    assert run(["u-valuation", "--body", body_files["ball"], "--index", "12", "--samples", "1024"], capsys)[0] == 0


def test_exit_codes(body_files, capsys, tmp_path):
    assert run(["no-such-command"], capsys)[0] == cli.EXIT_PARSE
    assert run(["hessian"], capsys)[0] == cli.EXIT_PARSE
    assert run(["pseudo-volume", "--body", str(tmp_path / "missing.json")], capsys)[0] == cli.EXIT_PARSE
    assert run(["t-valuation", "--body", body_files["box1"], "--index", "8"], capsys)[0] == cli.EXIT_CAPABILITY
    assert run(["additivity", "--body1", body_files["box1"], "--body2", body_files["far"]], capsys)[0] == \
        cli.EXIT_PARSE
    assert run(["radon-demo", "--mode", "fd", "--points", "1", "--samples", "16", "--step", "0.05"],
               capsys)[0] == cli.EXIT_NUMERICAL
    assert run(["hessian", "--field", "normsq", "--tol", "oops"], capsys)[0] == cli.EXIT_PARSE


def test_radon_demo(capsys):
    code, out, _ = run(["radon-demo", "--points", "2", "--samples", "16384"], capsys)
    rows = {r["id"]: r for r in json.loads(out)["results"]}
    assert rows["delta4_at_zero.radial"]["value"] == rows["delta4_at_zero.hermite"]["value"] == 13440
    assert rows["ratio.point0"]["pass"] and rows["ratio.point1"]["pass"]
    assert code == 0
    code, out, _ = run(["radon-demo", "--points", "1", "--samples", "16", "--mode", "fd"], capsys)
    assert code == 0


def test_spin9_dim(capsys):
    code, out, _ = run(["spin9-dim"], capsys)
    assert code == 0
    assert "45" in out and "36" in out


def test_suite_records_default_seed(capsys):
    code, out, _ = run(["suite", "3"], capsys)
    assert code == 0
    payload = json.loads(out)
    assert payload["seed"] == {"3": 0}
    assert all(r["id"].startswith("c3.") for r in payload["results"])


def test_console_script_installed():
    exe = shutil.which("octoval")
    if exe is None:
        pytest.skip("console script not on PATH")
    proc = subprocess.run([exe, "spin9-dim"], capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert "dim sl2(O) = 45" in proc.stdout
