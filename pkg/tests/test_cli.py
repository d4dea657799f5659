import json

import numpy as np
import pytest

from cohq import cli
from cohq.diamond import diamond_measure
from cohq.families import lambda_mix, theta_mix
from cohq.nsid import nsid_measure
from cohq.qcore import (Channel, channel_to_json, dephasing, fourier_unitary, hadamard,
                        load_channel, save_channel)


@pytest.fixture
def files(tmp_path):
    out = {}
    for name, chan in [("deph", dephasing(2)), ("had", hadamard()), ("f3", fourier_unitary(3))]:
        out[name] = tmp_path / f"{name}.json"
        save_channel(chan, out[name])
    out["bad"] = tmp_path / "bad.json"
    out["bad"].write_text("{not json")
    out["shape"] = tmp_path / "shape.json"
    out["shape"].write_text(json.dumps({"dim_in": 2, "dim_out": 2, "kraus": [[[1, 0]]]}))
    notp = channel_to_json(hadamard())
    notp["kraus"][0][0][0] = [2.0, 0.0]
    out["notp"] = tmp_path / "notp.json"
    out["notp"].write_text(json.dumps(notp))
    return out


def run(capsys, *argv):
    code = cli.main([str(a) for a in argv])
    cap = capsys.readouterr()
    return code, cap.out, cap.err


def test_classify_dephasing(files, capsys):
    code, out, _ = run(capsys, "classify", files["deph"])
    assert code == 0
    assert "detection-incoherent: true" in out
    assert "creation-incoherent: true" in out


def test_classify_hadamard(files, capsys):
    code, out, _ = run(capsys, "classify", files["had"], "--json")
    assert code == 0
    rep = json.loads(out)
    assert not rep["detection-incoherent"]
    assert not rep["creation-incoherent"]
    assert not rep["detection-creation-incoherent"]


@pytest.mark.parametrize("key,code", [("bad", cli.EXIT_PARSE), ("shape", cli.EXIT_PARSE),
                                      ("notp", cli.EXIT_INVALID)])
def test_classify_errors(files, capsys, key, code):
    got, _, err = run(capsys, "classify", files[key])
    assert got == code and err


def test_missing_file(tmp_path, capsys):
    code, _, err = run(capsys, "classify", tmp_path / "nope.json")
    assert code == cli.EXIT_PARSE and "cannot read" in err


def test_measure_text(files, capsys):
    code, out, _ = run(capsys, "measure", files["had"], "--measure", "nsid", "--tol", "1e-4")
    assert code == 0
    value = float(out.split("value:")[1].split()[0])
    assert value == pytest.approx(1.0, abs=1e-4)
    code, out, _ = run(capsys, "measure", files["deph"], "--measure", "diamond")
    assert code == 0 and "value: 0.000000" in out and "gap:" in out


def test_measure_json(files, capsys):
    code, out, _ = run(capsys, "measure", files["f3"], "--measure", "nsid", "--json")
    assert code == 0
    d = json.loads(out)
    assert d["value"] == pytest.approx(4 / 3, abs=1e-4)
    assert d["lower"] <= d["upper"] and d["status"] == "converged"
    code, out, _ = run(capsys, "measure", files["had"], "--measure", "mc", "--json",
                       "--restarts", "4")
    d = json.loads(out)
    assert code == 0 and d["divergent"] is True


def test_measure_invalid_channel(files, capsys):
    code, _, _ = run(capsys, "measure", files["notp"])
    assert code == cli.EXIT_INVALID


def test_parse_grid():
    assert cli.parse_grid("0:1:0.05") == [round(0.05 * i, 12) for i in range(21)]
    assert cli.parse_grid("0, 0.5,1") == [0.0, 0.5, 1.0]
    assert cli.parse_grid("") == []
    assert cli.parse_grid("1:0:0.1") == []
    with pytest.raises(ValueError):
        cli.parse_grid("0:1:0")
    with pytest.raises(ValueError):
        cli.parse_grid("a:b:c")


def test_sweep_spec_validation():
    spec = cli.SweepSpec("theta", (1.0, 0.0, 0.5, 0.5), ("diamond",), "x.csv")
    assert spec.p_grid == (0.0, 0.5, 1.0)
    for bad in [dict(family="other"), dict(p_grid=()), dict(p_grid=(0.0, 1.5)),
                dict(measures=("foo",)), dict(measures=()), dict(family="custom")]:
        kw = dict(family="theta", p_grid=(0.0,), measures=("nsid",), out="x.csv") | bad
        with pytest.raises(ValueError):
            cli.SweepSpec(**kw)


def test_sweep_theta(tmp_path, capsys):
    out = tmp_path / "theta.csv"
    code, _, _ = run(capsys, "sweep", "--family", "theta", "--grid", "0,0.5,1", "--out", out)
    assert code == 0
    raw = out.read_bytes()
    assert b"\r" not in raw and raw.endswith(b"\n")
    lines = raw.decode("utf-8").splitlines()
    assert lines[0] == "p,M_diamond,M_nsid"
    rows = [[float(v) for v in line.split(",")] for line in lines[1:]]
    assert [r[0] for r in rows] == [0.0, 0.5, 1.0]
    assert abs(rows[0][1]) < 1e-6 and abs(rows[0][2]) < 1e-6
    assert rows[2][1] == pytest.approx(4 / 3, abs=1e-4)
    assert rows[2][2] == pytest.approx(4 / 3, abs=1e-4)
    # six significant digits
    assert lines[2].split(",")[1] == f"{float(lines[2].split(',')[1]):.6g}"


def test_sweep_lambda_gap(tmp_path, capsys):
    out = tmp_path / "lam.csv"
    code, _, _ = run(capsys, "sweep", "--family", "lambda", "--grid", "1", "--out", out)
    assert code == 0
    _, row = out.read_text().splitlines()
    _, dm, ns = (float(v) for v in row.split(","))
    assert dm - ns > 0.01


def test_sweep_empty_grid_writes_nothing(tmp_path, capsys):
    out = tmp_path / "empty.csv"
    code, _, err = run(capsys, "sweep", "--family", "theta", "--grid", "", "--out", out)
    assert code == cli.EXIT_INVALID and "empty" in err
    assert not out.exists()


def test_sweep_unwritable_output(tmp_path, capsys):
    out = tmp_path / "missing_dir" / "x.csv"
    code, _, err = run(capsys, "sweep", "--family", "theta", "--grid", "0", "--measures",
                       "diamond", "--out", out)
    assert code == cli.EXIT_PARSE and "cannot write" in err


def test_sweep_custom_family_and_mc_column(files, tmp_path, capsys):
    out = tmp_path / "custom.csv"
    code, _, _ = run(capsys, "sweep", "--family", "custom", "--file", files["f3"], "--grid",
                     "0,1", "--measures", "diamond,mc", "--out", out)
    assert code == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "p,M_diamond,M_c_lb"
    assert float(lines[2].split(",")[1]) == pytest.approx(4 / 3, abs=1e-5)
    assert lines[2].split(",")[2] == "inf"


def test_sweep_is_deterministic_and_thread_independent(tmp_path, capsys, monkeypatch):
    args = ["sweep", "--family", "lambda", "--grid", "0:0.3:0.1", "--measures", "diamond,nsid"]
    a, b, c = tmp_path / "a.csv", tmp_path / "b.csv", tmp_path / "c.csv"
    assert run(capsys, *args, "--out", a)[0] == 0
    assert run(capsys, *args, "--out", b)[0] == 0
    monkeypatch.setenv("COHQ_THREADS", "2")
    assert run(capsys, *args, "--out", c)[0] == 0
    assert a.read_bytes() == b.read_bytes() == c.read_bytes()


@pytest.mark.parametrize("family", [theta_mix, lambda_mix])
def test_family_json_round_trip(tmp_path, family):
    chan = family(0.35)
    path = tmp_path / "fam.json"
    save_channel(chan, path)
    back = load_channel(path)
    assert isinstance(back, Channel)
    assert diamond_measure(back).value == pytest.approx(diamond_measure(chan).value, abs=1e-10)
    assert nsid_measure(back).value == pytest.approx(nsid_measure(chan).value, abs=1e-10)


def test_family_kraus_data():
    from cohq.families import LAMBDA_KRAUS, lambda_channel

    expected = [
        [[-1, 1, 0], [0, 0, 0], [1, 1, 0]],
        [[1, 0, -1], [1, 0, 1], [0, 0, 0]],
        [[0, -1, 1], [0, 0, 0], [0, 1, 1]],
    ]
    for K, E in zip(LAMBDA_KRAUS, expected):
        assert np.array_equal(K, np.array(E) / np.sqrt(4))
    assert lambda_channel().tp_residual() < 1e-14
    with pytest.raises(ValueError):
        theta_mix(1.5)
