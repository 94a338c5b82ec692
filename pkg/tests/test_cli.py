import csv
import io
import json

import numpy as np
import pytest

from kdvindex import cli


def run(argv, capsys):
    code = cli.main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def read_scan(path):
    lines = [ln for ln in open(path).read().splitlines() if not ln.startswith("#")]
    return list(csv.DictReader(io.StringIO("\n".join(lines))))


# -- wave -----------------------------------------------------------------------


def test_wave_dn(capsys, tmp_path):
    out_csv = tmp_path / "p.csv"
    code, out, _ = run(["wave", "--family", "dn", "--k", "0.5", "--n", "256",
                        "--out", str(out_csv)], capsys)
    assert code == 0
    doc = json.loads(out)
    assert doc["summary"]["c"] == pytest.approx(1.75)
    assert doc["summary"]["residual"] < 1e-10
    assert doc["config"]["k"] == 0.5
    assert "x,phi" in out_csv.read_text()


def test_wave_bad_modulus(capsys):
    code, _, err = run(["wave", "--family", "cn", "--k", "1.5"], capsys)
    assert code == 2
    assert "modulus" in err


def test_wave_fifth(capsys, caplog):
    code, out, _ = run(["-v", "wave", "--family", "fifth", "--c", "0.21301775147928995",
                        "--a1", "0", "--a2", "1", "--a3", "1", "--b1", "-1"], capsys)
    assert code == 0
    doc = json.loads(out)
    assert doc["summary"]["residual"] < 1e-10
    assert doc["summary"]["newton_iterations"] >= 1


def test_bad_grid_size(capsys):
    code, _, _ = run(["wave", "--family", "dn", "--k", "0.5", "--n", "33"], capsys)
    assert code == 2


def test_nonpositive_tolerance(capsys):
    code, _, err = run(["index", "--family", "dn", "--k", "0.5", "--tol-classify", "0"], capsys)
    assert code == 2 and "tolerance" in err


# -- index ----------------------------------------------------------------------


@pytest.mark.parametrize("k, lhs, nd, nr", [(0.5, 0, 1, 0)])
def test_index_dn(capsys, k, lhs, nd, nr):
    code, out, _ = run(["index", "--family", "dn", "--k", str(k)], capsys)
    doc = json.loads(out)
    assert code == 0
    assert doc["pass"] and doc["lhs"] == doc["rhs"] == lhs
    assert doc["n_D"] == nd and doc["n0"] is None


def test_index_cn_095(capsys):
    code, out, _ = run(["index", "--family", "cn", "--k", "0.95"], capsys)
    doc = json.loads(out)
    assert code == 0
    assert doc["lhs"] == doc["rhs"] == 1 and doc["classification"]["N_r"] == 1


def test_index_cn_08(capsys):
    code, out, _ = run(["index", "--family", "cn", "--k", "0.8"], capsys)
    doc = json.loads(out)
    assert code == 0
    assert doc["lhs"] == doc["rhs"] == 0 and doc["n_D"] == 2


def test_index_field_order_and_config(capsys):
    _, out, _ = run(["index", "--family", "dn", "--k", "0.5", "--n", "64"], capsys)
    doc = json.loads(out)
    assert list(doc)[:9] == ["classification", "n_L", "n0", "n_D", "lhs", "rhs", "pass",
                             "tolerances", "cluster_sizes"]
    assert doc["config"]["n"] == 64
    assert doc["config"]["tolerances"]["classify"] == 1e-6


def test_index_deterministic(tmp_path, capsys):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"family": "cn", "k": 0.95, "n": 128}))
    for path in (a, b):
        assert cli.main(["index", "--config", str(cfg), "--out", str(path)]) == 0
    # output paths are part of the embedded config, so compare with the same path too
    first = a.read_text().replace(str(a), "OUT")
    second = b.read_text().replace(str(b), "OUT")
    assert first == second
    c = tmp_path / "c.json"
    cli.main(["index", "--config", str(cfg), "--out", str(c)])
    d = c.read_bytes()
    cli.main(["index", "--config", str(cfg), "--out", str(c)])
    assert c.read_bytes() == d


def test_config_override(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"family": "dn", "k": 0.3, "n": 64,
                               "tolerances": {"krein": 1e-9}}))
    code, out, _ = run(["index", "--config", str(cfg), "--k", "0.5"], capsys)
    doc = json.loads(out)
    assert code == 0
    assert doc["config"]["k"] == 0.5 and doc["config"]["n"] == 64
    assert doc["config"]["tolerances"]["krein"] == 1e-9


def test_config_unknown_key(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"family": "dn", "bogus": 1}))
    code, _, err = run(["index", "--config", str(cfg)], capsys)
    assert code == 2 and "bogus" in err


def test_config_missing_file(tmp_path, capsys):
    code, _, _ = run(["index", "--config", str(tmp_path / "none.json")], capsys)
    assert code == 2


def test_index_spectrum_and_dump(tmp_path, capsys):
    spec = tmp_path / "s.csv"
    dump = tmp_path / "ops"
    code, _, _ = run(["index", "--family", "cn", "--k", "0.95", "--n", "64",
                      "--spectrum-out", str(spec), "--debug", "--dump-dir", str(dump)], capsys)
    assert code == 0
    assert spec.read_text().splitlines()[0] == "re,im,residual,krein,class"
    for name in ("L.csv", "M.csv", "L_plus.csv"):
        m = np.loadtxt(dump / name, delimiter=",")
        assert m.shape == (64, 64)


def test_index_fifth(capsys):
    code, out, _ = run(["index", "--family", "fifth", "--c", "0.21301775147928995",
                        "--a2", "1", "--b1", "-1"], capsys)
    doc = json.loads(out)
    assert code == 0
    assert doc["n0"] == 1 and doc["n_D"] is None
    assert doc["classification"]["continuum"] > 0


# -- scan -----------------------------------------------------------------------


def test_scan_cn_sign_change(tmp_path, capsys):
    out = tmp_path / "scan.csv"
    code, _, _ = run(["scan", "--family", "cn", "--range", "0.2", "0.98", "--steps", "20",
                      "--n", "256", "--out", str(out)], capsys)
    rows = read_scan(out)
    assert len(rows) == 20
    F = np.array([float(r["F"]) for r in rows])
    assert np.sum(np.diff(np.sign(F)) != 0) == 1
    assert code == 0
    assert open(out).readline().startswith("# config:")


def test_scan_dn_all_pass(tmp_path, capsys):
    out = tmp_path / "scan.csv"
    code, _, _ = run(["scan", "--family", "dn", "--range", "0.2", "0.9", "--steps", "8",
                      "--out", str(out)], capsys)
    assert code == 0
    rows = read_scan(out)
    assert all(r["pass"] == "true" for r in rows)
    assert all(r["N_r"] == r["N_c"] == r["N_i_minus"] == "0" for r in rows)


def test_scan_empty_range(capsys):
    code, _, err = run(["scan", "--family", "dn", "--range", "0.5", "0.5"], capsys)
    assert code == 2 and "empty" in err


def test_scan_workers_same_output(tmp_path, capsys):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    base = ["scan", "--family", "cn", "--range", "0.85", "0.95", "--steps", "4", "--n", "64"]
    cli.main(base + ["--out", str(a)])
    cli.main(base + ["--workers", "2", "--out", str(b)])
    strip = lambda p: [ln for ln in p.read_text().splitlines() if not ln.startswith("#")]
    assert strip(a) == strip(b)


def test_scan_row_records_failures():
    cfg = cli.RunConfig(family="cn", k=0.98, n=16)
    row = cli.scan_row(cfg)
    assert row["parameter"] == 0.98
    assert row["pass"] is False


# -- kstar and verify -------------------------------------------------------------


def test_kstar(capsys):
    code, out, _ = run(["kstar", "--n", "256"], capsys)
    doc = json.loads(out)
    assert code == 0
    assert 0.899 < doc["kstar"] < 0.919
    assert doc["config"]["n"] == 256


def test_kstar_no_sign_change(capsys):
    code, _, err = run(["kstar", "--n", "64", "--bracket", "0.2", "0.5"], capsys)
    assert code == 2 and "NoSignChange" in err


def test_verify_dn(capsys):
    code, out, _ = run(["verify", "--family", "dn", "--k", "0.5"], capsys)
    doc = json.loads(out)
    assert code == 0 and doc["pass"]
    assert set(doc["checks"]) == {"assumptions", "closure", "pencil", "equivalence",
                                  "orthogonality"}


def test_verify_cn_095(capsys):
    code, out, _ = run(["verify", "--family", "cn", "--k", "0.95"], capsys)
    doc = json.loads(out)
    assert code == 0
    assert all(doc["checks"]["pencil"]["relations"].values())
    assert doc["checks"]["pencil"]["delta_stable"]


def test_verify_coarse_fails(capsys):
    code, out, _ = run(["verify", "--family", "cn", "--k", "0.98", "--n", "32"], capsys)
    doc = json.loads(out)
    assert code == 1 and not doc["pass"]
