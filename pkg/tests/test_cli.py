import pytest

from molnet import cli
from molnet.params import SystemParams, table1


def _run(tmp_path, text, *args, name="out.csv"):
    cfg = tmp_path / "run.cfg"
    cfg.write_text(text)
    out = tmp_path / name
    rc = cli.main([args[0], "--config", str(cfg), "--out", str(out), *args[1:]])
    return rc, out


def test_defaults_reproduce_reference_point():
    cfg = cli.build_config({})
    assert cfg.params == table1() == SystemParams()
    assert cfg.mc.trials == 50_000 and cfg.mc.box_half_width == 125.0


def test_config_keys_carry_units():
    raw = cli.read_config_text("sigma_um = 30  # wider\nD_um2_per_s=10\nx2 = 90\nsweep_var = T\nsweep_values = 0.5:1.0:0.1\n")
    cfg = cli.build_config(raw)
    assert cfg.params.sigma == 30.0 and cfg.params.D == 10.0
    assert cfg.params.constellation == (0.0, 90.0)
    assert cfg.sweep_values == (0.5, 0.6, 0.7, 0.8, 0.9, 1.0)
    with pytest.raises(ValueError):
        cli.read_config_text("sigma = 3\n")
    with pytest.raises(ValueError):
        cli.build_config({"sweep_var": "r0"})
    with pytest.raises(ValueError):
        cli.build_config({"methods": "exact,magic"})


def test_error_sweep_round_trip(tmp_path):
    rc, out = _run(tmp_path, "sweep_var = L\nsweep_values = 1,3\n", "error-sweep",
                   "--methods", "exact,upper,mc", "--trials", "1000")
    assert rc == 0
    text = out.read_text()
    assert text.splitlines()[0].startswith("sweep_var,value,method,p_error,stderr,e_intra,e_inter,th_1,status")
    rows = cli.parse_results(text)
    assert [(r["value"], r["method"]) for r in rows] == [
        ("1", "exact"), ("1", "upper"), ("1", "mc"), ("3", "exact"), ("3", "upper"), ("3", "mc")]
    assert rows[0]["stderr"] is None and rows[2]["stderr"] is not None
    assert all(r["lambda_0"] == "0.1" and r["L"] == r["value"] for r in rows)
    # values written with repr survive the round trip bit for bit
    from molnet.analysis import error_prob_exact
    assert rows[3]["p_error"] == error_prob_exact(table1().with_(L=3)).total
    meta = (tmp_path / "out.csv.meta").read_text()
    assert "seed = 20230501" in meta and "param.lambda_0 = 0.1" in meta and "numpy_version" in meta


def test_failed_rows_are_recorded(tmp_path):
    rc, out = _run(tmp_path, "sweep_var = L\nsweep_values = 2,5\nmethods = ook\n", "error-sweep")
    rows = cli.parse_results(out.read_text())
    assert rows[0]["status"] == "ok" and rows[0]["p_error"] is not None
    assert rows[1]["status"].startswith("error:") and rows[1]["p_error"] is None
    assert rc == 1


def test_emit_summary_columns():
    from molnet.analysis import error_prob_exact
    rep = error_prob_exact(table1())
    row = cli.emit_summary(rep, table1())
    assert row["stderr"] == "" and row["th_1"] == "2" and row["method"] == "exact"


def test_byte_identical_across_workers(tmp_path):
    text = "sweep_var = x2\nsweep_values = 60,100\nmethods = exact,mc\ntrials = 2500\nchunk_size = 500\n"
    outs = []
    for i, w in enumerate(("1", "1", "3")):
        rc, out = _run(tmp_path, text, "error-sweep", "--workers", w, name=f"r{i}.csv")
        assert rc == 0
        outs.append(out.read_bytes())
    assert outs[0] == outs[1] == outs[2]


def test_other_subcommands(tmp_path):
    rc, out = _run(tmp_path, "sweep_var = x2\nsweep_values = 40,60\n", "thresholds")
    lines = out.read_text().splitlines()
    assert rc == 0 and lines[0].startswith("sweep_var,value,th_1") and lines[1].split(",")[2] == "1"
    rc, out = _run(tmp_path, "n_points = 5\n", "distance-pdf", name="pdf.csv")
    assert rc == 0 and len(out.read_text().splitlines()) == 6
    rc, out = _run(tmp_path, "L = 2\n", "interference", "--methods", "exact,mc", "--trials", "500", name="i.csv")
    assert rc == 0 and ",mc," in out.read_text()


def test_mc_validate(tmp_path):
    rc, out = _run(tmp_path, "L = 3\n", "mc-validate", "--trials", "4000", name="v.csv")
    assert rc == 0
    assert out.read_text().count(",pass") == 5


def test_bad_config_exit_code(tmp_path, capsys):
    rc, _ = _run(tmp_path, "sigma_um = -1\n", "error-sweep")
    assert rc == 2
    assert "invalid configuration" in capsys.readouterr().err
