import json
from pathlib import Path

import pytest

from hmlab import cli


def _read_summary(out):
    return json.loads((Path(out) / "summary.json").read_text())


def test_exitdist_runs_and_is_reproducible(tmp_path):
    args = ["exitdist", "--domain", "disk", "--z", "0.75,0", "--n", "2",
            "--M", "64", "--walks", "20000", "--seed", "1", "--no-figures"]
    out1 = tmp_path / "a"
    out2 = tmp_path / "b"
    assert cli.main(args + ["--out", str(out1)]) == 0
    assert cli.main(args + ["--out", str(out2)]) == 0
    assert (out1 / "exitdist.csv").read_bytes() == (out2 / "exitdist.csv").read_bytes()
    assert (out1 / "summary.json").read_bytes() == (out2 / "summary.json").read_bytes()
    summary = _read_summary(out1)
    assert summary["results"]["tv_vs_oracle"] < 0.1
    assert summary["resolved_config"]["domain"] == "disk"
    assert "out" not in summary["resolved_config"]
    assert (out1 / "timing.json").exists()


def test_exitdist_threads_do_not_change_bytes(tmp_path):
    base = ["exitdist", "--domain", "disk", "--z", "0.75,0", "--n", "2",
            "--M", "32", "--walks", "40000", "--seed", "9", "--no-figures"]
    out1 = tmp_path / "t1"
    out4 = tmp_path / "t4"
    assert cli.main(base + ["--threads", "1", "--out", str(out1)]) == 0
    assert cli.main(base + ["--threads", "4", "--out", str(out4)]) == 0
    assert (out1 / "exitdist.csv").read_bytes() == (out4 / "exitdist.csv").read_bytes()
    assert (out1 / "summary.json").read_bytes() == (out4 / "summary.json").read_bytes()


def test_config_file_with_flag_override(tmp_path):
    cfg = {
        "command": "exitdist", "domain": "disk", "z": [0.75, 0.0], "n": 2,
        "M": 16, "walks": 5000, "seed": 3, "figures": False,
    }
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps(cfg))
    out = tmp_path / "run"
    rc = cli.main(["exitdist", "--config", str(cfg_path), "--walks", "6000", "--out", str(out)])
    assert rc == 0
    summary = _read_summary(out)
    assert summary["resolved_config"]["walks"] == 6000
    assert summary["resolved_config"]["M"] == 16


def test_probe_cutdisk_cli(tmp_path):
    out = tmp_path / "probe"
    rc = cli.main([
        "probe", "--domain", "cutdisk", "--pair", "slit:0.5", "--t", "1e-3",
        "--n", "8,16", "--walks", "8000", "--min-accepted", "1000",
        "--seed", "42", "--out", str(out), "--no-figures",
    ])
    assert rc == 0
    summary = _read_summary(out)
    assert summary["results"]["verdict"] == "Distinct"
    header = (out / "probe.csv").read_text().splitlines()
    assert header[0].startswith("# artifact: hmlab")
    assert header[2] == "domain,n,M,x,y,f_hat,ci,acc_x,acc_y,abort_x,abort_y,seed"


def test_usage_errors_exit_2(capsys):
    assert cli.main(["probe", "--domain", "cutdisk"]) == 2
    with pytest.raises(SystemExit):
        cli.main(["no-such-command"])


def test_accept_resolves_suite_seed():
    from hmlab import acceptance

    parser = cli._build_parser()
    cfg = cli._resolve(parser.parse_args(["accept"]))
    assert cfg["seed"] == acceptance.SUITE_SEED
    cfg = cli._resolve(parser.parse_args(["accept", "--seed", "7"]))
    assert cfg["seed"] == 7
    cfg = cli._resolve(parser.parse_args(
        ["exitdist", "--domain", "disk", "--z", "0,0", "--n", "2"]))
    assert cfg["seed"] == 1


def test_runtime_error_exit_1(tmp_path):
    out = tmp_path / "bad"
    rc = cli.main([
        "probe", "--domain", "disk", "--pair", "radial:0", "--t", "0.6",
        "--n", "2", "--walks", "1000", "--seed", "1", "--out", str(out), "--no-figures",
    ])
    assert rc == 1
    summary = _read_summary(out)
    assert "error" in summary


def test_oracle_check_cli(tmp_path):
    out = tmp_path / "oracle"
    rc = cli.main(["oracle-check", "--M", "64", "--out", str(out), "--no-figures"])
    assert rc == 0
    summary = _read_summary(out)
    assert summary["results"]["conditional_total"] == pytest.approx(1.0, abs=1e-10)
    assert summary["results"]["mode_doubling_max_delta"] < 1e-8
    assert summary["results"]["poisson_full_circle"] == pytest.approx(1.0, abs=1e-10)
    rows = (out / "oracle_annulus.csv").read_text().splitlines()
    assert rows[2].startswith("bin,")
    assert len(rows) == 3 + 64


def test_represent_cli(tmp_path):
    out = tmp_path / "rep"
    rc = cli.main([
        "represent", "--domain", "disk", "--gamma-n", "8", "--M", "64",
        "--x0", "0,0", "--x", "0.3,0", "--h", "poisson:0",
        "--walks", "30000", "--seed", "5", "--out", str(out), "--no-figures",
    ])
    assert rc == 0
    summary = _read_summary(out)
    rec = summary["results"]["reconstructions"][0]
    assert rec["rel_err"] < 0.1
    assert (out / "partition.csv").exists()
    assert (out / "pushed.csv").exists()


def test_figures_rendered_by_default(tmp_path):
    out = tmp_path / "fig"
    rc = cli.main(["exitdist", "--domain", "disk", "--z", "0.75,0", "--n", "2",
                   "--M", "16", "--walks", "3000", "--seed", "2", "--out", str(out)])
    assert rc == 0
    assert (out / "exitdist.png").stat().st_size > 2000
