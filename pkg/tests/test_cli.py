import pytest

from main import cli_main


def _cfg(tmp_path, extra=""):
    path = tmp_path / "iris.cfg"
    path.write_text(
        "name = iris\n"
        "optimizers = nlls1,full_jacobian,sgd\n"
        "epochs = 2\n"
        "runs = 2\n"
        "optimizer.nlls1.delta = 0.8\n" + extra
    )
    return path


def test_list_optimizers(capsys, tmp_path):
    assert cli_main(["--log-dir", str(tmp_path), "list-optimizers"]) == 0
    assert capsys.readouterr().out.split() == ["nlls1", "nllsl", "full_jacobian", "sgd", "adagrad", "adam"]


def test_run_writes_artifacts(capsys, tmp_path):
    out = tmp_path / "results"
    code = cli_main(["--log-dir", str(tmp_path / "logs"), "run", "--config", str(_cfg(tmp_path)), "--out", str(out)])
    assert code == 0
    for name in ("loss.csv", "plot.svg", "meta.txt", "loss_nlls1.csv"):
        assert (out / "iris" / name).is_file()
    assert "final mean loss" in capsys.readouterr().out
    assert any((tmp_path / "logs").iterdir())


def test_run_is_byte_identical(tmp_path):
    cfg = _cfg(tmp_path)
    for sub in ("a", "b"):
        assert cli_main(["--log-dir", str(tmp_path), "run", "--config", str(cfg), "--out", str(tmp_path / sub)]) == 0
    for name in ("loss.csv", "loss_nlls1.csv", "loss_full_jacobian.csv"):
        assert (tmp_path / "a" / "iris" / name).read_bytes() == (tmp_path / "b" / "iris" / name).read_bytes()


def test_seed_flag_changes_results(tmp_path):
    cfg = _cfg(tmp_path)
    cli_main(["--log-dir", str(tmp_path), "run", "--config", str(cfg), "--out", str(tmp_path / "a")])
    cli_main(["--log-dir", str(tmp_path), "run", "--config", str(cfg), "--out", str(tmp_path / "b"), "--seed", "11"])
    assert (tmp_path / "a" / "iris" / "loss.csv").read_bytes() != (tmp_path / "b" / "iris" / "loss.csv").read_bytes()
    assert "seeds = 11,12" in (tmp_path / "b" / "iris" / "meta.txt").read_text()


def test_missing_config(capsys, tmp_path):
    missing = tmp_path / "missing.cfg"
    assert cli_main(["--log-dir", str(tmp_path), "run", "--config", str(missing)]) == 1
    assert str(missing) in capsys.readouterr().err


def test_bad_config_reports_line(capsys, tmp_path):
    path = _cfg(tmp_path, "epochz = 3\n")
    assert cli_main(["--log-dir", str(tmp_path), "run", "--config", str(path)]) == 1
    assert f"{path}:6:" in capsys.readouterr().err


@pytest.mark.parametrize(
    "argv",
    [["frobnicate"], ["run"], ["run", "--config", "x.cfg", "--bogus"], ["list-optimizers", "--seed", "1"], []],
)
def test_usage_errors_exit_2(capsys, argv):
    assert cli_main(argv) == 2
    assert "usage" in capsys.readouterr().err


def test_selftest_subset(capsys, tmp_path):
    code = cli_main(["--log-dir", str(tmp_path), "selftest", "--only", "adagrad_reduction", "rank1_relation"])
    out = capsys.readouterr().out
    assert code == 0
    assert out.count("PASS") == 2
    assert "all 2 checks passed" in out
