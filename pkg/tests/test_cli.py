import pytest

from cfuav.cli import main
from cfuav.harness import read_results


def test_help_exits_zero(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--help"])
    assert exc.value.code == 0
    assert "cfuav" in capsys.readouterr().out


def test_end_to_end_run(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("num_orus = 6\nantennas_per_oru = 2\npilot_len = 3\n"
                   "n_channel_realizations = 40\n")
    out = tmp_path / "res.csv"
    code = main(["--config", str(cfg), "--trials", "2", "--seed", "5",
                 "--uavs", "3,4", "--schemes", "BA+FP,PA+PP",
                 "--out", str(out)])
    assert code == 0
    records = read_results(out)
    assert len(records) == 2 * 2 * 2  # two K values, two trials, two schemes
    assert {r.num_uavs for r in records} == {3, 4}
    assert (tmp_path / "res_aggregate.csv").exists()
    assert "wrote" in capsys.readouterr().out


def test_dump_links_flag(tmp_path):
    out = tmp_path / "r.csv"
    code = main(["--desk-scale", "--trials", "1", "--uavs", "3",
                 "--schemes", "BA+FP", "--out", str(out), "--dump-links"])
    assert code == 0
    assert (tmp_path / "r_links_K3.csv").exists()


def test_bad_scheme_fails_with_reason(tmp_path, capsys):
    code = main(["--schemes", "ZZ+Q", "--out", str(tmp_path / "x.csv")])
    assert code == 1
    assert "error:" in capsys.readouterr().err


def test_missing_config_file_fails(tmp_path, capsys):
    code = main(["--config", str(tmp_path / "nope.cfg")])
    assert code == 1
    assert "error:" in capsys.readouterr().err
