"""
Tests for the command-line front end
"""

import pytest

from conftest import statement_path
from src.cli.app import RunConfig, build_parser, config_from_args, main
from src.core.exceptions import ConfigurationError
from src.core.models import Strategy


def _write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


def test_prove_planes_meet_in_line(capsys):
    assert main(["prove", str(statement_path("planes_meet_in_line"))]) == 0
    out = capsys.readouterr().out
    assert "M N P : 2 PROVED [2, 2]" in out
    assert "time: " in out


def test_prove_unknown_exits_one(capsys):
    assert main(["prove", str(statement_path("distinctness"))]) == 1
    assert "A B : 2 UNKNOWN [1, 2]" in capsys.readouterr().out


def test_prove_full_strategy(capsys):
    assert main(["prove", str(statement_path("point_on_line_plane")), "--strategy", "full"]) == 0
    out = capsys.readouterr().out
    assert "A B : 2 PROVED" in out
    assert "A B C M : 3 PROVED" in out


def test_prove_contradiction(capsys, tmp_path):
    cert = tmp_path / "contradiction.cert"
    assert main(["prove", str(statement_path("contradiction")), "--cert", str(cert)]) == 2
    assert "CONTRADICTION" in capsys.readouterr().out
    assert cert.exists()
    assert main(["check", str(statement_path("contradiction")), str(cert)]) == 0


def test_prove_then_check(capsys, tmp_path):
    cert = tmp_path / "planes.cert"
    ranks = tmp_path / "planes.ranks"
    statement = str(statement_path("planes_meet_in_line"))
    assert main(["prove", statement, "--cert", str(cert), "--ranks", str(ranks)]) == 0
    assert len(ranks.read_text(encoding="utf-8").splitlines()) == 512
    capsys.readouterr()

    assert main(["check", statement, str(cert)]) == 0
    assert capsys.readouterr().out.startswith("VALID (")


def test_check_truncated(capsys, tmp_path):
    cert = tmp_path / "right.cert"
    statement = str(statement_path("line_in_planes_meet"))
    assert main(["prove", statement, "--cert", str(cert)]) == 0
    lines = cert.read_text(encoding="utf-8").splitlines()
    cert.write_text("\n".join(lines[:-1]) + "\n", encoding="utf-8")
    capsys.readouterr()

    assert main(["check", statement, str(cert)]) == 1
    assert "INVALID (verdict-mismatch)" in capsys.readouterr().out


def test_check_against_other_statement(capsys, tmp_path):
    cert = tmp_path / "left.cert"
    assert main(["prove", str(statement_path("planes_meet_in_line")), "--cert", str(cert)]) == 0
    capsys.readouterr()
    assert main(["check", str(statement_path("line_in_planes_meet")), str(cert)]) == 1
    assert "hash-mismatch" in capsys.readouterr().out


def test_check_malformed(capsys, tmp_path):
    cert = _write(tmp_path, "junk.cert", "{not json\n")
    assert main(["check", str(statement_path("point_on_line_plane")), str(cert)]) == 1
    assert "INVALID (malformed)" in capsys.readouterr().out


def test_refute_distinctness(capsys):
    assert main(["refute", str(statement_path("distinctness"))]) == 0
    out = capsys.readouterr().out
    assert "disproved in PG(3,2)" in out
    assert "A B : 2 fails" in out
    assert "  A -> " in out


def test_refute_theorem(capsys):
    assert main(["refute", str(statement_path("planes_meet_in_line")), "--budget", "2000", "--seed", "1"]) == 1
    assert "no countermodel found (not a proof) in PG(3,2)" in capsys.readouterr().out


@pytest.mark.parametrize("name", ["hyperplanes5d_meet", "space3d_in_hyperplanes5d"])
def test_refute_five_dimensional_theorem(capsys, name):
    path = str(statement_path(name))
    assert main(["refute", path, "--budget", "200000"]) == 1
    assert "no countermodel found (not a proof) in PG(5,2)" in capsys.readouterr().out


def test_refute_both_fields(capsys):
    args = ["refute", str(statement_path("point_on_line_plane")), "--model", "pg2", "--model", "pg3", "--budget", "500"]
    assert main(args) == 1
    out = capsys.readouterr().out
    assert "PG(3,2)" in out
    assert "PG(3,3)" in out


def test_rank_to_stdout(capsys, tmp_path):
    path = _write(tmp_path, "one.stmt", "points A\nconclusion\n  A : 1\n")
    assert main(["rank", str(path)]) == 0
    captured = capsys.readouterr()
    assert captured.out.splitlines() == ["∅: 0 0", "A : 1 1"]
    assert "determined 2 / 2 sets" in captured.err


def test_rank_to_file(capsys, tmp_path):
    ranks = tmp_path / "ranks.txt"
    assert main(["rank", str(statement_path("point_on_line_plane")), "--ranks", str(ranks)]) == 0
    assert len(ranks.read_text(encoding="utf-8").splitlines()) == 16
    assert "determined" in capsys.readouterr().out


def test_rank_contradiction(capsys):
    assert main(["rank", str(statement_path("contradiction"))]) == 2


def test_syntax_error_is_usage(capsys, tmp_path):
    path = _write(tmp_path, "bad.stmt", "points A B\nconclusion\n  A B = 2\n")
    assert main(["prove", str(path)]) == 3
    assert "line 3" in capsys.readouterr().err


def test_too_many_points(capsys, tmp_path):
    names = " ".join(f"P{i}" for i in range(26))
    path = _write(tmp_path, "big.stmt", f"points {names}\nconclusion\n  P0 : 1\n")
    assert main(["prove", str(path)]) == 3
    assert "26 points" in capsys.readouterr().err


def test_missing_file(capsys, tmp_path):
    assert main(["prove", str(tmp_path / "absent.stmt")]) == 3


def test_undecodable_statement_is_usage(capsys, tmp_path):
    path = tmp_path / "latin1.stmt"
    path.write_bytes(b"points A B\n# caf\xe9\nconclusion\n  A B : 2\n")
    assert main(["prove", str(path)]) == 3
    assert "line 2, column 6" in capsys.readouterr().err


def test_undecodable_certificate_is_invalid(capsys, tmp_path):
    cert = tmp_path / "binary.cert"
    cert.write_bytes(b"\xff\xfe\x00garbage\n")
    assert main(["check", str(statement_path("point_on_line_plane")), str(cert)]) == 1
    assert "INVALID (malformed)" in capsys.readouterr().out


def test_time_limit_exit_code(capsys):
    assert main(["prove", str(statement_path("planes_meet_in_line")), "--max-seconds", "1e-9"]) == 4


def test_dimension_flag(capsys, tmp_path):
    path = _write(tmp_path, "square.stmt", "points A B C D\nhypotheses\n  A B C D : 4\nconclusion\n  A B C : 3\n")
    assert main(["prove", str(path)]) == 0
    capsys.readouterr()
    assert main(["prove", str(path), "--dim", "2"]) == 3


def test_metrics_file(capsys, tmp_path):
    metrics = tmp_path / "metrics.prom"
    assert main(["prove", str(statement_path("point_on_line_plane")), "--metrics", str(metrics)]) == 0
    text = metrics.read_text(encoding="utf-8")
    assert "rankprover_rule_applications_total" in text
    assert "rankprover_saturation_seconds" in text


def test_usage_error_exits_three(capsys):
    with pytest.raises(SystemExit) as exc_info:
        main(["prove"])
    assert exc_info.value.code == 3


def test_config_from_args():
    args = build_parser().parse_args(["prove", "x.stmt", "--strategy", "full", "--max-passes", "7"])
    cfg = config_from_args(args)
    assert isinstance(cfg, RunConfig)
    assert cfg.strategy == Strategy.FULL
    assert cfg.max_passes == 7
    assert cfg.models == ["pg2"]


def test_config_rejects_clashing_paths():
    args = build_parser().parse_args(["prove", "x.stmt", "--cert", "x.stmt"])
    with pytest.raises(ConfigurationError):
        config_from_args(args)
