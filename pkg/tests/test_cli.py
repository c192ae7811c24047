"""CLI behaviour: subcommands, exit codes, report schema, determinism."""

import json

from labcoupling import cli, fileio, fixtures as fx

REPORT_KEYS = {"command", "passed", "inconclusive", "residuals", "artifacts", "seed"}


def run_cli(capsys, *argv):
    code = cli.run(list(argv))
    out = capsys.readouterr().out
    report = json.loads(out) if out.strip() else None
    return code, report


def test_fixtures_list(capsys):
    code, report = run_cli(capsys, "fixtures", "--list")
    assert code == 0
    assert REPORT_KEYS <= set(report)
    assert "so3" in report["names"]["algebras"]
    assert "circle2_so3_twisted" in report["names"]["bundles"]


def test_fixtures_emit_and_reload(capsys, tmp_path):
    code, report = run_cli(capsys, "fixtures", "--emit", "so3", "--out-dir", str(tmp_path))
    assert code == 0
    assert report["artifacts"] == [str(tmp_path / "so3.json")]
    assert fileio.load_algebra(tmp_path / "so3.json").dim == 3


def test_fixtures_env_var_output_dir(capsys, tmp_path, monkeypatch):
    monkeypatch.setenv("ALGEBROID_FIXTURE_DIR", str(tmp_path))
    code, report = run_cli(capsys, "fixtures", "--emit", "circle2")
    assert code == 0
    assert (tmp_path / "circle2.json").exists()


def test_fixtures_unknown_name(capsys):
    code, _ = run_cli(capsys, "fixtures", "--emit", "nonsense")
    assert code == 3


def test_unknown_subcommand_exits_3(capsys):
    assert cli.run(["frobnicate"]) == 3


def test_validate_algebra_pass_and_residuals(capsys, tmp_path):
    path = tmp_path / "so3.json"
    fileio.save_json(path, fileio.algebra_to_dict(fx.algebra("so3")))
    code, report = run_cli(capsys, "validate-algebra", "--algebra", str(path))
    assert code == 0
    assert report["residuals"]["jacobi"] <= 1e-12


def test_check_coupling_failure_exit_code(capsys):
    code, report = run_cli(capsys, "check-coupling", "--connection", "disk2d_abelian2_nonflat")
    assert code == 1
    assert not report["passed"]
    assert report["residuals"]["accordance"] >= 0.999


def test_check_coupling_pass_with_omega_stats(capsys):
    code, report = run_cli(capsys, "check-coupling", "--connection", "disk2d_so3_nonflat")
    assert code == 0
    assert abs(report["omega_stats"]["omega_norm_max"] - fx.DISK_SLOPE) <= 1e-8


def test_validate_lab_cli(capsys):
    code, report = run_cli(capsys, "validate-lab", "--bundle", "circle2_so3_twisted")
    assert code == 0
    assert report["residuals"]["transition_automorphism"] <= 1e-8


def test_check_delta_failing_bundle(capsys):
    code, report = run_cli(capsys, "check-delta", "--bundle", "circle2_abelian2_varying")
    assert code == 1
    assert report["verdicts"]["outer"] > 0


def test_check_delta_passing_bundle(capsys):
    code, report = run_cli(capsys, "check-delta", "--bundle", "circle2_so3_twisted")
    assert code == 0
    assert report["verdicts"]["outer"] == 0 and report["verdicts"]["undecided"] == 0


def test_check_delta_undecided_exits_2(capsys, tmp_path):
    from labcoupling import fileio
    from tests.test_bundles import undecidable_heis3_bundle

    path = tmp_path / "undecidable.json"
    fileio.save_json(path, fileio.bundle_to_dict(undecidable_heis3_bundle()))
    code, report = run_cli(capsys, "check-delta", "--bundle", str(path))
    assert code == 2
    assert report["inconclusive"] and not report["passed"]
    assert report["verdicts"]["undecided"] > 0


def test_roundtrip_flagship_fixture(capsys):
    code, report = run_cli(capsys, "roundtrip", "--connection", "circle2_so3_twisted")
    assert code == 0
    assert report["passed"] and not report["inconclusive"]
    assert set(report["directions"]) == {"connection_roundtrip", "trivialization_roundtrip"}


def test_roundtrip_from_bundle_fixture(capsys):
    code, report = run_cli(capsys, "roundtrip", "--bundle", "circle2_so3_twisted")
    assert code == 0 and report["passed"]


def test_emit_connection_with_prefix(capsys, tmp_path):
    code, report = run_cli(
        capsys, "fixtures", "--emit", "connection:circle2_so3_twisted", "--out-dir", str(tmp_path)
    )
    assert code == 0
    loaded = fileio.load_connection(tmp_path / "circle2_so3_twisted.json")
    assert loaded.algebra.name == "so3"


def test_roundtrip_requires_exactly_one_input(capsys):
    assert cli.run(["roundtrip"]) == 3
    assert (
        cli.run(["roundtrip", "--bundle", "circle2_so3_twisted", "--connection", "circle2_so3_twisted"]) == 3
    )


def test_f_map_writes_bundle_artifact(capsys, tmp_path):
    out = tmp_path / "out.json"
    code, report = run_cli(capsys, "f-map", "--connection", "circle2_so3_twisted", "--out", str(out))
    assert code == 0
    assert report["artifacts"] == [str(out)]
    loaded = fileio.load_bundle(out)
    assert loaded.algebra.dim == 3


def test_g_map_then_check_coupling(capsys, tmp_path):
    out = tmp_path / "conn.json"
    code, _ = run_cli(capsys, "g-map", "--bundle", "circle2_so3_twisted", "--out", str(out))
    assert code == 0
    code2, report = run_cli(capsys, "check-coupling", "--connection", str(out))
    assert code2 == 0 and report["passed"]


def test_axioms_report(capsys):
    code, report = run_cli(capsys, "axioms", "--connection", "disk2d_so3_nonflat", "--trials", "3")
    assert code == 0
    assert report["residuals"]["skew"] <= 1e-12
    assert report["residuals"]["leibniz"] <= 1e-4


def test_reports_are_bit_identical_across_runs(capsys):
    argv = ["axioms", "--connection", "disk2d_so3_nonflat", "--trials", "3", "--seed", "9"]
    cli.run(argv)
    first = capsys.readouterr().out
    cli.run(argv)
    second = capsys.readouterr().out
    assert first == second


def test_passed_and_inconclusive_never_both_true(capsys):
    for argv in (
        ["check-delta", "--bundle", "circle2_abelian2_twisted"],
        ["roundtrip", "--connection", "interval1_so3_flat"],
        ["check-coupling", "--connection", "disk2d_abelian2_nonflat"],
    ):
        code, report = run_cli(capsys, *argv)
        assert not (report["passed"] and report["inconclusive"])
        expected = 2 if report["inconclusive"] else (0 if report["passed"] else 1)
        assert code == expected


def test_tolerance_flags_are_honored(capsys):
    # an absurdly tight inner tolerance flips even float-exact ratios to outer
    code, report = run_cli(
        capsys, "check-delta", "--bundle", "circle2_so3_twisted", "--inner-tol", "1e-30"
    )
    assert code == 1 and not report["passed"]
