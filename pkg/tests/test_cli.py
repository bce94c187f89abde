"""End-to-end checks of the command-line interface.

Each subcommand is exercised through ``main`` with a temporary output
directory; determinism is checked byte for byte on the emitted files.
"""

import json

import pytest

from ensemble_repeater.cli import (
    CONFIG_REFERENCE_NAME,
    EXIT_BAD_CONFIG,
    EXIT_INFEASIBLE,
    EXIT_OK,
    MANIFEST_NAME,
    ConfigError,
    Settings,
    config_reference,
    format_enp_schedule,
    load_settings,
    main,
    parse_enp_schedule,
)
from ensemble_repeater.patterns import SchemeKind
from ensemble_repeater.protocols import EnpKind


# ----------------------------------------------------------------------
# configuration parsing


def test_parse_enp_schedule():
    assert parse_enp_schedule("") == ()
    assert parse_enp_schedule("none") == ()
    assert parse_enp_schedule("phase-after-2") == ((2, EnpKind.PHASE),)
    assert parse_enp_schedule("phase-after-3, bit-after-1") == (
        (1, EnpKind.BIT),
        (3, EnpKind.PHASE),
    )
    for bad in ("bogus", "phase-after-x", "parity-after-2", "phase-2"):
        with pytest.raises(ConfigError):
            parse_enp_schedule(bad)


def test_format_enp_schedule_round_trips():
    for text in ("none", "phase-after-2", "bit-after-1, phase-after-2"):
        assert format_enp_schedule(parse_enp_schedule(text)) == text


def test_load_settings_defaults_without_file():
    assert load_settings(None) == Settings()


def test_load_settings_reads_all_sections(tmp_path):
    path = tmp_path / "run.ini"
    path.write_text(
        """
[chain]
scheme = dlcz
L = 2560
L0 = 80
p_c = 7.1e-4   # inline comments are allowed
enp_schedule = none
waiting = mc
n_samples = 2048

[noise]
eta = 0.9
D = 1e-4

[sweep]
F_target = 0.85
L_list = 160, 320
eta_list = 0.9
"""
    )
    s = load_settings(path)
    assert s.scheme is SchemeKind.DLCZ
    assert s.L == 2560.0
    assert s.L0 == 80.0
    assert s.p_c == pytest.approx(7.1e-4)
    assert s.waiting == "mc"
    assert s.n_samples == 2048
    assert s.noise.eta == 0.9
    assert s.noise.D == pytest.approx(1e-4)
    assert s.noise.p_misalign == 0.0  # untouched defaults survive
    assert s.F_target == 0.85
    assert s.L_list == (160.0, 320.0)
    assert s.eta_list == (0.9,)


@pytest.mark.parametrize(
    "body",
    [
        "[chain]\nbogus = 1\n",
        "[orbit]\nL = 100\n",
        "[chain]\nL = not-a-number\n",
        "[chain]\nscheme = qubit\n",
        "[chain]\nwaiting = sometimes\n",
        "[noise]\neta = 1.5\n",
        "[sweep]\nl_list = 1,2,three\n",
    ],
)
def test_load_settings_rejects_bad_input(tmp_path, body):
    path = tmp_path / "bad.ini"
    path.write_text(body)
    with pytest.raises(ConfigError):
        load_settings(path)


def test_load_settings_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        load_settings(tmp_path / "absent.ini")


def test_config_reference_parses_to_defaults(tmp_path):
    path = tmp_path / "reference.ini"
    path.write_text(config_reference())
    assert load_settings(path) == Settings()


# ----------------------------------------------------------------------
# entry point


def _run(tmp_path, *argv):
    out = tmp_path / "out"
    rc = main(["--out", str(out), *argv])
    return rc, out


def test_main_writes_manifest_and_reference(tmp_path):
    rc, out = _run(tmp_path, "--seed", "7", "simulate")
    assert rc == EXIT_OK
    manifest = json.loads((out / MANIFEST_NAME).read_text())
    assert manifest["command"] == "simulate"
    assert manifest["seed"] == 7
    assert manifest["settings"]["scheme"] == "new"
    assert (out / CONFIG_REFERENCE_NAME).exists()


def test_simulate_outputs_are_deterministic(tmp_path):
    rc1, out1 = _run(tmp_path / "a", "simulate")
    rc2, out2 = _run(tmp_path / "b", "simulate")
    assert rc1 == rc2 == EXIT_OK
    for name in ("simulate.csv", "simulate.json"):
        assert (out1 / name).read_bytes() == (out2 / name).read_bytes()
    payload = json.loads((out1 / "simulate.json").read_text())
    assert payload["L_km"] == 1280.0
    assert payload["levels"][0]["stage"] == "eng"


def test_simulate_respects_config_and_overrides(tmp_path, capsys):
    cfg = tmp_path / "run.ini"
    cfg.write_text("[chain]\nL = 320\nL0 = 40\np_c = 2e-3\n[noise]\neta = 0.9\n")
    out = tmp_path / "out"
    rc = main(
        ["--config", str(cfg), "--out", str(out), "--scheme", "dlcz",
         "--format", "json", "simulate"]
    )
    assert rc == EXIT_OK
    printed = json.loads(capsys.readouterr().out)
    assert printed["scheme"] == "dlcz"
    assert printed["L_km"] == 320.0
    assert printed["levels"][-1]["stage"] == "pme"


def test_mc_seed_changes_simulated_times(tmp_path):
    cfg = tmp_path / "run.ini"
    cfg.write_text("[chain]\nL = 320\nwaiting = mc\nn_samples = 2048\n")
    _, out1 = _run(
        tmp_path / "a", "--config", str(cfg), "--seed", "1", "simulate"
    )
    _, out2 = _run(
        tmp_path / "b", "--config", str(cfg), "--seed", "2", "simulate"
    )
    t1 = json.loads((out1 / "simulate.json").read_text())["final"]["t_avg_s"]
    t2 = json.loads((out2 / "simulate.json").read_text())["final"]["t_avg_s"]
    assert t1 != t2


def test_bad_configuration_exits_3(tmp_path):
    cfg = tmp_path / "bad.ini"
    cfg.write_text("[chain]\nbogus = 1\n")
    rc, _ = _run(tmp_path, "--config", str(cfg), "simulate")
    assert rc == EXIT_BAD_CONFIG
    # Chain-level inconsistencies (here: L/L0 not a power of two) are
    # configuration errors too.
    cfg2 = tmp_path / "bad2.ini"
    cfg2.write_text("[chain]\nL = 300\n")
    rc, _ = _run(tmp_path, "--config", str(cfg2), "simulate")
    assert rc == EXIT_BAD_CONFIG
    rc = main(["--out", str(tmp_path / "o"), "--workers", "0", "simulate"])
    assert rc == EXIT_BAD_CONFIG
    rc = main(["--out", str(tmp_path / "o"), "--enp", "bogus", "simulate"])
    assert rc == EXIT_BAD_CONFIG


def test_oracle_verify_passes(tmp_path, capsys):
    rc, out = _run(tmp_path, "oracle-verify")
    assert rc == EXIT_OK
    report = (out / "oracle_verify.txt").read_text()
    assert report == capsys.readouterr().out
    assert "FAIL" not in report
    lines = [line for line in report.splitlines() if line.startswith("PASS")]
    assert len(lines) > 100


def test_optimize_feasible_and_infeasible(tmp_path):
    cfg = tmp_path / "run.ini"
    cfg.write_text("[chain]\nL = 160\n[sweep]\nF_target = 0.9\n")
    rc, out = _run(tmp_path / "ok", "--config", str(cfg), "optimize")
    assert rc == EXIT_OK
    payload = json.loads((out / "optimize.json").read_text())
    assert payload["feasible"] is True
    assert payload["F_fin"] >= 0.9
    assert payload["run"]["final"]["F"] == payload["F_fin"]

    hard = tmp_path / "hard.ini"
    hard.write_text(
        "[chain]\nL = 160\n[noise]\nD = 3e-3\n[sweep]\nF_target = 0.995\n"
    )
    rc, out = _run(tmp_path / "no", "--config", str(hard), "optimize")
    assert rc == EXIT_INFEASIBLE
    payload = json.loads((out / "optimize.json").read_text())
    assert payload["feasible"] is False
    csv_rows = (out / "optimize.csv").read_text().strip().splitlines()
    assert csv_rows[1].endswith("0")


def test_table_over_distances(tmp_path):
    cfg = tmp_path / "run.ini"
    cfg.write_text("[sweep]\nL_list = 160, 320\nF_target = 0.9\n")
    rc, out = _run(tmp_path, "--config", str(cfg), "table")
    assert rc == EXIT_OK
    rows = json.loads((out / "table.json").read_text())
    assert [row["L_km"] for row in rows] == [160.0, 320.0]
    assert all(row["feasible"] == 1 for row in rows)
    # Minimized times grow with distance.
    assert rows[0]["t_avg_s"] < rows[1]["t_avg_s"]


def test_curve_single_variant(tmp_path):
    cfg = tmp_path / "run.ini"
    cfg.write_text("[chain]\nL = 160\n[sweep]\neta_list = 0.9\n")
    rc, out = _run(
        tmp_path, "--config", str(cfg), "--scheme", "dlcz", "--enp", "none",
        "curve",
    )
    assert rc == EXIT_OK
    collected = json.loads((out / "curve.json").read_text())
    assert list(collected) == ["curve_dlcz_enp-none_eta90"]
    points = collected["curve_dlcz_enp-none_eta90"]
    assert len(points) > 50
    assert (out / "curve_dlcz_enp-none_eta90.csv").exists()
    header = (out / "curve.csv").read_text().splitlines()[0]
    assert header.replace(" ", "") == "scheme,L_km,eta,D,enp_schedule,p_c,L0_km,t_avg_s,F"


def test_scaling_fit_command(tmp_path):
    cfg = tmp_path / "run.ini"
    cfg.write_text("[sweep]\nL_list = 160, 320, 640\n")
    rc, out = _run(tmp_path, "--config", str(cfg), "scaling")
    assert rc == EXIT_OK
    payload = json.loads((out / "scaling.json").read_text())
    assert len(payload["points"]) == 3
    assert payload["fitted_exponent"] == pytest.approx(
        payload["stable_exponent"], abs=0.4
    )
