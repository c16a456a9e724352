"""Tests for the sweep runner: config resolution, row computation,
deterministic emission, and process exit codes."""

import json
import math
import subprocess
import sys

import pytest

from ghostslit import GaussianPairState, OracleConfig, SlitConfig, sample_inclusive
from ghostslit.cli import (
    ConfigError,
    SweepConfig,
    SweepRow,
    emit,
    main,
    parse_config,
    run_sweep,
)

SQRT_HALF = 0.70710678118654752440


def write_config(tmp_path, payload):
    path = tmp_path / "sweep.json"
    path.write_text(json.dumps(payload), encoding="utf-8")
    return str(path)


# --- config resolution ---------------------------------------------------------

def test_defaults():
    cfg = parse_config([])
    assert cfg.sigma_plus == 1.0 and cfg.sigma_minus == 1.0
    assert cfg.scheme == "central" and cfg.kappa is None
    assert (cfg.a_min, cfg.a_max, cfg.a_steps) == (0.1, 1.0, 10)
    assert cfg.spacing == "linear" and cfg.format == "csv"
    assert cfg.rel_tol == 1e-10 and cfg.tail_cutoff == 10.0
    assert cfg.mc_samples is None and cfg.seed == 0
    assert cfg.out == "sweep.csv"
    assert cfg.preset is None and cfg.preset_overrides == ()


def test_symmetric_preset():
    cfg = parse_config(["--preset", "symmetric"])
    assert cfg.sigma_plus == 1.0 and cfg.sigma_minus == 1.0
    assert cfg.preset == "symmetric"


def test_strekalov_preset():
    cfg = parse_config(["--preset", "strekalov"])
    assert cfg.sigma_plus == 0.01 and cfg.sigma_minus == 1.0
    assert (cfg.a_min, cfg.a_max) == (0.05, 0.55)
    assert cfg.scheme == "central"


def test_precedence_flags_over_file_over_preset(tmp_path):
    path = write_config(tmp_path, {"preset": "strekalov", "a_min": 0.2,
                                   "seed": 9})
    cfg = parse_config(["--config", path, "--sigma-plus", "0.3"])
    assert cfg.sigma_plus == 0.3        # flag beats preset
    assert cfg.a_min == 0.2             # file beats preset
    assert cfg.a_max == 0.55            # preset beats default
    assert cfg.seed == 9                # file beats default
    assert cfg.preset == "strekalov"
    assert cfg.preset_overrides == ("a_min", "sigma_plus")


def test_preset_flag_beats_file_preset(tmp_path):
    path = write_config(tmp_path, {"preset": "strekalov"})
    cfg = parse_config(["--config", path, "--preset", "symmetric"])
    assert cfg.preset == "symmetric"
    assert cfg.sigma_plus == 1.0


@pytest.mark.parametrize("argv,fragment", [
    (["--a-min", "2.0", "--a-max", "1.0"], "a_min"),
    (["--a-steps", "1"], "a_steps"),
    (["--sigma-plus", "0"], "sigma_plus"),
    (["--sigma-minus", "-1"], "sigma_minus"),
    (["--rel-tol", "0"], "rel_tol"),
    (["--tail-cutoff", "5"], "tail_cutoff"),
    (["--seed", "-3"], "seed"),
    (["--scheme", "conditioned"], "kappa"),
    (["--kappa", "0.5"], "kappa"),
    (["--scheme", "conditioned", "--kappa", "1.0", "--mc-samples", "5000"],
     "mc_samples"),
    (["--mc-samples", "999"], "mc_samples"),
])
def test_config_validation(argv, fragment):
    with pytest.raises(ConfigError, match=fragment):
        parse_config(argv)


def test_config_file_errors(tmp_path):
    missing = str(tmp_path / "nope.json")
    with pytest.raises(ConfigError, match="cannot read"):
        parse_config(["--config", missing])

    bad = tmp_path / "bad.json"
    bad.write_text("{not json", encoding="utf-8")
    with pytest.raises(ConfigError, match="invalid JSON"):
        parse_config(["--config", str(bad)])

    with pytest.raises(ConfigError, match="flat JSON object"):
        parse_config(["--config", write_config(tmp_path, [1, 2])])

    with pytest.raises(ConfigError, match="unknown config keys"):
        parse_config(["--config", write_config(tmp_path, {"sigma": 1.0})])

    with pytest.raises(ConfigError, match="unknown preset"):
        parse_config(["--config", write_config(tmp_path,
                                               {"preset": "qureshi"})])

    with pytest.raises(ConfigError, match="scheme"):
        parse_config(["--config", write_config(tmp_path,
                                               {"scheme": "sideways"})])

    with pytest.raises(ConfigError, match="seed"):
        parse_config(["--config", write_config(tmp_path, {"seed": 3.5})])


# --- sweep rows -----------------------------------------------------------------

def test_symmetric_central_sweep_is_flat():
    cfg = parse_config(["--preset", "symmetric", "--a-steps", "4"])
    rows = run_sweep(cfg)
    values = [r.delta_k2_numeric for r in rows]
    assert [r.a for r in rows] == sorted(r.a for r in rows)
    assert all(math.isclose(v, SQRT_HALF, rel_tol=1e-10) for v in values)
    assert max(values) - min(values) <= 1e-9 * SQRT_HALF
    assert all(r.scheme == "central" for r in rows)


def test_inclusive_sweep_is_width_independent():
    cfg = parse_config(["--sigma-plus", "0.6", "--sigma-minus", "0.8",
                        "--scheme", "inclusive", "--a-min", "0.01",
                        "--a-max", "10", "--a-steps", "5",
                        "--spacing", "log"])
    rows = run_sweep(cfg)
    values = [r.delta_k2_numeric for r in rows]
    assert max(values) / min(values) - 1.0 <= 1e-9
    assert all(r.delta_k2_formula == 0.5 for r in rows)


def test_central_sweep_decreases_and_reports_formula():
    cfg = parse_config(["--sigma-plus", "0.6", "--sigma-minus", "0.8",
                        "--a-min", "0.1", "--a-max", "0.8",
                        "--a-steps", "4"])
    rows = run_sweep(cfg)
    values = [r.delta_k2_numeric for r in rows]
    assert all(u > v for u, v in zip(values, values[1:]))
    # the small-width formula is exposed inside its validity range only
    assert all(r.delta_k2_formula is not None for r in rows)
    assert all(abs(r.delta_k2_numeric - r.delta_k2_formula)
               <= 1e-4 * r.delta_k2_numeric + 3e-4 * r.a ** 4 for r in rows)
    assert all(r.physical_slit_estimate == 1.0 / (2.0 * r.a) for r in rows)


def test_central_sweep_hides_formula_outside_validity():
    cfg = parse_config(["--sigma-plus", "0.6", "--sigma-minus", "0.8",
                        "--a-min", "5.0", "--a-max", "8.0", "--a-steps", "2"])
    rows = run_sweep(cfg)
    assert all(r.delta_k2_formula is None for r in rows)


def test_conditioned_sweep_has_no_formula_column():
    cfg = parse_config(["--scheme", "conditioned", "--kappa", "0.75",
                        "--sigma-plus", "0.6", "--sigma-minus", "0.8",
                        "--a-steps", "2"])
    rows = run_sweep(cfg)
    assert all(r.delta_k2_formula is None for r in rows)
    assert all(r.scheme == "conditioned(kappa=0.75)" for r in rows)


def test_mc_columns_follow_the_row_seed_schedule():
    cfg = parse_config(["--sigma-plus", "0.6", "--sigma-minus", "0.8",
                        "--scheme", "inclusive", "--a-min", "0.4",
                        "--a-max", "0.6", "--a-steps", "2",
                        "--mc-samples", "20000", "--seed", "40"])
    rows = run_sweep(cfg)
    state = GaussianPairState(0.6, 0.8)
    for index, row in enumerate(rows):
        stats = sample_inclusive(state, SlitConfig(row.a),
                                 OracleConfig(n_samples=20000,
                                              seed=40 + index))
        assert row.mc_std == stats.std
        assert row.mc_std_error == stats.std_error_of_std


# --- emission --------------------------------------------------------------------

def three_rows():
    cfg = parse_config(["--preset", "symmetric", "--a-steps", "3",
                        "--mc-samples", "2000"])
    return cfg, run_sweep(cfg)


def test_csv_shape_and_round_trip(tmp_path):
    _, rows = three_rows()
    out = tmp_path / "table.csv"
    emit(rows, "csv", str(out))
    lines = out.read_text(encoding="utf-8").splitlines()
    assert len(lines) == 4
    assert lines[0] == ("a,scheme,delta_k2_numeric,delta_k2_formula,mean_k2,"
                        "numeric_error,mc_std,mc_std_error,"
                        "physical_slit_estimate")
    for line, row in zip(lines[1:], rows):
        cells = line.split(",")
        assert float(cells[0]) == row.a                 # 17g round-trips
        assert cells[1] == row.scheme
        assert float(cells[2]) == row.delta_k2_numeric
        assert float(cells[6]) == row.mc_std


def test_csv_empty_cells_for_missing_values(tmp_path):
    row = SweepRow(a=0.5, scheme="conditioned(kappa=2)",
                   delta_k2_numeric=0.5, delta_k2_formula=None, mean_k2=0.1,
                   numeric_error=1e-12, mc_std=None, mc_std_error=None,
                   physical_slit_estimate=1.0)
    out = tmp_path / "row.csv"
    emit([row], "csv", str(out))
    cells = out.read_text(encoding="utf-8").splitlines()[1].split(",")
    assert cells[3] == "" and cells[6] == "" and cells[7] == ""


def test_json_round_trip_and_metadata(tmp_path):
    cfg, rows = three_rows()
    out = tmp_path / "table.json"
    emit(rows, "json", str(out), metadata={"seed": cfg.seed,
                                           "tool_version": "x"})
    doc = json.loads(out.read_text(encoding="utf-8"))
    assert set(doc) == {"metadata", "rows"}
    assert doc["metadata"]["seed"] == cfg.seed
    for parsed, row in zip(doc["rows"], rows):
        assert parsed["a"] == row.a
        assert parsed["delta_k2_numeric"] == row.delta_k2_numeric
        assert parsed["mc_std"] == row.mc_std


def test_emit_rejects_empty_and_unknown(tmp_path):
    _, rows = three_rows()
    with pytest.raises(ValueError, match="no rows"):
        emit([], "csv", str(tmp_path / "x.csv"))
    with pytest.raises(ValueError, match="format"):
        emit(rows, "xml", str(tmp_path / "x.xml"))


def test_repeat_runs_are_byte_identical(tmp_path):
    out = tmp_path / "sweep.json"
    argv = ["--sigma-plus", "0.6", "--sigma-minus", "0.8",
            "--scheme", "inclusive", "--a-steps", "3",
            "--mc-samples", "5000", "--format", "json", "--out", str(out)]
    assert main(argv) == 0
    first = out.read_bytes()
    assert main(argv) == 0
    assert out.read_bytes() == first


# --- process behaviour -------------------------------------------------------------

def test_main_success_exit_code(tmp_path, capsys):
    out = tmp_path / "run.csv"
    code = main(["--preset", "symmetric", "--a-steps", "2",
                 "--out", str(out)])
    assert code == 0
    assert out.exists()
    assert "wrote 2 rows" in capsys.readouterr().out


def test_main_config_error_exit_code(capsys):
    assert main(["--a-steps", "1"]) == 1
    assert "a_steps" in capsys.readouterr().err


def test_main_numerical_failure_exit_code(tmp_path, capsys):
    # an extreme projection momentum exhausts the quadrature budget
    code = main(["--scheme", "conditioned", "--kappa", "1e9",
                 "--a-steps", "2", "--out", str(tmp_path / "x.csv")])
    assert code == 2
    assert "numerical failure" in capsys.readouterr().err


def test_main_unwritable_output_exit_code(tmp_path, capsys):
    code = main(["--preset", "symmetric", "--a-steps", "2",
                 "--out", str(tmp_path / "absent" / "x.csv")])
    assert code == 1
    assert "cannot write" in capsys.readouterr().err


def test_main_help_exit_code():
    assert main(["--help"]) == 0


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "ghostslit", "--help"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert "slit" in proc.stdout
