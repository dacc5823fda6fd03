from latticelab.cli import main
from latticelab.experiments import ExperimentConfig
from latticelab.io import render_config


def test_predict_gaps_exit_zero(tmp_path, capsys):
    code = main(["predict-gaps", "--gamma", "1.8", "--out", str(tmp_path)])
    assert code == 0
    out = capsys.readouterr().out
    assert "predicted_gaps.txt" in out
    assert (tmp_path / "predicted_gaps.txt").exists()


def test_simulate_small(tmp_path):
    code = main(["simulate", "--gamma", "3.1", "--n-particles", "50", "--t-end", "20",
                 "--dt", "0.002", "--out", str(tmp_path)])
    assert code == 0
    assert (tmp_path / "trajectory.txt").exists()


def test_precondition_failure_exit_two(tmp_path):
    code = main(["simulate", "--n-particles", "20", "--t-end", "100",
                 "--out", str(tmp_path)])
    assert code == 2


def test_config_file_input(tmp_path):
    cfg = ExperimentConfig(kind="simulate", gamma=3.1, n_particles=40, dt=2e-3,
                           t_end=15.0, window=(1, 5), out_dir="ignored")
    path = tmp_path / "cfg.ini"
    path.write_text(render_config(cfg.to_sections()))
    code = main(["simulate", "--config", str(path), "--out", str(tmp_path / "run")])
    assert code == 0
    assert (tmp_path / "run" / "trajectory.txt").exists()


def test_env_override(tmp_path, monkeypatch):
    monkeypatch.setenv("LATTICELAB_OUT", str(tmp_path / "envout"))
    code = main(["predict-gaps", "--gamma", "1.1"])
    assert code == 0
    assert (tmp_path / "envout" / "predicted_gaps.txt").exists()


def test_ggap_subcommand(tmp_path):
    code = main(["ggap", "--gamma", "1.8", "--c", "0.0", "--p", "[0.1]",
                 "--z-phase", "[0.3]", "--out", str(tmp_path)])
    assert code == 0
    assert (tmp_path / "ggap_motion.txt").exists()


def test_validate_exit_codes(monkeypatch):
    from latticelab.acceptance import CriterionResult
    from latticelab import acceptance as acc

    monkeypatch.setattr(acc, "run_all",
                        lambda verbose=False: [CriterionResult("stub", True, {"x": 1.0})])
    assert main(["validate"]) == 0
    monkeypatch.setattr(acc, "run_all",
                        lambda verbose=False: [CriterionResult("stub", False, {"x": 1.0})])
    assert main(["validate"]) == 3
