"""
Unit tests for experiment configuration loading
"""

import logging
from pathlib import Path

import pytest

from sparsemeta.config import Settings
from sparsemeta.exceptions import ConfigError
from sparsemeta.models.losses import LossName
from sparsemeta.schemas.experiment import ExperimentConfig, MetricName, OuterDecay, SchedulePreset, SourceKind
from sparsemeta.services.experiment_service import load_experiment_config


class TestLoadExperimentConfig:
    """Test parsing the flat key = value file"""

    def test_values_and_comments(self, write_config, experiment_values):
        path = write_config(experiment_values, header="# small blobs run")
        cfg = load_experiment_config(path)
        assert cfg.master_seed == 42
        assert cfg.schedule == SchedulePreset.CUSTOM
        assert cfg.hidden_sizes == (8,)
        assert cfg.resolved_rate == 0.5
        assert cfg.inner_lr == 0.05

    def test_overrides_win(self, write_config, experiment_values, tmp_path):
        path = write_config(experiment_values)
        cfg = load_experiment_config(path, {"master_seed": 7, "output_dir": str(tmp_path / "elsewhere"), "rate": None})
        assert cfg.master_seed == 7
        assert cfg.output_dir == str(tmp_path / "elsewhere")
        assert cfg.rate == 0.5

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            load_experiment_config(tmp_path / "absent.cfg")

    def test_unknown_key(self, write_config):
        path = write_config({"master_seed": 1, "learning_rate": 0.1})
        with pytest.raises(ConfigError) as exc:
            load_experiment_config(path)
        assert exc.value.key == "learning_rate"

    def test_key_without_value(self, tmp_path):
        path = tmp_path / "broken.cfg"
        path.write_text("master_seed = 1\nrate\n")
        with pytest.raises(ConfigError) as exc:
            load_experiment_config(path)
        assert exc.value.key == "rate"

    def test_malformed_line_is_rejected(self, tmp_path):
        path = tmp_path / "colon.cfg"
        path.write_text("master_seed = 1\nrate: 0.9\n")
        with pytest.raises(ConfigError) as exc:
            load_experiment_config(path)
        assert "line 2" in str(exc.value)
        assert "rate: 0.9" in str(exc.value)

    def test_key_with_space_is_rejected(self, tmp_path):
        path = tmp_path / "spaced.cfg"
        path.write_text("# sizes\nmaster_seed = 1\nhidden sizes = 8\n")
        with pytest.raises(ConfigError) as exc:
            load_experiment_config(path)
        assert "line 3" in str(exc.value)

    def test_duplicate_key(self, tmp_path):
        path = tmp_path / "twice.cfg"
        path.write_text("master_seed = 1\nrate = 0.3\nrate = 0.9\n")
        with pytest.raises(ConfigError) as exc:
            load_experiment_config(path)
        assert exc.value.key == "rate"
        assert "line 3" in str(exc.value)

    def test_blank_lines_and_inline_comments(self, tmp_path):
        path = tmp_path / "commented.cfg"
        path.write_text("\n# seed\nmaster_seed = 3  # fixed\n\nrate = 0.25\n")
        cfg = load_experiment_config(path)
        assert cfg.master_seed == 3
        assert cfg.rate == 0.25

    def test_bad_value_names_key(self, write_config):
        path = write_config({"master_seed": 1, "meta_batch": "many"})
        with pytest.raises(ConfigError) as exc:
            load_experiment_config(path)
        assert exc.value.key == "meta_batch"

    def test_seed_required(self, write_config):
        with pytest.raises(ConfigError) as exc:
            load_experiment_config(write_config({"rate": 0.5}))
        assert exc.value.key == "master_seed"

    def test_relative_image_dir(self, write_config, tmp_path):
        path = write_config({"master_seed": 1, "source": "imagedir", "image_dir": "images"})
        cfg = load_experiment_config(path)
        assert cfg.image_dir == str(tmp_path / "images")

    def test_imagedir_needs_directory(self, write_config):
        with pytest.raises(ConfigError):
            load_experiment_config(write_config({"master_seed": 1, "source": "imagedir"}))


class TestExperimentConfig:
    """Test resolution of presets and defaults"""

    def test_dsd_defaults(self):
        sched = ExperimentConfig(master_seed=0).prune_schedule()
        assert (sched.pretrain_iters, sched.prune_iters, sched.retrain_iters, sched.rounds) == (300, 500, 200, 1)

    def test_iht_preset(self):
        sched = ExperimentConfig(master_seed=0, schedule="iht").prune_schedule()
        assert (sched.pretrain_iters, sched.prune_iters, sched.retrain_iters, sched.rounds) == (300, 150, 50, 4)
        assert sched.total_iters == 1100

    def test_baseline_is_dense(self):
        cfg = ExperimentConfig(master_seed=0, schedule="baseline")
        assert cfg.resolved_rate == 0.0
        assert cfg.prune_schedule().total_iters == 1000

    def test_baseline_rejects_rate(self):
        with pytest.raises(ValueError):
            ExperimentConfig(master_seed=0, schedule="baseline", rate=0.5)

    def test_interval_and_ratio(self):
        cfg = ExperimentConfig(master_seed=0, schedule="iht", pretrain_iters=10, interval_iters=10, ratio=0.5, rounds=2)
        sched = cfg.prune_schedule()
        assert (sched.prune_iters, sched.retrain_iters) == (5, 5)
        assert sched.total_iters == 30

    def test_interval_needs_ratio(self):
        with pytest.raises(ValueError):
            ExperimentConfig(master_seed=0, interval_iters=10)

    def test_hidden_sizes(self):
        assert ExperimentConfig(master_seed=0, hidden_sizes="32, 16").hidden_sizes == (32, 16)
        assert ExperimentConfig(master_seed=0, hidden_sizes="").hidden_sizes == ()
        with pytest.raises(ValueError):
            ExperimentConfig(master_seed=0, hidden_sizes="8,0")

    def test_sinusoid_defaults(self):
        cfg = ExperimentConfig(master_seed=0, source="sinusoid")
        assert cfg.resolved_metric == MetricName.MSE
        assert cfg.loss_kind().name == LossName.MSE
        assert cfg.meta_config().n_way == 1

    def test_sinusoid_rejects_accuracy(self):
        with pytest.raises(ValueError):
            ExperimentConfig(master_seed=0, source=SourceKind.SINUSOID, metric="accuracy")

    def test_margin_loss(self):
        cfg = ExperimentConfig(master_seed=0, loss="margin_ramp", margin_gamma=0.5)
        assert cfg.loss_kind().gamma == 0.5

    def test_meta_config_total_iterations(self):
        cfg = ExperimentConfig(master_seed=0, pretrain_iters=2, prune_iters=3, retrain_iters=4)
        assert cfg.meta_config().total_meta_iterations == 9

    def test_outer_decay(self):
        assert ExperimentConfig(master_seed=0).prune_schedule().outer_decay == OuterDecay.PHASE
        sched = ExperimentConfig(master_seed=0, schedule="iht", outer_decay="run").prune_schedule()
        assert sched.outer_decay == OuterDecay.RUN
        assert sched.rounds == 4
        with pytest.raises(ValueError):
            ExperimentConfig(master_seed=0, outer_decay="cosine")


class TestSettings:
    """Test ambient settings"""

    def test_env_prefix(self, monkeypatch):
        monkeypatch.setenv("SPARSEMETA_WORKERS", "4")
        monkeypatch.setenv("SPARSEMETA_LOG_LEVEL", "debug")
        settings = Settings()
        assert settings.workers == 4
        assert settings.log_level_value == logging.DEBUG

    def test_unknown_level_falls_back(self):
        assert Settings(log_level="chatty").log_level_value == logging.INFO


class TestShippedConfigs:
    """Test the example configs under configs/"""

    CONFIG_DIR = Path(__file__).resolve().parents[2] / "configs"

    @pytest.mark.parametrize("name", ["blobs_dsd.cfg", "sinusoid_iht.cfg", "omniglot_margin.cfg"])
    def test_loads(self, name):
        cfg = load_experiment_config(self.CONFIG_DIR / name)
        assert cfg.prune_schedule().total_iters > 0

    def test_sinusoid_iht_schedule(self):
        sched = load_experiment_config(self.CONFIG_DIR / "sinusoid_iht.cfg").prune_schedule()
        assert (sched.prune_iters, sched.retrain_iters, sched.rounds) == (150, 50, 4)
