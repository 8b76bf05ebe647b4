
import numpy as np
import pytest

import event_log
from config_manager import DEFAULT_CONFIG, build_config
from dataset.iris_loader import load_iris_csv


@pytest.fixture(autouse=True)
def _log_dir(tmp_path, monkeypatch):
    # keep log files out of the working tree
    monkeypatch.setattr(event_log, "LOG_DIR", str(tmp_path / "logs"))
    monkeypatch.setattr(event_log, "ECHO", False)

@pytest.fixture
def rng():
    return np.random.default_rng(1234)

@pytest.fixture(scope="session")
def iris():
    return load_iris_csv()

@pytest.fixture
def make_config(tmp_path):
    """ExperimentConfig from DEFAULT_CONFIG plus dotted-key overrides."""

    def _make(**overrides):
        values = dict(DEFAULT_CONFIG)
        values.update({"name": "test", "epochs": 2, "runs": 2, "output_dir": str(tmp_path / "out")})
        values.update({k.replace("__", "."): v for k, v in overrides.items()})
        return build_config(values, base_dir=tmp_path)

    return _make
