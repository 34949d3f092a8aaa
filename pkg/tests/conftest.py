# tests/conftest.py
import pytest

from services.surface_code import build_layout, prepare_logical_zero


@pytest.fixture(autouse=True)
def _isolated_env(monkeypatch, tmp_path):
    for key in ("QEC_MAX_QUBITS", "QEC_THREADS", "QEC_KAPPA_CAP", "QEC_LOG_LEVEL"):
        monkeypatch.delenv(key, raising=False)
    monkeypatch.setenv("QEC_OUTPUT_DIR", str(tmp_path / "runs"))


@pytest.fixture
def out_root(tmp_path):
    return tmp_path / "runs"


@pytest.fixture(scope="session")
def layout3():
    return build_layout(3)


@pytest.fixture(scope="session")
def zero_l(layout3):
    return prepare_logical_zero(layout3, "ideal").state
