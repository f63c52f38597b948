import numpy as np
import pytest


@pytest.fixture(autouse=True)
def _no_thread_env(monkeypatch):
    # keep member execution single-threaded and deterministic under pytest
    monkeypatch.delenv("HARNACK_LAB_THREADS", raising=False)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
