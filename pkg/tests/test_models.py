# tests/test_models.py
import pytest
from pydantic import ValidationError

from models import (
    CycleConfig,
    DeviationRequest,
    GateFidelityRequest,
    KLScanRequest,
    WorstCaseParams,
    WorstCaseSweep,
)


# ---------- CycleConfig ----------

def test_cycle_config_accepts_dashed_mode():
    cfg = CycleConfig(kappa=0.05, cycles=2, measurement_mode="postselect-trivial")
    assert cfg.measurement_mode == "postselect_trivial"


def test_sample_mode_requires_seed():
    """Sampling without a seed is rejected at validation time."""
    with pytest.raises(ValidationError, match="seed"):
        CycleConfig(measurement_mode="sample")


def test_postselect_pattern_count():
    """One six-entry pattern per round is required."""
    good = [[1] * 6, [1, 1, -1, 1, 1, 1]]
    assert CycleConfig(measurement_mode="postselect", patterns=good).patterns == good
    with pytest.raises(ValidationError):
        CycleConfig(measurement_mode="postselect", patterns=good[:1])
    with pytest.raises(ValidationError):
        CycleConfig(measurement_mode="postselect", patterns=[[1] * 5, [1] * 6])
    with pytest.raises(ValidationError):
        CycleConfig(measurement_mode="postselect", patterns=[[1] * 6, [1, 1, 0, 1, 1, 1]])


def test_injected_error_is_parsed():
    assert CycleConfig(injected_error=" Y3 Z5 ").injected_error == "Y3 Z5"
    with pytest.raises(ValidationError):
        CycleConfig(injected_error="X14")
    with pytest.raises(ValidationError):
        CycleConfig(injected_error="Q1")


def test_negative_kappa_rejected():
    with pytest.raises(ValidationError):
        CycleConfig(kappa=-0.1)


# ---------- worst-case models ----------

def test_worst_case_params_require_odd_distance():
    assert WorstCaseParams(d=5, kappa=0.1, m=3).d == 5
    with pytest.raises(ValidationError):
        WorstCaseParams(d=4, kappa=0.1, m=3)


def test_sweep_parses_comma_lists():
    sweep = WorstCaseSweep(d_min=3, d_max=11, kappas="0.01, 0.4", ms="2,16")
    assert sweep.kappas == [0.01, 0.4]
    assert sweep.ms == [2, 16]
    assert sweep.distances() == [3, 5, 7, 9, 11]


def test_sweep_even_bounds_keep_odd_distances():
    assert WorstCaseSweep(d_min=4, d_max=10).distances() == [5, 7, 9]


def test_sweep_rejects_empty_range():
    with pytest.raises(ValidationError):
        WorstCaseSweep(d_min=11, d_max=9)
    with pytest.raises(ValidationError):
        WorstCaseSweep(d_min=4, d_max=4)


def test_sweep_rejects_malformed_list():
    with pytest.raises(ValidationError):
        WorstCaseSweep(kappas="0.1,abc")
    with pytest.raises(ValidationError):
        WorstCaseSweep(ms="0")


# ---------- request models ----------

def test_gate_fidelity_range():
    assert GateFidelityRequest(kappas="0,0.05,0.1").kappas == [0.0, 0.05, 0.1]
    with pytest.raises(ValidationError):
        GateFidelityRequest(kappas="1.5")
    with pytest.raises(ValidationError):
        GateFidelityRequest(kappas="")


def test_deviation_request_normalizes_basis():
    req = DeviationRequest(d=7, basis="x", k=2)
    assert req.basis == "X"
    with pytest.raises(ValidationError):
        DeviationRequest(d=4)


def test_kl_scan_request_bounds():
    assert KLScanRequest().kappa == 0.01
    with pytest.raises(ValidationError):
        KLScanRequest(kappa=0.5)
    with pytest.raises(ValidationError):
        KLScanRequest(anchor="x3")
