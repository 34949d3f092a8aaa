# tests/test_aqec.py
from fractions import Fraction

import numpy as np
import pytest

from errors import UsageError
from services.aqec import (
    ANCHOR_VALUE,
    SCAN_COLUMNS,
    classify_operator,
    code_matrix_element,
    consecutive_measurement_demo,
    dress_codewords,
    dressing_operator,
    exact_kl_residual,
    fit_proportionality,
    gate_fidelity_overlap,
    kl_operators,
    kl_scan,
    min_gate_fidelity,
    predicted_leading_coefficient,
    reference_epsilon,
)
from services.pauli_algebra import PauliString, gauss, parse_pauli
from services.statevector import fidelity
from services.surface_code import build_layout, logical_operator

ONE_X = [f"X{q}" for q in range(1, 14)]

# two-X entries whose published value the exact predictor reproduces
TWO_X_AGREEING = [
    ("X1X3", 0, 1, Fraction(-5, 2)),
    ("X11X13", 0, 1, Fraction(-5, 2)),
    ("X6X8", 0, 1, Fraction(-5)),
    ("X1X2", 0, 0, Fraction(1, 8)),
    ("X12X13", 1, 1, Fraction(1, 8)),
    ("X6X7", 0, 0, Fraction(1, 2)),
    ("X1X6", 0, 0, Fraction(-19, 4)),
    ("X9X11", 1, 1, Fraction(-19, 4)),
    ("X4X6", 0, 0, Fraction(-2)),
    ("X2X4", 0, 0, Fraction(3, 4)),
    ("X7X10", 1, 1, Fraction(3, 4)),
    ("X5X6", 0, 0, Fraction(1, 2)),
    ("X1X5", 0, 0, Fraction(1, 4)),
    ("X1X7", 0, 0, Fraction(1, 4)),
]


def _p(label):
    return parse_pauli(label, 13)


def _row(table, label, i, j):
    hit = table[(table["operator"] == label) & (table["i"] == i) & (table["j"] == j)]
    assert len(hit) == 1
    return hit.iloc[0]


@pytest.fixture(scope="module")
def scan_01():
    return kl_scan(dress_codewords(0.01))


# ---------- gate fidelity ----------

@pytest.mark.parametrize("kappa,expected,tol", [
    (0.01, 0.99988, 5e-5),
    (0.02, 0.99951, 5e-5),
    (0.05, 0.9969, 5e-4),
    (0.1, 0.9877, 5e-4),
    (0.4, 0.809, 5e-4),
    (0.0, 1.0, 1e-12),
])
def test_min_gate_fidelity(kappa, expected, tol):
    assert min_gate_fidelity(kappa) == pytest.approx(expected, abs=tol)


@pytest.mark.parametrize("kappa", [0.05, 0.3, 1.0])
def test_gate_fidelity_overlap_matches_closed_form(kappa):
    assert gate_fidelity_overlap(kappa) == pytest.approx(min_gate_fidelity(kappa))


def test_gate_fidelity_range():
    with pytest.raises(UsageError):
        min_gate_fidelity(1.5)


# ---------- dressed codewords ----------

def test_dressing_operator_terms(layout3):
    y = dressing_operator(layout3)
    assert len(y) == 14
    assert y.coefficient(PauliString()).exact(1) == gauss(0, -5)
    assert y.coefficient(_p("X1")).exact(1) == gauss(0, Fraction(1, 4))
    assert y.coefficient(_p("X7")).exact(1) == gauss(0, Fraction(1, 2))


def test_undressed_codewords_are_ideal(layout3, zero_l):
    dressed = dress_codewords(0.0)
    assert fidelity(dressed.zero, zero_l) == pytest.approx(1.0)
    assert abs(np.vdot(dressed.zero.amplitudes, dressed.one.amplitudes)) < 1e-12
    with pytest.raises(UsageError):
        dressed.codeword(2)


def test_dressed_codewords_stay_orthogonal_and_normalized():
    dressed = dress_codewords(0.05)
    assert dressed.zero.norm == pytest.approx(1.0)
    assert abs(np.vdot(dressed.zero.amplitudes, dressed.one.amplitudes)) < 1e-12


# ---------- operators and exact elements ----------

def test_operator_set():
    ops = kl_operators(13)
    assert len(ops) == 742
    assert len(set(ops)) == 742
    assert max(op.weight for op in ops) == 2


def test_classify_operator():
    assert classify_operator(PauliString()) == "identity"
    assert classify_operator(_p("Z3X5")) == "contains_z"
    assert classify_operator(_p("Y2")) == "contains_z"
    assert classify_operator(_p("X2")) == "one_x"
    assert classify_operator(_p("X1X2")) == "two_x"


def test_code_matrix_elements(layout3):
    site = layout3.sites[1].pauli()
    xl, zl = logical_operator(layout3, "X"), logical_operator(layout3, "Z")
    assert code_matrix_element(layout3, site, 0, 0) == gauss(1)
    assert code_matrix_element(layout3, site, 0, 1) == gauss(0)
    assert code_matrix_element(layout3, xl, 0, 1) == gauss(1)
    assert code_matrix_element(layout3, zl, 1, 1) == gauss(-1)
    assert code_matrix_element(layout3, _p("Z1"), 0, 0) == gauss(0)
    with pytest.raises(UsageError):
        code_matrix_element(layout3, PauliString(anc_x=1), 0, 0)


def test_exact_kl_condition_without_imperfection():
    assert exact_kl_residual() <= 1e-10


@pytest.mark.parametrize("label", ONE_X)
@pytest.mark.parametrize("i,j", [(0, 1), (0, 0), (1, 1)])
def test_predictor_reproduces_one_x_tables(layout3, label, i, j):
    op = _p(label)
    assert predicted_leading_coefficient(layout3, op, i, j) == (reference_epsilon(op, i, j), 0)


@pytest.mark.parametrize("label,i,j,value", TWO_X_AGREEING)
def test_predictor_on_two_x_entries(layout3, label, i, j, value):
    op = _p(label)
    assert reference_epsilon(op, i, j) == value
    assert predicted_leading_coefficient(layout3, op, i, j) == (value, 0)


def test_predictor_departs_from_table_on_x2x7(layout3):
    """X2X7 sits in the table's 1/4 group but the dressing gives 3/4, like X2X4."""
    op = _p("X2X7")
    assert reference_epsilon(op, 0, 0) == Fraction(1, 4)
    assert predicted_leading_coefficient(layout3, op, 0, 0) == (Fraction(3, 4), 0)


def test_reference_table_lookups():
    assert reference_epsilon(_p("X2"), 0, 1) == Fraction(1, 8)
    assert reference_epsilon(_p("X7"), 0, 0) == -5
    assert reference_epsilon(_p("Z1Z2"), 0, 0) == 0
    assert reference_epsilon(_p("X2"), 0, 1, build_layout(5)) is None


# ---------- scans ----------

def test_scan_schema(scan_01):
    assert list(scan_01.columns) == SCAN_COLUMNS
    assert len(scan_01) == 742 * 4


def test_scan_anchor(scan_01):
    row = _row(scan_01, "X2", 0, 1)
    assert row["leading_coeff_over_pi2kappa2"] == pytest.approx(float(ANCHOR_VALUE))
    assert row["predicted"] == pytest.approx(0.125)


def test_scan_agrees_with_exact_predictor(scan_01):
    """Dense overlaps and the symbolic expansion give the same kappa^2 coefficient."""
    gap = (scan_01["leading_coeff_over_pi2kappa2"] - scan_01["predicted"]).abs()
    assert (gap <= 0.05 * scan_01["predicted"].abs() + 1e-3).all()


def test_scan_z_entries_vanish(scan_01):
    z_rows = scan_01[scan_01["class"] == "contains_z"]
    assert np.hypot(z_rows["value_re"], z_rows["value_im"]).max() <= 1e-10
    assert z_rows["matches_reference"].all()


def test_scan_one_x_table_matches(scan_01):
    rows = scan_01[scan_01["class"] == "one_x"]
    assert len(rows) == 13 * 4
    assert rows["matches_reference"].all()


@pytest.mark.parametrize("label,i,j,value", TWO_X_AGREEING)
def test_scan_two_x_entries(scan_01, label, i, j, value):
    row = _row(scan_01, label, i, j)
    assert row["leading_coeff_over_pi2kappa2"] == pytest.approx(float(value), rel=0.05)
    assert row["matches_reference"]


def test_scan_at_smaller_kappa():
    ops = [_p(label) for label in ["X2"] + ONE_X[2:5] + ["X6X8", "Z1"]]
    table = kl_scan(dress_codewords(0.005), ops)
    assert table["matches_reference"].all()


def test_scan_without_imperfection():
    """At kappa = 0 there is no coefficient to compare, only the exact condition."""
    table = kl_scan(dress_codewords(0.0), [PauliString(), _p("X2"), _p("X1X3")])
    assert table["matches_reference"].isna().all()
    off = table[table["i"] != table["j"]]
    assert np.hypot(off["value_re"], off["value_im"]).max() <= 1e-10
    ident = table[(table["operator"] == "I") & (table["i"] == table["j"])]
    assert np.allclose(ident["value_re"], 1.0)


def test_anchor_needs_nonzero_kappa():
    table = kl_scan(dress_codewords(0.0), [_p("X2")], anchor="none")
    with pytest.raises(UsageError):
        fit_proportionality(table)


# ---------- two consecutive measurements ----------

def test_two_measurement_decay():
    a = 1e-3
    decay = consecutive_measurement_demo(a)
    assert decay.p_minus == pytest.approx(a / 2, rel=1e-6)
    assert decay.phase_only_p_minus == pytest.approx(a / 2, rel=1e-6)
    assert decay.delta_f2 > 0
    assert 0.2375 <= decay.delta_f2 / a <= 0.2625
    assert decay.approx_delta_f2 == pytest.approx(a / 4, rel=0.01)
    assert decay.f1 ** 2 == pytest.approx((4 - 3 * a) / (4 - 2 * a))


@pytest.mark.parametrize("a", [0.0, 0.5, -0.1])
def test_two_measurement_range(a):
    with pytest.raises(UsageError):
        consecutive_measurement_demo(a)
