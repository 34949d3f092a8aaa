# tests/test_pauli_algebra.py
from fractions import Fraction

import numpy as np
import pytest

from errors import UsageError
from services.pauli_algebra import (
    KappaPoly,
    PauliString,
    PauliSum,
    add,
    compose,
    config_weight,
    dagger,
    deviation_for_stabilizer,
    evaluated_terms,
    gauss,
    group_by_ancilla_config,
    multiply,
    parse_pauli,
    round_deviation,
    to_canonical_json,
    trivial_configuration,
)
from services.surface_code import build_layout, support_mask
from services.worst_case import round_weight_coefficients


def _z(*qubits, anc=0):
    return PauliString(data_z=support_mask(qubits), anc_x=anc)


def _i_coeff(op, string):
    """Imaginary kappa-linear coefficient of a term, in units of pi*kappa."""
    return op.coefficient(string).exact(1)[1]


# ---------- strings and coefficients ----------

def test_compose_phases():
    """XZ = -iY and ZX = iY."""
    xs, zs = PauliString(data_x=1), PauliString(data_z=1)
    y = PauliString(data_x=1, data_z=1)
    assert compose(xs, zs) == (y, 3)
    assert compose(zs, xs) == (y, 1)
    assert compose(y, y) == (PauliString(), 0)


def test_parse_and_label():
    p = parse_pauli("Z3 X5", 13)
    assert p.label() == "Z3X5"
    assert parse_pauli("y3", 13).label() == "Y3"
    assert parse_pauli("I", 13) == PauliString()


def test_parse_rejects_bad_labels():
    for bad in ("X0", "X14", "X3X3", "W1", "X3Q"):
        with pytest.raises(UsageError):
            parse_pauli(bad, 13)


def test_commutation():
    assert not parse_pauli("X1", 13).commutes_with(parse_pauli("Z1", 13))
    assert parse_pauli("X1X2", 13).commutes_with(parse_pauli("Z1Z2", 13))


def test_kappa_poly_abs2_and_truncation():
    """|1 - 5i x|^2 = 1 + 25 x^2 up to the cap."""
    p = KappaPoly((gauss(1), gauss(0, -5)))
    assert p.abs2().exact(2) == gauss(25)
    assert p.abs2().exact(1) == gauss(0)
    assert p.abs2(order=1).degree == 0
    assert p.evaluate(0.01) == pytest.approx(1 - 5j * np.pi * 0.01)


def test_sum_arithmetic():
    one = PauliSum.identity(2)
    x1 = PauliSum(2, 0, {PauliString(data_x=1): KappaPoly.monomial(1, 0, 1)})
    total = add(one, x1)
    assert len(total) == 2
    # (I + i x X1)(I + i x X1) = I + 2i x X1 - x^2 I
    square = multiply(total, total, order=2)
    assert square.coefficient(PauliString()).exact(2) == gauss(-1)
    assert square.coefficient(PauliString(data_x=1)).exact(1) == gauss(0, 2)
    assert multiply(total, total, order=1).coefficient(PauliString()).degree == 0


def test_register_mismatch_rejected():
    with pytest.raises(UsageError):
        add(PauliSum.identity(2), PauliSum.identity(3))
    with pytest.raises(UsageError):
        PauliSum(2, 0, {PauliString(data_x=4): KappaPoly.constant(1)})


# ---------- deviation operators ----------

def test_single_stabilizer_brackets():
    dev = deviation_for_stabilizer((1, 2, 4), 0, "Z", 13, 6)
    assert dev.coefficient(PauliString()).exact(1) == gauss(0, Fraction(-3, 4))
    assert dev.coefficient(PauliString(anc_x=1)).exact(1) == gauss(0, Fraction(3, 4))
    assert dev.coefficient(_z(2)).exact(1) == gauss(0, Fraction(1, 4))
    assert dev.coefficient(_z(2, anc=1)).exact(1) == gauss(0, Fraction(-1, 4))
    with pytest.raises(UsageError):
        deviation_for_stabilizer((1, 2), 0, "Z", 13, 6)


def test_d3_plaquette_round_operator(layout3):
    """First round of plaquette measurements at d=3, term by term."""
    op = round_deviation(layout3, "Z", k=1, order=1)
    assert len(op) == 40
    assert op.coefficient(PauliString()).exact(0) == gauss(1)
    assert _i_coeff(op, PauliString()) == -5
    trivial = trivial_configuration(op)
    assert len(trivial) == 14
    for q in (1, 3, 11, 13):
        assert _i_coeff(op, _z(q)) == Fraction(1, 4)
    for q in (2, 4, 5, 7, 9, 10, 12):
        assert _i_coeff(op, _z(q)) == Fraction(1, 2)
    assert _i_coeff(op, _z(6)) == Fraction(1, 4)
    # slot 2 is the weight-4 plaquette {4, 6, 7, 9}
    assert _i_coeff(op, PauliString(anc_x=1 << 2)) == 1
    assert _i_coeff(op, _z(7, anc=1 << 2)) == Fraction(-1, 4)
    assert _i_coeff(op, PauliString(anc_x=1)) == Fraction(3, 4)


def test_d3_configuration_groups(layout3):
    groups = group_by_ancilla_config(round_deviation(layout3, "Z", k=1, order=1))
    assert sorted(groups) == [0, 1, 2, 4, 8, 16, 32]
    assert [len(groups[1 << j]) for j in range(6)] == [4, 4, 5, 5, 4, 4]


def test_zero_order_is_identity(layout3):
    op = round_deviation(layout3, "X", k=1, order=0)
    assert op == PauliSum.identity(13, 6)


def test_first_order_operator_is_unitary_to_first_order(layout3):
    op = round_deviation(layout3, "X", k=1, order=1)
    assert multiply(dagger(op), op, order=1) == PauliSum.identity(13, 6)


@pytest.mark.parametrize("d", range(3, 16, 2))
@pytest.mark.parametrize("k", [1, 2])
@pytest.mark.parametrize("basis", ["Z", "X"])
def test_config_weights_match_closed_forms(d, k, basis):
    """Trivial and total branch weights agree with the closed-form coefficients."""
    op = round_deviation(build_layout(d), basis, k=k, order=1)
    weights = round_weight_coefficients(d, k)
    groups = group_by_ancilla_config(op)
    assert _i_coeff(op, PauliString()) == Fraction(-k * (2 * d * d - 3 * d + 1), 2)
    assert config_weight(groups[0]).exact(2)[0] == weights.numerator
    total = sum((config_weight(g).exact(2)[0] for g in groups.values()), Fraction(0))
    assert total == weights.inverse_normalization


def test_distance_seven_second_round_identity():
    """1 - 78 i pi kappa at d=7, k=2."""
    op = round_deviation(build_layout(7), "X", k=2, order=1)
    assert _i_coeff(op, PauliString()) == -78


def test_round_deviation_argument_checks(layout3):
    with pytest.raises(UsageError):
        round_deviation(layout3, "Y")
    with pytest.raises(UsageError):
        round_deviation(layout3, "Z", k=0)
    with pytest.raises(UsageError):
        round_deviation(layout3, "Z", order=3, cap=2)


# ---------- serialization ----------

def test_canonical_json_is_stable(layout3):
    op = round_deviation(layout3, "Z", k=1, order=1)
    a, b = to_canonical_json(op), to_canonical_json(round_deviation(layout3, "Z", k=1, order=1))
    assert a == b
    assert len(a["terms"]) == 40
    assert a["terms"][0]["label"] == "I"
    assert a["terms"][0]["coeffs"] == [["1", "0"], ["0", "-5"]]


def test_evaluated_terms(layout3):
    op = round_deviation(layout3, "Z", k=1, order=1)
    values = dict((s.label(), v) for s, v in evaluated_terms(op, 0.01))
    assert values["I"] == pytest.approx(1 - 5j * np.pi * 0.01)
    assert evaluated_terms(op, 0.0) == [(PauliString(), 1 + 0j)]
