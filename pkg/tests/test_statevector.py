# tests/test_statevector.py
import numpy as np
import pytest

from errors import InfeasibleBranchError, MissingSeedError, UsageError
from services.pauli_algebra import PauliString, parse_pauli, round_deviation
from services.statevector import (
    apply_gate,
    apply_gates,
    apply_pauli,
    apply_pauli_sum,
    basis_state,
    cnot,
    cnot_imperfect,
    cnot_imperfect_matrix,
    cz_kappa,
    extend,
    fidelity,
    from_amplitudes,
    gate_matrix,
    h,
    is_unitary,
    marginal_distribution,
    measure_and_discard,
    measure_qubit,
    postselect,
    postselect_trivial,
    sample,
    single,
    x,
    zero_state,
)


# ---------- states and gates ----------

def test_hadamard_pair_gives_bell_state():
    state = apply_gates(zero_state(2), [h(0), cnot(0, 1)])
    assert np.allclose(state.amplitudes, [1 / np.sqrt(2), 0, 0, 1 / np.sqrt(2)])


def test_qubit_zero_is_least_significant():
    assert np.argmax(np.abs(apply_gate(zero_state(3), x(0)).amplitudes)) == 1
    assert np.argmax(np.abs(apply_gate(zero_state(3), x(2)).amplitudes)) == 4


def test_imperfect_cnot_reduces_to_cnot():
    """kappa = 0 gives the ideal CNOT matrix."""
    assert np.allclose(cnot_imperfect_matrix(0.0), gate_matrix(cnot(0, 1)))


def test_imperfect_cnot_is_unitary():
    for kappa in (0.01, 0.3, 1.0):
        assert is_unitary(cnot_imperfect_matrix(kappa))


def test_imperfect_cnot_leaves_control_zero_alone():
    """With the control in |0> only the residual-free half of the gate acts."""
    state = apply_gate(basis_state(2, 0b00), cnot_imperfect(1, 0, 0.3))
    assert fidelity(state, basis_state(2, 0b00)) == pytest.approx(1.0)


def test_cz_kappa_phase():
    state = apply_gate(basis_state(2, 0b11), cz_kappa(0, 1, 0.25))
    assert state.amplitudes[3] == pytest.approx(np.exp(-1j * np.pi * 0.25))


def test_non_unitary_matrix_rejected():
    with pytest.raises(UsageError):
        apply_gate(zero_state(1), single(0, np.array([[1, 0], [0, 2]])))


def test_bad_targets_rejected():
    with pytest.raises(UsageError):
        apply_gate(zero_state(2), cnot(0, 0))
    with pytest.raises(UsageError):
        apply_gate(zero_state(2), h(3))


def test_from_amplitudes_checks_length():
    with pytest.raises(UsageError):
        from_amplitudes([1, 0, 0])
    with pytest.raises(UsageError):
        from_amplitudes([])
    assert from_amplitudes([1, 1]).norm == pytest.approx(1.0)


def test_extend_puts_new_qubits_on_top():
    state = extend(basis_state(2, 0b01), 2)
    assert state.num_qubits == 4
    assert state.amplitudes[1] == 1


# ---------- measurement ----------

def test_marginal_distribution_of_plus_state():
    probs = marginal_distribution(apply_gate(zero_state(2), h(1)), [1])
    assert np.allclose(probs, [0.5, 0.5])


def test_postselect_outcome_collapses_state():
    outcome, prob, post = measure_qubit(apply_gate(zero_state(1), h(0)), 0, postselect(-1))
    assert outcome == -1
    assert prob == pytest.approx(0.5)
    assert fidelity(post, basis_state(1, 1)) == pytest.approx(1.0)


def test_infeasible_postselection_raises():
    with pytest.raises(InfeasibleBranchError) as info:
        measure_qubit(zero_state(1), 0, postselect(-1))
    assert info.value.probability == 0.0


def test_sampling_needs_seed():
    with pytest.raises(MissingSeedError):
        measure_qubit(apply_gate(zero_state(1), h(0)), 0, sample())


def test_sampling_is_deterministic_per_seed():
    plus = apply_gates(zero_state(3), [h(0), h(1), h(2)])
    a = measure_and_discard(plus, [0, 1, 2], sample(seed=11))[0]
    b = measure_and_discard(plus, [0, 1, 2], sample(seed=11))[0]
    assert a == b


def test_measure_and_discard_keeps_remaining_order():
    """Dropping the middle qubit leaves qubits 0 and 2 as the new 0 and 1."""
    state = basis_state(3, 0b101)
    outcomes, prob, rest = measure_and_discard(state, [1], postselect_trivial())
    assert outcomes == (1,)
    assert prob == pytest.approx(1.0)
    assert rest.num_qubits == 2
    assert fidelity(rest, basis_state(2, 0b11)) == pytest.approx(1.0)


# ---------- Pauli action ----------

def test_apply_pauli_y_phase():
    """Y|0> = i|1>."""
    out = apply_pauli(zero_state(1), PauliString(data_x=1, data_z=1))
    assert out.amplitudes[1] == pytest.approx(1j)


def test_apply_pauli_with_ancilla_offset():
    out = apply_pauli(zero_state(3), PauliString(anc_x=1), num_data=2)
    assert out.amplitudes[4] == 1


def test_apply_pauli_range_check():
    with pytest.raises(UsageError):
        apply_pauli(zero_state(2), parse_pauli("X3", 3))


def test_apply_pauli_sum_at_zero_kappa_is_identity(layout3, zero_l):
    """The deviation operator is the identity when kappa vanishes."""
    op = round_deviation(layout3, "X", k=1, order=1)
    full = extend(zero_l, len(layout3.sites))
    out = apply_pauli_sum(full, op, 0.0)
    assert np.allclose(out.amplitudes, full.amplitudes)


def test_fidelity_register_mismatch():
    with pytest.raises(UsageError):
        fidelity(zero_state(1), zero_state(2))
