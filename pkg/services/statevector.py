# services/statevector.py
"""Dense statevector simulation of small registers.

Qubit q is bit q of the basis index (bit 0 least significant). Ancilla
outcome +1 corresponds to |0>, -1 to |1>.
"""
import logging
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from errors import InfeasibleBranchError, MissingSeedError, UsageError

logger = logging.getLogger(__name__)

NORM_TOL = 1e-10
UNITARY_TOL = 1e-12
FEASIBLE_MIN = 1e-14

SINGLE_QUBIT_KINDS = ("H", "X", "Z", "U")
TWO_QUBIT_KINDS = ("CNOT", "CZ", "CZ_KAPPA", "CNOT_IMPERFECT", "CU")

_I2 = np.eye(2, dtype=complex)
_H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
_X = np.array([[0, 1], [1, 0]], dtype=complex)
_Z = np.array([[1, 0], [0, -1]], dtype=complex)
_CNOT = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex)
_CZ = np.diag([1, 1, 1, -1]).astype(complex)


@dataclass(frozen=True, eq=False)
class StateVector:
    num_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self):
        if self.amplitudes.shape != (1 << self.num_qubits,):
            raise UsageError(
                f"amplitude array of shape {self.amplitudes.shape} does not match {self.num_qubits} qubits"
            )

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def normalized(self) -> "StateVector":
        norm = self.norm
        if norm < FEASIBLE_MIN:
            raise InfeasibleBranchError("cannot normalize a zero vector", probability=0.0)
        return StateVector(self.num_qubits, self.amplitudes / norm)


@dataclass(frozen=True, eq=False)
class GateSpec:
    kind: str
    targets: Tuple[int, ...]
    kappa: float = 0.0
    matrix: Optional[np.ndarray] = None


@dataclass(frozen=True, eq=False)
class MeasureMode:
    kind: str  # "sample" | "postselect" | "postselect_trivial"
    seed: Optional[int] = None
    outcome: Optional[Tuple[int, ...]] = None
    rng: Optional[np.random.Generator] = None


# ---------- states ----------

def zero_state(num_qubits: int) -> StateVector:
    return basis_state(num_qubits, 0)

def basis_state(num_qubits: int, index: int) -> StateVector:
    if not 0 <= index < (1 << num_qubits):
        raise UsageError(f"basis index {index} outside a {num_qubits}-qubit register")
    amps = np.zeros(1 << num_qubits, dtype=complex)
    amps[index] = 1.0
    return StateVector(num_qubits, amps)

def from_amplitudes(amplitudes: Sequence[complex], normalize: bool = True) -> StateVector:
    amps = np.asarray(amplitudes, dtype=complex).copy()
    if amps.ndim != 1 or amps.size == 0:
        raise UsageError(f"expected a non-empty flat amplitude list, got shape {amps.shape}")
    num_qubits = int(amps.size).bit_length() - 1
    if (1 << num_qubits) != amps.size:
        raise UsageError(f"amplitude count {amps.size} is not a power of two")
    state = StateVector(num_qubits, amps)
    return state.normalized() if normalize else state

def extend(state: StateVector, extra: int) -> StateVector:
    """Append `extra` qubits in |0> as the most significant bits."""
    amps = np.zeros(1 << (state.num_qubits + extra), dtype=complex)
    amps[: state.amplitudes.size] = state.amplitudes
    return StateVector(state.num_qubits + extra, amps)


# ---------- gates ----------

def h(q: int) -> GateSpec:
    return GateSpec("H", (q,))

def x(q: int) -> GateSpec:
    return GateSpec("X", (q,))

def z(q: int) -> GateSpec:
    return GateSpec("Z", (q,))

def single(q: int, matrix: np.ndarray) -> GateSpec:
    return GateSpec("U", (q,), matrix=np.asarray(matrix, dtype=complex))

def cnot(control: int, target: int) -> GateSpec:
    return GateSpec("CNOT", (control, target))

def cz(control: int, target: int) -> GateSpec:
    return GateSpec("CZ", (control, target))

def cz_kappa(control: int, target: int, kappa: float) -> GateSpec:
    return GateSpec("CZ_KAPPA", (control, target), kappa=float(kappa))

def cnot_imperfect(control: int, target: int, kappa: float) -> GateSpec:
    return GateSpec("CNOT_IMPERFECT", (control, target), kappa=float(kappa))

def controlled(control: int, target: int, matrix: np.ndarray) -> GateSpec:
    return GateSpec("CU", (control, target), matrix=np.asarray(matrix, dtype=complex))


def cz_kappa_matrix(kappa: float) -> np.ndarray:
    return np.diag([1, 1, 1, np.exp(-1j * np.pi * kappa)]).astype(complex)

def cnot_imperfect_matrix(kappa: float) -> np.ndarray:
    # two-qubit index is 2*control + target, so H_t is I (x) H
    h_t = np.kron(_I2, _H)
    return h_t @ cz_kappa_matrix(kappa) @ _CZ @ h_t

def _controlled_matrix(u: np.ndarray) -> np.ndarray:
    out = np.eye(4, dtype=complex)
    out[2:, 2:] = u
    return out

def is_unitary(matrix: np.ndarray, tol: float = UNITARY_TOL) -> bool:
    eye = np.eye(matrix.shape[0])
    return bool(np.max(np.abs(matrix.conj().T @ matrix - eye)) <= tol)

def gate_matrix(gate: GateSpec) -> np.ndarray:
    kind = gate.kind
    if kind == "H":
        return _H
    if kind == "X":
        return _X
    if kind == "Z":
        return _Z
    if kind == "CNOT":
        return _CNOT
    if kind == "CZ":
        return _CZ
    if kind == "CZ_KAPPA":
        return cz_kappa_matrix(gate.kappa)
    if kind == "CNOT_IMPERFECT":
        return cnot_imperfect_matrix(gate.kappa)
    if kind in ("U", "CU"):
        if gate.matrix is None or gate.matrix.shape != (2, 2):
            raise UsageError(f"{kind} gate needs a 2x2 matrix")
        if not is_unitary(gate.matrix):
            raise UsageError(f"{kind} gate matrix is not unitary")
        return gate.matrix if kind == "U" else _controlled_matrix(gate.matrix)
    raise UsageError(f"unknown gate kind {kind!r}")


def _check_targets(state: StateVector, gate: GateSpec) -> None:
    expected = 1 if gate.kind in SINGLE_QUBIT_KINDS else 2
    if len(gate.targets) != expected:
        raise UsageError(f"{gate.kind} takes {expected} target(s), got {len(gate.targets)}")
    for q in gate.targets:
        if not 0 <= q < state.num_qubits:
            raise UsageError(f"qubit {q} outside a {state.num_qubits}-qubit register")
    if len(set(gate.targets)) != len(gate.targets):
        raise UsageError(f"duplicate targets {gate.targets}")

def _apply_matrix(amps: np.ndarray, num_qubits: int, matrix: np.ndarray, qubits: Sequence[int]) -> np.ndarray:
    k = len(qubits)
    psi = amps.reshape([2] * num_qubits)
    # axis 0 of the reshaped tensor is the most significant qubit
    axes = [num_qubits - 1 - q for q in qubits]
    gate = matrix.reshape([2] * (2 * k))
    out = np.tensordot(gate, psi, axes=(list(range(k, 2 * k)), axes))
    out = np.moveaxis(out, list(range(k)), axes)
    return out.reshape(-1)

def apply_gate(state: StateVector, gate: GateSpec) -> StateVector:
    _check_targets(state, gate)
    matrix = gate_matrix(gate)
    amps = _apply_matrix(state.amplitudes, state.num_qubits, matrix, gate.targets)
    return StateVector(state.num_qubits, amps)

def apply_gates(state: StateVector, gates: Sequence[GateSpec]) -> StateVector:
    for gate in gates:
        state = apply_gate(state, gate)
    return state


# ---------- measurement ----------

def sample(seed: Optional[int] = None, rng: Optional[np.random.Generator] = None) -> MeasureMode:
    return MeasureMode("sample", seed=seed, rng=rng)

def postselect(outcome) -> MeasureMode:
    if isinstance(outcome, int):
        outcome = (outcome,)
    outcome = tuple(int(o) for o in outcome)
    if any(o not in (1, -1) for o in outcome):
        raise UsageError(f"outcomes must be +1 or -1, got {outcome}")
    return MeasureMode("postselect", outcome=outcome)

def postselect_trivial() -> MeasureMode:
    return MeasureMode("postselect_trivial")

def _generator(mode: MeasureMode) -> np.random.Generator:
    if mode.rng is not None:
        return mode.rng
    if mode.seed is None:
        raise MissingSeedError("sample mode requires a seed")
    return np.random.default_rng(mode.seed)

def _pattern_of(outcomes: Sequence[int]) -> int:
    return sum(1 << j for j, o in enumerate(outcomes) if o == -1)

def _outcomes_of(pattern: int, k: int) -> Tuple[int, ...]:
    return tuple(-1 if (pattern >> j) & 1 else 1 for j in range(k))

def marginal_distribution(state: StateVector, qubits: Sequence[int]) -> np.ndarray:
    """Probabilities of every outcome pattern; bit j of the pattern is qubits[j] reading -1."""
    for q in qubits:
        if not 0 <= q < state.num_qubits:
            raise UsageError(f"qubit {q} outside a {state.num_qubits}-qubit register")
    idx = np.arange(state.amplitudes.size)
    pattern = np.zeros_like(idx)
    for j, q in enumerate(qubits):
        pattern |= ((idx >> q) & 1) << j
    weights = np.abs(state.amplitudes) ** 2
    return np.bincount(pattern, weights=weights, minlength=1 << len(qubits))

def _choose(probs: np.ndarray, mode: MeasureMode, k: int) -> int:
    if mode.kind == "sample":
        u = _generator(mode).random() * float(probs.sum())
        pattern = int(np.searchsorted(np.cumsum(probs), u, side="right"))
        return min(pattern, probs.size - 1)
    if mode.kind == "postselect_trivial":
        return 0
    if mode.kind == "postselect":
        if mode.outcome is None or len(mode.outcome) != k:
            raise UsageError(f"postselect needs {k} outcome(s), got {mode.outcome}")
        return _pattern_of(mode.outcome)
    raise UsageError(f"unknown measurement mode {mode.kind!r}")

def measure_qubit(state: StateVector, qubit: int, mode: MeasureMode) -> Tuple[int, float, StateVector]:
    probs = marginal_distribution(state, [qubit])
    pattern = _choose(probs, mode, 1)
    probability = float(probs[pattern])
    outcome = _outcomes_of(pattern, 1)[0]
    if probability <= FEASIBLE_MIN:
        raise InfeasibleBranchError(f"outcome {outcome:+d} on qubit {qubit} is infeasible", probability)
    idx = np.arange(state.amplitudes.size)
    keep = ((idx >> qubit) & 1) == pattern
    amps = np.where(keep, state.amplitudes, 0.0) / np.sqrt(probability)
    return outcome, probability, StateVector(state.num_qubits, amps)

def measure_and_discard(state: StateVector, qubits: Sequence[int], mode: MeasureMode
                        ) -> Tuple[Tuple[int, ...], float, StateVector]:
    """Measure `qubits` jointly, then drop them; remaining qubits keep their relative order."""
    probs = marginal_distribution(state, qubits)
    pattern = _choose(probs, mode, len(qubits))
    probability = float(probs[pattern])
    outcomes = _outcomes_of(pattern, len(qubits))
    if probability <= FEASIBLE_MIN:
        raise InfeasibleBranchError(f"outcome pattern {outcomes} is infeasible", probability)
    n = state.num_qubits
    index = [slice(None)] * n
    for j, q in enumerate(qubits):
        index[n - 1 - q] = (pattern >> j) & 1
    amps = state.amplitudes.reshape([2] * n)[tuple(index)].reshape(-1) / np.sqrt(probability)
    return outcomes, probability, StateVector(n - len(qubits), amps)


# ---------- comparisons and Pauli action ----------

def fidelity(a: StateVector, b: StateVector) -> float:
    if a.num_qubits != b.num_qubits:
        raise UsageError(f"fidelity between {a.num_qubits}- and {b.num_qubits}-qubit states")
    return float(min(1.0, abs(np.vdot(a.amplitudes, b.amplitudes))))

def _parity(values: np.ndarray, mask: int) -> np.ndarray:
    out = np.zeros_like(values)
    q = 0
    while mask >> q:
        if (mask >> q) & 1:
            out ^= (values >> q) & 1
        q += 1
    return out

def _apply_masks(amps: np.ndarray, x_mask: int, z_mask: int) -> np.ndarray:
    # Y on a qubit is the (x, z) = (1, 1) pair, i.e. i * X Z
    idx = np.arange(amps.size)
    signs = 1 - 2 * _parity(idx, z_mask)
    phase = 1j ** (bin(x_mask & z_mask).count("1") % 4)
    out = np.empty_like(amps)
    out[idx ^ x_mask] = phase * signs * amps
    return out

def apply_pauli(state: StateVector, pauli, num_data: Optional[int] = None) -> StateVector:
    """Apply a PauliString; ancilla bits sit above the first `num_data` qubits."""
    offset = state.num_qubits if num_data is None else num_data
    if pauli.anc_x and num_data is None:
        raise UsageError("ancilla Pauli factors need the data register size")
    x_mask = pauli.data_x | (pauli.anc_x << offset)
    if max(x_mask, pauli.data_z).bit_length() > state.num_qubits:
        raise UsageError(f"{pauli.label()} acts outside a {state.num_qubits}-qubit register")
    return StateVector(state.num_qubits, _apply_masks(state.amplitudes, x_mask, pauli.data_z))

def apply_pauli_sum(state: StateVector, op, kappa: float) -> StateVector:
    """Linear action of a PauliSum evaluated at `kappa`; the result is not normalized."""
    if not np.isfinite(kappa):
        raise UsageError(f"kappa must be finite, got {kappa}")
    if op.num_data + op.num_anc > state.num_qubits:
        raise UsageError(
            f"operator on {op.num_data}+{op.num_anc} qubits exceeds a {state.num_qubits}-qubit register"
        )
    out = np.zeros_like(state.amplitudes)
    for string, coeff in op.items():
        value = coeff.evaluate(kappa)
        if value == 0:
            continue
        x_mask = string.data_x | (string.anc_x << op.num_data)
        out += value * _apply_masks(state.amplitudes, x_mask, string.data_z)
    return StateVector(state.num_qubits, out)

def expectation(state: StateVector, op, kappa: float) -> complex:
    return complex(np.vdot(state.amplitudes, apply_pauli_sum(state, op, kappa).amplitudes))
