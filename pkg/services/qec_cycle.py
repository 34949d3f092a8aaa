# services/qec_cycle.py
"""Two-round syndrome extraction with imperfect CNOTs on the d=3 code.

One cycle measures every plaquette (Z) stabilizer, decodes and corrects,
then does the same for every site (X) stabilizer. All ancillas of a round
sit in the register together and are measured after the whole ladder.
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import combinations
from typing import Any, Dict, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from config import get_config
from errors import CapacityError, InfeasibleBranchError, UsageError
from models import CycleConfig
from services.pauli_algebra import PauliString, parse_pauli, round_deviation
from services.statevector import (
    MeasureMode,
    StateVector,
    apply_gates,
    apply_pauli,
    apply_pauli_sum,
    cnot_imperfect,
    extend,
    fidelity,
    h,
    marginal_distribution,
    measure_and_discard,
    postselect,
    postselect_trivial,
    sample,
)
from services.surface_code import (
    SurfaceLayout,
    build_layout,
    logical_operator,
    prepare_logical_zero,
)

logger = logging.getLogger(__name__)

ROUND_ORDER = ("Z", "X")
COSET_LABELS = ("I", "X_L", "Z_L", "X_LZ_L")
COSET_TIE_TOL = 1e-12


class RoundResult(NamedTuple):
    state: StateVector
    outcomes: Dict[int, int]
    probability: float


@dataclass(frozen=True)
class RoundRecord:
    cycle: int
    basis: str
    outcomes: Dict[int, int]
    probability: float
    correction: str


@dataclass
class SyndromeRecord:
    rounds: List[RoundRecord] = field(default_factory=list)

    @property
    def probability(self) -> float:
        return float(np.prod([r.probability for r in self.rounds])) if self.rounds else 1.0

    def corrections(self, cycle: int) -> List[str]:
        return [r.correction for r in self.rounds if r.cycle == cycle]


@dataclass
class Trajectory:
    fidelities: List[float]
    syndrome: SyndromeRecord
    final_state: StateVector
    logical_label: str
    trial: int = 0

    @property
    def logical_error_flag(self) -> bool:
        return self.logical_label != "I"

    @property
    def final_fidelity(self) -> float:
        return self.fidelities[-1] if self.fidelities else 1.0

    @property
    def probability(self) -> float:
        return self.syndrome.probability

    def cycle_records(self) -> List[Dict[str, Any]]:
        """One JSON-ready record per cycle."""
        out = []
        for cycle, fid in enumerate(self.fidelities, start=1):
            rounds = [r for r in self.syndrome.rounds if r.cycle == cycle]
            out.append({
                "trial": self.trial,
                "cycle": cycle,
                "rounds": [
                    {"basis": r.basis,
                     "outcomes": {f"a{a}": o for a, o in sorted(r.outcomes.items())},
                     "probability": r.probability,
                     "correction": r.correction}
                    for r in rounds
                ],
                "fidelity": fid,
            })
        return out


@dataclass(frozen=True)
class PathologyReport:
    kappa: float
    feasible: bool
    probability: float
    correction: str
    components: Dict[str, float]
    identity_weight: float

    @property
    def residual_weight(self) -> float:
        return 1.0 - self.identity_weight if self.feasible else 0.0

    def to_dict(self) -> Dict[str, Any]:
        return {
            "kappa": self.kappa,
            "feasible": self.feasible,
            "probability": self.probability,
            "correction": self.correction,
            "identity_weight": self.identity_weight,
            "residual_weight": self.residual_weight,
            "components": dict(sorted(self.components.items(), key=lambda kv: -kv[1])),
        }


# ---------- one round ----------

def _check_register(layout: SurfaceLayout, basis: str) -> int:
    num_anc = len(layout.stabilizers(basis))
    cap = get_config().MAX_QUBITS
    if layout.n + num_anc > cap:
        raise CapacityError(
            f"a d={layout.d} round needs {layout.n + num_anc} qubits, cap is {cap}; "
            "use the worst-case command for larger distances"
        )
    return num_anc

def apply_round_circuit(state: StateVector, layout: SurfaceLayout, basis: str, kappa: float) -> StateVector:
    """Data register plus fresh round ancillas, after the imperfect CNOT ladders, before measurement."""
    basis = basis.upper()
    num_anc = _check_register(layout, basis)
    if state.num_qubits != layout.n:
        raise UsageError(f"round expects {layout.n} data qubits, got {state.num_qubits}")
    gates = []
    for slot, stab in enumerate(layout.stabilizers(basis)):
        anc = layout.n + slot
        if basis == "X":
            gates.append(h(anc))
        for q in stab.support:
            if basis == "Z":
                gates.append(cnot_imperfect(q - 1, anc, kappa))
            else:
                gates.append(cnot_imperfect(anc, q - 1, kappa))
        if basis == "X":
            gates.append(h(anc))
    return apply_gates(extend(state, num_anc), gates)

def _ancilla_qubits(layout: SurfaceLayout, basis: str) -> List[int]:
    return [layout.n + slot for slot in range(len(layout.stabilizers(basis)))]

def round_distribution(state: StateVector, layout: SurfaceLayout, basis: str, kappa: float) -> np.ndarray:
    """Born probabilities of all 2^n_a outcome patterns; bit j is slot j reading -1."""
    full = apply_round_circuit(state, layout, basis, kappa)
    return marginal_distribution(full, _ancilla_qubits(layout, basis))

def run_round(state: StateVector, layout: SurfaceLayout, basis: str, kappa: float,
              mode: MeasureMode) -> RoundResult:
    basis = basis.upper()
    full = apply_round_circuit(state, layout, basis, kappa)
    outcomes, probability, data = measure_and_discard(full, _ancilla_qubits(layout, basis), mode)
    labelled = {stab.ancilla: o for stab, o in zip(layout.stabilizers(basis), outcomes)}
    logger.debug("%s round: outcomes %s, p=%.6g", basis, labelled, probability)
    return RoundResult(data, labelled, probability)

def deviation_residual(layout: SurfaceLayout, basis: str, kappa: float,
                       state: Optional[StateVector] = None) -> float:
    """|| exact imperfect round - first-order deviation after the ideal round || on `state` (default |0_L>)."""
    state = state if state is not None else prepare_logical_zero(layout, "ideal").state
    exact = apply_round_circuit(state, layout, basis, kappa)
    ideal = apply_round_circuit(state, layout, basis, 0.0)
    approx = apply_pauli_sum(ideal, round_deviation(layout, basis, k=1, order=1), kappa)
    return float(np.linalg.norm(exact.amplitudes - approx.amplitudes))

def deviation_scaling(layout: SurfaceLayout, basis: str, kappa: float) -> float:
    """Residual ratio between kappa and kappa/2; close to 4 when the first-order operator is right."""
    half = deviation_residual(layout, basis, kappa / 2)
    if half == 0:
        raise UsageError("residual vanishes; kappa must be > 0")
    return deviation_residual(layout, basis, kappa) / half


# ---------- decoding ----------

@lru_cache(maxsize=None)
def _min_weight_chain(d: int, basis: str, flagged: frozenset) -> int:
    layout = build_layout(d)
    slots = {stab.ancilla: j for j, stab in enumerate(layout.stabilizers(basis))}
    target = sum(1 << slots[a] for a in flagged)
    signature = []
    for q in range(1, layout.n + 1):
        sig = 0
        for j, stab in enumerate(layout.stabilizers(basis)):
            if q in stab.support:
                sig |= 1 << j
        signature.append(sig)
    for weight in range(layout.n + 1):
        for chain in combinations(range(layout.n), weight):
            sig = 0
            for q in chain:
                sig ^= signature[q]
            if sig == target:
                return sum(1 << q for q in chain)
    raise UsageError(f"no chain reproduces syndrome {sorted(flagged)}")

def decode(layout: SurfaceLayout, basis: str, syndrome: Dict[int, int]) -> PauliString:
    """Minimum-weight correction for one basis' outcomes, lowest qubit ids first on ties.

    Plaquette outcomes give an X correction, site outcomes a Z correction.
    """
    basis = basis.upper()
    known = {stab.ancilla for stab in layout.stabilizers(basis)}
    unknown = set(syndrome) - known
    if unknown:
        raise UsageError(f"ancillas {sorted(unknown)} are not {basis} stabilizers")
    flagged = frozenset(a for a, o in syndrome.items() if o == -1)
    mask = _min_weight_chain(layout.d, basis, flagged)
    return PauliString(data_x=mask) if basis == "Z" else PauliString(data_z=mask)


# ---------- cycles ----------

def classify_logical(state: StateVector, ideal: StateVector, layout: SurfaceLayout) -> Tuple[str, List[float]]:
    xl, zl = logical_operator(layout, "X"), logical_operator(layout, "Z")
    cosets = [
        ideal,
        apply_pauli(ideal, xl),
        apply_pauli(ideal, zl),
        apply_pauli(apply_pauli(ideal, zl), xl),
    ]
    overlaps = [fidelity(c, state) for c in cosets]
    best = 0
    for idx in range(1, len(overlaps)):
        if overlaps[idx] > overlaps[best] + COSET_TIE_TOL:
            best = idx
    return COSET_LABELS[best], overlaps

def _round_modes(config: CycleConfig, rng: Optional[np.random.Generator]) -> List[MeasureMode]:
    rounds = 2 * config.cycles
    if config.measurement_mode == "sample":
        if rng is None:
            rng = np.random.default_rng(config.seed) if config.seed is not None else None
        return [sample(seed=config.seed, rng=rng)] * rounds
    if config.measurement_mode == "postselect":
        return [postselect(p) for p in config.patterns]
    return [postselect_trivial()] * rounds

def ideal_codeword(layout: SurfaceLayout, logical_state: int = 0) -> StateVector:
    zero = prepare_logical_zero(layout, "ideal").state
    return apply_pauli(zero, logical_operator(layout, "X")) if logical_state else zero

def run_qec_cycles(config: CycleConfig, rng: Optional[np.random.Generator] = None,
                   trial: int = 0) -> Trajectory:
    if config.d != 3:
        raise CapacityError(f"exact cycling supports d=3 only, got d={config.d}; use the worst-case command")
    layout = build_layout(config.d)
    ideal = ideal_codeword(layout, config.logical_state)
    state = ideal
    if config.injected_error:
        state = apply_pauli(state, parse_pauli(config.injected_error, layout.n))

    modes = _round_modes(config, rng)
    syndrome = SyndromeRecord()
    fidelities: List[float] = []
    for cycle in range(1, config.cycles + 1):
        for r, basis in enumerate(ROUND_ORDER):
            mode = modes[2 * (cycle - 1) + r]
            result = run_round(state, layout, basis, config.kappa, mode)
            correction = decode(layout, basis, result.outcomes)
            state = apply_pauli(result.state, correction)
            syndrome.rounds.append(
                RoundRecord(cycle, basis, result.outcomes, result.probability, correction.label())
            )
        if config.record_fidelity or cycle == config.cycles:
            fidelities.append(fidelity(ideal, state))

    label, _ = classify_logical(state, ideal, layout)
    logger.debug("trial %d: p=%.6g, fidelity %.10f, coset %s",
                 trial, syndrome.probability, fidelities[-1], label)
    return Trajectory(fidelities, syndrome, state, label, trial)

def run_trials(config: CycleConfig, trials: int, threads: Optional[int] = None) -> List[Trajectory]:
    """Independent trajectories, each with its own child of SeedSequence(seed), in trial order."""
    if trials < 1:
        raise UsageError(f"trials must be >= 1, got {trials}")
    if config.measurement_mode == "sample" and config.seed is None:
        raise UsageError("sample mode requires a seed")
    threads = threads or get_config().THREADS
    children = np.random.SeedSequence(config.seed).spawn(trials) if config.seed is not None else [None] * trials

    def _one(idx: int) -> Trajectory:
        rng = np.random.default_rng(children[idx]) if children[idx] is not None else None
        return run_qec_cycles(config, rng=rng, trial=idx)

    if threads > 1 and trials > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(_one, range(trials)))
    else:
        results = [_one(idx) for idx in range(trials)]
    flagged = sum(t.logical_error_flag for t in results)
    logger.info("%d trials at kappa=%g: %d logical flags", trials, config.kappa, flagged)
    return results


# ---------- correction pathology ----------

def _candidate_errors(n: int) -> List[PauliString]:
    out = [PauliString()]
    for q in range(n):
        bit = 1 << q
        out += [PauliString(data_x=bit), PauliString(data_x=bit, data_z=bit), PauliString(data_z=bit)]
    for a in range(n):
        for b in range(n):
            if a != b:
                out.append(PauliString(data_x=1 << b, data_z=1 << a))
    return out

def _decompose(state: StateVector, ideal: StateVector, candidates: Sequence[PauliString]) -> Dict[str, float]:
    # P|0_L> and Q|0_L> are either orthogonal or equal up to phase; keep the first label of each class
    basis: List[Tuple[str, StateVector]] = []
    for p in candidates:
        vec = apply_pauli(ideal, p)
        if any(fidelity(vec, seen) > 0.5 for _, seen in basis):
            continue
        basis.append((p.label(), vec))
    weights = {}
    for label, vec in basis:
        w = fidelity(vec, state) ** 2
        if w > 1e-14:
            weights[label] = w
    return weights

def correction_pathology_demo(kappa: float, d: int = 3) -> PathologyReport:
    """Correct the branch where only the first-row right-corner site fires after a Z-then-X cycle."""
    if kappa < 0:
        raise UsageError(f"kappa must be >= 0, got {kappa}")
    layout = build_layout(d)
    if d != 3:
        raise CapacityError("the pathology branch is defined for d=3")
    ideal = ideal_codeword(layout)
    fired = 5
    pattern = tuple(-1 if stab.ancilla == fired else 1 for stab in layout.sites)
    try:
        z_round = run_round(ideal, layout, "Z", kappa, postselect_trivial())
        x_round = run_round(z_round.state, layout, "X", kappa, postselect(pattern))
    except InfeasibleBranchError as exc:
        logger.info("pathology branch infeasible at kappa=%g (p=%.3g)", kappa, exc.probability)
        return PathologyReport(kappa, False, 0.0, "", {}, 0.0)
    correction = decode(layout, "X", x_round.outcomes)
    state = apply_pauli(x_round.state, correction)
    components = _decompose(state, ideal, _candidate_errors(layout.n))
    probability = z_round.probability * x_round.probability
    logger.info("pathology branch p=%.3g, fix %s, %d residual components",
                probability, correction.label(), len(components))
    return PathologyReport(kappa, True, probability, correction.label(), components,
                           components.get("I", 0.0))
