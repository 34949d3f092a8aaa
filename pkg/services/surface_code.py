# services/surface_code.py
import logging
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from config import get_config
from errors import CapacityError, UsageError
from services.pauli_algebra import PauliString
from services.statevector import MeasureMode, StateVector, apply_pauli, postselect_trivial, zero_state

logger = logging.getLogger(__name__)

# Z stabilizers are plaquettes, X stabilizers are sites
BASES = ("Z", "X")


@dataclass(frozen=True)
class Stabilizer:
    ancilla: int
    basis: str
    support: Tuple[int, ...]
    position: Tuple[int, int]
    mask: int = field(compare=False)

    @property
    def weight(self) -> int:
        return len(self.support)

    def pauli(self) -> PauliString:
        return PauliString(data_z=self.mask) if self.basis == "Z" else PauliString(data_x=self.mask)


@dataclass(frozen=True)
class SurfaceLayout:
    d: int
    n: int
    data_positions: Tuple[Tuple[int, int], ...]
    plaquettes: Tuple[Stabilizer, ...]
    sites: Tuple[Stabilizer, ...]
    logical_x: Tuple[int, ...]
    logical_z: Tuple[int, ...]

    def stabilizers(self, basis: str) -> Tuple[Stabilizer, ...]:
        basis = basis.upper()
        if basis == "Z":
            return self.plaquettes
        if basis == "X":
            return self.sites
        raise UsageError(f"basis must be Z or X, got {basis!r}")

    def row_of(self, qubit: int) -> int:
        return self.data_positions[qubit - 1][0]

    def column_of(self, qubit: int) -> int:
        return self.data_positions[qubit - 1][1]


@dataclass(frozen=True)
class QubitClassification:
    basis: str
    # one weight-3 / one weight-4 / two weight-3 / weight-3 and weight-4 / two weight-4
    groups: Tuple[Tuple[int, ...], ...]
    n1: int
    n2: int

    @property
    def sizes(self) -> Tuple[int, ...]:
        return tuple(len(g) for g in self.groups)


@dataclass(frozen=True)
class PreparedState:
    state: StateVector
    outcomes: Dict[int, int]
    probability: float
    correction: PauliString


def support_mask(ids) -> int:
    mask = 0
    for q in ids:
        mask |= 1 << (q - 1)
    return mask


@lru_cache(maxsize=16)
def build_layout(d: int) -> SurfaceLayout:
    if d < 3 or d % 2 == 0:
        raise UsageError(f"code distance must be odd and >= 3, got {d}")
    size = 2 * d - 1
    data_ids: Dict[Tuple[int, int], int] = {}
    positions: List[Tuple[int, int]] = []
    for r in range(size):
        for c in range(size):
            if (r + c) % 2 == 0:
                positions.append((r, c))
                data_ids[(r, c)] = len(positions)

    plaquettes, sites = [], []
    ancilla = 0
    for r in range(size):
        for c in range(size):
            if (r + c) % 2 == 0:
                continue
            ancilla += 1
            neighbours = [(r - 1, c), (r + 1, c), (r, c - 1), (r, c + 1)]
            support = tuple(sorted(data_ids[p] for p in neighbours if p in data_ids))
            basis = "Z" if r % 2 == 0 else "X"
            stab = Stabilizer(ancilla, basis, support, (r, c), support_mask(support))
            (plaquettes if basis == "Z" else sites).append(stab)

    layout = SurfaceLayout(
        d=d,
        n=len(positions),
        data_positions=tuple(positions),
        plaquettes=tuple(plaquettes),
        sites=tuple(sites),
        logical_x=tuple(data_ids[(0, c)] for c in range(0, size, 2)),
        logical_z=tuple(data_ids[(r, 0)] for r in range(0, size, 2)),
    )
    logger.debug("built d=%d layout: %d data qubits, %d+%d stabilizers",
                 d, layout.n, len(plaquettes), len(sites))
    return layout


def classify_data_qubits(layout: SurfaceLayout, basis: str = "Z") -> QubitClassification:
    weights: Dict[int, List[int]] = {q: [] for q in range(1, layout.n + 1)}
    for stab in layout.stabilizers(basis):
        for q in stab.support:
            weights[q].append(stab.weight)
    keys = [(3,), (4,), (3, 3), (3, 4), (4, 4)]
    groups: List[List[int]] = [[] for _ in keys]
    for q, ws in weights.items():
        groups[keys.index(tuple(sorted(ws)))].append(q)
    n1 = sum(1 for ws in weights.values() if len(ws) == 1)
    return QubitClassification(basis.upper(), tuple(tuple(g) for g in groups), n1, layout.n - n1)


def syndrome_of(layout: SurfaceLayout, basis: str, error: PauliString) -> Dict[int, int]:
    """Outcomes (+1/-1 per ancilla id) that `basis` stabilizers report for a data error."""
    part = error.data_x if basis.upper() == "Z" else error.data_z
    return {
        stab.ancilla: -1 if bin(part & stab.mask).count("1") % 2 else 1
        for stab in layout.stabilizers(basis)
    }


def logical_operator(layout: SurfaceLayout, basis: str) -> PauliString:
    basis = basis.upper()
    if basis == "X":
        return PauliString(data_x=support_mask(layout.logical_x))
    if basis == "Z":
        return PauliString(data_z=support_mask(layout.logical_z))
    raise UsageError(f"basis must be Z or X, got {basis!r}")

def apply_logical(state: StateVector, layout: SurfaceLayout, basis: str) -> StateVector:
    return apply_pauli(state, logical_operator(layout, basis))


def _check_capacity(num_qubits: int) -> None:
    cap = get_config().MAX_QUBITS
    if num_qubits > cap:
        raise CapacityError(f"{num_qubits} qubits exceed the dense cap of {cap}")

def prepare_logical_zero(layout: SurfaceLayout, mode: str = "ideal", kappa: float = 0.0,
                         measure: Optional[MeasureMode] = None) -> PreparedState:
    """|0_L> either projected exactly or through one imperfect site round.

    The imperfect route measures every site from |0...0>, then applies the
    minimum-weight Z chain that returns each -1 site to +1.
    """
    if mode == "ideal":
        _check_capacity(layout.n)
        amps = zero_state(layout.n).amplitudes
        idx = np.arange(amps.size)
        for stab in layout.sites:
            amps = (amps + amps[idx ^ stab.mask]) / np.sqrt(2)
        return PreparedState(StateVector(layout.n, amps), {}, 1.0, PauliString())
    if mode != "imperfect":
        raise UsageError(f"preparation mode must be ideal or imperfect, got {mode!r}")

    from services.qec_cycle import decode, run_round

    _check_capacity(layout.n + len(layout.sites))
    result = run_round(zero_state(layout.n), layout, "X", kappa, measure or postselect_trivial())
    correction = decode(layout, "X", result.outcomes)
    state = apply_pauli(result.state, correction)
    logger.info("prepared |0_L> at kappa=%g: outcomes %s, fix %s",
                kappa, result.outcomes, correction.label())
    return PreparedState(state, result.outcomes, result.probability, correction)


def layout_to_dict(layout: SurfaceLayout) -> Dict[str, Any]:
    def stabs(items):
        return [{"ancilla": s.ancilla, "support": list(s.support), "position": list(s.position)} for s in items]

    return {
        "d": layout.d,
        "n": layout.n,
        "data_positions": [list(p) for p in layout.data_positions],
        "plaquettes": stabs(layout.plaquettes),
        "sites": stabs(layout.sites),
        "logical_x": list(layout.logical_x),
        "logical_z": list(layout.logical_z),
    }
