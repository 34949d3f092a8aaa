# services/pauli_algebra.py
"""Pauli sums with exact kappa-polynomial coefficients.

A KappaPoly stores exact Gaussian-rational coefficients of (pi*kappa)^n, so
tables like 1 - 5i*pi*kappa or (1/8)*pi^2*kappa^2 are compared as rationals.
Floats appear only in `evaluate`.
"""
import logging
import re
from bisect import bisect_right
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Any, Dict, Iterator, List, Mapping, Optional, Tuple

import numpy as np

from errors import UsageError

logger = logging.getLogger(__name__)

DEFAULT_CAP = 2

Gauss = Tuple[Fraction, Fraction]  # (real, imaginary)

_ZERO: Gauss = (Fraction(0), Fraction(0))
_ONE: Gauss = (Fraction(1), Fraction(0))


def _gmul(a: Gauss, b: Gauss) -> Gauss:
    return (a[0] * b[0] - a[1] * b[1], a[0] * b[1] + a[1] * b[0])

def _gadd(a: Gauss, b: Gauss) -> Gauss:
    return (a[0] + b[0], a[1] + b[1])

def _gi_power(a: Gauss, e: int) -> Gauss:
    for _ in range(e % 4):
        a = (-a[1], a[0])
    return a

def _is_zero(a: Gauss) -> bool:
    return a[0] == 0 and a[1] == 0

def gauss(real=0, imag=0) -> Gauss:
    return (Fraction(real), Fraction(imag))


@dataclass(frozen=True)
class KappaPoly:
    coeffs: Tuple[Gauss, ...] = ()

    def __post_init__(self):
        coeffs = list(self.coeffs)
        while coeffs and _is_zero(coeffs[-1]):
            coeffs.pop()
        object.__setattr__(self, "coeffs", tuple(coeffs))

    @classmethod
    def constant(cls, real=1, imag=0) -> "KappaPoly":
        return cls((gauss(real, imag),))

    @classmethod
    def monomial(cls, degree: int, real=0, imag=0) -> "KappaPoly":
        return cls((_ZERO,) * degree + (gauss(real, imag),))

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    @property
    def low_degree(self) -> int:
        for n, c in enumerate(self.coeffs):
            if not _is_zero(c):
                return n
        return len(self.coeffs)

    def is_zero(self) -> bool:
        return not self.coeffs

    def exact(self, n: int) -> Gauss:
        return self.coeffs[n] if n < len(self.coeffs) else _ZERO

    def coefficient(self, n: int) -> complex:
        re_, im_ = self.exact(n)
        return complex(float(re_), float(im_))

    def __add__(self, other: "KappaPoly") -> "KappaPoly":
        size = max(len(self.coeffs), len(other.coeffs))
        return KappaPoly(tuple(_gadd(self.exact(n), other.exact(n)) for n in range(size)))

    def __neg__(self) -> "KappaPoly":
        return KappaPoly(tuple((-c[0], -c[1]) for c in self.coeffs))

    def __sub__(self, other: "KappaPoly") -> "KappaPoly":
        return self + (-other)

    def mul(self, other: "KappaPoly", order: int = DEFAULT_CAP) -> "KappaPoly":
        out = [_ZERO] * (order + 1)
        for i, a in enumerate(self.coeffs):
            if i > order:
                break
            if _is_zero(a):
                continue
            for j, b in enumerate(other.coeffs):
                if i + j > order:
                    break
                if not _is_zero(b):
                    out[i + j] = _gadd(out[i + j], _gmul(a, b))
        return KappaPoly(tuple(out))

    def __mul__(self, other: "KappaPoly") -> "KappaPoly":
        return self.mul(other, DEFAULT_CAP)

    def scale(self, g: Gauss) -> "KappaPoly":
        return KappaPoly(tuple(_gmul(c, g) for c in self.coeffs))

    def times_i(self, e: int) -> "KappaPoly":
        if e % 4 == 0:
            return self
        return KappaPoly(tuple(_gi_power(c, e) for c in self.coeffs))

    def conjugate(self) -> "KappaPoly":
        # kappa is real
        return KappaPoly(tuple((c[0], -c[1]) for c in self.coeffs))

    def abs2(self, order: int = DEFAULT_CAP) -> "KappaPoly":
        return self.mul(self.conjugate(), order)

    def truncate(self, order: int) -> "KappaPoly":
        return KappaPoly(self.coeffs[: order + 1])

    def evaluate(self, kappa: float) -> complex:
        x = np.pi * kappa
        return sum((complex(float(c[0]), float(c[1])) * x ** n for n, c in enumerate(self.coeffs)), 0j)

    def to_json(self) -> List[List[str]]:
        return [[str(c[0]), str(c[1])] for c in self.coeffs]

    def __str__(self) -> str:
        parts = []
        for n, (re_, im_) in enumerate(self.coeffs):
            if re_ == 0 and im_ == 0:
                continue
            parts.append(f"({re_}{'+' if im_ >= 0 else '-'}{abs(im_)}i)(pk)^{n}")
        return " + ".join(parts) or "0"


@dataclass(frozen=True, order=True)
class PauliString:
    data_x: int = 0
    data_z: int = 0
    anc_x: int = 0

    @property
    def weight(self) -> int:
        return bin(self.data_x | self.data_z).count("1")

    @property
    def data_only(self) -> "PauliString":
        return PauliString(self.data_x, self.data_z, 0)

    def commutes_with(self, other: "PauliString") -> bool:
        overlap = bin(self.data_x & other.data_z).count("1") + bin(self.data_z & other.data_x).count("1")
        return overlap % 2 == 0

    def label(self) -> str:
        """Compact label with 1-based data ids, e.g. `Z3X5` or `X1|A0`."""
        tokens = []
        q = 0
        mask = self.data_x | self.data_z
        while mask >> q:
            if (mask >> q) & 1:
                xb, zb = (self.data_x >> q) & 1, (self.data_z >> q) & 1
                tokens.append(("Y" if xb and zb else "X" if xb else "Z") + str(q + 1))
            q += 1
        text = "".join(tokens) or "I"
        if self.anc_x:
            slots = [f"A{j}" for j in range(self.anc_x.bit_length()) if (self.anc_x >> j) & 1]
            text += "|" + "".join(slots)
        return text


_TOKEN = re.compile(r"([XYZ])(\d+)")

def parse_pauli(label: str, num_data: int) -> PauliString:
    """Parse labels such as `X7`, `Y3 Z5` or `Z3X5` over data ids 1..num_data."""
    text = (label or "").replace(" ", "").replace("*", "").upper()
    if text in ("", "I"):
        return PauliString()
    pos, data_x, data_z, seen = 0, 0, 0, set()
    for match in _TOKEN.finditer(text):
        if match.start() != pos:
            break
        kind, qubit = match.group(1), int(match.group(2))
        if not 1 <= qubit <= num_data:
            raise UsageError(f"qubit {qubit} in {label!r} is outside 1..{num_data}")
        if qubit in seen:
            raise UsageError(f"qubit {qubit} repeated in {label!r}")
        seen.add(qubit)
        bit = 1 << (qubit - 1)
        if kind in ("X", "Y"):
            data_x |= bit
        if kind in ("Z", "Y"):
            data_z |= bit
        pos = match.end()
    if pos != len(text):
        raise UsageError(f"malformed Pauli label {label!r}")
    return PauliString(data_x, data_z)


def _popcount(v: int) -> int:
    return bin(v).count("1")

def compose(a: PauliString, b: PauliString) -> Tuple[PauliString, int]:
    """a*b as (string, e) with a*b = i^e * string."""
    ax, az, bx, bz = a.data_x, a.data_z, b.data_x, b.data_z
    a_x, a_y, a_z = ax & ~az, ax & az, az & ~ax
    b_x, b_y, b_z = bx & ~bz, bx & bz, bz & ~bx
    plus = _popcount(a_z & b_x) + _popcount(a_x & b_y) + _popcount(a_y & b_z)
    minus = _popcount(a_x & b_z) + _popcount(a_y & b_x) + _popcount(a_z & b_y)
    product = PauliString(ax ^ bx, az ^ bz, a.anc_x ^ b.anc_x)
    return product, (plus - minus) % 4


class PauliSum:
    """Immutable map PauliString -> KappaPoly over `num_data` data and `num_anc` ancilla qubits."""

    __slots__ = ("num_data", "num_anc", "_terms")

    def __init__(self, num_data: int, num_anc: int = 0,
                 terms: Optional[Mapping[PauliString, KappaPoly]] = None):
        self.num_data = num_data
        self.num_anc = num_anc
        clean = {}
        for string, coeff in (terms or {}).items():
            if coeff.is_zero():
                continue
            if string.data_x >> num_data or string.data_z >> num_data or string.anc_x >> num_anc:
                raise UsageError(f"{string.label()} does not fit {num_data} data + {num_anc} ancilla qubits")
            clean[string] = coeff
        self._terms = {s: clean[s] for s in sorted(clean)}

    @classmethod
    def identity(cls, num_data: int, num_anc: int = 0) -> "PauliSum":
        return cls(num_data, num_anc, {PauliString(): KappaPoly.constant(1)})

    def items(self) -> Iterator[Tuple[PauliString, KappaPoly]]:
        return iter(self._terms.items())

    def strings(self) -> List[PauliString]:
        return list(self._terms)

    def coefficient(self, string: PauliString) -> KappaPoly:
        return self._terms.get(string, KappaPoly())

    def __len__(self) -> int:
        return len(self._terms)

    def __contains__(self, string: PauliString) -> bool:
        return string in self._terms

    def __eq__(self, other) -> bool:
        return (isinstance(other, PauliSum) and self.num_data == other.num_data
                and self.num_anc == other.num_anc and self._terms == other._terms)

    def __repr__(self) -> str:
        return f"PauliSum({self.num_data}+{self.num_anc}, {len(self)} terms)"


def _check_compatible(a: PauliSum, b: PauliSum) -> None:
    if a.num_data != b.num_data or a.num_anc != b.num_anc:
        raise UsageError(
            f"register mismatch: {a.num_data}+{a.num_anc} vs {b.num_data}+{b.num_anc}"
        )

def _accumulate(acc: Dict[PauliString, KappaPoly], string: PauliString, coeff: KappaPoly) -> None:
    prev = acc.get(string)
    acc[string] = coeff if prev is None else prev + coeff

def add(a: PauliSum, b: PauliSum) -> PauliSum:
    _check_compatible(a, b)
    acc = dict(a.items())
    for string, coeff in b.items():
        _accumulate(acc, string, coeff)
    return PauliSum(a.num_data, a.num_anc, acc)

def multiply(a: PauliSum, b: PauliSum, order: int = DEFAULT_CAP) -> PauliSum:
    _check_compatible(a, b)
    b_terms = sorted(b.items(), key=lambda t: t[1].low_degree)
    b_lows = [c.low_degree for _, c in b_terms]
    acc: Dict[PauliString, KappaPoly] = {}
    for sa, ca in a.items():
        limit = bisect_right(b_lows, order - ca.low_degree)
        for idx in range(limit):
            sb, cb = b_terms[idx]
            string, e = compose(sa, sb)
            coeff = ca.mul(cb, order)
            if not coeff.is_zero():
                _accumulate(acc, string, coeff.times_i(e))
    return PauliSum(a.num_data, a.num_anc, acc)

def dagger(a: PauliSum) -> PauliSum:
    # every string is a product of Hermitian single-qubit Paulis
    return PauliSum(a.num_data, a.num_anc, {s: c.conjugate() for s, c in a.items()})

def truncate(a: PauliSum, order: int) -> PauliSum:
    return PauliSum(a.num_data, a.num_anc, {s: c.truncate(order) for s, c in a.items()})

def scale(a: PauliSum, g: Gauss) -> PauliSum:
    return PauliSum(a.num_data, a.num_anc, {s: c.scale(g) for s, c in a.items()})

def from_strings(num_data: int, strings: Mapping[PauliString, KappaPoly], num_anc: int = 0) -> PauliSum:
    return PauliSum(num_data, num_anc, strings)


# ---------- deviation operators ----------

def _data_string(qubit: int, basis: str) -> PauliString:
    bit = 1 << (qubit - 1)
    return PauliString(data_z=bit) if basis == "Z" else PauliString(data_x=bit)

def deviation_for_stabilizer(support, ancilla: int, basis: str,
                             num_data: int, num_anc: int) -> PauliSum:
    """First-order extra operator of one stabilizer's imperfect CNOT ladder.

    Data ids are 1-based; `ancilla` is the slot in the round's ancilla register.
    I_a branch: (1 - w*i*pk/4) I + (i*pk/4) sum P_d
    X_a branch: (w*i*pk/4) I - (i*pk/4) sum P_d
    """
    basis = basis.upper()
    if basis not in ("Z", "X"):
        raise UsageError(f"basis must be Z or X, got {basis!r}")
    w = len(support)
    if w not in (3, 4):
        raise UsageError(f"unsupported stabilizer weight {w}")
    if not 0 <= ancilla < num_anc:
        raise UsageError(f"ancilla slot {ancilla} outside {num_anc}")
    quarter = Fraction(1, 4)
    flip = 1 << ancilla
    terms = {
        PauliString(): KappaPoly((_ONE, (Fraction(0), -w * quarter))),
        PauliString(anc_x=flip): KappaPoly.monomial(1, 0, w * quarter),
    }
    for q in support:
        p = _data_string(q, basis)
        terms[p] = KappaPoly.monomial(1, 0, quarter)
        terms[PauliString(p.data_x, p.data_z, flip)] = KappaPoly.monomial(1, 0, -quarter)
    return PauliSum(num_data, num_anc, terms)

def other_basis(basis: str) -> str:
    return "X" if basis.upper() == "Z" else "Z"

@lru_cache(maxsize=64)
def _single_round(layout, basis: str, order: int) -> PauliSum:
    stabs = layout.stabilizers(basis)
    result = PauliSum.identity(layout.n, len(stabs))
    for slot, stab in enumerate(stabs):
        dev = deviation_for_stabilizer(stab.support, slot, basis, layout.n, len(stabs))
        result = multiply(result, dev, order)
    logger.debug("d=%d %s-round deviation: %d terms", layout.d, basis, len(result))
    return result

def attach_syndrome(op: PauliSum, layout, basis: str) -> PauliSum:
    """Give each data term the ancilla flips of the `basis` stabilizers it anticommutes with."""
    stabs = layout.stabilizers(basis)
    masks = [stab.mask for stab in stabs]
    terms = {}
    for string, coeff in op.items():
        part = string.data_x if basis == "Z" else string.data_z
        flips = 0
        for slot, mask in enumerate(masks):
            if _popcount(part & mask) % 2:
                flips |= 1 << slot
        terms[PauliString(string.data_x, string.data_z, flips)] = coeff
    return PauliSum(op.num_data, len(stabs), terms)

def trivial_configuration(op: PauliSum) -> PauliSum:
    """Data-only operator of the all-identity ancilla branch."""
    return PauliSum(op.num_data, 0, {s.data_only: c for s, c in op.items() if s.anc_x == 0})

def round_deviation(layout, round_basis: str, k: int = 1, order: int = 1, cap: int = DEFAULT_CAP) -> PauliSum:
    """Deviation of round k, carrying the trivial branches of rounds 1..k-1.

    Rounds alternate basis and end with `round_basis` at round k.
    """
    round_basis = round_basis.upper()
    if round_basis not in ("Z", "X"):
        raise UsageError(f"basis must be Z or X, got {round_basis!r}")
    if k < 1:
        raise UsageError(f"round index must be >= 1, got {k}")
    if not 0 <= order <= cap:
        raise UsageError(f"order {order} exceeds the kappa cap {cap}")
    carried = PauliSum.identity(layout.n)
    current = None
    for r in range(1, k + 1):
        basis = round_basis if (k - r) % 2 == 0 else other_basis(round_basis)
        current = multiply(_single_round(layout, basis, order), attach_syndrome(carried, layout, basis), order)
        if r < k:
            carried = trivial_configuration(current)
    return current

def group_by_ancilla_config(op: PauliSum) -> Dict[int, PauliSum]:
    groups: Dict[int, Dict[PauliString, KappaPoly]] = {}
    for string, coeff in op.items():
        groups.setdefault(string.anc_x, {})[string] = coeff
    return {mask: PauliSum(op.num_data, op.num_anc, groups[mask]) for mask in sorted(groups)}

def config_weight(group: PauliSum, order: int = DEFAULT_CAP) -> KappaPoly:
    total = KappaPoly()
    for _, coeff in group.items():
        total = total + coeff.abs2(order)
    return total


# ---------- serialization ----------

def to_canonical_json(op: PauliSum) -> Dict[str, Any]:
    return {
        "num_data": op.num_data,
        "num_anc": op.num_anc,
        "terms": [
            {"data_x": s.data_x, "data_z": s.data_z, "anc_x": s.anc_x,
             "label": s.label(), "coeffs": c.to_json()}
            for s, c in op.items()
        ],
    }

def evaluated_terms(op: PauliSum, kappa: float, tol: float = 0.0) -> List[Tuple[PauliString, complex]]:
    out = []
    for string, coeff in op.items():
        value = coeff.evaluate(kappa)
        if abs(value) > tol:
            out.append((string, value))
    return out
