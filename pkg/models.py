# models.py
from pydantic import BaseModel, Field, field_validator, model_validator
from typing import Any, Dict, List, Literal, Optional

from services.pauli_algebra import parse_pauli

DATA_QUBITS_D3 = 13
ANCILLAS_PER_ROUND_D3 = 6


def _split_list(v):
    if isinstance(v, str):
        v = [item for item in v.replace(" ", "").split(",") if item]
    return v


class CycleConfig(BaseModel):
    d: int = Field(3, ge=3)
    kappa: float = Field(0.0, ge=0.0)
    cycles: int = Field(1, ge=1)
    measurement_mode: Literal["sample", "postselect_trivial", "postselect"] = "postselect_trivial"
    seed: Optional[int] = Field(None, ge=0)
    patterns: List[List[int]] = Field(default_factory=list)
    injected_error: str = ""
    decoder: Literal["lookup_minweight"] = "lookup_minweight"
    record_fidelity: bool = True
    logical_state: Literal[0, 1] = 0

    @field_validator("measurement_mode", mode="before")
    @classmethod
    def dashes(cls, v):
        return v.replace("-", "_") if isinstance(v, str) else v

    @field_validator("injected_error")
    @classmethod
    def valid_pauli(cls, v):
        if v and v.strip().upper() != "I":
            parse_pauli(v, DATA_QUBITS_D3)
        return v.strip()

    @model_validator(mode="after")
    def mode_inputs(self):
        if self.measurement_mode == "sample" and self.seed is None:
            raise ValueError("sample mode requires a seed")
        if self.measurement_mode == "postselect":
            if len(self.patterns) != 2 * self.cycles:
                raise ValueError(f"postselect needs {2 * self.cycles} patterns, got {len(self.patterns)}")
            for p in self.patterns:
                if len(p) != ANCILLAS_PER_ROUND_D3 or any(o not in (1, -1) for o in p):
                    raise ValueError(f"pattern {p} must hold {ANCILLAS_PER_ROUND_D3} entries of +1/-1")
        return self


class WorstCaseParams(BaseModel):
    d: int = Field(..., ge=3)
    kappa: float = Field(..., ge=0.0)
    m: int = Field(..., ge=1)

    @field_validator("d")
    @classmethod
    def odd(cls, v):
        if v % 2 == 0:
            raise ValueError("code distance must be odd")
        return v


class WorstCaseSweep(BaseModel):
    d_min: int = Field(3, ge=3)
    d_max: int = Field(101, ge=3)
    kappas: List[float] = Field(default_factory=lambda: [0.4])
    ms: List[int] = Field(default_factory=lambda: [3])
    fit_from: int = Field(13, ge=3)
    fit_to: Optional[int] = None
    emit_plot: Optional[Literal["gnuplot"]] = None

    @field_validator("kappas", "ms", mode="before")
    @classmethod
    def comma_list(cls, v):
        return _split_list(v)

    @field_validator("kappas")
    @classmethod
    def non_negative(cls, v):
        if not v:
            raise ValueError("at least one kappa is required")
        if any(k < 0 for k in v):
            raise ValueError("kappa values must be >= 0")
        return v

    @field_validator("ms")
    @classmethod
    def positive(cls, v):
        if not v or any(m < 1 for m in v):
            raise ValueError("cycle counts must be >= 1")
        return v

    @model_validator(mode="after")
    def window(self):
        if self.d_max < self.d_min:
            raise ValueError("d_max must be >= d_min")
        if not self.distances():
            raise ValueError("empty sweep: no odd distance in range")
        return self

    def distances(self) -> List[int]:
        start = self.d_min if self.d_min % 2 else self.d_min + 1
        return list(range(start, self.d_max + 1, 2))


class GateFidelityRequest(BaseModel):
    kappas: List[float]

    @field_validator("kappas", mode="before")
    @classmethod
    def comma_list(cls, v):
        return _split_list(v)

    @field_validator("kappas")
    @classmethod
    def unit_range(cls, v):
        if not v:
            raise ValueError("at least one kappa is required")
        if any(not 0.0 <= k <= 1.0 for k in v):
            raise ValueError("kappa values must lie in [0, 1]")
        return v


class DeviationRequest(BaseModel):
    d: int = Field(3, ge=3)
    basis: Literal["Z", "X"] = "Z"
    k: int = Field(1, ge=1)
    order: int = Field(1, ge=0)
    kappa: Optional[float] = Field(None, ge=0.0)

    @field_validator("basis", mode="before")
    @classmethod
    def upper(cls, v):
        return v.upper() if isinstance(v, str) else v

    @field_validator("d")
    @classmethod
    def odd(cls, v):
        if v % 2 == 0:
            raise ValueError("code distance must be odd")
        return v


class KLScanRequest(BaseModel):
    kappa: float = Field(0.01, ge=0.0, le=0.2)
    anchor: Literal["x2", "none"] = "x2"
    strict: bool = False


class RunManifest(BaseModel):
    subcommand: str
    params: Dict[str, Any]
    seeds: List[int] = Field(default_factory=list)
    version: str
    outputs: List[str] = Field(default_factory=list)
    duration_s: float = Field(0.0, ge=0.0)
