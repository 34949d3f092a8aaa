# config.py
import os
from typing import Optional
from dataclasses import dataclass
from dotenv import load_dotenv

from errors import UsageError

load_dotenv()

VERSION = "0.4.0"

def _get(key: str, default: Optional[str] = None) -> Optional[str]:
    return os.getenv(key, default)

def _get_int(key: str, default: int) -> int:
    raw = _get(key, str(default))
    try:
        return int(raw)
    except (TypeError, ValueError):
        raise UsageError(f"{key} must be an integer, got {raw!r}")

@dataclass(frozen=True)
class AppConfig:
    # Dense simulation
    MAX_QUBITS: int
    THREADS: int
    # Symbolic engine
    KAPPA_CAP: int
    # Outputs
    OUTPUT_DIR: str
    LOG_LEVEL: str

    @property
    def parallel(self) -> bool:
        return self.THREADS > 1

def get_config() -> "AppConfig":
    return AppConfig(
        MAX_QUBITS=_get_int("QEC_MAX_QUBITS", 21),
        THREADS=max(1, _get_int("QEC_THREADS", 1)),
        KAPPA_CAP=_get_int("QEC_KAPPA_CAP", 2),
        OUTPUT_DIR=_get("QEC_OUTPUT_DIR", "runs"),
        LOG_LEVEL=(_get("QEC_LOG_LEVEL", "INFO") or "INFO").upper(),
    )
