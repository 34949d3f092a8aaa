# artifacts.py
from typing import Any, Dict, Iterable, List, Optional
import json
import logging
from pathlib import Path

import numpy as np
import pandas as pd

from config import AppConfig, VERSION
from models import RunManifest

logger = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.json"

def ensure_output_dir(cfg: AppConfig, subdir: Optional[str] = None) -> Path:
    path = Path(cfg.OUTPUT_DIR)
    if subdir:
        path = path / subdir
    path.mkdir(parents=True, exist_ok=True)
    return path

def _plain(value: Any) -> Any:
    # numpy scalars and Fractions are not JSON-native
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, (set, frozenset, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, list):
        return [_plain(v) for v in value]
    if isinstance(value, Path):
        return str(value)
    if hasattr(value, "numerator") and hasattr(value, "denominator") and not isinstance(value, (int, bool)):
        return str(value)
    return value

def write_csv(path: Path, table: pd.DataFrame) -> Path:
    table.to_csv(path, index=False, encoding="utf-8", lineterminator="\n")
    logger.debug("wrote %d rows to %s", len(table), path)
    return path

def write_json(path: Path, payload: Dict[str, Any]) -> Path:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(_plain(payload), fh, sort_keys=True, indent=2)
        fh.write("\n")
    return path

def write_jsonl(path: Path, records: Iterable[Dict[str, Any]]) -> Path:
    count = 0
    with open(path, "w", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(_plain(record), sort_keys=True) + "\n")
            count += 1
    logger.debug("wrote %d records to %s", count, path)
    return path

def write_text(path: Path, text: str) -> Path:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)
    return path

def write_manifest(out_dir: Path, subcommand: str, params: Dict[str, Any], outputs: List[Path],
                   seeds: Optional[List[int]] = None, duration_s: float = 0.0) -> Path:
    manifest = RunManifest(
        subcommand=subcommand,
        params=_plain(params),
        seeds=list(seeds or []),
        version=VERSION,
        outputs=sorted(Path(p).name for p in outputs),
        duration_s=max(0.0, duration_s),
    )
    path = write_json(out_dir / MANIFEST_NAME, manifest.model_dump())
    logger.info("%s: %d output(s) in %s", subcommand, len(outputs), out_dir)
    return path

def read_manifest(out_dir: Path) -> RunManifest:
    with open(Path(out_dir) / MANIFEST_NAME, encoding="utf-8") as fh:
        return RunManifest.model_validate(json.load(fh))
