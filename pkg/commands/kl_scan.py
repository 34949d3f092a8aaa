# commands/kl_scan.py
import logging
import time
from typing import Any, Dict

import numpy as np
import pandas as pd

from artifacts import ensure_output_dir, write_csv, write_json, write_manifest
from config import AppConfig
from models import KLScanRequest
from services.aqec import OP_CLASSES, dress_codewords, exact_kl_residual, kl_scan

logger = logging.getLogger(__name__)

NAME = "kl-scan"
EXACT_TOL = 1e-10
LENIENT_CLASSES = ("two_x",)

def register(sub) -> None:
    p = sub.add_parser(NAME, help="Knill-Laflamme overlaps of the dressed d=3 codewords")
    p.add_argument("--kappa", type=float, default=0.01)
    p.add_argument("--anchor", default="x2", choices=("x2", "none"))
    p.add_argument("--strict", action="store_true", help="fail on two-X table mismatches too")
    p.add_argument("--out", default=NAME, help="output subdirectory")
    p.set_defaults(run=run)

def mismatch_counts(table: pd.DataFrame) -> Dict[str, int]:
    bad = table[table["matches_reference"].eq(False)]
    return {cls: int((bad["class"] == cls).sum()) for cls in OP_CLASSES}

def exact_checks(table: pd.DataFrame) -> Dict[str, Any]:
    """Undressed code: off-diagonal overlaps vanish and the identity has unit norm."""
    off = table[table["i"] != table["j"]]
    off_max = float(np.hypot(off["value_re"], off["value_im"]).max())
    ident = table[(table["class"] == "identity") & (table["i"] == table["j"])]
    c_identity = float(ident["value_re"].min())
    residual = exact_kl_residual()
    return {
        "max_offdiagonal": off_max,
        "c_identity": c_identity,
        "kl_residual": residual,
        "ok": off_max <= EXACT_TOL and abs(c_identity - 1.0) <= EXACT_TOL and residual <= EXACT_TOL,
    }

def run(args, cfg: AppConfig) -> int:
    started = time.perf_counter()
    req = KLScanRequest(kappa=args.kappa, anchor=args.anchor, strict=args.strict)
    table = kl_scan(dress_codewords(req.kappa), anchor=req.anchor)

    summary: Dict[str, Any] = {"kappa": req.kappa, "anchor": req.anchor, "entries": len(table)}
    if req.kappa == 0:
        summary["exact"] = exact_checks(table)
        failed = not summary["exact"]["ok"]
    else:
        counts = mismatch_counts(table)
        summary["mismatches"] = counts
        summary["compared"] = int(table["matches_reference"].notna().sum())
        summary["max_prediction_gap"] = float(
            (table["leading_coeff_over_pi2kappa2"] - table["predicted"]).abs().max()
        )
        gating = [c for c in OP_CLASSES if req.strict or c not in LENIENT_CLASSES]
        failed = any(counts[c] for c in gating)
        if counts["two_x"] and not req.strict:
            logger.warning("%d two-X entries differ from the reference table", counts["two_x"])

    out_dir = ensure_output_dir(cfg, args.out)
    csv = write_csv(out_dir / "kl_scan.csv", table)
    path = write_json(out_dir / "summary.json", summary)
    write_manifest(out_dir, NAME, req.model_dump(), [csv, path], duration_s=time.perf_counter() - started)

    if failed:
        logger.error("KL scan check failed at kappa=%g", req.kappa)
        return 1
    return 0
