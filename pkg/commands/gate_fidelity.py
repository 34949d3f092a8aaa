# commands/gate_fidelity.py
import logging
import time

import pandas as pd

from artifacts import ensure_output_dir, write_csv, write_manifest
from config import AppConfig
from models import GateFidelityRequest
from services.aqec import gate_fidelity_overlap, min_gate_fidelity

logger = logging.getLogger(__name__)

NAME = "gate-fidelity"
OVERLAP_TOL = 1e-9

def register(sub) -> None:
    p = sub.add_parser(NAME, help="minimum gate fidelity of the imperfect CNOT")
    p.add_argument("--kappa", required=True, help="comma-separated kappa values in [0, 1]")
    p.add_argument("--out", default=NAME, help="output subdirectory")
    p.set_defaults(run=run)

def run(args, cfg: AppConfig) -> int:
    started = time.perf_counter()
    req = GateFidelityRequest(kappas=args.kappa)
    table = pd.DataFrame({
        "kappa": req.kappas,
        "f_g": [min_gate_fidelity(k) for k in req.kappas],
        "overlap": [gate_fidelity_overlap(k) for k in req.kappas],
    })
    out_dir = ensure_output_dir(cfg, args.out)
    csv = write_csv(out_dir / "gate_fidelity.csv", table)
    write_manifest(out_dir, NAME, req.model_dump(), [csv], duration_s=time.perf_counter() - started)

    misses = table[(table["f_g"] - table["overlap"]).abs() > OVERLAP_TOL]
    for kappa, f_g in zip(table["kappa"], table["f_g"]):
        logger.info("kappa=%g  F_G=%.6f", kappa, f_g)
    if not misses.empty:
        logger.error("closed form and statevector overlap disagree at kappa=%s",
                     ", ".join(f"{k:g}" for k in misses["kappa"]))
        return 1
    return 0
