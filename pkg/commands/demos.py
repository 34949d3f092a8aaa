# commands/demos.py
import logging
import time

from artifacts import ensure_output_dir, write_json, write_manifest
from config import AppConfig
from errors import InfeasibleBranchError
from services.aqec import consecutive_measurement_demo
from services.qec_cycle import correction_pathology_demo

logger = logging.getLogger(__name__)

NAME = "demo"
# small-a limit: dF2 / a -> 1/4, accepted within 5%
DECAY_BAND = (0.2375, 0.2625)

def register(sub) -> None:
    p = sub.add_parser(NAME, help="two-measurement decay or correction pathology report")
    p.add_argument("--which", required=True, choices=("decay", "pathology"))
    p.add_argument("--a", type=float, default=1e-3, help="phase parameter of the decay demo")
    p.add_argument("--kappa", type=float, default=0.05, help="imperfect rate of the pathology demo")
    p.add_argument("--out", default=NAME, help="output subdirectory")
    p.set_defaults(run=run)

def run(args, cfg: AppConfig) -> int:
    started = time.perf_counter()
    if args.which == "decay":
        decay = consecutive_measurement_demo(args.a)
        ratio = decay.delta_f2 / args.a
        payload, params = decay.to_dict(), {"which": "decay", "a": args.a}
        payload["delta_F2_over_a"] = ratio
        ok = decay.delta_f2 > 0 and DECAY_BAND[0] <= ratio <= DECAY_BAND[1]
        logger.info("a=%g: dF2=%.6g, dF2/a=%.6g", args.a, decay.delta_f2, ratio)
        if not ok:
            logger.error("dF2/a=%.6g is outside [%g, %g]", ratio, *DECAY_BAND)
    else:
        report = correction_pathology_demo(args.kappa)
        if not report.feasible:
            raise InfeasibleBranchError(f"pathology branch has zero probability at kappa={args.kappa}", 0.0)
        payload, params, ok = report.to_dict(), {"which": "pathology", "kappa": args.kappa}, True
        logger.info("kappa=%g: fix %s leaves residual weight %.6g",
                    args.kappa, report.correction, report.residual_weight)

    out_dir = ensure_output_dir(cfg, args.out)
    path = write_json(out_dir / f"{args.which}.json", payload)
    write_manifest(out_dir, NAME, params, [path], duration_s=time.perf_counter() - started)
    return 0 if ok else 1
