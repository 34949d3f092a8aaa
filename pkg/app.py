# app.py
import argparse
import logging
import sys
from typing import List, Optional

from pydantic import ValidationError

from config import VERSION, get_config
from errors import CapacityError, InfeasibleBranchError, UsageError
from commands import demos, deviation, gate_fidelity, kl_scan, simulate, worst_case

logger = logging.getLogger("coherent_qec")

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_USAGE = 2
EXIT_CAPACITY = 3
EXIT_INFEASIBLE = 4

COMMANDS = [gate_fidelity, deviation, simulate, worst_case, kl_scan, demos]

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="coherent-qec",
        description="Detection-induced coherent errors in surface-code error correction.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {VERSION}")
    sub = parser.add_subparsers(dest="command", required=True)
    for module in COMMANDS:
        module.register(sub)
    return parser

def main(argv: Optional[List[str]] = None) -> int:
    try:
        cfg = get_config()
    except UsageError as e:
        sys.stderr.write(f"configuration error: {e}\n")
        return EXIT_USAGE
    logging.basicConfig(
        level=getattr(logging, cfg.LOG_LEVEL, logging.INFO),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    args = build_parser().parse_args(argv)
    try:
        return args.run(args, cfg)
    except (ValidationError, UsageError) as e:
        logger.error("invalid input: %s", e)
        return EXIT_USAGE
    except CapacityError as e:
        logger.error("capacity: %s", e)
        return EXIT_CAPACITY
    except InfeasibleBranchError as e:
        logger.error("infeasible branch (p=%.3g): %s", e.probability, e)
        return EXIT_INFEASIBLE

if __name__ == "__main__":
    sys.exit(main())
