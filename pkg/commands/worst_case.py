# commands/worst_case.py
import logging
import time
from typing import Any, Dict, List

import pandas as pd

from artifacts import ensure_output_dir, write_csv, write_json, write_manifest, write_text
from config import AppConfig
from errors import UsageError
from models import WorstCaseSweep
from services.worst_case import (
    REFERENCE_KAPPA,
    REFERENCE_M,
    is_reference_window,
    m_spread,
    power_law_fit,
    strictly_decreasing,
    sweep_grid,
    within_reference,
)

logger = logging.getLogger(__name__)

NAME = "worst-case"
CSV_NAME = "worst_case.csv"

def register(sub) -> None:
    p = sub.add_parser(NAME, help="worst-case infidelity sweep and power-law fit")
    p.add_argument("--d-min", type=int, default=3)
    p.add_argument("--d-max", type=int, default=101)
    p.add_argument("--kappa", default="0.4", help="comma-separated kappa values")
    p.add_argument("--m", default="3", help="comma-separated cycle counts")
    p.add_argument("--fit-from", type=int, default=13)
    p.add_argument("--fit-to", type=int, default=None)
    p.add_argument("--emit-plot", default=None, choices=("gnuplot",))
    p.add_argument("--out", default=NAME, help="output subdirectory")
    p.set_defaults(run=run)

def fit_curves(table: pd.DataFrame, sweep: WorstCaseSweep) -> List[Dict[str, Any]]:
    fits = []
    for (kappa, m), curve in table.groupby(["kappa", "m"], sort=False):
        entry: Dict[str, Any] = {"kappa": float(kappa), "m": int(m)}
        try:
            entry.update(power_law_fit(curve, sweep.fit_from, sweep.fit_to).to_dict())
            window = curve[(curve["d"] >= sweep.fit_from) &
                           (curve["d"] <= (sweep.fit_to or curve["d"].max()))]
            entry["decreasing"] = strictly_decreasing(window["r"].tolist())
        except UsageError as e:
            logger.warning("kappa=%g m=%d: fit refused (%s)", kappa, m, e)
            entry["refused"] = str(e)
        fits.append(entry)
    return fits

def fit_failures(fits: List[Dict[str, Any]], sweep: WorstCaseSweep) -> List[str]:
    """Refused fits always fail; on the 13..101 window every curve must also
    decrease and the kappa=0.4, m=3 fit must land on the reference one."""
    failures = [f"kappa={f['kappa']:g} m={f['m']}: fit refused ({f['refused']})"
                for f in fits if "refused" in f]
    if not is_reference_window(sweep.distances(), sweep.fit_from, sweep.fit_to):
        return failures
    for f in fits:
        if "refused" in f:
            continue
        tag = f"kappa={f['kappa']:g} m={f['m']}"
        if not f["decreasing"]:
            failures.append(f"{tag}: r(d) is not strictly decreasing on the fit window")
        if (f["kappa"] == REFERENCE_KAPPA and f["m"] == REFERENCE_M
                and not within_reference(f["slope"], f["intercept_log10"])):
            failures.append(f"{tag}: slope {f['slope']:.3f}, intercept {f['intercept_log10']:.3f} "
                            "outside the reference fit")
    return failures

def gnuplot_script(table: pd.DataFrame) -> str:
    """Log-log r(d) per (kappa, m); reads only the emitted CSV."""
    lines = [
        "# worst-case infidelity, r vs d",
        "set datafile separator ','",
        "set logscale xy",
        "set xlabel 'd'",
        "set ylabel 'r'",
        "set key outside",
    ]
    plots = []
    for kappa, m in table[["kappa", "m"]].drop_duplicates().itertuples(index=False):
        kappa, m = float(kappa), int(m)
        plots.append(
            f"'{CSV_NAME}' skip 1 using (($2=={kappa!r} && $3=={m}) ? $1 : 1/0):7 "
            f"with linespoints title 'kappa={kappa:g}, m={m}'"
        )
    lines.append("plot " + ", \\\n     ".join(plots))
    return "\n".join(lines) + "\n"

def run(args, cfg: AppConfig) -> int:
    started = time.perf_counter()
    sweep = WorstCaseSweep(
        d_min=args.d_min,
        d_max=args.d_max,
        kappas=args.kappa,
        ms=args.m,
        fit_from=args.fit_from,
        fit_to=args.fit_to,
        emit_plot=args.emit_plot,
    )
    table = sweep_grid(sweep.distances(), sweep.kappas, sweep.ms)
    fits = fit_curves(table, sweep)

    out_dir = ensure_output_dir(cfg, args.out)
    outputs = [write_csv(out_dir / CSV_NAME, table)]
    outputs.append(write_json(out_dir / "fits.json", {"fits": fits}))
    if len(sweep.ms) > 1:
        spread = pd.concat(
            [m_spread(table, min(sweep.ms), large).assign(small_m=min(sweep.ms), large_m=large)
             for large in sorted(sweep.ms) if large != min(sweep.ms)],
            ignore_index=True,
        )
        outputs.append(write_csv(out_dir / "m_spread.csv", spread))
    if sweep.emit_plot == "gnuplot":
        outputs.append(write_text(out_dir / "worst_case.gp", gnuplot_script(table)))
    write_manifest(out_dir, NAME, sweep.model_dump(), outputs, duration_s=time.perf_counter() - started)

    for fit in fits:
        if "slope" in fit:
            logger.info("kappa=%g m=%d: slope %.3f, intercept %.3f",
                        fit["kappa"], fit["m"], fit["slope"], fit["intercept_log10"])
    failures = fit_failures(fits, sweep)
    for reason in failures:
        logger.error(reason)
    return 1 if failures else 0
