"""Arrival-rate sweeps over protocol variants, written as CSV tables."""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import __version__
from .config import RunConfig, config_hash, format_config
from .optimizer import ProtocolVariant, optimize
from .simulator import SimConfig, Z_LIMIT, validate_against_analytic

SIM_QUANTITIES = ("mu_p", "mu_s", "delay", "p_empty")


def _columns(m: int, with_sim: bool) -> list[str]:
    cols = ["lambda_p", "variant", "feasible", "mu_s", "mu_p", "delay_p", "p_empty", "omega_0"]
    cols += [f"omega_{k}" for k in range(1, m + 1)] + [f"beta_{k}" for k in range(1, m + 1)]
    if with_sim:
        cols += [f"{q}_sim" for q in SIM_QUANTITIES] + [f"z_{q}" for q in SIM_QUANTITIES]
    return cols


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return "nan" if math.isnan(value) else repr(float(value))
    return str(value)


def _run_point(args):
    config, index, lambda_p, variant = args
    res = optimize(variant, float(lambda_p), config.profile, config.system, config.delay_cap, config.optimizer)
    m = config.profile.m
    row = {
        "lambda_p": float(lambda_p),
        "variant": variant.value,
        "feasible": res.feasible,
        "mu_s": res.mu_s,
        "mu_p": res.metrics.mu_p,
        "delay_p": res.metrics.delay_p,
        "p_empty": res.metrics.p_empty,
    }
    if variant is not ProtocolVariant.PERFECT_BOUND:
        vec = res.policy.as_vector()
        row["omega_0"] = float(vec[0])
        row.update({f"omega_{k}": float(vec[k]) for k in range(1, m + 1)})
        row.update({f"beta_{k}": float(vec[m + k]) for k in range(1, m + 1)})
    sim = config.simulation
    if sim and res.feasible and variant is not ProtocolVariant.PERFECT_BOUND:
        per_row = SimConfig(sim.n_slots, sim.warmup_slots, (sim.seed, index))
        for c in validate_against_analytic(config.system, config.profile, res.policy, float(lambda_p), per_row):
            row[f"{c.quantity}_sim"] = c.empirical
            row[f"z_{c.quantity}"] = c.z
    return row


def run_sweep(config: RunConfig, jobs: int = 1) -> list[dict]:
    """Optimise every (arrival rate, variant) pair; rows come back in grid order."""
    work = [(config, i, lam, v) for i, (lam, v) in
            enumerate((lam, v) for lam in config.lambda_grid() for v in config.variants)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_run_point, work, chunksize=4))
    return [_run_point(w) for w in work]


def any_flagged(rows: list[dict]) -> bool:
    return any(abs(row.get(f"z_{q}", 0.0)) > Z_LIMIT for row in rows for q in SIM_QUANTITIES
               if not math.isnan(row.get(f"z_{q}", 0.0)))


def format_table(rows: list[dict], config: RunConfig) -> str:
    out = io.StringIO()
    out.write(f"# cogaccess {__version__} sweep\n")
    out.write(f"# config-sha256: {config_hash(config)}\n")
    for line in format_config(config).splitlines():
        out.write(f"#   {line}\n" if line else "#\n")
    writer = csv.writer(out, lineterminator="\n")
    cols = _columns(config.profile.m, config.simulation is not None)
    writer.writerow(cols)
    for row in rows:
        writer.writerow([_fmt(row.get(c)) for c in cols])
    return out.getvalue()


def write_table(rows: list[dict], config: RunConfig, path) -> None:
    with open(path, "w", newline="") as f:
        f.write(format_table(rows, config))


def read_table(path) -> list[dict]:
    """Parse a results table back into typed rows (blank cells become ``None``)."""
    with open(path, newline="") as f:
        lines = [line for line in f if not line.startswith("#")]
    rows = []
    for raw in csv.DictReader(lines):
        row = {}
        for key, value in raw.items():
            if value == "":
                row[key] = None
            elif key == "variant":
                row[key] = value
            elif key == "feasible":
                row[key] = value == "1"
            else:
                row[key] = float(value)
        rows.append(row)
    return rows
