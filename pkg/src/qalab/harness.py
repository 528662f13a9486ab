"""Sweep orchestration behind the CLI subcommands.

Work items are independent (instance, parameter) cells.  They run in a
process pool when ``workers > 1``; results come back in submission order and
only the calling process writes files, so outputs are deterministic.
"""

from __future__ import annotations

import csv
import io
import itertools
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Optional

import numpy as np

from .bounds import BoundsReport, coefficient_a, gap_bound_check
from .config import RunConfig
from .dynamics import evolve
from .errors import NormDriftError, QALabError
from .ising import DriverKind, HamiltonianView, IsingInstance, parse_instance, random_instance
from .oracle import enumerate_classical
from .schedules import PowerLaw, schedule_from_config
from .spectra import full_spectrum

SUMMARY_COLUMNS = ("run_id", "instance", "driver", "schedule", "alpha", "delta", "gamma_cap", "t_final",
                   "gamma_final", "final_fidelity", "final_excitation", "residual_energy", "success_prob",
                   "max_norm_drift", "status")


def _pmap(fn: Callable, items: list, workers: int) -> list:
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def load_instance(path) -> IsingInstance:
    return parse_instance(Path(path).read_text(encoding="utf-8"))


def generate_instances(n_sites: int, count: int, seed: int, orders: Iterable[int] = (1, 2)) -> list[str]:
    """Random instance files as text; the seed and profile go in a header comment."""
    rng = np.random.default_rng(seed)
    orders = tuple(orders)
    texts = []
    for k in range(count):
        inst = random_instance(n_sites, rng, orders)
        header = f"# generated: seed={seed} index={k} orders={','.join(map(str, orders))}\n"
        texts.append(header + inst.to_text())
    return texts


# -- spectrum ---------------------------------------------------------------

def spectrum_table(inst: IsingInstance, driver, gammas: Iterable[float], levels: Optional[int] = None,
                   limit: Optional[int] = None) -> str:
    dim = inst.dim
    levels = min(dim, levels or (dim if dim <= 16 else 8))
    base = HamiltonianView.from_instance(inst, driver, 0.0)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["gamma"] + [f"eps_{k}" for k in range(levels)] + ["gap"])
    kwargs = {} if limit is None else {"limit": limit}
    for g in gammas:
        vals = full_spectrum(base.with_gamma(g), want_vectors=False, **kwargs).eigenvalues
        writer.writerow([repr(float(g))] + [repr(float(v)) for v in vals[:levels]] + [repr(float(vals[1] - vals[0]))])
    return buf.getvalue()


# -- bounds -----------------------------------------------------------------

def _bounds_cell(item) -> list[dict]:
    path, text, driver, gammas, limit = item
    inst = parse_instance(text)
    summary = enumerate_classical(inst)
    base = HamiltonianView.from_instance(inst, driver, 0.0)
    rows = []
    for g in gammas:
        report = gap_bound_check(base.with_gamma(g), summary, limit=limit)
        row = {"instance": str(path), **report.to_json_dict()}
        rows.append(row)
    return rows


def run_bounds(cfg: RunConfig) -> list[dict]:
    items = [(p, Path(p).read_text(encoding="utf-8"), cfg.driver, cfg.gammas, cfg.dense_limit)
             for p in cfg.instances]
    return [row for rows in _pmap(_bounds_cell, items, cfg.workers) for row in rows]


def bounds_failures(rows: Iterable[dict]) -> list[dict]:
    """Reports in the asymptotic regime with at least one failed check."""
    return [r for r in rows if r["asymptotic"] and not r["passed"]]


def report_from_row(row: dict) -> BoundsReport:
    row = dict(row)
    row.pop("instance", None)
    return BoundsReport.from_json_dict(row)


# -- anneal -----------------------------------------------------------------

@dataclass
class AnnealTask:
    run_id: int
    instance_path: str
    instance_text: str
    driver: str
    schedule: dict
    t_final: Optional[float]
    dt: float
    samples: int
    dense_limit: int


def anneal_tasks(cfg: RunConfig) -> list[AnnealTask]:
    axes = {k: v for k, v in cfg.sweep.items() if k in ("alpha", "delta", "t_final")}
    names = sorted(axes)
    tasks = []
    run_id = 0
    for path in cfg.instances:
        text = Path(path).read_text(encoding="utf-8")
        for combo in itertools.product(*(axes[k] for k in names)):
            sched = dict(cfg.schedule)
            t_final = cfg.t_final
            for key, value in zip(names, combo):
                if key == "t_final":
                    t_final = value
                else:
                    sched[key] = repr(value)
                    if key == "alpha":
                        sched.pop("delta", None)
            tasks.append(AnnealTask(run_id, str(path), text, cfg.driver.value, sched, t_final,
                                    cfg.dt, cfg.samples, cfg.dense_limit))
            run_id += 1
    return tasks


def _resolve_t_final(task: AnnealTask, schedule) -> float:
    if task.t_final is not None:
        return task.t_final
    if "t_final" in task.schedule:
        return float(task.schedule["t_final"])
    if isinstance(schedule, PowerLaw) and "gamma_final" in task.schedule:
        g_final = float(task.schedule["gamma_final"])
        return max(g_final ** (-schedule.decay_order) / schedule.alpha, schedule.t_cap)
    raise ValueError("anneal needs t_final (run or sweep) or gamma_final for power-law schedules")


def run_anneal_task(task: AnnealTask) -> dict:
    started = time.perf_counter()
    inst = parse_instance(task.instance_text)
    summary = enumerate_classical(inst)
    driver = DriverKind.parse(task.driver)
    a = coefficient_a(summary, summary.e_min, inst.n_sites, driver)
    sched_cfg = dict(task.schedule)
    if sched_cfg.get("schedule", "power").strip().lower() == "linear" and "t_final" not in sched_cfg:
        if task.t_final is None:
            raise ValueError("linear schedule needs t_final")
        sched_cfg["t_final"] = repr(task.t_final)
    schedule = schedule_from_config(sched_cfg, inst.n_sites, a=a, default_cap=summary.spread)
    t_final = _resolve_t_final(task, schedule)
    row = {
        "run_id": task.run_id, "instance": task.instance_path, "driver": driver.value,
        "schedule": schedule.kind, "alpha": getattr(schedule, "alpha", ""),
        "delta": sched_cfg.get("delta", "") if "alpha" not in sched_cfg else "",
        "gamma_cap": getattr(schedule, "gamma_cap", getattr(schedule, "gamma_start", "")),
        "t_final": t_final, "gamma_final": schedule.gamma(t_final),
    }
    try:
        traj = evolve(inst, driver, schedule, t_final, task.dt, task.samples,
                      limit=task.dense_limit, summary=summary)
        status = "ok"
    except NormDriftError as exc:
        traj, status = exc.trajectory, "norm_drift_abort"
    row.update(final_fidelity=traj.fidelity[-1], final_excitation=traj.excitation[-1],
               residual_energy=traj.residual_energy[-1], success_prob=traj.success_prob[-1],
               max_norm_drift=traj.max_norm_drift, status=status)
    return {"row": row, "trajectory": traj.to_csv(), "elapsed": time.perf_counter() - started}


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def run_anneal(cfg: RunConfig, out_dir: Path) -> list[dict]:
    """Run every sweep cell; write run_XXXX.csv, summary.csv and records.jsonl."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    tasks = anneal_tasks(cfg)
    results = _pmap(_safe_task, tasks, cfg.workers)
    rows = []
    with open(out_dir / "summary.csv", "w", newline="", encoding="utf-8") as summary_fh, \
            open(out_dir / "records.jsonl", "w", encoding="utf-8") as records_fh:
        writer = csv.writer(summary_fh, lineterminator="\n")
        writer.writerow(SUMMARY_COLUMNS)
        for task, res in zip(tasks, results):
            row = res["row"]
            if res["trajectory"]:
                (out_dir / f"run_{task.run_id:04d}.csv").write_text(res["trajectory"], encoding="utf-8")
            writer.writerow([_fmt(row.get(c, "")) for c in SUMMARY_COLUMNS])
            record = {"run_id": task.run_id, "fingerprint": cfg.fingerprint(Path(task.instance_path)),
                      "seed": cfg.seed, "summary": row, "elapsed_s": res["elapsed"]}
            records_fh.write(json.dumps(record, sort_keys=True) + "\n")
            rows.append(row)
    return rows


def _safe_task(task: AnnealTask) -> dict:
    # one failing cell must not kill the sweep
    try:
        return run_anneal_task(task)
    except (QALabError, ValueError) as exc:
        row = {"run_id": task.run_id, "instance": task.instance_path, "driver": task.driver,
               "schedule": task.schedule.get("schedule", ""), "status": f"error: {exc}"}
        return {"row": row, "trajectory": "", "elapsed": 0.0}


def read_summary(path) -> list[dict]:
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))
