"""Seeded experiment sweeps with per-run records and mean/SD aggregates."""

import csv
import hashlib
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .baselines import BRUTE_FORCE_MAX, brute_force, greedy, hungarian
from .core import RunConfig
from .engine import Arena, BackoffModel, agent_streams
from .generators import FAMILIES, GeneratorSpec, generate
from .learning import evaluate, starting_resource_stabilization, train
from .meetings import (MeetingGenParams, brute_force_schedule, generate_meeting_instance,
                       greedy_meetings, msrac, schedule_fairness, schedule_with_alma)
from .metrics import gini, jain, relative_sw_loss

ALGORITHMS = ("hungarian", "greedy", "alma", "alma_learning", "msrac", "brute_force")
DETERMINISTIC = ("hungarian", "brute_force", "msrac")
CSV_COLUMNS = ("config_id", "family", "size", "instance", "run", "algorithm", "sw",
               "rel_loss_pct", "gini", "jain", "t_conv", "rounds_mean", "anomalies")
METRICS = ("sw", "rel_loss_pct", "gini", "jain", "t_conv", "rounds_mean", "anomalies")
DEFAULT_STEPS = {"map": 512, "binary": 512, "noisy_common": 8192, "meetings": 512}


def stable_seed(*parts):
    """64-bit seed from a blake2b hash of the given labels."""
    h = hashlib.blake2b(repr(parts).encode(), digest_size=8)
    return int.from_bytes(h.digest(), "little") >> 1


@dataclass
class ExperimentSpec:
    """One sweep: a benchmark family, sizes, algorithms and the run protocol.

    ``benchmark`` holds ``family`` plus generator options (``sigma``,
    ``p_one`` for assignment families; ``n_participants``, ``days``,
    ``slots`` and ``params`` overrides for ``"meetings"``). For meetings
    ``sizes`` counts events.
    """

    benchmark: dict
    algorithms: list
    sizes: list
    instances_per_config: int = 16
    runs_per_instance: int = 16
    run: RunConfig = field(default_factory=RunConfig)
    seed: int = 0
    tie_break: str = "id"
    output: str = None

    def __post_init__(self):
        if isinstance(self.run, dict):
            run = dict(self.run)
            if "training_steps" not in run:
                run["training_steps"] = DEFAULT_STEPS.get(self.benchmark.get("family"), 512)
            self.run = RunConfig(**run)
        self.algorithms = list(self.algorithms)
        self.sizes = [int(s) for s in self.sizes]
        fam = self.benchmark.get("family")
        if fam not in FAMILIES + ("meetings",):
            raise ValueError(f"unknown benchmark family {fam!r}")
        if not self.algorithms:
            raise ValueError("at least one algorithm is required")
        bad = [a for a in self.algorithms if a not in ALGORITHMS]
        if bad:
            raise ValueError(f"unknown algorithms {bad}; expected a subset of {ALGORITHMS}")
        if "msrac" in self.algorithms and fam != "meetings":
            raise ValueError("msrac only applies to the meetings benchmark")
        if "hungarian" in self.algorithms and fam == "meetings":
            raise ValueError("hungarian does not apply to the meetings benchmark")
        if "brute_force" in self.algorithms and fam != "meetings" and max(self.sizes) > BRUTE_FORCE_MAX:
            raise ValueError(f"brute_force only runs at sizes <= {BRUTE_FORCE_MAX}")
        if not self.sizes or min(self.sizes) < 1:
            raise ValueError("sizes must be a non-empty list of positive integers")
        if self.instances_per_config < 1 or self.runs_per_instance < 1:
            raise ValueError("instances_per_config and runs_per_instance must be >= 1")
        if self.tie_break not in ("id", "random"):
            raise ValueError("tie_break must be 'id' or 'random'")

    @property
    def family(self):
        return self.benchmark["family"]

    def to_dict(self):
        out = asdict(self)
        out["run"] = asdict(self.run)
        return out

    @classmethod
    def from_dict(cls, data):
        return cls(**data)

    @classmethod
    def from_json(cls, path):
        try:
            with open(path) as fh:
                return cls.from_dict(json.load(fh))
        except OSError as exc:
            raise OSError(f"cannot read experiment config {path}: {exc}") from exc


@dataclass
class ExperimentReport:
    spec: ExperimentSpec
    rows: list

    @property
    def aggregates(self):
        return aggregate(self.rows)

    @property
    def n_anomalies(self):
        return int(sum(r["anomalies"] or 0 for r in self.rows))


def _config_id(family, size):
    return f"{family}-{size}"


def _blank_row(spec, size, inst, run, alg):
    row = dict.fromkeys(CSV_COLUMNS)
    row.update(config_id=_config_id(spec.family, size), family=spec.family, size=size,
               instance=inst, run=run, algorithm=alg, anomalies=0)
    return row


def _assignment_cell(spec, size, inst_idx):
    """All rows for one generated assignment instance."""
    bench = spec.benchmark
    gen = GeneratorSpec(spec.family, size, sigma=bench.get("sigma", 0.1),
                        p_one=bench.get("p_one", 0.5),
                        seed=stable_seed(spec.seed, "instance", spec.family, size, inst_idx))
    instance = generate(gen)
    opt = hungarian(instance)
    rows = []

    def finish(row, alloc_values, sw, step_values=None):
        row["sw"] = sw
        if step_values is not None:
            row["gini_stepwise"] = float(np.mean([gini(v) for v in step_values]))
        row["rel_loss_pct"] = relative_sw_loss(sw, opt.social_welfare) if opt.social_welfare > 0 else 0.0
        row["gini"] = gini(alloc_values)
        row["jain"] = jain(alloc_values)
        rows.append(row)

    for alg in spec.algorithms:
        runs = 1 if alg in DETERMINISTIC else spec.runs_per_instance
        for r in range(runs):
            row = _blank_row(spec, size, inst_idx, r, alg)
            seed = stable_seed(spec.seed, "run", spec.family, size, inst_idx, r, alg)
            if alg == "hungarian":
                finish(row, opt.values(instance), opt.social_welfare)
            elif alg == "brute_force":
                bf = brute_force(instance)
                finish(row, bf.values(instance), bf.social_welfare)
            elif alg == "greedy":
                g = greedy(instance, seed)
                finish(row, g.values(instance), g.social_welfare)
            else:
                learning = alg == "alma_learning"
                cfg = spec.run.replace(seed=seed, training_steps=spec.run.training_steps if learning else 0,
                                       eval_steps=spec.run.eval_steps if learning else 1)
                model = BackoffModel.power(cfg.beta, cfg.epsilon)
                arena = Arena.from_instance(instance, spec.tie_break, seed)
                res = train(arena, cfg, model, streams=agent_streams(seed, instance.n_agents))
                ev = evaluate(arena, res, cfg.eval_steps, model, config=cfg)
                steps = np.where(ev.r_won >= 0,
                                 instance.utility[np.arange(size), np.maximum(ev.r_won, 0)], 0.0)
                values = steps.mean(axis=0)
                row["t_conv"] = starting_resource_stabilization(res.trace) if learning else None
                row["rounds_mean"] = float(ev.rounds.mean())
                row["anomalies"] = int(res.trace.anomalies.sum() + ev.anomalies.sum())
                finish(row, values, float(ev.sw.mean()), steps)
    return rows


def _meeting_cell(spec, size, inst_idx):
    bench = spec.benchmark
    params = MeetingGenParams(**bench.get("params", {}))
    instance = generate_meeting_instance(size, bench.get("n_participants", 20), bench.get("days", 7),
                                         bench.get("slots", 24), params,
                                         stable_seed(spec.seed, "instance", "meetings", size, inst_idx))
    try:
        opt = brute_force_schedule(instance).social_welfare
    except ValueError:
        opt = None
    rows = []
    for alg in spec.algorithms:
        runs = 1 if alg in DETERMINISTIC else spec.runs_per_instance
        for r in range(runs):
            row = _blank_row(spec, size, inst_idx, r, alg)
            seed = stable_seed(spec.seed, "run", "meetings", size, inst_idx, r, alg)
            if alg == "brute_force":
                if opt is None:
                    continue
                schedules = [brute_force_schedule(instance)]
            elif alg == "msrac":
                schedules = [msrac(instance)]
                row["anomalies"] = int(schedules[0].anomaly)
            elif alg == "greedy":
                schedules = [greedy_meetings(instance, seed)]
            else:
                learning = alg == "alma_learning"
                cfg = spec.run.replace(seed=seed, eval_steps=spec.run.eval_steps if learning else 1)
                res = schedule_with_alma(instance, learning, cfg)
                schedules = res.schedules
                if learning:
                    row["t_conv"] = starting_resource_stabilization(res.trace)
                    row["anomalies"] = int(res.trace.anomalies.sum())
                row["rounds_mean"] = float(res.eval_trace.rounds.mean())
                row["anomalies"] += int(res.eval_trace.anomalies.sum())
            sw = float(np.mean([s.social_welfare for s in schedules]))
            fair = [schedule_fairness(instance, s) for s in schedules]
            row["sw"] = sw
            if opt is not None and opt > 0:
                row["rel_loss_pct"] = relative_sw_loss(min(sw, opt), opt)
            row["gini"] = float(np.mean([f["gini_participants"] for f in fair]))
            row["jain"] = float(np.mean([f["jain_participants"] for f in fair]))
            row["gini_events"] = float(np.mean([f["gini_events"] for f in fair]))
            row["jain_events"] = float(np.mean([f["jain_events"] for f in fair]))
            rows.append(row)
    return rows


def _row_key(row):
    return (row["family"], row["size"], row["instance"], row["algorithm"], row["run"])


def run_experiment(spec, threads=1):
    """Run every (size, instance) cell; rows come back sorted, whatever ``threads`` is."""
    cell = _meeting_cell if spec.family == "meetings" else _assignment_cell
    tasks = [(size, i) for size in spec.sizes for i in range(spec.instances_per_config)]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(lambda t: cell(spec, *t), tasks))
    else:
        parts = [cell(spec, *t) for t in tasks]
    rows = sorted((r for part in parts for r in part), key=_row_key)
    return ExperimentReport(spec, rows)


def _mean_sd(values):
    vals = [v for v in values if v is not None and not (isinstance(v, float) and math.isnan(v))]
    if not vals:
        return None, None
    arr = np.asarray(vals, dtype=np.float64)
    sd = float(arr.std(ddof=1)) if len(arr) > 1 else 0.0
    return float(arr.mean()), sd


def aggregate(rows):
    """Mean and sample SD of every metric per (config_id, algorithm), in sorted order."""
    groups = {}
    for r in rows:
        key = (r["family"], int(r["size"]), r["config_id"], r["algorithm"])
        groups.setdefault(key, []).append(r)
    out = []
    for (family, size, cid, alg) in sorted(groups):
        grp = sorted(groups[(family, size, cid, alg)], key=lambda r: (r["instance"], r["run"]))
        agg = {"config_id": cid, "family": family, "size": size, "algorithm": alg, "n": len(grp)}
        for m in METRICS:
            mean, sd = _mean_sd([g.get(m) for g in grp])
            agg[f"{m}_mean"], agg[f"{m}_sd"] = mean, sd
        out.append(agg)
    return out


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def rows_to_csv(rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for r in rows:
        writer.writerow([_fmt(r.get(c)) for c in CSV_COLUMNS])
    return buf.getvalue()


def report_csv(report, path):
    text = rows_to_csv(report.rows)
    try:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(f"cannot write CSV report {path}: {exc}") from exc
    return path


def report_json(report, path):
    payload = {"spec": report.spec.to_dict() if report.spec else None,
               "rows": report.rows, "aggregates": report.aggregates}
    try:
        with open(path, "w") as fh:
            json.dump(payload, fh, indent=1, sort_keys=True)
    except OSError as exc:
        raise OSError(f"cannot write JSON report {path}: {exc}") from exc
    return path


def _parse(col, text):
    if text == "":
        return None
    if col in ("config_id", "family", "algorithm"):
        return text
    if col in ("size", "instance", "run", "anomalies", "t_conv"):
        return int(text)
    return float(text)


def read_csv_rows(path):
    """Rows of a CSV written by :func:`report_csv`, with numeric fields parsed."""
    try:
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            if tuple(reader.fieldnames or ()) != CSV_COLUMNS:
                raise ValueError(f"{path} does not have the report columns {CSV_COLUMNS}")
            return [{c: _parse(c, r[c]) for c in CSV_COLUMNS} for r in reader]
    except OSError as exc:
        raise OSError(f"cannot read CSV report {path}: {exc}") from exc
