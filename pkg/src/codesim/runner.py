"""Experiment orchestration: spec -> instances -> prompts -> completions -> scores.

Output directory layout::

    manifest.jsonl                 one row per generated instance
    sources/                       rendered programs, one file per instance
    cache.jsonl                    completion cache (record/replay)
    run_manifest.json              spec hash and artifact versions
    logs/{model}/{family}/{cell}.{technique}.jsonl
    report.json, scores.jsonl      aggregate and per-instance scores
    tables/{family}.csv, tables/tokens.csv
"""
from __future__ import annotations

import csv
import hashlib
import itertools
import json
import logging
import re
from collections import defaultdict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from importlib import resources
from pathlib import Path
from typing import Callable, Optional

import yaml

from . import __version__
from .client import Client, ClientError, ModelConfig, ReplayMiss, ResponseCache, request_hash
from .generators import FAMILIES, BenchmarkInstance, derive_seed, generate as generate_instance
from .prompts import KSHOT_FAMILIES, PromptBundle, Technique, build
from .scoring import ExtractedAnswer, ScoreReport, extract, is_correct, majority_vote, tuple_similarity

log = logging.getLogger(__name__)

BUILTIN_SPECS = ("paper-replication",)


class ConfigError(ValueError):
    pass


class MissingLogs(FileNotFoundError):
    pass


def _canonical(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def cell_name(params: dict) -> str:
    """Filesystem-safe, order-independent name for a parameter assignment."""
    if not params:
        return "default"
    parts = [f"{k}-{params[k]}" for k in sorted(params)]
    return re.sub(r"[^\w.\-]+", "_", "__".join(parts))


@dataclass
class FamilyGrid:
    family: str
    grid: dict = field(default_factory=dict)
    fixed: dict = field(default_factory=dict)
    runs: Optional[int] = None
    batch: Optional[int] = None
    techniques: Optional[list] = None

    def cells(self) -> list[dict]:
        keys = list(self.grid)
        out = []
        for combo in itertools.product(*(self.grid[k] for k in keys)):
            params = dict(self.fixed)
            params.update(zip(keys, combo))
            out.append(params)
        return out


@dataclass
class ExperimentSpec:
    name: str
    families: list
    models: list
    techniques: list = field(default_factory=lambda: ["cot"])
    seed: int = 0
    runs: int = 3
    batch: int = 30
    parallel: int = 4
    mode: str = "record"

    def __post_init__(self) -> None:
        if self.runs < 1 or self.batch < 1:
            raise ConfigError("runs and batch must be >= 1")
        if self.parallel < 1:
            raise ConfigError("parallel must be >= 1")
        if self.mode not in ("live", "record", "replay"):
            raise ConfigError(f"unknown mode {self.mode!r}")
        for fg in self.families:
            if fg.family not in FAMILIES:
                raise ConfigError(f"unknown family {fg.family!r}")
            if (fg.runs is not None and fg.runs < 1) or (fg.batch is not None and fg.batch < 1):
                raise ConfigError(f"{fg.family}: runs and batch must be >= 1")
        for t in self.techniques + [t for fg in self.families for t in fg.techniques or []]:
            try:
                Technique.parse(t)
            except ValueError as exc:
                raise ConfigError(str(exc)) from exc

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentSpec":
        if not isinstance(data, dict):
            raise ConfigError("spec must be a mapping")
        data = dict(data)
        try:
            fams = [FamilyGrid(**f) for f in data.pop("families")]
            models = [ModelConfig.from_dict(m) for m in data.pop("models")]
            return cls(families=fams, models=models, **data)
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"invalid spec: {exc}") from exc

    @classmethod
    def load(cls, path_or_name) -> "ExperimentSpec":
        """Read a YAML spec file, or a built-in spec by name."""
        name = str(path_or_name)
        path = Path(name)
        if not path.exists() and name in BUILTIN_SPECS:
            text = (resources.files("codesim") / "specs" / f"{name}.yaml").read_text("utf-8")
        elif path.exists():
            text = path.read_text("utf-8")
        else:
            raise ConfigError(f"no spec file {name!r}")
        try:
            data = yaml.safe_load(text)
        except yaml.YAMLError as exc:
            raise ConfigError(f"spec is not valid YAML: {exc}") from exc
        return cls.from_dict(data)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["models"] = [asdict(m) for m in self.models]
        return d

    @property
    def hash(self) -> str:
        # parallelism and cache mode do not change results
        d = self.to_dict()
        d.pop("parallel")
        d.pop("mode")
        return hashlib.sha256(_canonical(d).encode()).hexdigest()[:16]

    def runs_for(self, fg: FamilyGrid) -> int:
        return fg.runs or self.runs

    def batch_for(self, fg: FamilyGrid) -> int:
        return fg.batch or self.batch

    def techniques_for(self, fg: FamilyGrid) -> list[Technique]:
        return [Technique.parse(t) for t in (fg.techniques or self.techniques)]


def instance_seed(master: int, family: str, params: dict, run: int, item: int) -> int:
    # both members of a variant pair see the same input
    key = {k: v for k, v in params.items() if not (family == "variant_pair" and k == "which")}
    return derive_seed(master, family, key, run, item)


@dataclass(frozen=True)
class Slot:
    family: str
    params: dict
    run: int
    item: int
    instance: BenchmarkInstance

    @property
    def cell(self) -> str:
        return cell_name(self.params)


def instances(spec: ExperimentSpec) -> dict[tuple[str, str], list[Slot]]:
    """Every instance of an experiment, grouped by (family, cell) in declaration order."""
    out: dict[tuple[str, str], list[Slot]] = {}
    for fg in spec.families:
        for params in fg.cells():
            slots = out.setdefault((fg.family, cell_name(params)), [])
            for run in range(spec.runs_for(fg)):
                for item in range(spec.batch_for(fg)):
                    seed = instance_seed(spec.seed, fg.family, params, run, item)
                    inst = generate_instance(fg.family, params, seed)
                    slots.append(Slot(fg.family, params, run, item, inst))
    return out


def generate(spec: ExperimentSpec, out, write_sources: bool = True) -> int:
    """Write manifest.jsonl (and program sources); return the row count."""
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    src_dir = out / "sources"
    if write_sources:
        src_dir.mkdir(exist_ok=True)
    rows = 0
    with (out / "manifest.jsonl").open("w", encoding="utf-8") as fh:
        for (family, cell), slots in instances(spec).items():
            for s in slots:
                rec = s.instance.to_record()
                rec.update(cell=cell, run=s.run, item=s.item, spec_hash=spec.hash)
                fh.write(json.dumps(rec, sort_keys=True) + "\n")
                rows += 1
                if write_sources:
                    body = "\n\n".join(s.instance.sources) + "\n"
                    (src_dir / f"{family}_{s.instance.seed}_{cell}.py").write_text(body, "utf-8")
    return rows


# -- running ---------------------------------------------------------------------


@dataclass
class RunResult:
    report: dict
    rows: int
    failures: int
    skipped: list

    @property
    def exit_code(self) -> int:
        return 3 if self.failures else 0


def _log_row(spec_hash, model, slot, bundle: PromptBundle, record, error) -> dict:
    answer = extract(record.response if record else "", bundle.answer_contract)
    return {
        "spec_hash": spec_hash,
        "model": model,
        "family": slot.family,
        "cell": slot.cell,
        "params": slot.params,
        "run": slot.run,
        "item": slot.item,
        "instance_id": slot.instance.id,
        "technique": bundle.technique,
        "sample_index": bundle.sample_index,
        "bundle": bundle.to_dict(),
        "record": record.to_dict() if record else None,
        "error": error,
        "ground_truth": slot.instance.ground_truth,
        "extracted": {"value": answer.value, "method": answer.method},
        "correct": is_correct(answer, slot.instance.ground_truth),
    }


def _call(client: Client, bundle: PromptBundle):
    try:
        return client.complete(bundle), None
    except ReplayMiss:
        raise
    except ClientError as exc:
        log.warning("call failed for %s: %s", bundle.instance_id, exc)
        return None, f"{type(exc).__name__}: {exc}"


def run(
    spec: ExperimentSpec,
    out,
    mode: Optional[str] = None,
    parallel: Optional[int] = None,
    client_factory: Optional[Callable[[ModelConfig, str, ResponseCache], Client]] = None,
) -> RunResult:
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    mode = mode or spec.mode
    workers = parallel or spec.parallel
    cache = ResponseCache(out / "cache.jsonl")
    make = client_factory or (lambda cfg, m, c: Client(cfg, mode=m, cache=c))
    groups = instances(spec)

    plan = []  # (model_config, family_grid, technique, slots, bundles-per-slot)
    skipped = []
    for cfg in spec.models:
        for fg in spec.families:
            for technique in spec.techniques_for(fg):
                if technique.kind == "kshot" or (technique.inner and technique.inner.kind == "kshot"):
                    if fg.family not in KSHOT_FAMILIES:
                        skipped.append({"family": fg.family, "technique": technique.label})
                        continue
                for params in fg.cells():
                    slots = groups[(fg.family, cell_name(params))]
                    plan.append((cfg, fg, technique, slots))

    if mode == "replay":
        # fail before any work rather than half-way through
        for cfg, _, technique, slots in plan:
            for s in slots:
                for b in build(s.instance, technique):
                    if request_hash(cfg, b) not in cache:
                        raise ReplayMiss(
                            f"replay cache has no entry for {cfg.model_name}/{s.family}/{technique.label}"
                        )

    (out / "run_manifest.json").write_text(
        json.dumps(
            {"spec_hash": spec.hash, "version": __version__, "spec": spec.to_dict(), "mode": mode},
            sort_keys=True,
            indent=2,
        )
        + "\n",
        "utf-8",
    )

    all_rows = []
    failures = 0
    clients = {cfg.model_name: make(cfg, mode, cache) for cfg in spec.models}
    with ThreadPoolExecutor(max_workers=workers) as pool:
        for cfg, fg, technique, slots in plan:
            client = clients[cfg.model_name]
            jobs = [(s, b) for s in slots for b in build(s.instance, technique)]
            path = out / "logs" / cfg.label / fg.family / f"{slots[0].cell}.{technique.label}.jsonl"
            path.parent.mkdir(parents=True, exist_ok=True)
            with path.open("w", encoding="utf-8") as fh:
                results = pool.map(lambda job: _call(client, job[1]), jobs)
                for (slot, bundle), (record, error) in zip(jobs, results):
                    row = _log_row(spec.hash, cfg.model_name, slot, bundle, record, error)
                    failures += error is not None
                    fh.write(json.dumps(row, sort_keys=True) + "\n")
                    fh.flush()
                    all_rows.append(row)

    report = score_rows(all_rows, spec_hash=spec.hash, skipped=skipped)
    write_scores(out, report, all_rows)
    return RunResult(report, len(all_rows), failures, skipped)


# -- scoring ---------------------------------------------------------------------


def _answer(row: dict) -> ExtractedAnswer:
    if row.get("record") is None:
        return ExtractedAnswer(None, "failed")
    return extract(row["record"]["response"], row["bundle"]["answer_contract"])


def instance_outcomes(rows: list[dict]) -> list[dict]:
    """Collapse log rows to one scored outcome per instance (SC votes merged)."""
    groups: dict[tuple, list[dict]] = defaultdict(list)
    for r in rows:
        key = (r["model"], r["family"], r["cell"], r["technique"], r["run"], r["item"])
        groups[key].append(r)
    out = []
    for key in sorted(groups):
        votes = sorted(groups[key], key=lambda r: r["sample_index"])
        first = votes[0]
        answers = [_answer(r) for r in votes]
        ok = [a for a, r in zip(answers, votes) if r.get("record") is not None]
        tie_broken = False
        if len(ok) >= 2:
            vote = majority_vote(ok)
            answer, tie_broken = vote.answer, vote.tie_broken
        else:
            answer = ok[0] if ok else ExtractedAnswer(None, "failed")
        truth = first["ground_truth"]
        recs = [r["record"] for r in votes if r.get("record")]
        out.append(
            {
                "model": first["model"],
                "family": first["family"],
                "cell": first["cell"],
                "params": first["params"],
                "technique": first["technique"],
                "run": first["run"],
                "item": first["item"],
                "instance_id": first["instance_id"],
                "ground_truth": truth,
                "answer": answer.value,
                "method": answer.method,
                "correct": is_correct(answer, truth),
                "tuple_similarity": round(tuple_similarity(answer, truth), 6),
                "tie_broken": tie_broken,
                "votes": len(votes),
                "failed_calls": sum(r.get("record") is None for r in votes),
                "prompt_tokens": sum(r["prompt_tokens"] for r in recs),
                "output_tokens": sum(r["output_tokens"] for r in recs),
                "_answer": answer,
            }
        )
    return out


def score_rows(rows: list[dict], spec_hash: str = "", skipped=()) -> dict:
    """Aggregate report keyed by (model, family, params, technique), per run."""
    per_run: dict[tuple, dict[int, ScoreReport]] = defaultdict(lambda: defaultdict(ScoreReport))
    params_of = {}
    for o in instance_outcomes(rows):
        key = (o["model"], o["family"], o["cell"], o["technique"])
        params_of[key] = o["params"]
        rep = per_run[key][o["run"]]
        rep.add(o["_answer"], o["ground_truth"], o["tie_broken"])
        rep.failed_calls += o["failed_calls"]
        rep.prompt_tokens += o["prompt_tokens"]
        rep.output_tokens += o["output_tokens"]
    cells = []
    for key in sorted(per_run):
        runs = per_run[key]
        total = ScoreReport()
        for r in runs.values():
            total = total + r
        model, family, cell, technique = key
        cells.append(
            {
                "model": model,
                "family": family,
                "cell": cell,
                "params": params_of[key],
                "technique": technique,
                "runs": [runs[i].to_dict() for i in sorted(runs)],
                "overall": total.to_dict(),
            }
        )
    return {
        "spec_hash": spec_hash,
        "version": __version__,
        "cells": cells,
        "skipped": sorted(skipped, key=lambda s: (s["family"], s["technique"])),
        "failed_calls": sum(c["overall"]["failed_calls"] for c in cells),
    }


def write_scores(out: Path, report: dict, rows: list[dict]) -> None:
    (out / "report.json").write_text(json.dumps(report, sort_keys=True, indent=2) + "\n", "utf-8")
    with (out / "scores.jsonl").open("w", encoding="utf-8") as fh:
        for o in instance_outcomes(rows):
            o.pop("_answer")
            fh.write(json.dumps(o, sort_keys=True) + "\n")


def read_logs(out) -> list[dict]:
    root = Path(out) / "logs"
    files = sorted(root.rglob("*.jsonl")) if root.is_dir() else []
    if not files:
        raise MissingLogs(f"no logs under {root}")
    rows = []
    for path in files:
        with path.open(encoding="utf-8") as fh:
            rows.extend(json.loads(line) for line in fh if line.strip())
    return rows


def score(out) -> dict:
    """Re-score existing logs (extraction is re-run on the stored responses)."""
    out = Path(out)
    rows = read_logs(out)
    spec_hash = rows[0].get("spec_hash", "") if rows else ""
    skipped = []
    if (out / "report.json").exists():
        skipped = json.loads((out / "report.json").read_text("utf-8")).get("skipped", [])
    report = score_rows(rows, spec_hash=spec_hash, skipped=skipped)
    write_scores(out, report, rows)
    return report


# -- tables ----------------------------------------------------------------------


def _mean(xs):
    xs = [x for x in xs if x is not None]
    return round(sum(xs) / len(xs), 6) if xs else ""


def report(out) -> list[Path]:
    """Per-family CSV tables (per-run accuracy columns plus means) and token totals."""
    out = Path(out)
    rep = score_rows(read_logs(out))
    tables = out / "tables"
    tables.mkdir(exist_ok=True)
    by_family = defaultdict(list)
    for c in rep["cells"]:
        if c["overall"]["N"] == 0:
            log.warning("empty cell omitted: %s %s", c["family"], c["cell"])
            continue
        by_family[c["family"]].append(c)

    written = []
    token_rows = []
    for family in sorted(by_family):
        cells = by_family[family]
        pkeys = sorted({k for c in cells for k in c["params"]})
        nruns = max(len(c["runs"]) for c in cells)
        header = pkeys + ["model", "technique", "N"]
        header += [f"accuracy_run{i}" for i in range(nruns)]
        header += ["accuracy", "mae", "mae_excluded", "tuple_similarity", "delta",
                   "unparsed", "cumulative_output_tokens"]
        path = tables / f"{family}.csv"
        with path.open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            for c in cells:
                o = c["overall"]
                accs = [r["accuracy"] for r in c["runs"]]
                row = [c["params"].get(k, "") for k in pkeys]
                row += [c["model"], c["technique"], o["N"]]
                row += accs + [""] * (nruns - len(accs))
                row += [
                    _mean(accs),
                    _mean([r["mae"] for r in c["runs"]]),
                    o["mae_excluded"],
                    _mean([r["tuple_similarity"] for r in c["runs"]]),
                    "" if o["delta"] is None else o["delta"],
                    o["unparsed"],
                    o["output_tokens"],
                ]
                w.writerow(row)
                token_rows.append([family, c["cell"], c["model"], c["technique"],
                                   o["prompt_tokens"], o["output_tokens"]])
        written.append(path)

    path = tables / "tokens.csv"
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["family", "cell", "model", "technique",
                    "cumulative_prompt_tokens", "cumulative_output_tokens"])
        w.writerows(token_rows)
    written.append(path)
    return written
