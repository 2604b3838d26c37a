"""Experiment orchestration: config, seeds, grid loop and CSV output.

A grid point is (scenario, M, replication). Topology and fading are drawn
once per grid point and shared by every (procedure, association) pair run
on it, so procedure comparisons use common random numbers.
"""
from __future__ import annotations

import configparser
import csv
import logging
import os
import tempfile
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Iterable

import numpy as np

from .association import AssociationMap, AssociationParams, associate
from .channel import RadioConfig, link_rates, rsrp_matrix
from .metrics import RunMetrics, aggregate, summarize
from .scheduling import PROCEDURES, ScheduleSpec, SchedulerParams, simulate
from .topology import ScenarioSpec, generate_topology

log = logging.getLogger(__name__)

ASSOCIATIONS = ("best", "uigo", "bigu", "sm")
SEED_MASK = (1 << 64) - 1

SUMMARY_COLUMNS = [
    "run_id", "scenario", "num_mts", "procedure", "association", "replication",
    "topology_seed", "fading_seed", "slots", "pf_utility", "system_throughput", "jfi",
    "min_throughput", "comparisons_per_slot", "additions_per_slot",
    "multiplications_per_slot", "messages_per_slot", "sync_events", "association_warning",
]
PER_MT_COLUMNS = ["run_id", "mt_id", "x_u", "a1", "a2"]


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    scenarios: tuple[int, ...] = (1,)
    mt_counts: tuple[int, ...] = (30, 60, 90)
    procedures: tuple[str, ...] = PROCEDURES
    associations: tuple[str, ...] = ("uigo", "bigu", "sm")
    slots: int = 10_000
    replications: int = 10
    base_seed: int = 2020
    redraw_topology: bool = True
    scheduler: SchedulerParams = field(default_factory=SchedulerParams)
    association_params: AssociationParams = field(default_factory=AssociationParams)
    radio: RadioConfig = field(default_factory=RadioConfig)
    macro_isd: float = 500.0
    pico_radius: float = 80.0
    picos_per_macro: int = 3
    num_macros: int = 3
    output: str = "results"

    def validate(self) -> None:
        if self.slots < 1:
            raise ConfigError("slots must be >= 1")
        if self.replications < 1:
            raise ConfigError("replications must be >= 1")
        if not self.procedures:
            raise ConfigError("at least one procedure is required")
        for p in self.procedures:
            if p not in PROCEDURES:
                raise ConfigError(f"unknown procedure {p!r}; choose from {', '.join(PROCEDURES)}")
        for a in self.associations:
            if a not in ASSOCIATIONS:
                raise ConfigError(f"unknown association {a!r}; choose from {', '.join(ASSOCIATIONS)}")
        if any(p in ("dcsp", "dcp") for p in self.procedures) and not self.associations:
            raise ConfigError("dual procedures need at least one association")
        if not self.scenarios or not self.mt_counts:
            raise ConfigError("scenarios and mt_counts must be non-empty")
        if not 0 <= self.base_seed <= SEED_MASK:
            raise ConfigError("base_seed must be a non-negative 64-bit integer")
        for s in self.scenarios:
            try:
                self.scenario_spec(s, self.mt_counts[0]).validate()
            except ValueError as exc:
                raise ConfigError(str(exc)) from exc
        for m in self.mt_counts:
            if m < 1:
                raise ConfigError("MT counts must be >= 1")

    def scenario_spec(self, scenario: int, num_mts: int, seed: int = 0) -> ScenarioSpec:
        return ScenarioSpec(scenario, num_mts, seed, self.macro_isd, self.pico_radius,
                            self.picos_per_macro, self.num_macros)

    def runs(self) -> list[tuple[str, str]]:
        """(procedure, association) pairs executed on every grid point."""
        out = []
        for p in self.procedures:
            if p == "scp":
                out.append((p, "best"))
            elif p == "acp":
                out.append((p, "all"))
            else:
                out.extend((p, a) for a in self.associations)
        return out


# ---------------------------------------------------------------------------
# config file


def _ints(text: str) -> tuple[int, ...]:
    return tuple(int(x) for x in text.replace(" ", "").split(",") if x)


def _names(text: str) -> tuple[str, ...]:
    return tuple(x.strip().lower() for x in text.split(",") if x.strip())


def _opt_int(text: str) -> int | None:
    text = text.strip().lower()
    return None if text in ("", "none", "off", "inf") else int(text)


_EXPERIMENT_KEYS = {
    "scenarios": _ints, "scenario": _ints, "mt_counts": _ints, "procedures": _names,
    "associations": _names, "slots": int, "replications": int, "base_seed": int,
    "redraw_topology": None,
}
_TOPOLOGY_KEYS = {"macro_isd": float, "pico_radius": float, "picos_per_macro": int, "num_macros": int}
_SCHED_KEYS = {"gamma": float, "sync_period": _opt_int, "acp_sync_period": _opt_int, "epsilon_init": float}
_ASSOC_KEYS = {"h1": float, "h2": float, "sm_c": int, "bigu_max_rounds": _opt_int}
_RADIO_KEYS = {f.name: float for f in fields(RadioConfig)}


def load_config(path: str | os.PathLike) -> ExperimentConfig:
    """Read an INI-style file ([experiment], [topology], [scheduling],
    [association], [radio], [output]) on top of the defaults."""
    parser = configparser.ConfigParser()
    try:
        with open(path) as fh:
            parser.read_file(fh)
    except (OSError, configparser.Error) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return config_from_parser(parser)


def config_from_parser(parser: configparser.ConfigParser) -> ExperimentConfig:
    known = {"experiment", "topology", "scheduling", "association", "radio", "output"}
    extra = set(parser.sections()) - known
    if extra:
        raise ConfigError(f"unknown config sections: {sorted(extra)}")

    def section(name, keys):
        out = {}
        if not parser.has_section(name):
            return out
        for key, raw in parser.items(name):
            if key not in keys:
                raise ConfigError(f"unknown key {key!r} in [{name}]")
            try:
                if keys[key] is None:
                    out[key] = parser.getboolean(name, key)
                else:
                    out[key] = keys[key](raw)
            except ValueError as exc:
                raise ConfigError(f"bad value for {name}.{key}: {raw!r}") from exc
        return out

    exp = section("experiment", _EXPERIMENT_KEYS)
    if "scenario" in exp:
        exp["scenarios"] = exp.pop("scenario")
    kwargs = dict(exp)
    kwargs.update(section("topology", _TOPOLOGY_KEYS))
    try:
        kwargs["scheduler"] = SchedulerParams(**section("scheduling", _SCHED_KEYS))
        kwargs["association_params"] = AssociationParams(**section("association", _ASSOC_KEYS))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    kwargs["radio"] = RadioConfig(**section("radio", _RADIO_KEYS))
    if parser.has_section("output"):
        for key, raw in parser.items("output"):
            if key != "directory":
                raise ConfigError(f"unknown key {key!r} in [output]")
            kwargs["output"] = raw
    return ExperimentConfig(**kwargs)


# ---------------------------------------------------------------------------
# running


def derive_seed(base_seed: int, *key: int) -> int:
    """64-bit seed for a grid coordinate, mixed through numpy's SeedSequence.

    Depends only on (base_seed, key), never on enumeration order.
    """
    ss = np.random.SeedSequence([base_seed & SEED_MASK, *key])
    return int(ss.generate_state(1, np.uint64)[0])


TOPOLOGY_STREAM = 0
FADING_STREAM = 1


@dataclass
class RunRecord:
    run_id: str
    scenario: int
    num_mts: int
    procedure: str
    association: str
    replication: int
    topology_seed: int
    fading_seed: int
    slots: int
    metrics: RunMetrics
    assoc: AssociationMap
    served_by_bs: np.ndarray


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    records: list[RunRecord]

    def select(self, **conditions) -> list[RunRecord]:
        return [r for r in self.records if all(getattr(r, k) == v for k, v in conditions.items())]

    def mean_pf_utility(self, **conditions) -> float:
        runs = self.select(**conditions)
        if not runs:
            raise KeyError(f"no runs match {conditions}")
        return float(np.mean([r.metrics.pf_utility for r in runs]))

    def summary_table(self) -> list[dict]:
        groups: dict[tuple, list[RunRecord]] = {}
        for r in self.records:
            groups.setdefault((r.scenario, r.num_mts, r.procedure, r.association), []).append(r)
        rows = []
        for (s, m, p, a), recs in groups.items():
            stats = summarize([r.metrics for r in recs])
            rows.append({"scenario": s, "num_mts": m, "procedure": p, "association": a,
                         "replications": len(recs), **stats})
        return rows


def run_grid_point(config: ExperimentConfig, scenario: int, num_mts: int, rep: int) -> list[RunRecord]:
    topo_rep = rep if config.redraw_topology else 0
    topo_seed = derive_seed(config.base_seed, scenario, num_mts, topo_rep, TOPOLOGY_STREAM)
    fading_seed = derive_seed(config.base_seed, scenario, num_mts, rep, FADING_STREAM)
    topology = generate_topology(config.scenario_spec(scenario, num_mts, topo_seed))
    rsrp = rsrp_matrix(topology)
    is_macro = topology.is_macro()

    pairs = config.runs()
    assoc_cache: dict[str, AssociationMap] = {}
    for _, a in pairs:
        if a not in assoc_cache:
            assoc_cache[a] = associate(a, rsrp, is_macro, config.association_params)
    specs = [ScheduleSpec.for_procedure(p, assoc_cache[a], config.scheduler) for p, a in pairs]

    rates = link_rates(topology, config.radio, config.slots, fading_seed)
    results = simulate(rates, specs, config.scheduler)

    records = []
    for (p, a), res in zip(pairs, results):
        run_id = f"s{scenario}-m{num_mts}-{p}-{a}-r{rep}"
        records.append(RunRecord(run_id, scenario, num_mts, p, a, rep, topo_seed, fading_seed,
                                 config.slots, aggregate(res), assoc_cache[a], res.served_by_bs))
    return records


def run_experiment(config: ExperimentConfig, write: bool = True) -> ExperimentResult:
    config.validate()
    records = []
    for scenario in config.scenarios:
        for m in config.mt_counts:
            for rep in range(config.replications):
                log.info("scenario %d, M=%d, replication %d", scenario, m, rep)
                records.extend(run_grid_point(config, scenario, m, rep))
    result = ExperimentResult(config, records)
    if write:
        write_outputs(result, config.output)
    return result


# ---------------------------------------------------------------------------
# output


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def summary_rows(result: ExperimentResult) -> Iterable[list[str]]:
    for r in result.records:
        c = r.metrics.counters
        yield [_fmt(v) for v in (
            r.run_id, r.scenario, r.num_mts, r.procedure, r.association, r.replication,
            r.topology_seed, r.fading_seed, r.slots, r.metrics.pf_utility,
            r.metrics.system_throughput, r.metrics.jfi, float(r.metrics.throughput.min()),
            float(c["comparisons"]), float(c["additions"]), float(c["multiplications"]),
            float(c["messages"]), r.metrics.sync_events, r.assoc.warning,
        )]


def per_mt_rows(result: ExperimentResult) -> Iterable[list[str]]:
    for r in result.records:
        for u, x in enumerate(r.metrics.throughput):
            if r.assoc.mode == "all":
                a1 = a2 = "all"
            else:
                a1 = r.assoc.a1(u)
                a2 = r.assoc.a2(u)
                a2 = "" if a2 is None else a2
            yield [r.run_id, str(u), _fmt(x), str(a1), str(a2)]


def write_outputs(result: ExperimentResult, directory: str | os.PathLike) -> tuple[Path, Path]:
    """Write summary.csv and per_mt.csv; nothing is left behind on failure."""
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    targets = [
        (out / "summary.csv", SUMMARY_COLUMNS, summary_rows(result)),
        (out / "per_mt.csv", PER_MT_COLUMNS, per_mt_rows(result)),
    ]
    temps = []
    try:
        for path, header, rows in targets:
            fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=out)
            temps.append(tmp)
            with os.fdopen(fd, "w", newline="") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(header)
                w.writerows(rows)
        for (path, _, _), tmp in zip(targets, temps):
            os.replace(tmp, path)
    except BaseException:
        for tmp in temps:
            if os.path.exists(tmp):
                os.remove(tmp)
        raise
    return targets[0][0], targets[1][0]


def format_summary(result: ExperimentResult) -> str:
    header = f"{'scen':>4} {'M':>4} {'procedure':<9} {'assoc':<6} {'PF utility':>18} " \
             f"{'sys thr (b/slot)':>16} {'JFI':>6} {'msg/slot':>9}"
    lines = [header, "-" * len(header)]
    for row in result.summary_table():
        mu, sd = row["pf_utility"]
        lines.append(
            f"{row['scenario']:>4} {row['num_mts']:>4} {row['procedure']:<9} {row['association']:<6} "
            f"{mu:>10.2f} ± {sd:<5.2f} {row['system_throughput'][0]:>16.1f} "
            f"{row['jfi'][0]:>6.3f} {row['messages_per_slot'][0]:>9.2f}"
        )
    return "\n".join(lines)


def with_overrides(config: ExperimentConfig, **overrides) -> ExperimentConfig:
    """Copy of ``config`` with top-level and nested parameters replaced."""
    sched = {k: overrides.pop(k) for k in list(overrides) if k in _SCHED_KEYS}
    assoc = {k: overrides.pop(k) for k in list(overrides) if k in _ASSOC_KEYS}
    radio = {k: overrides.pop(k) for k in list(overrides) if k in _RADIO_KEYS}
    try:
        if sched:
            overrides["scheduler"] = replace(config.scheduler, **sched)
        if assoc:
            overrides["association_params"] = replace(config.association_params, **assoc)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    if radio:
        overrides["radio"] = replace(config.radio, **radio)
    return replace(config, **overrides)
