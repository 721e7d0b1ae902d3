"""Scaling sweeps over random scenarios.

Wall-clock times depend on the machine, so every run also reports a work
count (automaton and product edges explored), which only depends on the
instance. Agent pools are nested per seed: the run with ``n`` agents uses
the first ``n`` agents of the seed's pool.
"""
from __future__ import annotations

import csv
import random
import statistics
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Iterable, Sequence

from .feasibility import WorkCounter
from .pipeline import synthesize
from .scenario import scenario_from_dict
from .team import NoTeamError

REGIONS = ("A", "B", "C", "D", "E")
ADJACENT = (("A", "B"), ("B", "C"), ("C", "D"), ("A", "E"))
SENSORS = ("moisture", "UV", "thermal", "visual")
AGRICULTURE_TASK = (
    "F((region_B & moisture & UV)^{2 & 3} & (region_A & pickup)^{1}) "
    "& (!pickup^{1} U (region_A & ((thermal | visual) & !(thermal & visual)))^{2})"
)


def _capabilities() -> dict[str, Any]:
    caps: dict[str, Any] = {
        "motion": {
            "states": list(REGIONS),
            "initial": "E",
            "labels": {r: [f"region_{r}"] for r in REGIONS},
            "transitions": [[a, b, 1.0] for a, b in ADJACENT],
            "symmetric": True,
        },
        "arm": {
            "states": ["idle", "pickup", "dropoff", "weed"],
            "initial": "idle",
            "labels": {a: [a] for a in ("pickup", "dropoff", "weed")},
            "transitions": [["idle", a, 0.7] for a in ("pickup", "dropoff", "weed")],
            "symmetric": True,
        },
    }
    for s in SENSORS:
        caps[s] = {
            "states": ["off", "on"],
            "initial": "off",
            "labels": {"on": [s]},
            "transitions": [["off", "on", 0.5]],
            "symmetric": True,
        }
    return caps


def _area(name: str, regions: Sequence[str], initial: str) -> dict[str, Any]:
    chain = list(regions)
    return {
        "states": chain,
        "initial": initial,
        "labels": {r: [f"region_{r}"] for r in chain},
        "transitions": [[a, b, 1.0] for a, b in zip(chain, chain[1:])],
        "symmetric": True,
    }


def random_agent(rng: random.Random, caps: dict[str, Any], idx: int) -> list[str]:
    """Capability names of one random agent; area capabilities are added to ``caps``."""
    parts = []
    if rng.random() < 0.4:
        parts.append("motion")
    else:
        line = ["E", "A", "B", "C", "D"]
        start = rng.randrange(len(line))
        length = rng.randint(1, 3)
        chain = line[start:start + length]
        name = f"area_{idx}"
        caps[name] = _area(name, chain, rng.choice(chain))
        parts.append(name)
    if rng.random() < 0.4:
        parts.append("arm")
    parts += [s for s in SENSORS if rng.random() < 0.5]
    return parts


def agent_pool(seed: int, size: int = 20) -> tuple[dict[str, Any], dict[str, list[str]]]:
    """A seeded pool of agents whose first three can always do the agriculture task."""
    rng = random.Random(seed)
    caps = _capabilities()
    caps["area_lead"] = _area("area_lead", ["A", "B", "C"], "C")
    agents = {
        "a00": ["motion", "arm"],
        "a01": ["area_lead", "thermal", "moisture", "UV"],
    }
    for i in range(2, size):
        agents[f"a{i:02d}"] = random_agent(rng, caps, i)
    return caps, agents


def agents_scenario(seed: int, n: int) -> dict[str, Any]:
    caps, pool = agent_pool(seed)
    chosen = dict(list(pool.items())[:n])
    used = {c for parts in chosen.values() for c in parts}
    return {
        "name": f"agents-{n}-seed-{seed}",
        "bindings": [1, 2, 3],
        "task": AGRICULTURE_TASK,
        "props": ["region_A", "region_B", "pickup", "moisture", "UV", "thermal", "visual"],
        "capabilities": {k: v for k, v in caps.items() if k in used},
        "agents": chosen,
    }


def bindings_scenario(seed: int, m: int, n_agents: int = 4) -> dict[str, Any]:
    """Task asking binding ``rho`` for a given sensor reading in a given region, for ``rho = 1..m``.

    Demands are drawn once per seed for ten bindings and truncated, so larger
    ``m`` extends smaller instances.
    """
    rng = random.Random(seed)
    demands = [(rng.choice(REGIONS[:4]), rng.choice(SENSORS)) for _ in range(10)][:m]
    caps = _capabilities()
    agents = {}
    for i in range(n_agents):
        agents[f"a{i:02d}"] = ["motion"] + list(SENSORS)
    parts = [f"(region_{r} & {s})^{{{rho}}}" for rho, (r, s) in enumerate(demands, start=1)]
    return {
        "name": f"bindings-{m}-seed-{seed}",
        "bindings": list(range(1, m + 1)),
        "task": "F(" + " & ".join(parts) + ")",
        "capabilities": {k: v for k, v in caps.items() if k in {"motion", *SENSORS}},
        "agents": agents,
    }


@dataclass(frozen=True)
class BenchRow:
    size: int
    seed: int
    milliseconds: float
    work: int
    team_found: bool


def run_one(data: dict[str, Any]) -> tuple[float, int, bool]:
    scenario = scenario_from_dict(data, data["name"])
    counter = WorkCounter()
    t0 = time.perf_counter()
    try:
        synthesize(scenario, counter=counter)
        found = True
    except NoTeamError:
        found = False
    ms = (time.perf_counter() - t0) * 1000.0
    return ms, counter.edges, found


def sweep(kind: str, sizes: Iterable[int], seeds: Iterable[int]) -> list[BenchRow]:
    rows = []
    for size in sizes:
        for seed in seeds:
            data = agents_scenario(seed, size) if kind == "agents" else bindings_scenario(seed, size)
            ms, work, found = run_one(data)
            rows.append(BenchRow(size, seed, round(ms, 3), work, found))
    return rows


def write_csv(path: str | Path, kind: str, rows: Sequence[BenchRow]) -> None:
    col = "n_agents" if kind == "agents" else "n_bindings"
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([col, "seed", "milliseconds", "work", "team_found"])
        for r in rows:
            w.writerow([r.size, r.seed, f"{r.milliseconds:.3f}", r.work, int(r.team_found)])


def medians(rows: Sequence[BenchRow], attr: str = "work") -> dict[int, float]:
    by: dict[int, list[float]] = {}
    for r in rows:
        by.setdefault(r.size, []).append(getattr(r, attr))
    return {k: statistics.median(v) for k, v in sorted(by.items())}
