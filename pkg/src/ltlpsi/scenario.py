"""Scenario files: capabilities, agents, bindings and the task, in YAML."""
from __future__ import annotations

from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Any, Mapping

import jsonschema
import yaml

from .agent import AgentModel, AgentModelError, Capability, compose_capabilities, make_capability
from .formula import Formula, parse_task

_NAME = {"type": "string", "minLength": 1}
_PROPS = {"type": "array", "items": _NAME}

SCENARIO_SCHEMA: dict[str, Any] = {
    "type": "object",
    "required": ["bindings", "task", "capabilities", "agents"],
    "additionalProperties": False,
    "properties": {
        "name": _NAME,
        "description": {"type": "string"},
        "bindings": {"type": "array", "items": {"type": "integer", "minimum": 1}, "minItems": 1},
        "task": {"type": "string", "minLength": 1},
        "props": _PROPS,
        "wait_cost": {"type": "number", "minimum": 0},
        "capabilities": {
            "type": "object",
            "minProperties": 1,
            "additionalProperties": {
                "type": "object",
                "required": ["states", "initial", "transitions"],
                "additionalProperties": False,
                "properties": {
                    "states": {"type": "array", "items": _NAME, "minItems": 1},
                    "initial": _NAME,
                    "props": _PROPS,
                    "labels": {"type": "object", "additionalProperties": _PROPS},
                    "transitions": {
                        "type": "array",
                        "items": {
                            "type": "array",
                            "prefixItems": [_NAME, _NAME, {"type": "number", "minimum": 0}],
                            "minItems": 3,
                            "maxItems": 3,
                        },
                    },
                    "symmetric": {"type": "boolean"},
                },
            },
        },
        "agents": {
            "type": "object",
            "minProperties": 1,
            "additionalProperties": {"type": "array", "items": _NAME, "minItems": 1},
        },
    },
}

CANDIDATES_SCHEMA: dict[str, Any] = {
    "type": "object",
    "required": ["bindings", "candidates"],
    "additionalProperties": False,
    "properties": {
        "name": _NAME,
        "description": {"type": "string"},
        "bindings": {"type": "array", "items": {"type": "integer", "minimum": 1}, "minItems": 1},
        "candidates": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "required": ["agent", "bindings", "cost"],
                "additionalProperties": False,
                "properties": {
                    "agent": _NAME,
                    "bindings": {"type": "array", "items": {"type": "integer", "minimum": 1}},
                    "cost": {"type": "number", "minimum": 0},
                },
            },
        },
    },
}


class ScenarioError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Scenario:
    name: str
    task_text: str
    task: Formula
    bindings: frozenset[int]
    capabilities: Mapping[str, Capability]
    agents: tuple[AgentModel, ...]

    def agent(self, name: str) -> AgentModel:
        for a in self.agents:
            if a.name == name:
                return a
        raise KeyError(name)


@dataclass(frozen=True)
class Candidate:
    agent: str
    bindings: frozenset[int]
    cost: float


def _validate(data: Any, schema: dict, source: str) -> None:
    errors = sorted(jsonschema.Draft202012Validator(schema).iter_errors(data), key=lambda e: list(e.path))
    if errors:
        lines = []
        for e in errors:
            where = "/".join(str(p) for p in e.absolute_path) or "<root>"
            lines.append(f"{source}: {where}: {e.message}")
        raise ScenarioError("\n".join(lines))


def read_document(path: str | Path) -> tuple[Any, str]:
    """Parsed YAML of a file or ``builtin:<name>``, and its source name."""
    try:
        text = Path(path).read_text() if not str(path).startswith("builtin:") else builtin_text(str(path)[8:])
    except OSError as e:
        raise ScenarioError(f"{path}: cannot read: {e.strerror or e}") from e
    try:
        return yaml.safe_load(text), str(path)
    except yaml.YAMLError as e:
        raise ScenarioError(f"{path}: invalid YAML: {e}") from e


def builtin_text(name: str) -> str:
    return resources.files(__package__).joinpath("scenarios", f"{name}.yaml").read_text()


def scenario_from_dict(data: Any, source: str = "<scenario>") -> Scenario:
    _validate(data, SCENARIO_SCHEMA, source)
    wait = data.get("wait_cost", 0.0)
    caps: dict[str, Capability] = {}
    for name, spec in data["capabilities"].items():
        trans = [tuple(t) for t in spec["transitions"]]
        if spec.get("symmetric"):
            trans += [(d, s, w) for s, d, w in trans if (d, s) not in {(a, b) for a, b, _ in trans}]
        labels = spec.get("labels", {})
        ap = set(spec.get("props", [])).union(*labels.values()) if labels else set(spec.get("props", []))
        try:
            caps[name] = make_capability(name, spec["states"], spec["initial"], ap, trans, labels, wait)
        except AgentModelError as e:
            raise ScenarioError(f"{source}: capabilities/{name}: {e}") from e
    agents = []
    for name, cap_names in data["agents"].items():
        if missing := [c for c in cap_names if c not in caps]:
            raise ScenarioError(f"{source}: agents/{name}: unknown capabilities {missing}")
        agents.append(compose_capabilities([caps[c] for c in cap_names], name))
    ap_phi = frozenset(data.get("props", ())).union(*(a.ap for a in agents))
    bindings = frozenset(data["bindings"])
    task = parse_task(data["task"], ap_phi, bindings)
    return Scenario(data.get("name", Path(source).stem), data["task"], task, bindings, caps, tuple(agents))


def load_scenario(path: str | Path) -> Scenario:
    """Load a scenario file; ``builtin:<name>`` selects a bundled one."""
    data, source = read_document(path)
    return scenario_from_dict(data, source)


def load_candidates(path: str | Path) -> tuple[frozenset[int], list[Candidate]]:
    data, source = read_document(path)
    _validate(data, CANDIDATES_SCHEMA, source)
    cands = [Candidate(c["agent"], frozenset(c["bindings"]), float(c["cost"])) for c in data["candidates"]]
    return frozenset(data["bindings"]), cands
