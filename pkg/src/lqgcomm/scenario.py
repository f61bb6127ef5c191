"""Scenario files: JSON descriptions of a plant, sensors, budget and run setup.

Matrices are serialized row-major with explicit "rows"/"cols" fields so a
transposed matrix cannot slip through silently. Parsing validates the
full system (delegating to the system/observation checks) and
serialization round-trips losslessly.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import ScenarioParseError
from .systems import (
    LqgSystem,
    ObservationModel,
    make_observation,
    make_system,
    validate_observation,
    validate_system,
)

DEFAULT_HORIZON = 10_000
DEFAULT_BURN_IN = 200


def matrix_to_obj(arr) -> dict:
    arr = np.atleast_2d(np.asarray(arr, dtype=float))
    return {"rows": int(arr.shape[0]), "cols": int(arr.shape[1]),
            "data": [float(x) for x in arr.reshape(-1)]}


def matrix_from_obj(obj, where: str) -> np.ndarray:
    if not isinstance(obj, dict):
        raise ScenarioParseError(f"{where}: expected an object with rows/cols/data",
                                 field=where)
    try:
        rows = int(obj["rows"])
        cols = int(obj["cols"])
        data = [float(x) for x in obj["data"]]
    except (KeyError, TypeError, ValueError) as exc:
        raise ScenarioParseError(f"{where}: bad matrix object ({exc})",
                                 field=where) from exc
    if rows <= 0 or cols <= 0 or len(data) != rows * cols:
        raise ScenarioParseError(
            f"{where}: rows*cols={rows * cols} does not match {len(data)} data values",
            field=where)
    return np.array(data, dtype=float).reshape(rows, cols)


@dataclass(frozen=True, eq=False)
class Scenario:
    """A named, fully validated problem setup."""

    name: str
    system: LqgSystem
    observation: ObservationModel | None
    budget: float
    k_bar: np.ndarray | None
    phi: np.ndarray | None
    seeds: tuple
    horizon: int
    burn_in: int
    tolerances: dict = field(default_factory=dict)

    @property
    def noisy(self) -> bool:
        return self.observation is not None


def _require(mapping, key, where):
    if key not in mapping:
        raise ScenarioParseError(f"missing required field '{where}'", field=where)
    return mapping[key]


def parse_scenario_dict(doc: dict) -> Scenario:
    if not isinstance(doc, dict):
        raise ScenarioParseError("scenario document must be a JSON object")
    name = str(_require(doc, "name", "name"))
    sysblock = _require(doc, "system", "system")
    mats = {}
    for key in ("a", "b", "f", "g", "psi_w", "psi_x"):
        mats[key] = matrix_from_obj(_require(sysblock, key, f"system.{key}"),
                                    f"system.{key}")
    system = validate_system(make_system(**mats))

    observation = None
    if doc.get("observation") is not None:
        oblock = doc["observation"]
        omats = {}
        for key in ("d_c", "psi_q", "d_r", "psi_v"):
            omats[key] = matrix_from_obj(_require(oblock, key, f"observation.{key}"),
                                         f"observation.{key}")
        observation = validate_observation(system, make_observation(**omats))

    try:
        budget = float(_require(doc, "budget", "budget"))
    except (TypeError, ValueError) as exc:
        raise ScenarioParseError(f"budget must be a number ({exc})",
                                 field="budget") from exc
    if budget < 0:
        raise ScenarioParseError("budget must be nonnegative", field="budget")

    policy = doc.get("policy") or {}
    k_bar = (matrix_from_obj(policy["k_bar"], "policy.k_bar")
             if policy.get("k_bar") is not None else None)
    phi = (matrix_from_obj(policy["phi"], "policy.phi")
           if policy.get("phi") is not None else None)

    try:
        seeds = tuple(int(s) for s in doc.get("seeds", [0]))
        horizon = int(doc.get("horizon", DEFAULT_HORIZON))
        burn_in = int(doc.get("burn_in", DEFAULT_BURN_IN))
    except (TypeError, ValueError) as exc:
        raise ScenarioParseError(f"bad seeds/horizon/burn_in ({exc})",
                                 field="seeds") from exc
    if not seeds:
        raise ScenarioParseError("seeds must be a nonempty list", field="seeds")
    if horizon < 1:
        raise ScenarioParseError("horizon must be >= 1", field="horizon")
    if burn_in < 0 or burn_in >= horizon:
        raise ScenarioParseError("burn_in must be in [0, horizon)", field="burn_in")

    tolerances = doc.get("tolerances") or {}
    if not isinstance(tolerances, dict):
        raise ScenarioParseError("tolerances must be an object", field="tolerances")
    tolerances = {str(k): float(v) for k, v in tolerances.items()}

    return Scenario(name=name, system=system, observation=observation, budget=budget,
                    k_bar=k_bar, phi=phi, seeds=seeds, horizon=horizon,
                    burn_in=burn_in, tolerances=tolerances)


def parse_scenario_text(text: str, source: str = "<string>") -> Scenario:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioParseError(f"{source}:{exc.lineno}: {exc.msg}",
                                 line=exc.lineno) from exc
    return parse_scenario_dict(doc)


def parse_scenario(path) -> Scenario:
    with open(path, encoding="utf-8") as fh:
        return parse_scenario_text(fh.read(), source=str(path))


def scenario_to_dict(sc: Scenario) -> dict:
    doc = {
        "name": sc.name,
        "system": {key: matrix_to_obj(getattr(sc.system, key))
                   for key in ("a", "b", "f", "g", "psi_w", "psi_x")},
        "budget": sc.budget,
        "seeds": list(sc.seeds),
        "horizon": sc.horizon,
        "burn_in": sc.burn_in,
        "tolerances": dict(sorted(sc.tolerances.items())),
    }
    if sc.observation is not None:
        doc["observation"] = {key: matrix_to_obj(getattr(sc.observation, key))
                              for key in ("d_c", "psi_q", "d_r", "psi_v")}
    policy = {}
    if sc.k_bar is not None:
        policy["k_bar"] = matrix_to_obj(sc.k_bar)
    if sc.phi is not None:
        policy["phi"] = matrix_to_obj(sc.phi)
    if policy:
        doc["policy"] = policy
    return doc


def dumps_scenario(sc: Scenario) -> str:
    return json.dumps(scenario_to_dict(sc), indent=2, sort_keys=True) + "\n"
