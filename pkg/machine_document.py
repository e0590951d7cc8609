"""
Machine documents: JSON descriptions of a machine for `eval`.

    {
      "kind": "cycle",
      "energies": [0, 2, 1],
      "couplings": ["cold", "hot"],
      "baths": {"cold": 0.2, "hot": 0.05},
      "design": {"n": 3, "E_v": 1, "E_max": 2, "beta_c": 0.2, "beta_h": 0.05, "mode": "fridge"},
      "dynamics": {"tau_beta": 1, "tau_s": 1, "tau_swap": 1, "beta_env": 0.2}
    }

kind "multi" amplifies the described cycle.  kind "concat" needs a design
block and describes the chain of n - 2 qutrits equivalent to its n-level
cycle.  A cycle or multi document without energies uses the optimal cycle of
its design block.
"""
import json
import logging
import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Optional, Tuple

from cycle import Bath, CycleSpec
from design import DesignParams
from dynamics import DynamicsConfig
from errors import DocumentError, MachineError

logger = logging.getLogger(__name__)

KINDS = ("cycle", "multi", "concat")
DOCUMENT_FIELDS = ("kind", "energies", "couplings", "baths", "design", "dynamics")
# document key -> DesignParams attribute
DESIGN_FIELDS = {"n": "n", "E_v": "e_v", "E_max": "e_max", "beta_c": "beta_c", "beta_h": "beta_h", "mode": "mode"}
DYNAMICS_FIELDS = ("tau_beta", "tau_s", "tau_swap", "beta_env")


@dataclass(frozen=True)
class MachineDocument:
    kind: str
    energies: Tuple[float, ...] = ()
    couplings: Tuple[str, ...] = ()
    baths: Dict[str, float] = field(default_factory=dict)
    design: Optional[DesignParams] = None
    dynamics: Optional[DynamicsConfig] = None

    def cycle_spec(self) -> CycleSpec:
        """The described cycle, or the design block's optimal cycle when no energies are given."""
        if self.energies:
            return CycleSpec(
                energies=self.energies,
                couplings=tuple(Bath(self.baths[name], name) for name in self.couplings),
            )
        from design import optimal_cycle

        return optimal_cycle(self.design)


class _Locator:
    """Maps document keys to the line and column of their first occurrence."""

    def __init__(self, text: str):
        self.text = text

    def find(self, key: str) -> Tuple[Optional[int], Optional[int]]:
        match = re.search(r'"' + re.escape(key) + r'"\s*:', self.text)
        if match is None:
            return None, None
        before = self.text[: match.start()]
        line = before.count("\n") + 1
        column = match.start() - (before.rfind("\n") + 1) + 1
        return line, column

    def error(self, message: str, field: str, key: Optional[str] = None) -> DocumentError:
        line, column = self.find(key or field.split(".")[-1].split("[")[0])
        return DocumentError(message, field=field, line=line, column=column)


def _number(value: Any, name: str, where: _Locator, key: Optional[str] = None) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise where.error(f"expected a number, got {value!r}", name, key)
    if not math.isfinite(value):
        raise where.error(f"expected a finite number, got {value!r}", name, key)
    return float(value)


def _check_keys(block: Dict[str, Any], allowed, name: str, where: _Locator) -> None:
    for key in block:
        if key not in allowed:
            raise where.error(f"unknown field '{key}'", f"{name}.{key}" if name else key, key)


def _parse_design(block: Any, where: _Locator) -> DesignParams:
    if not isinstance(block, dict):
        raise where.error("design must be an object", "design")
    _check_keys(block, DESIGN_FIELDS, "design", where)
    missing = [key for key in DESIGN_FIELDS if key not in block and key != "mode"]
    if missing:
        raise where.error(f"design is missing {', '.join(missing)}", "design")
    n = block["n"]
    if isinstance(n, bool) or not isinstance(n, int):
        raise where.error(f"n must be an integer, got {n!r}", "design.n", "n")
    values = {
        attr: _number(block[key], f"design.{key}", where, key)
        for key, attr in DESIGN_FIELDS.items() if key not in ("n", "mode")
    }
    try:
        params = DesignParams(n=n, mode=block.get("mode", "fridge"), **values)
        params.check()
    except MachineError as exc:
        raise where.error(str(exc), "design") from exc
    return params


def _parse_dynamics(block: Any, where: _Locator) -> DynamicsConfig:
    if not isinstance(block, dict):
        raise where.error("dynamics must be an object", "dynamics")
    _check_keys(block, DYNAMICS_FIELDS, "dynamics", where)
    values = {}
    for key, value in block.items():
        if key != "beta_env" and (value in ("inf", "Infinity") or value == math.inf):
            values[key] = math.inf
        else:
            values[key] = _number(value, f"dynamics.{key}", where, key)
    try:
        return DynamicsConfig(**values)
    except MachineError as exc:
        raise where.error(str(exc), "dynamics") from exc


def parse_document(text: str) -> MachineDocument:
    """
    Parse and validate a machine document.

    Raises:
        DocumentError: malformed JSON (with line and column), unknown or
            missing fields, wrong types, undefined bath names
    """
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DocumentError(f"malformed document: {exc.msg}", line=exc.lineno, column=exc.colno) from exc
    where = _Locator(text)
    if not isinstance(raw, dict):
        raise DocumentError("document must be a JSON object", line=1, column=1)
    _check_keys(raw, DOCUMENT_FIELDS, "", where)

    kind = raw.get("kind")
    if kind not in KINDS:
        raise where.error(f"kind must be one of {', '.join(KINDS)}, got {kind!r}", "kind")

    design = _parse_design(raw["design"], where) if "design" in raw else None
    dynamics = _parse_dynamics(raw["dynamics"], where) if "dynamics" in raw else None

    baths: Dict[str, float] = {}
    raw_baths = raw.get("baths", {})
    if not isinstance(raw_baths, dict):
        raise where.error("baths must be an object of name: beta", "baths")
    for name, beta in raw_baths.items():
        baths[name] = _number(beta, f"baths.{name}", where, name)
        if baths[name] < 0:
            raise where.error(f"bath '{name}' has negative inverse temperature", f"baths.{name}", name)

    energies = raw.get("energies", [])
    couplings = raw.get("couplings", [])
    if not isinstance(energies, list):
        raise where.error("energies must be a list", "energies")
    if not isinstance(couplings, list):
        raise where.error("couplings must be a list", "couplings")
    energies = tuple(_number(e, f"energies[{i}]", where, "energies") for i, e in enumerate(energies))
    for i, name in enumerate(couplings):
        if not isinstance(name, str):
            raise where.error(f"coupling must name a bath, got {name!r}", f"couplings[{i}]", "couplings")
        if name not in baths:
            raise where.error(f"undefined bath '{name}'", f"couplings[{i}]", "couplings")

    if kind == "concat":
        if design is None:
            raise where.error("a concat document needs a design block", "design", "kind")
    elif not energies and design is None:
        raise where.error(f"a {kind} document needs energies or a design block", "energies", "kind")
    if energies and len(couplings) != len(energies) - 1:
        raise where.error(
            f"{len(energies)} energies need {len(energies) - 1} couplings, got {len(couplings)}", "couplings",
        )

    logger.debug(f"parsed {kind} document with {len(energies)} levels")
    return MachineDocument(
        kind=kind, energies=energies, couplings=tuple(couplings), baths=baths,
        design=design, dynamics=dynamics,
    )


def load_document(path: Path) -> MachineDocument:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise DocumentError(f"cannot read document {path}: {exc.strerror}") from exc
    return parse_document(text)


def document_for(spec: CycleSpec, params: Optional[DesignParams] = None,
                 dynamics: Optional[DynamicsConfig] = None, kind: str = "cycle") -> Dict[str, Any]:
    """
    Describe a cycle as a document.  Baths are named after their role when
    `params` is given, otherwise b0, b1, ... in order of first use.
    """
    names: Dict[float, str] = {}
    if params is not None:
        names[params.beta_c] = "cold"
        names[params.beta_h] = "hot"
    couplings = []
    for bath in spec.couplings:
        if bath.beta not in names:
            names[bath.beta] = bath.name if bath.name and bath.name not in names.values() else f"b{len(names)}"
        couplings.append(names[bath.beta])
    used = set(couplings)
    doc: Dict[str, Any] = {
        "kind": kind,
        "energies": list(spec.energies),
        "couplings": couplings,
        "baths": {name: beta for beta, name in names.items() if name in used},
    }
    if params is not None:
        doc["design"] = {
            "n": params.n, "E_v": params.e_v, "E_max": params.e_max,
            "beta_c": params.beta_c, "beta_h": params.beta_h, "mode": params.mode.value,
        }
    if dynamics is not None:
        block = {key: getattr(dynamics, key) for key in DYNAMICS_FIELDS if getattr(dynamics, key) is not None}
        doc["dynamics"] = {k: ("inf" if isinstance(v, float) and math.isinf(v) else v) for k, v in block.items()}
    return doc


def dump_document(doc: Dict[str, Any]) -> str:
    return json.dumps(doc, indent=2) + "\n"


def write_document(doc: Dict[str, Any], path: Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write(dump_document(doc))
    logger.info(f"Wrote machine document to {path}")
