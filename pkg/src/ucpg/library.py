"""JSON sequence files, shipped sequences and two-block reference gates.

A sequence file looks like::

    {
      "schema_version": 1,
      "family": "ucpg-analytic",
      "label": "UCPG4",
      "n_pulses": 4,
      "phases_rad": [0.0, 0.3927, 4.7124, 5.1051],
      "target_phase": 1.5708,
      "nominal_area": 3.14159,
      "provenance": "..."
    }

Exactly one of ``phases_rad``, ``phases_deg`` or ``two_block`` gives the
phases. ``two_block`` holds a composite pi sequence and the offset applied
to its repeat (``block_phases_rad``/``block_phases_deg`` and
``offset_rad``/``offset_deg``). Files marked ``"placeholder": true`` document
a reference sequence whose phases are not distributed here.
"""

from __future__ import annotations

import json
import math
import os
import warnings
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Optional, Sequence, Union

import jsonschema
import numpy as np

from .design import (
    ANALYTIC,
    EXTERNAL,
    TWO_BLOCK,
    PhaseSequence,
    analytic_phases,
    ideal_product,
)
from .su2 import CayleyKlein, from_cayley_klein, ordered_product, relative_phase, wrap_2pi, wrap_pi

SCHEMA_VERSION = 1
REFERENCE_NAMES = ("UPh6a", "UPh10a", "UPh14a", "UPh26a")

_number_list = {"type": "array", "items": {"type": "number"}, "minItems": 1}

SEQUENCE_SCHEMA = {
    "type": "object",
    "required": ["schema_version", "n_pulses"],
    "properties": {
        "schema_version": {"type": "integer", "const": SCHEMA_VERSION},
        "family": {"type": "string"},
        "label": {"type": "string"},
        "n_pulses": {"type": "integer", "minimum": 1},
        "phases_rad": _number_list,
        "phases_deg": _number_list,
        "two_block": {
            "type": "object",
            "properties": {
                "block_phases_rad": _number_list,
                "block_phases_deg": _number_list,
                "offset_rad": {"type": "number"},
                "offset_deg": {"type": "number"},
            },
            "oneOf": [{"required": ["block_phases_rad"]}, {"required": ["block_phases_deg"]}],
        },
        "target_phase": {"type": "number"},
        "nominal_area": {"type": "number", "exclusiveMinimum": 0},
        "provenance": {"type": "string"},
        "placeholder": {"type": "boolean"},
    },
}

PathLike = Union[str, Path]
REFERENCE_ENV = "UCPG_REFERENCE_DIR"


class SequenceFileError(ValueError):
    """The file does not parse against the sequence schema."""

    def __init__(self, message: str, path: str = "", field: str = ""):
        self.path = path
        self.field = field
        where = f"{path}: " if path else ""
        at = f" (at {field})" if field else ""
        super().__init__(f"{where}{message}{at}")


class ReferenceDataAbsent(SequenceFileError):
    """A placeholder reference file without phase data was requested."""


class OddSequenceWarning(UserWarning):
    pass


@dataclass(frozen=True)
class TwoBlockSpec:
    block_phases: tuple[float, ...]
    offset: float

    def __post_init__(self):
        object.__setattr__(self, "block_phases", tuple(float(p) for p in self.block_phases))


def two_block_construction(spec: TwoBlockSpec, label: str = "", provenance: str = "") -> PhaseSequence:
    """Phase gate from a composite pi block followed by the block shifted by ``offset``.

    The gate phase is whatever the ideal (``eps = 0``) product implements,
    read from its diagonal.
    """
    if not spec.block_phases:
        raise ValueError("block_phases must not be empty")
    block = np.asarray(spec.block_phases, dtype=float)
    swap = CayleyKlein(0.0)
    u_block = ordered_product(from_cayley_klein(swap, p) for p in block)
    if abs(u_block[0, 0]) > 1e-10:
        raise ValueError("block is not a composite pi sequence (ideal product is not a swap)")
    phases = np.concatenate([block, block + spec.offset])
    u = ordered_product(from_cayley_klein(swap, p) for p in phases)
    if abs(u[0, 1]) > 1e-10 or abs(u[1, 0]) > 1e-10:
        raise ValueError("two-block product is not diagonal in the ideal limit")
    target = wrap_2pi(relative_phase(u))
    return PhaseSequence.gauge_fixed(phases, target, family=TWO_BLOCK, label=label,
                                     provenance=provenance)


def _first_error(data) -> Optional[jsonschema.ValidationError]:
    validator = jsonschema.Draft202012Validator(SEQUENCE_SCHEMA)
    return jsonschema.exceptions.best_match(validator.iter_errors(data))


def parse_sequence(data: dict, source: str = "") -> PhaseSequence:
    """Build a :class:`PhaseSequence` from decoded sequence-file JSON."""
    if not isinstance(data, dict):
        raise SequenceFileError("top level must be a JSON object", source)
    if data.get("placeholder"):
        raise ReferenceDataAbsent(
            f"reference data absent for {data.get('label', 'sequence')}: {data.get('provenance', '')}".rstrip(": "),
            source)
    err = _first_error(data)
    if err is not None:
        field = "/" + "/".join(str(p) for p in err.absolute_path)
        raise SequenceFileError(err.message, source, field)
    given = [k for k in ("phases_rad", "phases_deg", "two_block") if k in data]
    if len(given) != 1:
        raise SequenceFileError("exactly one of phases_rad, phases_deg, two_block is required", source)

    n = data["n_pulses"]
    label = data.get("label", "")
    provenance = data.get("provenance", "")
    area = float(data.get("nominal_area", math.pi))
    family = data.get("family", EXTERNAL)

    if given[0] == "two_block":
        tb = data["two_block"]
        block = tb.get("block_phases_rad")
        if block is None:
            block = np.deg2rad(tb["block_phases_deg"]).tolist()
        offset = tb.get("offset_rad")
        if offset is None:
            offset = math.radians(tb.get("offset_deg", 0.0))
        try:
            seq = two_block_construction(TwoBlockSpec(block, offset), label=label, provenance=provenance)
        except ValueError as exc:
            raise SequenceFileError(str(exc), source, "/two_block") from exc
        if seq.n_pulses != n:
            raise SequenceFileError(f"n_pulses is {n} but two_block yields {seq.n_pulses} pulses",
                                    source, "/n_pulses")
        if "target_phase" in data and abs(wrap_pi(data["target_phase"] - seq.target_phase)) > 1e-9:
            raise SequenceFileError("declared target_phase disagrees with the two-block ideal product",
                                    source, "/target_phase")
        return PhaseSequence(seq.phases, seq.target_phase, family=TWO_BLOCK, label=seq.label,
                             nominal_area=area, provenance=provenance)

    key = given[0]
    phases = np.asarray(data[key], dtype=float)
    if key == "phases_deg":
        phases = np.deg2rad(phases)
    if phases.size != n:
        raise SequenceFileError(f"n_pulses is {n} but {key} has {phases.size} entries", source, f"/{key}")
    if n % 2:
        warnings.warn(f"{source or 'sequence'} has an odd number of pulses; it is not a phase gate",
                      OddSequenceWarning, stacklevel=2)
    if "target_phase" in data:
        target = float(data["target_phase"])
    elif n % 2 == 0:
        target = wrap_2pi(relative_phase(ideal_product(PhaseSequence.gauge_fixed(phases, 0.0))))
    else:
        target = 0.0

    fixed = wrap_2pi(phases - phases[0])
    if family == ANALYTIC and n % 2 == 0:
        law = wrap_2pi(analytic_phases(n, target))
        if not np.all(np.abs(wrap_pi(law - fixed)) < 1e-9):
            family = EXTERNAL
    else:
        family = EXTERNAL
    return PhaseSequence(tuple(fixed), target, family=family, label=label, nominal_area=area,
                         provenance=provenance)


def load_sequence(path: PathLike) -> PhaseSequence:
    """Read a sequence file; phases come back gauge-fixed to start at zero."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise SequenceFileError(f"cannot read file: {exc.strerror}", str(path)) from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SequenceFileError(f"invalid JSON: {exc.msg} at line {exc.lineno}", str(path)) from exc
    return parse_sequence(data, str(path))


def sequence_to_dict(seq: PhaseSequence, degrees: bool = False) -> dict:
    out = {
        "schema_version": SCHEMA_VERSION,
        "family": seq.family,
        "label": seq.label,
        "n_pulses": seq.n_pulses,
    }
    if degrees:
        out["phases_deg"] = [float(np.rad2deg(p)) for p in seq.phases]
    else:
        out["phases_rad"] = list(seq.phases)
    out["target_phase"] = seq.target_phase
    out["nominal_area"] = seq.nominal_area
    out["provenance"] = seq.provenance
    return out


def dumps_sequence(seq: PhaseSequence, degrees: bool = False) -> str:
    return json.dumps(sequence_to_dict(seq, degrees), indent=2) + "\n"


def save_sequence(seq: PhaseSequence, path: PathLike, degrees: bool = False) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps_sequence(seq, degrees))
    return path


def _data_dir():
    return resources.files("ucpg") / "sequences"


def builtin_names(kind: str = "analytic") -> list:
    return sorted(p.name[:-5] for p in (_data_dir() / kind).iterdir() if p.name.endswith(".json"))


def builtin_path(name: str, kind: str = "analytic") -> Path:
    return Path(str(_data_dir() / kind / f"{name}.json"))


def load_builtin(name: str) -> PhaseSequence:
    return load_sequence(builtin_path(name, "analytic"))


def load_reference(name: str, search: Sequence[PathLike] = ()) -> PhaseSequence:
    """Load a reference gate (``UPh6a`` ...) from ``search`` dirs or the shipped placeholders.

    Directories listed in ``$UCPG_REFERENCE_DIR`` (path-separated) are tried
    after ``search``. Raises :class:`ReferenceDataAbsent` when only a
    placeholder is available.
    """
    env_dirs = [d for d in os.environ.get(REFERENCE_ENV, "").split(os.pathsep) if d]
    for d in [*search, *env_dirs]:
        candidate = Path(d) / f"{name}.json"
        if candidate.exists():
            return load_sequence(candidate)
    path = builtin_path(name, "reference")
    if not path.exists():
        raise ReferenceDataAbsent(f"no reference file named {name}")
    return load_sequence(path)
