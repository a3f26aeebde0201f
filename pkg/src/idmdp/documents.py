"""JSON model documents: schema, validation and conversion.

A document is a JSON object with ``kind`` ``"mdp"`` or ``"allocation"``.
Matrices are nested row-major arrays. Floats are written with Python's
shortest round-trip representation, so a model survives a write/read
cycle bit for bit.
"""

from __future__ import annotations

import json
import os
import tempfile

import jsonschema
import numpy as np

from .allocation import AllocationModel
from .exceptions import InvalidModelError
from .mdp import FiniteMdp

_NUM = {"type": "number"}
_VEC = {"type": "array", "items": _NUM, "minItems": 1}
_MAT = {"type": "array", "items": _VEC, "minItems": 1}

MDP_SCHEMA = {
    "type": "object",
    "required": ["kind", "num_states", "num_actions", "objective",
                 "rewards", "transitions"],
    "properties": {
        "kind": {"const": "mdp"},
        "name": {"type": "string"},
        "num_states": {"type": "integer", "minimum": 1},
        "num_actions": {"type": "integer", "minimum": 1},
        "objective": {"enum": ["max", "min"]},
        "discount": {"type": ["number", "null"], "exclusiveMinimum": 0,
                     "exclusiveMaximum": 1},
        "horizon": {"type": ["integer", "null"], "minimum": 0},
        "terminal": {"anyOf": [_VEC, {"type": "null"}]},
        "rewards": _MAT,
        "transitions": {"type": "array", "items": _MAT, "minItems": 1},
    },
}

ALLOCATION_SCHEMA = {
    "type": "object",
    "required": ["kind", "num_states", "num_actions", "epsilon", "gamma",
                 "kappa", "costs"],
    "properties": {
        "kind": {"const": "allocation"},
        "name": {"type": "string"},
        "num_states": {"type": "integer", "minimum": 2},
        "num_actions": {"type": "integer", "minimum": 1},
        "objective": {"const": "min"},
        "horizon": {"type": "integer", "minimum": 0},
        "epsilon": {"type": "number", "exclusiveMinimum": 0},
        "gamma": {"type": "array", "items": _NUM},
        "kappa": _VEC,
        "costs": _MAT,
        "theta1": {"type": "number", "minimum": 0, "maximum": 1},
    },
}


class DocumentError(ValueError):
    """Schema or shape violation; ``path`` locates the offending field."""

    def __init__(self, message, path=""):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path


def _path(err):
    return "/".join(str(p) for p in err.absolute_path) or "<root>"


def _check_shapes(doc):
    X, A = doc["num_states"], doc["num_actions"]
    if doc["kind"] == "mdp":
        r = doc["rewards"]
        if len(r) != X:
            raise DocumentError(f"expected {X} rows", "rewards")
        for i, row in enumerate(r):
            if len(row) != A:
                raise DocumentError(f"expected {A} entries", f"rewards/{i}")
        P = doc["transitions"]
        if len(P) != A:
            raise DocumentError(f"expected {A} matrices", "transitions")
        for a, M in enumerate(P):
            if len(M) != X:
                raise DocumentError(f"expected {X} rows", f"transitions/{a}")
            for i, row in enumerate(M):
                if len(row) != X:
                    raise DocumentError(f"expected {X} entries",
                                        f"transitions/{a}/{i}")
        t = doc.get("terminal")
        if t is not None and len(t) != X:
            raise DocumentError(f"expected {X} entries", "terminal")
    else:
        c = doc["costs"]
        if len(c) != X or any(len(row) != A for row in c):
            raise DocumentError(f"expected {X} rows of {A} entries", "costs")
        if len(doc["kappa"]) != X:
            raise DocumentError(f"expected {X} entries", "kappa")
        if len(doc["gamma"]) != A - 1:
            raise DocumentError(f"expected {A - 1} entries", "gamma")


def validate_document(doc):
    if not isinstance(doc, dict) or doc.get("kind") not in ("mdp", "allocation"):
        raise DocumentError("kind must be 'mdp' or 'allocation'", "kind")
    schema = MDP_SCHEMA if doc["kind"] == "mdp" else ALLOCATION_SCHEMA
    errors = sorted(jsonschema.Draft202012Validator(schema).iter_errors(doc),
                    key=lambda e: list(e.absolute_path))
    if errors:
        raise DocumentError(errors[0].message, _path(errors[0]))
    _check_shapes(doc)
    return doc


def mdp_to_document(mdp, horizon=None):
    doc = {
        "kind": "mdp",
        "name": mdp.name,
        "num_states": mdp.num_states,
        "num_actions": mdp.num_actions,
        "objective": mdp.objective,
        "discount": mdp.discount,
        "horizon": horizon if horizon is not None else mdp.meta.get("horizon"),
        "terminal": None if mdp.terminal is None else mdp.terminal.tolist(),
        "rewards": mdp.rewards.tolist(),
        "transitions": mdp.transitions.tolist(),
    }
    return doc


def model_to_document(model):
    if isinstance(model, AllocationModel):
        return model.to_dict()
    return mdp_to_document(model)


def document_to_model(doc):
    """Validate ``doc`` and build a :class:`FiniteMdp` or :class:`AllocationModel`.

    Raises
    ------
    DocumentError
        On schema or shape violations.
    InvalidModelError
        When the model invariants (e.g. row sums) fail.
    """
    validate_document(doc)
    if doc["kind"] == "allocation":
        return AllocationModel.from_dict(doc)
    meta = {}
    if doc.get("horizon") is not None:
        meta["horizon"] = int(doc["horizon"])
    return FiniteMdp(
        transitions=np.array(doc["transitions"], dtype=float),
        rewards=np.array(doc["rewards"], dtype=float),
        discount=doc.get("discount"),
        terminal=None if doc.get("terminal") is None else np.array(doc["terminal"], float),
        objective=doc["objective"], name=doc.get("name", ""), meta=meta)


def read_document(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise DocumentError(f"invalid JSON: {exc}") from exc


def load_model(path):
    return document_to_model(read_document(path))


def atomic_write(path, text):
    """Write ``text`` to ``path`` via a temporary file and rename."""
    path = os.fspath(path)
    folder = os.path.dirname(os.path.abspath(path))
    os.makedirs(folder, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=folder, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def dumps(obj):
    return json.dumps(obj, indent=2, allow_nan=False) + "\n"


def save_model(model, path):
    atomic_write(path, dumps(model_to_document(model)))


__all__ = ["DocumentError", "InvalidModelError", "validate_document",
           "mdp_to_document", "model_to_document", "document_to_model",
           "read_document", "load_model", "save_model", "atomic_write", "dumps"]
