"""Small helpers shared by the verifiers for building report dicts."""

from __future__ import annotations

import json
from typing import Any

from .exactnum import QPoly, TPoly, USeries, scalar_is_zero, scalar_to_json


def residual_payload(values: dict) -> Any:
    """``"0"`` when every residual vanishes, else a dict of the nonzero ones."""
    bad = {str(k): scalar_to_json(v) for k, v in values.items() if not scalar_is_zero(v)}
    return "0" if not bad else bad


def make_report(identity: str, params: dict, residual: Any, **extra) -> dict:
    out = {
        "identity": identity,
        "params": params,
        "residual": residual,
        "status": "pass" if residual == "0" else "fail",
    }
    out.update(extra)
    return out


def dumps(obj: Any, pretty: bool = False) -> str:
    return json.dumps(obj, sort_keys=True, indent=2 if pretty else None, default=_default)


def _default(o):
    if isinstance(o, (USeries, QPoly, TPoly)):
        return o.to_json()
    return scalar_to_json(o)
