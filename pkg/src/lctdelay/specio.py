"""JSON delay-system specifications.

Example::

    {
      "D": 1, "d": 1, "c": [0, 1],
      "kernels": [{"order": 1, "sigma": 1.0, "a": 1.0, "oscillations": [{"eps": 0, "mu": 0, "omega": 0.8}]},
                  {"order": 2, "sigma": 1.0, "a": 1.0, "oscillations": [{"eps": 0.5, "mu": 0, "omega": 0.8}]}],
      "rhs": "builtin:logistic",
      "params": {"r": 2, "K": 1},
      "history": "constant:[1.0]",
      "r": 7
    }

``rhs`` may also be ``"linear:{\\"A\\": [[...]], \\"B\\": [[...]]}"`` for
``F(x, z) = A x + B z``. The optional ``r`` is checked against the dimension
formula. Every error names the offending field.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .history import parse_history
from .kernels import KernelSpec, Oscillation
from .lct import RHS_REGISTRY, DelaySystemSpec, SpecError, _check_chains

__all__ = ["SpecFormatError", "parse_spec", "load_spec", "spec_to_dict", "linear_rhs"]


class SpecFormatError(SpecError):
    def __init__(self, field: str, message: str):
        super().__init__(f"field '{field}': {message}")
        self.field = field


def linear_rhs(A, B):
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)

    def F(x, z):
        return A @ x + B @ z

    return F


def _need(data: dict, key: str, where: str = ""):
    if key not in data:
        raise SpecFormatError(where + key, "missing")
    return data[key]


def _number(value, field: str, integer: bool = False):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SpecFormatError(field, f"expected a number, got {value!r}")
    if integer and int(value) != value:
        raise SpecFormatError(field, f"expected an integer, got {value!r}")
    return int(value) if integer else float(value)


def _kernel(data, idx: int) -> KernelSpec:
    where = f"kernels[{idx}]"
    if not isinstance(data, dict):
        raise SpecFormatError(where, "expected an object")
    order = _number(_need(data, "order", where + "."), where + ".order", integer=True)
    sigma = _number(_need(data, "sigma", where + "."), where + ".sigma")
    a = _number(data.get("a", 1.0), where + ".a")
    oscs = []
    raw = data.get("oscillations", [])
    if not isinstance(raw, list):
        raise SpecFormatError(where + ".oscillations", "expected a list")
    for n, o in enumerate(raw):
        ow = f"{where}.oscillations[{n}]"
        if not isinstance(o, dict):
            raise SpecFormatError(ow, "expected an object")
        oscs.append(
            Oscillation(
                _number(o.get("eps", 0.0), ow + ".eps"),
                _number(o.get("mu", 0.0), ow + ".mu"),
                _number(_need(o, "omega", ow + "."), ow + ".omega"),
            )
        )
    try:
        return KernelSpec(order, sigma, a, tuple(oscs))
    except ValueError as exc:
        raise SpecFormatError(where, str(exc)) from None


def _rhs(text, params: dict, D: int):
    if not isinstance(text, str):
        raise SpecFormatError("rhs", "expected a string")
    kind, _, rest = text.partition(":")
    if kind == "builtin":
        if rest not in RHS_REGISTRY:
            raise SpecFormatError("rhs", f"unknown builtin {rest!r}; known: {sorted(RHS_REGISTRY)}")
        try:
            return RHS_REGISTRY[rest](params, D), rest
        except ValueError as exc:
            raise SpecFormatError("params", str(exc)) from None
    if kind == "linear":
        try:
            mats = json.loads(rest)
            A = np.asarray(mats["A"], dtype=float)
            B = np.asarray(mats["B"], dtype=float)
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise SpecFormatError("rhs", f"linear rhs needs JSON with A and B ({exc})") from None
        if A.shape != (D, D) or B.shape != (D, D):
            raise SpecFormatError("rhs", f"linear A and B must be {D}x{D}, got {A.shape} and {B.shape}")
        return linear_rhs(A, B), text
    raise SpecFormatError("rhs", f"expected 'builtin:<name>' or 'linear:<json>', got {text!r}")


def parse_spec(data: dict) -> DelaySystemSpec:
    if not isinstance(data, dict):
        raise SpecFormatError("<root>", "expected a JSON object")
    known = {"D", "d", "c", "kernels", "rhs", "params", "history", "r"}
    extra = sorted(set(data) - known)
    if extra:
        raise SpecFormatError(extra[0], "unknown field")
    D = _number(_need(data, "D"), "D", integer=True)
    d = _number(_need(data, "d"), "d", integer=True)
    raw_k = _need(data, "kernels")
    if not isinstance(raw_k, list) or not raw_k:
        raise SpecFormatError("kernels", "expected a nonempty list")
    kernels = tuple(_kernel(k, i) for i, k in enumerate(raw_k))
    c = _need(data, "c")
    if not isinstance(c, list):
        raise SpecFormatError("c", "expected a list of weights")
    weights = tuple(_number(v, f"c[{i}]") for i, v in enumerate(c))
    if len(weights) != len(kernels):
        raise SpecFormatError("c", f"{len(weights)} weights for {len(kernels)} kernels")
    for i, ker in enumerate(kernels):
        if ker.order != i + 1:
            raise SpecFormatError(f"kernels[{i}].order", f"kernel #{i + 1} must have Erlang order {i + 1}")
        if ker.sigma != kernels[0].sigma:
            raise SpecFormatError(f"kernels[{i}].sigma", "all kernels must share one sigma")
    params = data.get("params", {})
    if not isinstance(params, dict):
        raise SpecFormatError("params", "expected an object")
    if D < 1:
        raise SpecFormatError("D", "must be a positive integer")
    if not 1 <= d <= D:
        raise SpecFormatError("d", f"must satisfy 1 <= d <= D={D}")
    rhs, name = _rhs(_need(data, "rhs"), params, D)
    try:
        history = parse_history(_need(data, "history"), D)
    except (ValueError, json.JSONDecodeError) as exc:
        raise SpecFormatError("history", str(exc)) from None
    spec = DelaySystemSpec(D, d, kernels, weights, rhs, history, name, dict(params))
    try:
        _check_chains(spec)
    except SpecError as exc:
        raise SpecFormatError("kernels", str(exc)) from None
    if "r" in data:
        declared = _number(data["r"], "r", integer=True)
        if declared != spec.dimension:
            raise SpecFormatError(
                "r", f"declared r={declared} but D + d*(N + 2*sum M_k) = {spec.dimension}"
            )
    return spec


def load_spec(path) -> DelaySystemSpec:
    text = Path(path).read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SpecFormatError("<root>", f"malformed JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    return parse_spec(data)


def spec_to_dict(spec: DelaySystemSpec) -> dict:
    out = {
        "D": spec.D,
        "d": spec.d,
        "c": list(spec.weights),
        "kernels": [k.to_dict() for k in spec.kernels],
        "rhs": spec.rhs_name if spec.rhs_name.startswith("linear:") else f"builtin:{spec.rhs_name}",
        "params": dict(spec.params),
        "history": spec.history.to_string(),
        "r": spec.dimension,
    }
    return out
