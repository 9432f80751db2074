"""Binary fixture format for operators, states and density matrices.

A file is one line of UTF-8 JSON (the header) terminated by ``\\n``, followed
immediately by the payload: every complex entry stored as two little-endian
float64 values (real, imaginary), entries in column-major order. Header keys:

    format      "propertime-fock"
    version     1
    type        "operator" | "state" | "density"
    dim         number of Fock levels
    shape       payload shape, [dim] or [dim, dim]
    kind        operator kind tag (operators only)
    tolerances  free-form mapping of the tolerances the fixture was made with
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .fock import MotionalDensity, MotionalState, Operator

FORMAT = "propertime-fock"
VERSION = 1


def _payload(arr: np.ndarray) -> bytes:
    flat = np.asarray(arr, dtype=complex).ravel(order="F")
    pairs = np.empty(2 * flat.size, dtype="<f8")
    pairs[0::2] = flat.real
    pairs[1::2] = flat.imag
    return pairs.tobytes()


def dumps(obj, tolerances: dict | None = None) -> bytes:
    if isinstance(obj, Operator):
        header = {"type": "operator", "kind": obj.kind}
        arr = obj.matrix
    elif isinstance(obj, MotionalState):
        header = {"type": "state"}
        arr = obj.amplitudes
    elif isinstance(obj, MotionalDensity):
        header = {"type": "density"}
        arr = obj.matrix
    else:
        raise TypeError(f"cannot serialize {type(obj).__name__}")
    header = {"format": FORMAT, "version": VERSION, **header,
              "dim": int(arr.shape[0]), "shape": list(arr.shape),
              "tolerances": dict(tolerances or {})}
    return json.dumps(header, sort_keys=True).encode() + b"\n" + _payload(arr)


def loads(data: bytes):
    head, sep, body = data.partition(b"\n")
    if not sep:
        raise ValueError("missing header terminator")
    header = json.loads(head)
    if header.get("format") != FORMAT or header.get("version") != VERSION:
        raise ValueError(f"unsupported fixture header {header!r}")
    shape = tuple(header["shape"])
    pairs = np.frombuffer(body, dtype="<f8")
    if pairs.size != 2 * int(np.prod(shape)):
        raise ValueError("payload size does not match header shape")
    arr = (pairs[0::2] + 1j * pairs[1::2]).reshape(shape, order="F")
    kind = header["type"]
    if kind == "operator":
        return Operator(arr, header.get("kind", "general"))
    if kind == "state":
        return MotionalState(arr)
    if kind == "density":
        return MotionalDensity(arr)
    raise ValueError(f"unknown fixture type {kind!r}")


def save(path, obj, tolerances: dict | None = None) -> None:
    Path(path).write_bytes(dumps(obj, tolerances))


def load(path):
    return loads(Path(path).read_bytes())
