"""Named systems available from the command line.

* ``fullK`` (e.g. ``full2``, ``full3``) and ``goldenmean``: shifts of finite type;
  subsets ``[a]`` are the cylinders of the first symbol.
* ``identity_K`` / ``cycle_K``: ``K`` points at mutual distance 1 with the
  identity map or the rotation ``i -> i + 1``.
* ``periodic(NAME,L)``: the points of period ``L`` of a built-in shift.
* ``example_extension(NAME,DEPTH[,L])``: the extension ``X x D`` of
  ``periodic(NAME,L)`` (``L`` defaults to 13); subset ``embedded`` is ``X x {1}``.
"""

from __future__ import annotations

import re

import numpy as np

from .core import FiniteSystem, example_extension
from .errors import SchemaError
from .symbolic import CylinderSet, SftSpec, periodic_points

DEFAULT_PERIOD = 13


def _sft(name: str) -> SftSpec | None:
    m = re.fullmatch(r"full(\d+)", name)
    if m:
        k = int(m.group(1))
        if k < 1:
            raise SchemaError("full shifts need at least one symbol")
        return SftSpec.full(k)
    if name == "goldenmean":
        return SftSpec.from_forbidden("01", ["11"], name="goldenmean")
    return None


def discrete_system(k: int, shift: int) -> FiniteSystem:
    if k < 1:
        raise SchemaError("need at least one point")
    names = [f"p{i}" for i in range(k)]
    return FiniteSystem(names, 1.0 - np.eye(k), [(i + shift) % k for i in range(k)])


def resolve(name: str):
    """``(target, subsets)`` for a built-in name; raises :class:`SchemaError` if unknown."""
    name = name.replace(" ", "")
    sft = _sft(name)
    if sft is not None:
        return sft, {f"[{a}]": CylinderSet.of(sft, [[a]]) for a in sft.alphabet}
    m = re.fullmatch(r"(identity|cycle)_(\d+)", name)
    if m:
        return discrete_system(int(m.group(2)), 0 if m.group(1) == "identity" else 1), {}
    m = re.fullmatch(r"periodic\((\w+),(\d+)\)", name)
    if m:
        base = _sft(m.group(1))
        if base is None:
            raise SchemaError(f"unknown shift {m.group(1)!r}")
        return periodic_points(base, int(m.group(2))), {}
    m = re.fullmatch(r"example_extension\((\w+),(\d+)(?:,(\d+))?\)", name)
    if m:
        base = _sft(m.group(1))
        if base is None:
            raise SchemaError(f"unknown shift {m.group(1)!r}")
        x = periodic_points(base, int(m.group(3) or DEFAULT_PERIOD))
        z, embedded = example_extension(x, int(m.group(2)))
        return z, {"embedded": embedded}
    raise SchemaError(f"unknown built-in system {name!r}")
