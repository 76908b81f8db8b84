"""Code graph structures and compiled SC / Fast-SSC decoding schedules.

A *structure* describes the Tanner graph of a native code independently of
its frozen set: kernel nodes (T2 or T3 applied across equal children) and
asymmetric nodes (a power-of-two partial code linked on top of the rest of
the code through ``junctions`` sum junctions).  Compiling a structure
against a frozen mask yields the positional :class:`DecodeNode` tree that
the decoders walk.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import List, Optional, Tuple

import numpy as np

from .core import (CodeError, CodeScheme, PartialDecomposition, decompose_length, ilog2,
                   is_power_of_two, next_power_of_two)

DEFAULT_MAX_NODE_SIZE = 64


@dataclass(frozen=True, eq=False)
class Structure:
    kind: str  # "leaf", "kernel" or "asym"
    size: int
    kernel: int = 0
    children: Tuple["Structure", ...] = ()
    junctions: int = 0

    @property
    def pure_binary(self) -> bool:
        if self.kind == "leaf":
            return True
        return self.kind == "kernel" and self.kernel == 2 and self.children[0].pure_binary


LEAF = Structure("leaf", 1)


@lru_cache(maxsize=None)
def kernel_structure(kernels: Tuple[int, ...]) -> Structure:
    """Tree for the Kronecker product of ``kernels`` (first kernel at the root)."""
    if not kernels:
        return LEAF
    child = kernel_structure(tuple(kernels[1:]))
    k = kernels[0]
    return Structure("kernel", k * child.size, k, (child,) * k)


def arikan_structure(n: int) -> Structure:
    if not is_power_of_two(n):
        raise CodeError(f"Arikan length {n} is not a power of two")
    return kernel_structure((2,) * ilog2(n))


@lru_cache(maxsize=None)
def _apc_structure(order: Tuple[int, ...]) -> Structure:
    node = arikan_structure(order[0])
    linked = order[0]
    for n_l in order[1:]:
        node = Structure("asym", linked + n_l, 0, (arikan_structure(n_l), node), min(linked, n_l))
        linked += n_l
    return node


def apc_structure(decomposition: PartialDecomposition) -> Structure:
    return _apc_structure(decomposition.linking_order)


def decomposition_for(scheme: CodeScheme, n_total: int) -> PartialDecomposition:
    if scheme.partials:
        return PartialDecomposition(tuple(sorted(scheme.partials, reverse=True)), scheme.ascending)
    return decompose_length(n_total, scheme.ascending)


def structure_for(scheme: CodeScheme, n_total: int) -> Structure:
    if scheme.kind == "asymmetric":
        return apc_structure(decomposition_for(scheme, n_total))
    if scheme.kind == "multikernel":
        return kernel_structure(tuple(scheme.kernels))
    if scheme.kind in ("shortened", "punctured"):
        return arikan_structure(next_power_of_two(n_total))
    return arikan_structure(n_total)


def structural_sc_ops(node: Structure) -> int:
    """f/g (and ternary branch) LLR computations for one SC pass over ``node``."""
    return _sc_ops(node)


@lru_cache(maxsize=None)
def _sc_ops(node: Structure) -> int:
    if node.kind == "leaf":
        return 0
    if node.kind == "asym":
        return 2 * node.junctions + sum(_sc_ops(c) for c in node.children)
    return node.size + sum(_sc_ops(c) for c in node.children)


# -- compiled schedules ------------------------------------------------------

SPECIALIZED = ("rate0", "rate1", "repetition", "spc")


@dataclass(eq=False)
class DecodeNode:
    kind: str  # binary, ternary, asymmetric, leaf, rate0, rate1, repetition, spc
    size: int
    offset: int
    depth: int
    children: Tuple["DecodeNode", ...] = ()
    junctions: int = 0
    n_info: int = 0
    plain: Optional["DecodeNode"] = field(default=None, repr=False)

    @property
    def frozen(self) -> bool:
        return self.n_info == 0


@dataclass
class DecodeSchedule:
    root: DecodeNode
    ops: List[Tuple[str, int]]
    sc_ops: int
    fast_ssc_ops: int
    max_node_size: int = DEFAULT_MAX_NODE_SIZE
    specialized: bool = False
    frozen_mask: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def size(self) -> int:
        return self.root.size

    def node_counts(self) -> dict:
        counts: dict = {}
        stack = [self.root]
        while stack:
            node = stack.pop()
            counts[node.kind] = counts.get(node.kind, 0) + 1
            stack.extend(node.children)
        return counts


def classify(frozen: np.ndarray) -> Optional[str]:
    """Specialized node kind matching a frozen pattern, if any."""
    if frozen.all():
        return "rate0"
    if not frozen.any():
        return "rate1"
    if frozen[:-1].all():
        return "repetition"
    if frozen[0] and not frozen[1:].any():
        return "spc"
    return None


def _compile(node: Structure, frozen: np.ndarray, offset: int, depth: int,
             specialize: bool, max_size: int) -> DecodeNode:
    window = frozen[offset:offset + node.size]
    n_info = int(node.size - window.sum())
    # single bits stay plain leaves: a hard decision is not an LLR operation
    if specialize and node.pure_binary and 1 < node.size <= max_size:
        kind = classify(window)
        if kind is not None:
            return DecodeNode(kind, node.size, offset, depth, n_info=n_info)
    if node.kind == "leaf":
        return DecodeNode("leaf", 1, offset, depth, n_info=n_info)
    children = []
    child_offset = offset
    for child in node.children:
        children.append(_compile(child, frozen, child_offset, depth + 1, specialize, max_size))
        child_offset += child.size
    if node.kind == "asym":
        kind = "asymmetric"
    else:
        kind = "binary" if node.kernel == 2 else "ternary"
    return DecodeNode(kind, node.size, offset, depth, tuple(children), node.junctions, n_info)


def _flatten(node: DecodeNode, ops: List[Tuple[str, int]]) -> None:
    if node.kind == "leaf" or node.kind in SPECIALIZED:
        ops.append((node.kind, node.size))
        return
    if node.kind == "binary":
        half = node.size // 2
        ops.append(("f", half))
        _flatten(node.children[0], ops)
        ops.append(("g", half))
        _flatten(node.children[1], ops)
        ops.append(("h", half))
    elif node.kind == "ternary":
        third = node.size // 3
        ops.append(("f3", third))
        _flatten(node.children[0], ops)
        ops.append(("g3c", third))
        _flatten(node.children[1], ops)
        ops.append(("g3r", third))
        _flatten(node.children[2], ops)
        ops.append(("h3", third))
    else:
        j = node.junctions
        ops.append(("f", j))
        _flatten(node.children[0], ops)
        ops.append(("g", j))
        _flatten(node.children[1], ops)
        ops.append(("h", j))


def fast_ssc_count(node: DecodeNode, max_size: int = DEFAULT_MAX_NODE_SIZE) -> int:
    """Specialized nodes cost 1; every child-LLR batch of size ``n`` costs ceil(n / max_size).

    Leaves are hard decisions and cost nothing, as in the SC count.
    """
    if node.kind in SPECIALIZED:
        return 1
    if node.kind == "leaf":
        return 0
    if node.kind == "asymmetric":
        own = 2 * math.ceil(node.junctions / max_size)
    else:
        k = len(node.children)
        own = k * math.ceil(node.size // k / max_size)
    return own + sum(fast_ssc_count(c, max_size) for c in node.children)


def compile_schedule(structure: Structure, frozen_mask, specialize: bool = False,
                     max_node_size: int = DEFAULT_MAX_NODE_SIZE) -> DecodeSchedule:
    frozen = np.asarray(frozen_mask, dtype=bool)
    if frozen.shape != (structure.size,):
        raise CodeError(f"frozen mask of length {frozen.size} does not fit a length-{structure.size} graph")
    root = _compile(structure, frozen, 0, 0, specialize, max_node_size)
    fast_root = root if specialize else _compile(structure, frozen, 0, 0, True, max_node_size)
    ops: List[Tuple[str, int]] = []
    _flatten(root, ops)
    return DecodeSchedule(root, ops, structural_sc_ops(structure), fast_ssc_count(fast_root, max_node_size),
                          max_node_size, specialize, frozen)


def schedule_for(spec, specialize: bool = False, max_node_size: int = DEFAULT_MAX_NODE_SIZE) -> DecodeSchedule:
    """Compile (and cache on the spec) the schedule of a :class:`CodeSpec`."""
    key = (specialize, max_node_size)
    cache = spec.__dict__.setdefault("_schedules", {})
    if key not in cache:
        cache[key] = compile_schedule(structure_for(spec.scheme, spec.n_total), spec.frozen_mask(),
                                      specialize, max_node_size)
    return cache[key]
