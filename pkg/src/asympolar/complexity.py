"""Operation counts, memory model and the APC-versus-mother-code bound check."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Tuple

from .core import CodeScheme, CodeSpec, PartialDecomposition, decompose_length, ilog2, next_power_of_two
from .schedule import (DEFAULT_MAX_NODE_SIZE, DecodeNode, DecodeSchedule, Structure, compile_schedule,
                       schedule_for, structural_sc_ops, structure_for)

__all__ = ["DecodeSchedule", "DecodeNode", "compile_schedule", "count_sc_ops", "count_fast_ssc_ops",
           "sc_ops_for", "apc_sc_ops", "apc_ops_bound", "verify_appendix_inequality", "memory_footprint",
           "BoundReport"]


def sc_ops_for(scheme: CodeScheme, n_total: int) -> int:
    """SC LLR operations from the code graph alone (frozen set not needed)."""
    return structural_sc_ops(structure_for(scheme, n_total))


def count_sc_ops(spec: CodeSpec) -> int:
    return sc_ops_for(spec.scheme, spec.n_total)


def count_fast_ssc_ops(spec: CodeSpec, max_node_size: int = DEFAULT_MAX_NODE_SIZE) -> int:
    return schedule_for(spec, specialize=True, max_node_size=max_node_size).fast_ssc_ops


def apc_sc_ops(decomposition: PartialDecomposition) -> int:
    """Exact SC count from the decomposition: partial codes plus two operations per sum junction."""
    junctions = sum(decomposition.junctions(l) for l in range(decomposition.count - 1))
    return sum(n * ilog2(n) for n in decomposition.lengths) + 2 * junctions


def apc_ops_bound(decomposition: PartialDecomposition) -> int:
    """``sum N_l log2 N_l + sum_{l>=1} 2 N_l`` with ``N_l`` in linking order."""
    order = decomposition.linking_order
    return sum(n * ilog2(n) for n in order) + sum(2 * n for n in order[1:])


@dataclass
class BoundReport:
    max_n: int
    checked: int = 0
    violations: List[Tuple[int, str, int, int]] = field(default_factory=list)
    closed_forms: List[Tuple[int, str, int, int]] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def lines(self) -> List[str]:
        out = [f"checked {self.checked} (N, permutation) pairs for N in [3, {self.max_n}]"]
        for n, perm, ops, mother in self.violations:
            out.append(f"FAIL N={n} {perm}: {ops} >= {mother}")
        for p, perm, got, expected in self.closed_forms:
            status = "ok" if got == expected else "FAIL"
            out.append(f"{status} closed form p={p} {perm}: {got} (expected {expected})")
        out.append("PASS" if self.ok else "FAIL")
        return out


def verify_appendix_inequality(n_max: int) -> BoundReport:
    """APC SC operations stay strictly below the mother code's for every non-power-of-two N.

    At ``N = 2^p - 1`` the ascending count must equal ``p 2^p - 2^p`` and the
    descending linking-order bound must equal ``p 2^p - 2``; the exact
    descending count must not exceed that bound.
    """
    if n_max < 3:
        raise ValueError("n_max must be at least 3")
    report = BoundReport(n_max)
    for n in range(3, n_max + 1):
        n_m = next_power_of_two(n)
        mother = n_m * ilog2(n_m)
        for ascending in (True, False):
            decomposition = decompose_length(n, ascending)
            ops = apc_sc_ops(decomposition)
            bound = apc_ops_bound(decomposition)
            report.checked += 1
            perm = "asc" if ascending else "desc"
            if n == n_m:
                if ops != mother:
                    report.violations.append((n, perm, ops, mother))
            elif not ops < mother:
                report.violations.append((n, perm, ops, mother))
            if ops > bound:
                report.violations.append((n, perm + "-bound", ops, bound))
    p = 2
    while (1 << p) - 1 <= n_max:
        n = (1 << p) - 1
        asc = apc_sc_ops(decompose_length(n, True))
        desc_bound = apc_ops_bound(decompose_length(n, False))
        report.closed_forms.append((p, "asc", asc, p * (1 << p) - (1 << p)))
        report.closed_forms.append((p, "desc-bound", desc_bound, p * (1 << p) - 2))
        for got, expected in ((asc, p * (1 << p) - (1 << p)), (desc_bound, p * (1 << p) - 2)):
            if got != expected:
                report.violations.append((n, f"closed-form p={p}", got, expected))
        p += 1
    return report


def _workspace(node: Structure) -> Tuple[int, int]:
    """(internal alpha words, beta words) for a graph, excluding channel storage.

    A power-of-two code of length n needs n - 1 of each: one child buffer and
    one left-sibling partial-sum buffer per stage.  Asymmetric codes reuse the
    buffers of their largest partial code; multi-kernel stages keep two
    sibling buffers per ternary stage.
    """
    if node.kind == "leaf":
        return 0, 0
    if node.kind == "asym":
        parts = [_workspace(c) for c in node.children]
        top = node.children[0]
        return max(max(a for a, _ in parts), top.size), max(max(b for _, b in parts), top.size)
    child = node.children[0]
    a, b = _workspace(child)
    k = node.kernel
    return child.size + a, (k - 1) * child.size + b


def memory_footprint(spec_or_scheme, n_total: Optional[int] = None) -> Tuple[int, int]:
    """``(alpha_words, beta_words)``; alpha words include channel LLR storage."""
    if isinstance(spec_or_scheme, CodeSpec):
        scheme, n_total = spec_or_scheme.scheme, spec_or_scheme.n_total
    else:
        scheme = spec_or_scheme
    node = structure_for(scheme, n_total)
    alpha, beta = _workspace(node)
    return node.size + alpha, beta
