"""Generator matrices, graph encoders and rate-matching transmit/receive maps."""
from __future__ import annotations

from dataclasses import dataclass
from typing import List, Tuple

import numpy as np

from .core import (SAT, T2, CodeError, CodeSpec, PartialDecomposition, as_bits, ilog2,
                   kronecker_power, kronecker_product)
from .schedule import Structure, decomposition_for, structure_for


@dataclass(frozen=True)
class LinkingMatrix:
    matrix: np.ndarray
    decomposition: PartialDecomposition
    junction_layout: Tuple[Tuple[Tuple[int, int], ...], ...]

    @property
    def size(self) -> int:
        return self.matrix.shape[0]


def junction_count(decomposition: PartialDecomposition, iteration: int) -> int:
    return decomposition.junctions(iteration)


def _arikan(n: int) -> np.ndarray:
    return kronecker_power(T2, ilog2(n))


def build_linking_matrix(decomposition: PartialDecomposition) -> LinkingMatrix:
    """Assemble the generator matrix block by block.

    Each iteration places the next partial code ``G_n`` top-left and the
    matrix built so far bottom-right.  The lower-left block replicates
    ``G_n`` vertically for ascending codes and takes the first rows of
    ``G_n`` for descending ones.
    """
    order = decomposition.linking_order
    current = _arikan(order[0])
    layout: List[Tuple[Tuple[int, int], ...]] = []
    offsets = decomposition.offsets()
    for l, n_l in enumerate(order[1:]):
        g = _arikan(n_l)
        linked = current.shape[0]
        if decomposition.ascending:
            if linked % n_l:
                raise CodeError("ascending linking needs the linked size to be a multiple of the new code")
            lower = np.kron(np.ones((linked // n_l, 1), dtype=np.uint8), g)
        else:
            if linked > n_l:
                raise CodeError("descending linking needs the new code to be the larger one")
            lower = g[:linked]
        current = np.block([[g, np.zeros((n_l, linked), dtype=np.uint8)], [lower, current]]).astype(np.uint8)
        off = offsets[l + 1]
        layout.append(tuple((off + j, off + j + n_l) for j in range(decomposition.junctions(l))))
    return LinkingMatrix(current, decomposition, tuple(layout))


def generator_matrix(spec_or_scheme, n_total: int = None) -> np.ndarray:
    """Dense generator matrix of the native code (test oracle, ``--dump-matrix``)."""
    if isinstance(spec_or_scheme, CodeSpec):
        scheme, n_total = spec_or_scheme.scheme, spec_or_scheme.n_total
    else:
        scheme = spec_or_scheme
    if scheme.kind == "asymmetric":
        return build_linking_matrix(decomposition_for(scheme, n_total)).matrix
    if scheme.kind == "multikernel":
        return kronecker_product(scheme.kernels)
    return _arikan(scheme.native_length(n_total))


def _encode_kernels(x: np.ndarray, kernels) -> np.ndarray:
    # x: (batch, n); stages applied from the innermost Kronecker factor outwards
    batch, n = x.shape
    prefix = [1]
    for k in kernels:
        prefix.append(prefix[-1] * k)
    for stage in reversed(range(len(kernels))):
        k = kernels[stage]
        v = x.reshape(batch, prefix[stage], k, -1)
        if k == 2:
            v[:, :, 0] ^= v[:, :, 1]
        else:
            a, b, c = v[:, :, 0].copy(), v[:, :, 1].copy(), v[:, :, 2].copy()
            v[:, :, 0] = a ^ b
            v[:, :, 1] = a ^ c
            v[:, :, 2] = a ^ b ^ c
    return x


def encode_structure(node: Structure, u: np.ndarray) -> np.ndarray:
    """Graph encoder over a batch ``u`` of shape (batch, n); returns a new array."""
    x = np.array(u, dtype=np.uint8, copy=True)
    _encode_into(node, x)
    return x


def _encode_into(node: Structure, x: np.ndarray) -> None:
    if node.kind == "leaf":
        return
    if node.kind == "kernel":
        seq = []
        walk = node
        while walk.kind == "kernel":
            seq.append(walk.kernel)
            walk = walk.children[0]
        _encode_kernels(x, seq)
        return
    top, bottom = node.children
    xt, xb = x[:, :top.size], x[:, top.size:]
    _encode_into(top, xt)
    _encode_into(bottom, xb)
    xt[:, :node.junctions] ^= xb[:, :node.junctions]


def encode(u, spec: CodeSpec) -> np.ndarray:
    """Encode one native-length input vector (or a batch, one per row)."""
    u = as_bits(u)
    single = u.ndim == 1
    batch = u.reshape(1, -1) if single else u
    if batch.shape[1] != spec.n_native:
        raise CodeError(f"input length {batch.shape[1]} differs from native length {spec.n_native}")
    if batch[:, list(spec.frozen_set)].any():
        raise CodeError("frozen positions of u must be zero")
    x = encode_structure(structure_for(spec.scheme, spec.n_total), batch)
    return x[0] if single else x


def ps_transmit(x_mother, pattern, kind: str) -> np.ndarray:
    """Drop the rate-matching positions (last axis) from a mother codeword."""
    x = as_bits(x_mother)
    pattern = np.asarray(sorted(pattern), dtype=np.int64)
    if kind not in ("shortened", "punctured"):
        raise CodeError(f"unknown rate-matching kind {kind!r}")
    if kind == "shortened" and pattern.size and x[..., pattern].any():
        raise CodeError("a shortened position carries a 1; the frozen set does not contain the pattern")
    keep = np.ones(x.shape[-1], dtype=bool)
    keep[pattern] = False
    return x[..., keep]


def ps_receive(llrs, pattern, kind: str, n_mother: int, sat: float = SAT) -> np.ndarray:
    """Re-insert rate-matching positions: +sat for shortened bits, 0 for punctured bits."""
    llrs = np.asarray(llrs, dtype=float)
    pattern = np.asarray(sorted(pattern), dtype=np.int64)
    if llrs.shape[-1] + pattern.size != n_mother:
        raise CodeError("received length plus pattern size differs from the mother length")
    out = np.empty(llrs.shape[:-1] + (n_mother,))
    keep = np.ones(n_mother, dtype=bool)
    keep[pattern] = False
    out[..., keep] = llrs
    out[..., pattern] = sat if kind == "shortened" else 0.0
    return out


def transmit(x_native, spec: CodeSpec) -> np.ndarray:
    if spec.scheme.is_rate_matched:
        return ps_transmit(x_native, spec.scheme.pattern, spec.scheme.kind)
    return x_native


def receive(llrs, spec: CodeSpec, sat: float = SAT) -> np.ndarray:
    if spec.scheme.is_rate_matched:
        return ps_receive(llrs, spec.scheme.pattern, spec.scheme.kind, spec.n_native, sat)
    return np.asarray(llrs, dtype=float)
