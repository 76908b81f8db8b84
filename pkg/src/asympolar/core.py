"""Shared code descriptions and GF(2) / LLR primitives."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np

#: Magnitude used in place of an infinite LLR (known/shortened bits).
SAT = 300.0

T2 = np.array([[1, 0], [1, 1]], dtype=np.uint8)
T3 = np.array([[1, 1, 1], [1, 0, 1], [0, 1, 1]], dtype=np.uint8)


class CodeError(ValueError):
    """Invalid code parameters (length, dimension, pattern...)."""


def is_power_of_two(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


def next_power_of_two(n: int) -> int:
    return 1 << max(0, (int(n) - 1).bit_length())


def ilog2(n: int) -> int:
    """Floor of log2 for a positive integer."""
    return int(n).bit_length() - 1


@dataclass(frozen=True)
class CodeScheme:
    """Variant tag for a code family.

    ``kind`` is one of ``arikan``, ``asymmetric``, ``shortened``, ``punctured``
    or ``multikernel``. ``ascending`` only matters for asymmetric codes,
    ``pattern`` for shortened/punctured ones and ``kernels`` for multi-kernel.
    """

    kind: str
    ascending: bool = True
    pattern: Tuple[int, ...] = ()
    kernels: Tuple[int, ...] = ()
    partials: Tuple[int, ...] = ()

    KINDS = ("arikan", "asymmetric", "shortened", "punctured", "multikernel")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise CodeError(f"unknown scheme kind {self.kind!r}")
        if self.kind == "multikernel":
            if not self.kernels or any(k not in (2, 3) for k in self.kernels):
                raise CodeError("multi-kernel sequence must be a non-empty list of 2s and 3s")

    @classmethod
    def arikan(cls) -> "CodeScheme":
        return cls("arikan")

    @classmethod
    def asymmetric(cls, ascending: bool = True, partials=()) -> "CodeScheme":
        """``partials`` forces a (possibly non-minimal) decomposition, largest first."""
        return cls("asymmetric", ascending=bool(ascending), partials=tuple(int(n) for n in partials))

    @classmethod
    def shortened(cls, pattern) -> "CodeScheme":
        return cls("shortened", pattern=tuple(sorted(int(i) for i in pattern)))

    @classmethod
    def punctured(cls, pattern) -> "CodeScheme":
        return cls("punctured", pattern=tuple(sorted(int(i) for i in pattern)))

    @classmethod
    def multikernel(cls, kernels) -> "CodeScheme":
        return cls("multikernel", kernels=tuple(int(k) for k in kernels))

    @property
    def is_rate_matched(self) -> bool:
        return self.kind in ("shortened", "punctured")

    @property
    def label(self) -> str:
        if self.kind == "asymmetric":
            return "apc-asc" if self.ascending else "apc-desc"
        if self.kind == "multikernel":
            return "mk(" + ",".join(map(str, self.kernels)) + ")"
        return self.kind

    def native_length(self, n_total: int) -> int:
        """Length of the code actually encoded/decoded for a transmitted length."""
        if self.kind in ("shortened", "punctured"):
            return next_power_of_two(n_total)
        return n_total


@dataclass(frozen=True)
class CodeSpec:
    """One fully specified code instance.

    ``info_set`` is kept in reliability order (most reliable first), the
    frozen set in ascending index order. ``k_info`` counts CRC bits.
    """

    n_total: int
    k_info: int
    scheme: CodeScheme
    info_set: Tuple[int, ...]
    frozen_set: Tuple[int, ...]
    crc_width: int = 0
    design_snr_db: Optional[float] = None
    profile: Optional[object] = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        n_native = self.n_native
        if not 0 <= self.k_info <= self.n_total:
            raise CodeError(f"K={self.k_info} outside [0, N={self.n_total}]")
        if self.crc_width not in (0, 16):
            raise CodeError("crc_width must be 0 or 16")
        if self.crc_width and self.k_info < self.crc_width:
            raise CodeError("K must include the CRC bits")
        if len(self.info_set) != self.k_info:
            raise CodeError("info set size differs from K")
        info, frozen = set(self.info_set), set(self.frozen_set)
        if info & frozen or len(info | frozen) != n_native or min(info | frozen, default=0) < 0 \
                or max(info | frozen, default=-1) >= n_native:
            raise CodeError("info and frozen sets must partition the native index range")
        if self.scheme.kind == "multikernel" and int(np.prod(self.scheme.kernels)) != self.n_total:
            raise CodeError("kernel sequence product differs from the code length")
        if self.scheme.partials and sum(self.scheme.partials) != self.n_total:
            raise CodeError("forced partial lengths do not sum to N")
        if self.scheme.kind == "arikan" and not is_power_of_two(self.n_total):
            raise CodeError("Arikan codes need a power-of-two length")
        if self.scheme.is_rate_matched:
            if any(not 0 <= i < n_native for i in self.scheme.pattern):
                raise CodeError("rate-matching pattern index outside the mother code")
            if len(self.scheme.pattern) != n_native - self.n_total:
                raise CodeError("pattern size differs from N_M - N")
            if not set(self.scheme.pattern) <= frozen:
                raise CodeError("rate-matching pattern must be frozen")

    @property
    def n_native(self) -> int:
        return self.scheme.native_length(self.n_total)

    @property
    def rate(self) -> float:
        return self.k_info / self.n_total

    @property
    def payload_bits(self) -> int:
        return self.k_info - self.crc_width

    def frozen_mask(self) -> np.ndarray:
        mask = np.ones(self.n_native, dtype=bool)
        mask[list(self.info_set)] = False
        return mask

    def info_positions(self) -> Tuple[np.ndarray, np.ndarray]:
        """Index positions of payload bits and of CRC bits, each in ascending order.

        CRC bits take the ``crc_width`` least reliable positions of the info set.
        """
        ranked = list(self.info_set)
        split = len(ranked) - self.crc_width
        return np.sort(np.array(ranked[:split], dtype=np.int64)), \
            np.sort(np.array(ranked[split:], dtype=np.int64))


def as_bits(values) -> np.ndarray:
    bits = np.asarray(values, dtype=np.uint8)
    if bits.size and bits.max() > 1:
        raise CodeError("bit vectors may only hold 0 and 1")
    return bits


def gf2_matvec(matrix, row_vector) -> np.ndarray:
    """Return ``u @ G`` over GF(2)."""
    g = np.asarray(matrix, dtype=np.uint8)
    u = as_bits(row_vector)
    if g.ndim != 2 or u.shape[-1] != g.shape[0]:
        raise CodeError(f"vector of length {u.shape[-1]} does not match a {g.shape} matrix")
    return ((u.astype(np.int64) @ g.astype(np.int64)) & 1).astype(np.uint8)


def gf2_rank(matrix) -> int:
    m = np.array(matrix, dtype=np.uint8) & 1
    rows, cols = m.shape
    rank = 0
    for c in range(cols):
        pivot = np.nonzero(m[rank:, c])[0]
        if pivot.size == 0:
            continue
        p = rank + pivot[0]
        if p != rank:
            m[[rank, p]] = m[[p, rank]]
        hit = np.nonzero(m[:, c])[0]
        hit = hit[hit != rank]
        m[hit] ^= m[rank]
        rank += 1
        if rank == rows:
            break
    return rank


def kronecker_power(kernel, exponent: int) -> np.ndarray:
    if exponent < 0:
        raise CodeError("exponent must be non-negative")
    out = np.ones((1, 1), dtype=np.uint8)
    k = np.asarray(kernel, dtype=np.uint8)
    for _ in range(exponent):
        out = np.kron(out, k).astype(np.uint8)
    return out


def kronecker_product(kernels) -> np.ndarray:
    """Left-to-right Kronecker product of a kernel-size sequence (2 -> T2, 3 -> T3)."""
    out = np.ones((1, 1), dtype=np.uint8)
    for k in kernels:
        out = np.kron(out, T2 if k == 2 else T3).astype(np.uint8)
    return out


def bit_reverse(i: int, nbits: int) -> int:
    return int(format(i, f"0{nbits}b")[::-1], 2) if nbits else 0


@dataclass(frozen=True)
class PartialDecomposition:
    """Power-of-two partial code lengths of an asymmetric code.

    ``lengths`` is stored largest first. ``linking_order`` gives the order in
    which partial codes are linked: largest first for ascending codes,
    smallest first for descending ones. The last partial code linked sits at
    the lowest bit indices.
    """

    lengths: Tuple[int, ...]
    ascending: bool = True

    def __post_init__(self):
        if not self.lengths or any(not is_power_of_two(n) for n in self.lengths):
            raise CodeError("partial code lengths must be powers of two")
        if list(self.lengths) != sorted(self.lengths, reverse=True):
            raise CodeError("partial code lengths must be stored largest first")

    @property
    def count(self) -> int:
        return len(self.lengths)

    @property
    def total(self) -> int:
        return sum(self.lengths)

    @property
    def is_minimal(self) -> bool:
        return len(set(self.lengths)) == len(self.lengths)

    @property
    def linking_order(self) -> Tuple[int, ...]:
        return self.lengths if self.ascending else tuple(reversed(self.lengths))

    def junctions(self, iteration: int) -> int:
        """Sum junctions of linking iteration ``iteration`` (which links partial code ``iteration + 1``)."""
        order = self.linking_order
        if not 0 <= iteration < len(order) - 1:
            raise CodeError(f"linking iteration {iteration} out of range for p={len(order)}")
        linked = sum(order[: iteration + 1])
        return min(linked, order[iteration + 1])

    def offsets(self) -> Tuple[int, ...]:
        """Start bit index of each partial code, in linking order."""
        order = self.linking_order
        return tuple(sum(order[l + 1:]) for l in range(len(order)))


def decompose_length(n_total: int, ascending: bool = True) -> PartialDecomposition:
    if n_total < 2:
        raise CodeError("asymmetric codes need N >= 2")
    lengths = tuple(1 << b for b in reversed(range(int(n_total).bit_length())) if n_total >> b & 1)
    return PartialDecomposition(lengths, ascending)
