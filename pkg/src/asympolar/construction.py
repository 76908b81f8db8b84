"""Gaussian-approximation code construction and rate-matching patterns.

Means of the LLR of every bit-channel are tracked through the code graph:
at a check-type junction the two incoming means combine through ``phi``,
at a variable-type junction they add.  Asymmetric graphs only pass the
``junctions`` linked positions through a junction; the others go through
unchanged.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import brentq
from scipy.special import erfc

from .core import (CodeError, CodeScheme, CodeSpec, PartialDecomposition, bit_reverse,
                   decompose_length, ilog2, is_power_of_two, next_power_of_two)
from .schedule import Structure, arikan_structure, kernel_structure, structure_for

__all__ = [
    "PartialDecomposition", "ReliabilityProfile", "decompose_length", "phi", "phi_inv",
    "channel_mean", "ga_propagate", "ga_structure", "ga_propagate_ps", "mk_ga_propagate",
    "build_frozen_set", "wl_shortening_pattern", "qup_puncturing_pattern",
    "mk_kernel_order_search", "analytic_fer", "construct_code", "format_profile", "parse_profile",
]

#: Channel mean standing in for an infinitely reliable (shortened) coded bit.
SATURATED_MEAN = 1.0e6

# piecewise phi: log(phi) is a parabola near zero, a stretched exponential in
# the middle and the asymptotic expansion for large arguments
_A, _B, _G = -0.4527, 0.0218, 0.86
_SMALL_EDGE = 0.867861


def _lphi_mid(x):
    return _A * np.power(x, _G) + _B


def _lphi_large(x):
    return 0.5 * np.log(np.pi / x) - x / 4.0 + np.log1p(-10.0 / (7.0 * x))


# the two outer pieces cross just above x = 10; switching there keeps phi monotone
_LARGE_EDGE = brentq(lambda x: _lphi_mid(x) - _lphi_large(x), 10.0, 30.0, xtol=1e-13)
_LPHI_SMALL_EDGE = float(_lphi_mid(_SMALL_EDGE))
_LPHI_LARGE_EDGE = float(_lphi_mid(_LARGE_EDGE))


def log_phi(x) -> np.ndarray:
    """``log(phi(x))`` evaluated piecewise; ``inf`` maps to ``-inf``."""
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise ValueError("phi is only defined for non-negative means")
    out = np.empty_like(x)
    small = x < _SMALL_EDGE
    large = x >= _LARGE_EDGE
    mid = ~small & ~large
    xs = x[small]
    out[small] = 0.0564 * xs * xs - 0.48560 * xs
    out[mid] = _lphi_mid(x[mid])
    with np.errstate(divide="ignore", invalid="ignore"):
        xl = x[large]
        out[large] = np.where(np.isinf(xl), -np.inf, _lphi_large(xl))
    return out


def phi(x):
    out = np.exp(log_phi(x))
    return float(out) if np.ndim(x) == 0 else out


def _inv_log_phi(ly: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    ly = np.minimum(np.asarray(ly, dtype=float), 0.0)
    out = np.empty_like(ly)
    small = ly >= _LPHI_SMALL_EDGE
    large = ly < _LPHI_LARGE_EDGE
    mid = ~small & ~large
    ys = ly[small]
    out[small] = (0.48560 - np.sqrt(np.maximum(0.48560 ** 2 + 4 * 0.0564 * ys, 0.0))) / (2 * 0.0564)
    out[mid] = np.power((ly[mid] - _B) / _A, 1.0 / _G)
    if large.any():
        target = ly[large]
        finite = np.isfinite(target)
        t = np.where(finite, target, _LPHI_LARGE_EDGE)
        # Newton on a convex decreasing function: after one step the iterates
        # approach the root from the left
        x = np.maximum(-4.0 * t, _LARGE_EDGE)
        for _ in range(100):
            slope = -0.5 / x - 0.25 + 10.0 / (7.0 * x * x - 10.0 * x)
            step = (_lphi_large(x) - t) / slope
            x = np.maximum(x - step, _LARGE_EDGE)
            if np.all(np.abs(step) <= tol * x):
                break
        out[large] = np.where(finite, x, np.inf)
    return out


def phi_inv(y):
    y = np.asarray(y, dtype=float)
    if np.any((y <= 0) | (y > 1)):
        raise ValueError("phi_inv is defined on (0, 1]")
    out = _inv_log_phi(np.log(y))
    return float(out) if out.ndim == 0 else out


def _lcombine(la: np.ndarray, lb: np.ndarray) -> np.ndarray:
    """log of 1 - (1 - e^la)(1 - e^lb)."""
    with np.errstate(divide="ignore", invalid="ignore"):
        total = np.logaddexp(la, lb)
        both = la + lb - total
        out = total + np.log1p(-np.exp(both))
    return np.where(np.isneginf(la), lb, np.where(np.isneginf(lb), la, out))


def check_mean(*means) -> np.ndarray:
    """Mean at the output of a check junction fed by ``means``."""
    logs = [log_phi(m) for m in means]
    acc = logs[0]
    for l in logs[1:]:
        acc = _lcombine(acc, l)
    return _inv_log_phi(acc)


def channel_mean(ebno_db: float, rate: float, modulation_order: int = 1) -> float:
    """Mean LLR of the uncoded channel, ``4 R M Eb/N0``."""
    return 4.0 * rate * modulation_order * 10.0 ** (ebno_db / 10.0)


def _kernel_sequence(node: Structure) -> Tuple[int, ...]:
    seq = []
    while node.kind == "kernel":
        seq.append(node.kernel)
        node = node.children[0]
    return tuple(seq)


def _ga_kernels(z: np.ndarray, kernels: Sequence[int]) -> np.ndarray:
    blocks = 1
    for k in kernels:
        v = z.reshape(blocks, k, -1)
        width = v.shape[2]
        if width > 1 and np.all(v == v[:, :, :1]):
            # uniform trailing axis (e.g. a constant channel): propagate one column
            v = v[:, :, :1]
        if k == 2:
            a, b = v[:, 0], v[:, 1]
            out = np.stack([check_mean(a, b), a + b], axis=1)
        else:
            a, b, c = v[:, 0], v[:, 1], v[:, 2]
            out = np.stack([check_mean(a, b, c), a + check_mean(b, c), b + c], axis=1)
        z = np.repeat(out, width // out.shape[2], axis=2).reshape(-1)
        blocks *= k
    return z


def ga_structure(node: Structure, z) -> np.ndarray:
    """Leaf means (u index order) for coded-bit means ``z`` over any graph."""
    z = np.array(z, dtype=float).reshape(-1)
    if z.size != node.size:
        raise CodeError("mean vector length does not match the graph")
    if node.kind != "asym":
        return _ga_kernels(z, _kernel_sequence(node))
    top, bottom = node.children
    j = node.junctions
    zt, zb = z[:top.size].copy(), z[top.size:].copy()
    a, b = zt[:j].copy(), zb[:j].copy()
    zt[:j] = check_mean(a, b)
    zb[:j] = a + b
    return np.concatenate([ga_structure(top, zt), ga_structure(bottom, zb)])


@dataclass(frozen=True)
class ReliabilityProfile:
    means: np.ndarray
    ranking: Tuple[int, ...]
    design_snr_db: Optional[float] = None
    modulation_order: int = 1

    @classmethod
    def from_means(cls, means, design_snr_db=None, modulation_order=1) -> "ReliabilityProfile":
        means = np.asarray(means, dtype=float)
        order = np.lexsort((np.arange(means.size), -means))
        return cls(means, tuple(order.tolist()), design_snr_db, modulation_order)

    @property
    def size(self) -> int:
        return self.means.size


def ga_propagate(decomposition: PartialDecomposition, channel_mean_value: float,
                 design_snr_db: Optional[float] = None) -> ReliabilityProfile:
    from .schedule import apc_structure
    node = apc_structure(decomposition)
    means = ga_structure(node, np.full(node.size, float(channel_mean_value)))
    return ReliabilityProfile.from_means(means, design_snr_db)


def mk_ga_propagate(kernel_sequence: Sequence[int], channel_mean_value: float,
                    design_snr_db: Optional[float] = None) -> ReliabilityProfile:
    node = kernel_structure(tuple(int(k) for k in kernel_sequence))
    means = ga_structure(node, np.full(node.size, float(channel_mean_value)))
    return ReliabilityProfile.from_means(means, design_snr_db)


def ga_propagate_ps(n_mother: int, pattern: Iterable[int], kind: str, channel_mean_value: float,
                    design_snr_db: Optional[float] = None) -> ReliabilityProfile:
    if kind not in ("shortened", "punctured"):
        raise CodeError(f"unknown rate-matching kind {kind!r}")
    z = np.full(n_mother, float(channel_mean_value))
    z[list(pattern)] = SATURATED_MEAN if kind == "shortened" else 0.0
    return ReliabilityProfile.from_means(ga_structure(arikan_structure(n_mother), z), design_snr_db)


def build_frozen_set(profile: ReliabilityProfile, k_info: int, forced_frozen: Iterable[int] = ()):
    """Return ``(info_set, frozen_set)``; both follow the reliability ranking."""
    forced = set(int(i) for i in forced_frozen)
    candidates = [i for i in profile.ranking if i not in forced]
    if k_info < 0 or k_info > len(candidates):
        raise CodeError(f"K={k_info} exceeds the {len(candidates)} indices that may carry information")
    info = tuple(candidates[:k_info])
    chosen = set(info)
    frozen = tuple(i for i in profile.ranking if i not in chosen)
    return info, frozen


def wl_shortening_pattern(n_mother: int, n_target: int) -> Tuple[int, ...]:
    """Shortening set: the last ``n_mother - n_target`` natural-order indices."""
    if not is_power_of_two(n_mother):
        raise CodeError("mother code length must be a power of two")
    if n_target > n_mother or n_target < 1:
        raise CodeError(f"cannot shorten a length-{n_mother} code to {n_target}")
    return tuple(range(n_target, n_mother))


def qup_puncturing_pattern(n_mother: int, n_target: int) -> Tuple[int, ...]:
    """Quasi-uniform puncturing: bit-reversals of the first ``n_mother - n_target`` indices."""
    if not is_power_of_two(n_mother):
        raise CodeError("mother code length must be a power of two")
    if n_target > n_mother or n_target < 1:
        raise CodeError(f"cannot puncture a length-{n_mother} code to {n_target}")
    nbits = ilog2(n_mother)
    return tuple(sorted(bit_reverse(i, nbits) for i in range(n_mother - n_target)))


def factor_23(n: int) -> Tuple[int, int]:
    if n < 1:
        raise CodeError("length must be positive")
    twos = threes = 0
    while n % 2 == 0:
        n //= 2
        twos += 1
    while n % 3 == 0:
        n //= 3
        threes += 1
    if n != 1:
        raise CodeError("multi-kernel lengths must be of the form 2^n 3^m")
    return twos, threes


def kernel_orders(n_mk: int):
    """Distinct orderings of the kernel multiset of ``n_mk``, lexicographic."""
    twos, threes = factor_23(n_mk)
    stages = twos + threes
    for pos in itertools.combinations(range(stages), threes):
        seq = [2] * stages
        for p in pos:
            seq[p] = 3
        yield tuple(seq)


def _order_score(kernels, k_info, z) -> float:
    means = mk_ga_propagate(kernels, z).means
    return float(np.sort(means)[::-1][:k_info].sum())


def mk_kernel_order_search(n_mk: int, k_info: int, channel_mean_value: float) -> Tuple[int, ...]:
    """Kernel order maximizing the summed means of the ``k_info`` best bit-channels."""
    best, best_score = None, -np.inf
    for seq in sorted(kernel_orders(n_mk)):
        score = _order_score(seq, k_info, channel_mean_value)
        if score > best_score:
            best, best_score = seq, score
    return best


def analytic_fer(profile: ReliabilityProfile, info_set: Iterable[int]) -> float:
    """SC frame error rate estimate ``1 - prod(1 - Q(sqrt(z_i / 2)))``."""
    idx = np.fromiter(info_set, dtype=np.int64)
    if idx.size == 0:
        return 0.0
    z = profile.means[idx]
    if np.any(z < 0):
        raise ValueError("means must be non-negative")
    q = 0.5 * erfc(np.sqrt(z / 2.0) / math.sqrt(2.0))
    return float(-np.expm1(np.sum(np.log1p(-q))))


def construct_code(kind: str, n_total: int, k_info: int, design_snr_db: float, *,
                   ascending: bool = True, kernels: Optional[Sequence[int]] = None,
                   partials: Sequence[int] = (), crc_width: int = 0,
                   modulation_order: int = 1) -> CodeSpec:
    """Design a code of any supported family by GA at ``design_snr_db``.

    ``kind`` is ``arikan``, ``apc`` (or ``asymmetric``), ``shortened``,
    ``punctured`` or ``mk`` (``multikernel``).
    """
    kind = {"apc": "asymmetric", "mk": "multikernel", "ps": "shortened"}.get(kind, kind)
    if n_total < 1 or not 0 <= k_info <= n_total:
        raise CodeError(f"invalid (N, K) = ({n_total}, {k_info})")
    z = channel_mean(design_snr_db, k_info / n_total, modulation_order)
    forced: Tuple[int, ...] = ()
    if kind == "asymmetric":
        scheme = CodeScheme.asymmetric(ascending, partials)
        if partials:
            decomposition = PartialDecomposition(tuple(sorted(partials, reverse=True)), ascending)
        else:
            decomposition = decompose_length(n_total, ascending)
        if decomposition.total != n_total:
            raise CodeError("partial lengths do not sum to N")
        profile = ga_propagate(decomposition, z, design_snr_db)
    elif kind in ("shortened", "punctured"):
        n_mother = next_power_of_two(n_total)
        pattern_fn = wl_shortening_pattern if kind == "shortened" else qup_puncturing_pattern
        forced = pattern_fn(n_mother, n_total)
        scheme = CodeScheme(kind, pattern=forced)
        profile = ga_propagate_ps(n_mother, forced, kind, z, design_snr_db)
    elif kind == "multikernel":
        if kernels is None:
            kernels = mk_kernel_order_search(n_total, k_info, z)
        scheme = CodeScheme.multikernel(kernels)
        profile = mk_ga_propagate(scheme.kernels, z, design_snr_db)
    elif kind == "arikan":
        scheme = CodeScheme.arikan()
        if not is_power_of_two(n_total):
            raise CodeError("Arikan codes need a power-of-two length")
        profile = ReliabilityProfile.from_means(
            ga_structure(structure_for(scheme, n_total), np.full(n_total, z)), design_snr_db)
    else:
        raise CodeError(f"unknown code family {kind!r}")
    profile = ReliabilityProfile(profile.means, profile.ranking, design_snr_db, modulation_order)
    info, _ = build_frozen_set(profile, k_info, forced)
    frozen = tuple(sorted(set(range(profile.size)) - set(info)))
    return CodeSpec(n_total, k_info, scheme, info, frozen, crc_width, design_snr_db, profile)


def _fmt_set(values) -> str:
    return "{" + ",".join(str(v) for v in values) + "}"


def format_profile(spec: CodeSpec) -> str:
    """Line-oriented dump: ``# key=value`` header lines, then ``index mean`` pairs."""
    profile = spec.profile
    info = set(spec.info_set)
    frozen_ranked = [i for i in profile.ranking if i not in info]
    lines = [
        f"# N={spec.n_total}",
        f"# K={spec.k_info}",
        f"# scheme={spec.scheme.label}",
        f"# design_snr_db={spec.design_snr_db:g}",
        f"# crc_width={spec.crc_width}",
        f"# R={_fmt_set(profile.ranking)}",
        f"# I={_fmt_set(spec.info_set)}",
        f"# F={_fmt_set(frozen_ranked)}",
    ]
    if spec.scheme.is_rate_matched:
        lines.append(f"# pattern={_fmt_set(spec.scheme.pattern)}")
    lines.extend(f"{i} {m:.12g}" for i, m in enumerate(profile.means))
    return "\n".join(lines) + "\n"


def parse_profile(text: str):
    """Inverse of :func:`format_profile`: returns ``(header dict, ReliabilityProfile)``."""
    header, pairs = {}, []
    for line in text.splitlines():
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            key, _, value = line[1:].strip().partition("=")
            header[key.strip()] = value.strip()
        else:
            idx, mean = line.split()
            pairs.append((int(idx), float(mean)))
    means = np.zeros(len(pairs))
    for idx, mean in pairs:
        means[idx] = mean
    for key in ("R", "I", "F", "pattern"):
        if key in header:
            body = header[key].strip("{}")
            header[key] = tuple(int(v) for v in body.split(",")) if body else ()
    snr = float(header["design_snr_db"]) if "design_snr_db" in header else None
    return header, ReliabilityProfile.from_means(means, snr)
