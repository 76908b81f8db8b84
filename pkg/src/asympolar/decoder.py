"""SC, CRC-aided SCL and Fast-SSC decoders over compiled schedules.

All decoders accept a single LLR vector or a batch (one frame per row) and
work on the whole batch at once; every frame follows the same schedule.
LLRs are in the native (mother) domain, i.e. rate-matching positions have
already been re-inserted.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from .core import CodeError, CodeSpec
from .crc import crc16_batch
from .schedule import DecodeNode, DecodeSchedule, schedule_for


# -- elementary operations ----------------------------------------------------

def f_op(a, b):
    """Min-sum box-plus."""
    return np.sign(a) * np.sign(b) * np.minimum(np.abs(a), np.abs(b))


def g_op(a, b, bit):
    return b + (1 - 2 * np.asarray(bit, dtype=np.int8)) * a


def hd(llr, index: int = 0, frozen_set=()) -> int:
    """Leaf decision: 0 for a frozen index or a strictly positive LLR, else 1."""
    if index in frozen_set or llr > 0:
        return 0
    return 1


def ternary_branch_ops(a, b, c, beta_l=0, beta_c=0):
    """The three ternary child LLRs ``(left, center, right)``.

    ``center`` needs ``beta_l``; ``right`` needs both partial sums.
    """
    left = f_op(f_op(a, b), c)
    sl = 1 - 2 * np.asarray(beta_l, dtype=np.int8)
    sc = 1 - 2 * (np.asarray(beta_l, dtype=np.int8) ^ np.asarray(beta_c, dtype=np.int8))
    center = sl * a + f_op(b, c)
    right = sl * b + sc * c
    return left, center, right


def h3(beta_l, beta_c, beta_r):
    return np.concatenate([beta_l ^ beta_c, beta_l ^ beta_r, beta_l ^ beta_c ^ beta_r], axis=-1)


def _decisions(llr):
    return (llr <= 0).astype(np.uint8)


def _prepare(channel_llrs, schedule: DecodeSchedule):
    llr = np.asarray(channel_llrs, dtype=float)
    single = llr.ndim == 1
    llr = llr.reshape(1, -1) if single else llr
    if llr.shape[1] != schedule.size:
        raise CodeError(f"{llr.shape[1]} LLRs supplied for a length-{schedule.size} schedule")
    return llr, single


def _resolve(spec: CodeSpec, schedule: Optional[DecodeSchedule], specialize: bool) -> DecodeSchedule:
    if schedule is None:
        return schedule_for(spec, specialize=specialize)
    if schedule.size != spec.n_native:
        raise CodeError("schedule does not match the code")
    if schedule.frozen_mask is not None and not np.array_equal(schedule.frozen_mask, spec.frozen_mask()):
        raise CodeError("schedule was compiled for a different frozen set")
    return schedule


# -- successive cancellation ---------------------------------------------------

def _sc(node: DecodeNode, llr: np.ndarray, u: np.ndarray) -> np.ndarray:
    if node.n_info == 0:
        return np.zeros(llr.shape, dtype=np.uint8)
    if node.kind == "leaf":
        bits = _decisions(llr)
        u[:, node.offset:node.offset + 1] = bits
        return bits
    if node.kind == "binary":
        h = node.size // 2
        a, b = llr[:, :h], llr[:, h:]
        x0 = _sc(node.children[0], f_op(a, b), u)
        x1 = _sc(node.children[1], g_op(a, b, x0), u)
        return np.concatenate([x0 ^ x1, x1], axis=1)
    if node.kind == "ternary":
        t = node.size // 3
        a, b, c = llr[:, :t], llr[:, t:2 * t], llr[:, 2 * t:]
        xl = _sc(node.children[0], ternary_branch_ops(a, b, c)[0], u)
        xc = _sc(node.children[1], ternary_branch_ops(a, b, c, xl)[1], u)
        xr = _sc(node.children[2], ternary_branch_ops(a, b, c, xl, xc)[2], u)
        return h3(xl, xc, xr)
    top, bottom = node.children
    j = node.junctions
    yt, yb = llr[:, :top.size], llr[:, top.size:]
    lt = yt.copy()
    lt[:, :j] = f_op(yt[:, :j], yb[:, :j])
    xt = _sc(top, lt, u)
    lb = yb.copy()
    lb[:, :j] = g_op(yt[:, :j], yb[:, :j], xt[:, :j])
    xb = _sc(bottom, lb, u)
    x = np.concatenate([xt, xb], axis=1)
    x[:, :j] ^= xb[:, :j]
    return x


def sc_decode(channel_llrs, spec: CodeSpec, schedule: Optional[DecodeSchedule] = None
              ) -> Tuple[np.ndarray, np.ndarray]:
    """Successive cancellation; returns ``(u_hat, x_hat)`` in the native domain."""
    schedule = _resolve(spec, schedule, False)
    llr, single = _prepare(channel_llrs, schedule)
    u = np.zeros(llr.shape, dtype=np.uint8)
    x = _sc(schedule.root, llr, u)
    return (u[0], x[0]) if single else (u, x)


# -- Fast-SSC ------------------------------------------------------------------

def _arikan_transform(x: np.ndarray) -> np.ndarray:
    # G_n is its own inverse over GF(2)
    x = x.copy()
    batch, n = x.shape
    step = 1
    while step < n:
        v = x.reshape(batch, -1, 2, step)
        v[:, :, 0] ^= v[:, :, 1]
        step *= 2
    return x


def _tree_sum(llr: np.ndarray) -> np.ndarray:
    # same association order as the g-chain of plain SC
    while llr.shape[1] > 1:
        h = llr.shape[1] // 2
        llr = llr[:, :h] + llr[:, h:]
    return llr[:, 0]


def _special(node: DecodeNode, llr: np.ndarray, u: np.ndarray) -> np.ndarray:
    n = node.size
    if node.kind == "rate0":
        return np.zeros(llr.shape, dtype=np.uint8)
    if node.kind == "repetition":
        bit = (_tree_sum(llr) <= 0).astype(np.uint8)
        x = np.repeat(bit[:, None], n, axis=1)
        u[:, node.offset:node.offset + n] = 0
        u[:, node.offset + n - 1] = bit
        return x
    x = _decisions(llr)
    # exact zeros or tied minimum magnitudes are where plain SC's tie rule
    # and the one-shot rule may part ways; those frames take the SC route
    fallback = (llr == 0).any(axis=1)
    if node.kind == "spc":
        mag = np.abs(llr)
        weakest = np.argmin(mag, axis=1)
        smallest = mag[np.arange(len(llr)), weakest]
        fallback |= (mag == smallest[:, None]).sum(axis=1) > 1
        odd = x.sum(axis=1) % 2 == 1
        x[odd, weakest[odd]] ^= 1
    u[:, node.offset:node.offset + n] = _arikan_transform(x)
    if fallback.any():
        rows = np.nonzero(fallback)[0]
        sub_u = np.zeros((rows.size, n), dtype=np.uint8)
        x[rows] = _sc(node.plain, llr[rows], sub_u)
        u[rows, node.offset:node.offset + n] = sub_u
    return x


def _fast(node: DecodeNode, llr: np.ndarray, u: np.ndarray) -> np.ndarray:
    if node.kind in ("rate0", "rate1", "repetition", "spc"):
        return _special(node, llr, u)
    if node.kind == "leaf":
        return _sc(node, llr, u)
    if node.kind == "binary":
        h = node.size // 2
        a, b = llr[:, :h], llr[:, h:]
        x0 = _fast(node.children[0], f_op(a, b), u)
        x1 = _fast(node.children[1], g_op(a, b, x0), u)
        return np.concatenate([x0 ^ x1, x1], axis=1)
    if node.kind == "ternary":
        t = node.size // 3
        a, b, c = llr[:, :t], llr[:, t:2 * t], llr[:, 2 * t:]
        xl = _fast(node.children[0], ternary_branch_ops(a, b, c)[0], u)
        xc = _fast(node.children[1], ternary_branch_ops(a, b, c, xl)[1], u)
        xr = _fast(node.children[2], ternary_branch_ops(a, b, c, xl, xc)[2], u)
        return h3(xl, xc, xr)
    top, bottom = node.children
    j = node.junctions
    yt, yb = llr[:, :top.size], llr[:, top.size:]
    lt = yt.copy()
    lt[:, :j] = f_op(yt[:, :j], yb[:, :j])
    xt = _fast(top, lt, u)
    lb = yb.copy()
    lb[:, :j] = g_op(yt[:, :j], yb[:, :j], xt[:, :j])
    xb = _fast(bottom, lb, u)
    x = np.concatenate([xt, xb], axis=1)
    x[:, :j] ^= xb[:, :j]
    return x


def _attach_plain(node: DecodeNode, frozen: np.ndarray) -> None:
    from .schedule import _compile, arikan_structure
    if node.kind in ("rate1", "spc"):
        plain = _compile(arikan_structure(node.size), frozen, node.offset, node.depth, False, 0)
        node.plain = _shift(plain, node.offset)
    for child in node.children:
        _attach_plain(child, frozen)


def _shift(node: DecodeNode, offset: int) -> DecodeNode:
    # compiled against the full mask at ``offset``; decode it on a node-local u
    node.offset -= offset
    for child in node.children:
        _shift(child, offset)
    return node


def fast_ssc_decode(channel_llrs, spec: CodeSpec, schedule: Optional[DecodeSchedule] = None
                    ) -> Tuple[np.ndarray, np.ndarray]:
    """Fast-SSC with Rate-0, Rate-1, repetition and SPC nodes; returns ``(u_hat, x_hat)``."""
    schedule = _resolve(spec, schedule, True)
    if not schedule.specialized:
        raise CodeError("Fast-SSC needs a schedule compiled with specialized nodes")
    if not getattr(schedule, "_plain_attached", False):
        _attach_plain(schedule.root, schedule.frozen_mask)
        schedule._plain_attached = True
    llr, single = _prepare(channel_llrs, schedule)
    u = np.zeros(llr.shape, dtype=np.uint8)
    x = _fast(schedule.root, llr, u)
    return (u[0], x[0]) if single else (u, x)


# -- successive cancellation list ------------------------------------------------

class _Buf:
    """Per-path storage; ``ptr[b, l]`` is the slot holding path ``l`` of frame ``b``."""

    __slots__ = ("data", "ptr", "identity")

    def __init__(self, data, ptr, identity):
        self.data = data
        self.ptr = ptr
        self.identity = identity

    def read(self) -> np.ndarray:
        if self.identity:
            return self.data
        return np.take_along_axis(self.data, self.ptr[:, :, None], axis=1)


@dataclass
class SclResult:
    u_hat: np.ndarray
    crc_pass: np.ndarray
    path_metrics: np.ndarray
    paths: np.ndarray


class _ListDecoder:
    def __init__(self, batch: int, list_size: int, n: int):
        self.batch, self.list_size = batch, list_size
        self.live: List[_Buf] = []
        self.pm = np.full((batch, list_size), np.inf)
        self.pm[:, 0] = 0.0
        self.trace: List[Tuple[int, np.ndarray, np.ndarray]] = []
        self.n = n
        self._eye = np.broadcast_to(np.arange(list_size), (batch, list_size))

    def hold(self, data) -> _Buf:
        buf = _Buf(data, self._eye, True)
        self.live.append(buf)
        return buf

    def release(self, *bufs) -> None:
        for buf in bufs:
            for i in range(len(self.live) - 1, -1, -1):
                if self.live[i] is buf:
                    del self.live[i]
                    break

    def fork(self, parent: np.ndarray) -> None:
        for buf in self.live:
            buf.ptr = np.take_along_axis(buf.ptr, parent, axis=1)
            buf.identity = False

    def leaf(self, node: DecodeNode, alpha: np.ndarray) -> np.ndarray:
        if node.n_info == 0:
            self.pm += np.maximum(-alpha, 0.0)
            return np.zeros(alpha.shape + (1,), dtype=np.uint8)
        hard = (alpha <= 0).astype(np.uint8)
        cand = np.stack([self.pm, self.pm + np.abs(alpha)], axis=2).reshape(self.batch, -1)
        order = np.argsort(cand, axis=1, kind="stable")[:, :self.list_size]
        parent = order // 2
        bits = np.take_along_axis(hard, parent, axis=1) ^ (order % 2).astype(np.uint8)
        self.pm = np.take_along_axis(cand, order, axis=1)
        self.fork(parent)
        self.trace.append((node.offset, bits, parent))
        return bits[:, :, None]

    def decode(self, node: DecodeNode, inbuf: _Buf) -> _Buf:
        if node.n_info == 0:
            # a fully frozen subtree adds relu(-alpha) over its input, bit-exact to visiting every leaf
            alpha = inbuf.read()
            self.pm += np.maximum(-alpha, 0.0).sum(axis=2)
            self.release(inbuf)
            return self.hold(np.zeros(alpha.shape, dtype=np.uint8))
        if node.kind == "leaf":
            alpha = inbuf.read()[:, :, 0]
            self.release(inbuf)
            return self.hold(self.leaf(node, alpha))
        if node.kind == "binary":
            h = node.size // 2
            llr = inbuf.read()
            x0 = self.decode(node.children[0], self.hold(f_op(llr[..., :h], llr[..., h:])))
            llr = inbuf.read()
            self.release(inbuf)
            xl = x0.read()
            x1 = self.decode(node.children[1], self.hold(g_op(llr[..., :h], llr[..., h:], xl)))
            xl, xr = x0.read(), x1.read()
            self.release(x0, x1)
            return self.hold(np.concatenate([xl ^ xr, xr], axis=2))
        if node.kind == "ternary":
            t = node.size // 3

            def parts():
                llr = inbuf.read()
                return llr[..., :t], llr[..., t:2 * t], llr[..., 2 * t:]

            xl_buf = self.decode(node.children[0], self.hold(ternary_branch_ops(*parts())[0]))
            xc_buf = self.decode(node.children[1], self.hold(ternary_branch_ops(*parts(), xl_buf.read())[1]))
            right = ternary_branch_ops(*parts(), xl_buf.read(), xc_buf.read())[2]
            self.release(inbuf)
            xr_buf = self.decode(node.children[2], self.hold(right))
            out = h3(xl_buf.read(), xc_buf.read(), xr_buf.read())
            self.release(xl_buf, xc_buf, xr_buf)
            return self.hold(out)
        top, bottom = node.children
        j = node.junctions
        llr = inbuf.read()
        lt = llr[..., :top.size].copy()
        lt[..., :j] = f_op(lt[..., :j], llr[..., top.size:top.size + j])
        xt_buf = self.decode(top, self.hold(lt))
        llr = inbuf.read()
        self.release(inbuf)
        lb = llr[..., top.size:].copy()
        lb[..., :j] = g_op(llr[..., :j], lb[..., :j], xt_buf.read()[..., :j])
        xb_buf = self.decode(bottom, self.hold(lb))
        xt, xb = xt_buf.read(), xb_buf.read()
        self.release(xt_buf, xb_buf)
        x = np.concatenate([xt, xb], axis=2)
        x[..., :j] ^= xb[..., :j]
        return self.hold(x)

    def paths(self) -> np.ndarray:
        u = np.zeros((self.batch, self.list_size, self.n), dtype=np.uint8)
        cur = np.array(self._eye)
        for offset, bits, parent in reversed(self.trace):
            u[:, :, offset] = np.take_along_axis(bits, cur, axis=1)
            cur = np.take_along_axis(parent, cur, axis=1)
        return u


def scl_decode_batch(channel_llrs, spec: CodeSpec, schedule: Optional[DecodeSchedule] = None,
                     list_size: int = 8, use_crc: Optional[bool] = None) -> SclResult:
    """CRC-aided SCL returning every surviving path alongside the selected one."""
    if list_size < 1:
        raise CodeError("list size must be at least 1")
    schedule = _resolve(spec, schedule, False)
    llr, _ = _prepare(channel_llrs, schedule)
    batch, n = llr.shape
    dec = _ListDecoder(batch, list_size, n)
    root = _Buf(llr[:, None, :], np.zeros((batch, list_size), dtype=np.int64), False)
    dec.live.append(root)
    dec.decode(schedule.root, root)
    paths = dec.paths()
    pm = dec.pm
    use_crc = spec.crc_width > 0 if use_crc is None else use_crc
    if use_crc and spec.crc_width:
        payload_pos, crc_pos = spec.info_positions()
        ok = np.all(crc16_batch(paths[:, :, payload_pos]) == paths[:, :, crc_pos], axis=2) & np.isfinite(pm)
    else:
        ok = np.isfinite(pm)
    masked = np.where(ok, pm, np.inf)
    chosen = np.where(ok.any(axis=1), np.argmin(masked, axis=1), np.argmin(pm, axis=1))
    rows = np.arange(batch)
    crc_pass = ok[rows, chosen] if use_crc and spec.crc_width else np.ones(batch, dtype=bool)
    return SclResult(paths[rows, chosen], crc_pass, pm, paths)


def scl_decode(channel_llrs, spec: CodeSpec, schedule: Optional[DecodeSchedule] = None,
               list_size: int = 8) -> np.ndarray:
    """SCL decoding; with ``spec.crc_width`` set, the best CRC-passing path wins."""
    single = np.ndim(channel_llrs) == 1
    result = scl_decode_batch(channel_llrs, spec, schedule, list_size)
    return result.u_hat[0] if single else result.u_hat
