"""BPSK over AWGN and Monte Carlo frame-error-rate measurement.

Random numbers come from numpy's ``PCG64`` bit generator; Gaussian samples
use numpy's ziggurat ``standard_normal``.  Every (SNR point, worker, round)
triple draws from its own ``SeedSequence`` child, so a run is reproducible
for a fixed master seed and worker count, independent of scheduling.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence

import numpy as np

from .core import SAT, CodeError, CodeSpec
from .construction import construct_code
from .crc import crc16_append, crc16_batch, crc16_check, crc16_remainder
from .decoder import fast_ssc_decode, sc_decode, scl_decode
from .encoder import encode, receive, transmit

__all__ = ["ChannelConfig", "FerPoint", "StopRule", "awgn_llrs", "noise_variance", "make_rng",
           "run_fer", "simulate_frames", "code_for", "crc16_append", "crc16_check",
           "crc16_remainder", "crc16_batch", "snr_at_fer", "DECODERS"]

DECODERS = ("sc", "fast-ssc", "scl")


def noise_variance(ebno_db: float, rate: float, modulation_order: int = 1) -> float:
    return 1.0 / (2.0 * rate * modulation_order * 10.0 ** (ebno_db / 10.0))


@dataclass(frozen=True)
class ChannelConfig:
    ebno_db: float
    code_rate: float
    modulation_order: int = 1
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.code_rate <= 1:
            raise CodeError(f"code rate {self.code_rate} outside (0, 1]")
        if self.modulation_order < 1:
            raise CodeError("modulation order must be positive")

    @property
    def sigma2(self) -> float:
        return noise_variance(self.ebno_db, self.code_rate, self.modulation_order)


@dataclass(frozen=True)
class StopRule:
    max_errors: int = 100
    max_frames: int = 10_000_000

    def __post_init__(self):
        if self.max_errors < 1 or self.max_frames < 1:
            raise ValueError("stop rule limits must be positive")

    def done(self, frames: int, errors: int) -> bool:
        return errors >= self.max_errors or frames >= self.max_frames


@dataclass(frozen=True)
class FerPoint:
    ebno_db: float
    frames: int
    errors: int

    @property
    def fer(self) -> float:
        return self.errors / self.frames if self.frames else 0.0

    @property
    def std_error(self) -> float:
        p = self.fer
        return math.sqrt(p * (1 - p) / self.frames) if self.frames else 0.0


def make_rng(seed) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def awgn_llrs(x, config: ChannelConfig, rng: np.random.Generator, sat: float = SAT) -> np.ndarray:
    """BPSK-map ``x`` (0 -> +1), add N(0, sigma^2) noise, return 2y/sigma^2 clipped to +-sat."""
    s = 1.0 - 2.0 * np.asarray(x, dtype=float)
    sigma2 = config.sigma2
    y = s + math.sqrt(sigma2) * rng.standard_normal(s.shape)
    return np.clip(2.0 * y / sigma2, -sat, sat)


def code_for(kind: str, n: int, k: int, ebno_db: float, *, ascending: bool = True,
             crc_width: int = 16) -> CodeSpec:
    """GA design at the simulated SNR; ``k`` counts payload plus CRC bits."""
    return construct_code(kind, n, k, ebno_db, ascending=ascending, crc_width=crc_width)


def _decode(llrs, spec: CodeSpec, decoder: str, list_size: int) -> np.ndarray:
    if decoder == "sc":
        return sc_decode(llrs, spec)[0]
    if decoder == "fast-ssc":
        return fast_ssc_decode(llrs, spec)[0]
    if decoder == "scl":
        return scl_decode(llrs, spec, list_size=list_size)
    raise CodeError(f"unknown decoder {decoder!r}; choose from {', '.join(DECODERS)}")


def simulate_frames(spec: CodeSpec, ebno_db: float, frames: int, rng: np.random.Generator,
                    decoder: str = "scl", list_size: int = 8) -> int:
    """Run ``frames`` frames through the full chain and return the number of payload errors."""
    payload_pos, crc_pos = spec.info_positions()
    payload = rng.integers(0, 2, size=(frames, payload_pos.size), dtype=np.uint8)
    u = np.zeros((frames, spec.n_native), dtype=np.uint8)
    u[:, payload_pos] = payload
    if spec.crc_width:
        u[:, crc_pos] = crc16_batch(payload)
    x = transmit(encode(u, spec), spec)
    config = ChannelConfig(ebno_db, spec.rate)
    llrs = receive(awgn_llrs(x, config, rng), spec)
    u_hat = _decode(llrs, spec, decoder, list_size)
    return int(np.any(u_hat[:, payload_pos] != payload, axis=1).sum())


def _job(args) -> int:
    spec, ebno_db, frames, seed_seq, decoder, list_size = args
    return simulate_frames(spec, ebno_db, frames, make_rng(seed_seq), decoder, list_size)


def run_fer(kind: str, n: int, k: int, ebno_list: Sequence[float], decoder: str = "scl",
            list_size: int = 8, stop: StopRule = StopRule(), seed: int = 0, workers: int = 1,
            crc_width: int = 16, ascending: bool = True, batch_size: Optional[int] = None,
            progress: Optional[Callable[[FerPoint], None]] = None) -> List[FerPoint]:
    """Frame error rate for each SNR, re-running the GA design at every point.

    Frames are processed in rounds of ``workers * batch_size``; the stop rule
    is checked between rounds, and the final round is trimmed so no more than
    ``stop.max_frames`` frames are simulated.
    """
    if decoder not in DECODERS:
        raise CodeError(f"unknown decoder {decoder!r}; choose from {', '.join(DECODERS)}")
    if workers < 1:
        raise CodeError("workers must be at least 1")
    if batch_size is None:
        batch_size = 128 if decoder == "scl" else 1000
    pool = ProcessPoolExecutor(workers) if workers > 1 else None
    points = []
    try:
        for point_index, ebno_db in enumerate(ebno_list):
            spec = code_for(kind, n, k, ebno_db, ascending=ascending, crc_width=crc_width)
            frames = errors = 0
            round_index = 0
            while not stop.done(frames, errors):
                jobs = []
                budget = stop.max_frames - frames
                for w in range(workers):
                    size = min(batch_size, budget)
                    budget -= size
                    if size <= 0:
                        break
                    seq = np.random.SeedSequence(seed, spawn_key=(point_index, w, round_index))
                    jobs.append((spec, float(ebno_db), size, seq, decoder, list_size))
                counts = list(pool.map(_job, jobs)) if pool else [_job(j) for j in jobs]
                frames += sum(j[2] for j in jobs)
                errors += sum(counts)
                round_index += 1
            point = FerPoint(float(ebno_db), frames, errors)
            points.append(point)
            if progress:
                progress(point)
    finally:
        if pool:
            pool.shutdown()
    return points


def snr_at_fer(points: Sequence[FerPoint], target: float) -> Optional[float]:
    """SNR where log10(FER) crosses ``target``, by linear interpolation between grid points."""
    pts = sorted(points, key=lambda p: p.ebno_db)
    for a, b in zip(pts, pts[1:]):
        if a.fer >= target >= b.fer and a.errors and b.errors and a.fer != b.fer:
            la, lb, lt = math.log10(a.fer), math.log10(b.fer), math.log10(target)
            return a.ebno_db + (la - lt) / (la - lb) * (b.ebno_db - a.ebno_db)
    return None

