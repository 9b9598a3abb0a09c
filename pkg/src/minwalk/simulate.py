"""Monte Carlo engines and the deterministic ensemble runner.

Two engines produce the same law:

* ``naive`` follows the memory mechanism literally: it keeps every past
  increment (packed bits), picks a uniform past step, and flips a p- or
  q-coin depending on what it finds. Step ``j`` consumes draws ``2(j-1)``
  (index; unused at ``j = 1``) and ``2(j-1) + 1`` (coin).
* ``reduced`` keeps only the position and flips a coin with probability
  ``q + alpha * x / k``. Step ``j`` consumes draw ``j - 1``.

Both step right iff ``u < probability``.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, Iterable, Optional, Sequence, Tuple

import numba as nb
import numpy as np

from .errors import CapExceeded
from .model import ModelParams, validate
from .rng import RngSpec, nb_counter_word, nb_uniform, stream_keys

NAIVE_CAP = 1 << 20
N_BATCHES = 50
CHUNK_REPLICAS = 4096
THREADS_ENV = "MINWALK_THREADS"
ENGINES = ("reduced", "naive")


def default_workers() -> int:
    env = os.environ.get(THREADS_ENV)
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def pow2_checkpoints(n: int, start: int = 1) -> Tuple[int, ...]:
    """Powers of two in ``[start, n]``, plus ``n`` itself if it is not one."""
    if n < 1:
        raise ValueError("n must be >= 1")
    out = []
    c = 1
    while c <= n:
        if c >= start:
            out.append(c)
        c <<= 1
    if not out or out[-1] != n:
        out.append(n)
    return tuple(out)


def _normalize_checkpoints(n: int, checkpoints: Optional[Iterable[int]]) -> np.ndarray:
    if checkpoints is None:
        cps = pow2_checkpoints(n)
    else:
        cps = sorted(set(int(c) for c in checkpoints))
    if not cps or cps[0] < 1 or cps[-1] > n:
        raise ValueError(f"checkpoints must be a nonempty subset of [1, {n}]")
    return np.asarray(cps, dtype=np.int64)


@nb.njit(nogil=True, cache=True)
def _reduced_kernel(keys, n, p, q, s, checkpoints, out):
    nrep = keys.shape[0]
    alpha = p - q
    x = np.zeros(nrep, np.int64)
    word = nb_counter_word(0)
    for r in range(nrep):
        if nb_uniform(keys[r], word) < s:
            x[r] = 1
    ci = 0
    if checkpoints[0] == 1:
        out[:, 0] = x
        ci = 1
    ncp = checkpoints.shape[0]
    for k in range(1, n):
        word = nb_counter_word(k)
        fk = float(k)
        for r in range(nrep):
            if nb_uniform(keys[r], word) < q + alpha * x[r] / fk:
                x[r] += 1
        if ci < ncp and checkpoints[ci] == k + 1:
            out[:, ci] = x
            ci += 1


@nb.njit(nogil=True, cache=True)
def _naive_kernel(keys, n, p, q, s, checkpoints, out):
    nrep = keys.shape[0]
    ncp = checkpoints.shape[0]
    bits = np.zeros((n + 7) // 8, np.uint8)
    for r in range(nrep):
        key = keys[r]
        bits[:] = 0
        x = 0
        if nb_uniform(key, nb_counter_word(1)) < s:
            x = 1
            bits[0] = 1
        ci = 0
        if checkpoints[0] == 1:
            out[r, 0] = x
            ci = 1
        for k in range(1, n):
            idx = int(nb_uniform(key, nb_counter_word(2 * k)) * k)
            if idx >= k:
                idx = k - 1
            remembered = (bits[idx >> 3] >> (idx & 7)) & 1
            prob = p if remembered == 1 else q
            if nb_uniform(key, nb_counter_word(2 * k + 1)) < prob:
                x += 1
                bits[k >> 3] |= np.uint8(1 << (k & 7))
            if ci < ncp and checkpoints[ci] == k + 1:
                out[r, ci] = x
                ci += 1


def _run_chunk(engine, keys, n, params, checkpoints):
    out = np.zeros((keys.shape[0], checkpoints.shape[0]), dtype=np.int64)
    kernel = _reduced_kernel if engine == "reduced" else _naive_kernel
    kernel(keys, n, params.p, params.q, params.s, checkpoints, out)
    return out


def _check_engine(engine: str, n: int, naive_cap: int) -> None:
    if engine not in ENGINES:
        raise ValueError(f"unknown engine {engine!r}; choose one of {ENGINES}")
    if engine == "naive" and n > naive_cap:
        raise CapExceeded(f"n={n} exceeds naive engine cap {naive_cap}")


@dataclass(frozen=True)
class TrajectorySeries:
    checkpoints: Tuple[int, ...]
    positions: np.ndarray = field(repr=False)
    replica_id: int
    seed_fingerprint: str

    def __post_init__(self):
        self.positions.setflags(write=False)


def _simulate(engine, params, n, rng, checkpoints, naive_cap=NAIVE_CAP):
    params = validate(params)
    if n < 1:
        raise ValueError("n must be >= 1")
    _check_engine(engine, n, naive_cap)
    cps = _normalize_checkpoints(n, checkpoints)
    keys = np.array([rng.key], dtype=np.uint64)
    pos = _run_chunk(engine, keys, n, params, cps)[0]
    return TrajectorySeries(tuple(int(c) for c in cps), pos, rng.stream_id, rng.fingerprint)


def simulate_reduced(params: ModelParams, n: int, rng: RngSpec, checkpoints=None) -> TrajectorySeries:
    """One path using the position-only chain (one uniform per step)."""
    return _simulate("reduced", params, n, rng, checkpoints)


def simulate_naive(
    params: ModelParams, n: int, rng: RngSpec, checkpoints=None, cap: int = NAIVE_CAP
) -> TrajectorySeries:
    """One path using the literal memory-sampling mechanism (two uniforms per step)."""
    return _simulate("naive", params, n, rng, checkpoints, naive_cap=cap)


# --------------------------------------------------------------------------
# streaming statistics

_LIMB = 24


@nb.njit(cache=True)
def _limb_sums(values, batch, nbatch):
    # exact power sums split into 24-bit limbs; valid for values < 2**24 and
    # fewer than 2**15 values per batch
    acc = np.zeros((nbatch, 8), np.uint64)
    mask = np.uint64((1 << 24) - 1)
    for i in range(values.shape[0]):
        v = np.uint64(values[i])
        b = batch[i]
        v2 = v * v
        hi = v2 >> np.uint64(24)
        lo = v2 & mask
        acc[b, 0] += np.uint64(1)
        acc[b, 1] += v
        acc[b, 2] += v2
        acc[b, 3] += v * hi
        acc[b, 4] += v * lo
        acc[b, 5] += hi * hi
        acc[b, 6] += np.uint64(2) * hi * lo
        acc[b, 7] += lo * lo
    return acc


def _batch_power_sums(values: np.ndarray, replica_ids: np.ndarray, nbatch: int):
    """Per-batch ``(count, S1, S2, S3, S4)`` as exact Python numbers."""
    batch = (replica_ids % nbatch).astype(np.int64)
    if np.issubdtype(values.dtype, np.integer):
        counts = np.bincount(batch, minlength=nbatch)
        if values.size and values.min() >= 0 and values.max() < (1 << _LIMB) and counts.max() < (1 << 15):
            acc = _limb_sums(values.astype(np.int64), batch, nbatch)
            out = []
            for row in acc.tolist():
                c, s1, s2, s3h, s3l, s4h, s4m, s4l = row
                s3 = (s3h << _LIMB) + s3l
                s4 = (s4h << (2 * _LIMB)) + (s4m << _LIMB) + s4l
                out.append((c, s1, s2, s3, s4))
            return out
        out = [[0, 0, 0, 0, 0] for _ in range(nbatch)]
        for v, b in zip(values.tolist(), batch.tolist()):
            v2 = v * v
            row = out[b]
            row[0] += 1
            row[1] += v
            row[2] += v2
            row[3] += v2 * v
            row[4] += v2 * v2
        return [tuple(r) for r in out]
    out = []
    vals = values.astype(float)
    for b in range(nbatch):
        vb = vals[batch == b]
        out.append((int(vb.size),) + tuple(math.fsum(vb**k) for k in range(1, 5)))
    return out


@dataclass(frozen=True)
class EnsembleStats:
    """Mergeable power sums of ``X`` at one checkpoint.

    ``batches`` holds ``(count, S1, S2, S3, S4)`` for each residue class of
    the replica id modulo ``N_BATCHES``; totals are their sums. For integer
    positions every sum is an exact Python int, so merging is exactly
    associative and commutative.
    """

    checkpoint: int
    count: int
    power_sums: Tuple
    minimum: float
    maximum: float
    batches: Tuple[Tuple, ...] = field(repr=False)

    @classmethod
    def from_values(cls, checkpoint: int, values, replica_ids=None, nbatch: int = N_BATCHES):
        values = np.asarray(values)
        if values.size == 0:
            raise ValueError("no values")
        if replica_ids is None:
            replica_ids = np.arange(values.size)
        batches = tuple(_batch_power_sums(values, np.asarray(replica_ids), nbatch))
        count = sum(b[0] for b in batches)
        sums = tuple(sum(b[k] for b in batches) for k in range(1, 5))
        lo, hi = values.min(), values.max()
        if np.issubdtype(values.dtype, np.integer):
            lo, hi = int(lo), int(hi)
        else:
            lo, hi = float(lo), float(hi)
        return cls(int(checkpoint), int(count), sums, lo, hi, batches)

    def merge(self, other: "EnsembleStats") -> "EnsembleStats":
        if other.checkpoint != self.checkpoint:
            raise ValueError("cannot merge stats from different checkpoints")
        if len(other.batches) != len(self.batches):
            raise ValueError("batch layouts differ")
        batches = tuple(tuple(a + b for a, b in zip(x, y)) for x, y in zip(self.batches, other.batches))
        return EnsembleStats(
            self.checkpoint,
            self.count + other.count,
            tuple(a + b for a, b in zip(self.power_sums, other.power_sums)),
            min(self.minimum, other.minimum),
            max(self.maximum, other.maximum),
            batches,
        )

    __add__ = merge

    @property
    def mean(self) -> float:
        return self.power_sums[0] / self.count

    def central_moment(self, order: int) -> float:
        from .stats import central_moments_from_sums

        return central_moments_from_sums((self.count,) + tuple(self.power_sums))[order]

    @property
    def variance(self) -> float:
        """Unbiased sample variance."""
        if self.count < 2:
            return 0.0
        return self.central_moment(2) * self.count / (self.count - 1)


@dataclass
class EnsembleResult:
    params: ModelParams
    n: int
    replicas: int
    seed: int
    engine: str
    checkpoints: Tuple[int, ...]
    positions: np.ndarray = field(repr=False)

    @cached_property
    def stats(self) -> Dict[int, EnsembleStats]:
        ids = np.arange(self.replicas)
        return {c: EnsembleStats.from_values(c, self.positions[:, i], ids) for i, c in enumerate(self.checkpoints)}

    def at(self, checkpoint: int) -> np.ndarray:
        return self.positions[:, self.checkpoints.index(checkpoint)]


def run_ensemble(
    params: ModelParams,
    n: int,
    replicas: int,
    seed: int,
    checkpoints: Optional[Sequence[int]] = None,
    engine: str = "reduced",
    workers: Optional[int] = None,
    naive_cap: int = NAIVE_CAP,
) -> EnsembleResult:
    """Simulate ``replicas`` independent paths, replica ``r`` on stream ``(seed, r)``.

    Replicas are cut into fixed-size chunks that do not depend on
    ``workers``; chunk outputs land in their replica rows, so the result is
    bit-identical for any degree of parallelism.
    """
    params = validate(params)
    if replicas < 1:
        raise ValueError("replicas must be >= 1")
    if n < 1:
        raise ValueError("n must be >= 1")
    _check_engine(engine, n, naive_cap)
    cps = _normalize_checkpoints(n, checkpoints)
    workers = default_workers() if workers is None else max(1, int(workers))

    keys = stream_keys(seed, range(replicas))
    positions = np.empty((replicas, cps.shape[0]), dtype=np.int64)
    bounds = [(lo, min(lo + CHUNK_REPLICAS, replicas)) for lo in range(0, replicas, CHUNK_REPLICAS)]

    def work(bound):
        lo, hi = bound
        positions[lo:hi] = _run_chunk(engine, keys[lo:hi], n, params, cps)

    if workers == 1 or len(bounds) == 1:
        for b in bounds:
            work(b)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(work, bounds))
    return EnsembleResult(params, n, replicas, seed, engine, tuple(int(c) for c in cps), positions)
