"""Collisional Metropolis sampling of the normalized Witten index.

Each Monte Carlo run is one walker over eigenstates. A collision proposes
a uniformly random eigenstate from the walker's pool and accepts it with
probability min(1, e^{-beta dE}), which drives the pool population to the
Gibbs distribution. Two pool shapes are implemented:

  GCA  - one pool holding every eigenstate of every chain length in the
         sector's window; walkers hop across lengths freely.
  QGCA - one pool per chain length (the chain's own 2**L eigenstates);
         walkers never change length and each chain thermalizes alone.

At every iteration the index estimate is the parity average over walkers
currently inside the target sector (n_d = N - L - 1). Uniform proposals
are symmetric, so no proposal correction is needed, and they make every
pool state reachable in one step.

Reproducibility: walkers are partitioned into fixed-size blocks; each
block consumes its own counter-based random stream seeded by (base seed,
protocol tag, N, first run index of the block). Results are folded in
block order, so outputs are bit-identical for any thread count.
"""

from __future__ import annotations

import json
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .basis import decompose_n_sector
from .model import ModelParams
from .spectra import FullChainSpectrum
from .susy import _full_chain

PROTOCOL_GCA = "gca"
PROTOCOL_QGCA = "qgca"

BLOCK_SIZE = 8192


@dataclass(frozen=True)
class ProtocolConfig:
    protocol: str
    N: int
    beta: float
    iterations: int = 500
    runs: int = 50000
    base_seed: int = 1
    params: ModelParams = field(default_factory=ModelParams)

    def __post_init__(self):
        if self.protocol not in (PROTOCOL_GCA, PROTOCOL_QGCA):
            raise ValueError(f"unknown protocol {self.protocol!r}")
        if self.iterations < 1 or self.runs < 1:
            raise ValueError("iterations and runs must be >= 1")


@dataclass(frozen=True)
class WittenTrace:
    """Per-iteration estimates plus a steady-state window summary.

    estimate[i] is NaN when no walker was in the sector at iteration i
    (a gap, not a zero). The window covers the last 20% of iterations;
    window_stderr treats each walker's window contribution as one cluster,
    which absorbs the strong within-walker autocorrelation that a naive
    per-sample error estimate would ignore.
    """

    config: ProtocolConfig
    estimate: np.ndarray
    stderr: np.ndarray
    legitimate_count: np.ndarray
    window_estimate: float
    window_stderr: float
    window_legit: int

    def __post_init__(self):
        n = self.config.iterations
        if not (len(self.estimate) == len(self.stderr) == len(self.legitimate_count) == n):
            raise ValueError("trace arrays must have one entry per iteration")


def metropolis_accept(delta_e, beta: float, u):
    """Accept iff u < min(1, e^{-beta dE}); vectorized over delta_e and u.

    Written as u < e^{-beta max(dE, 0)} to avoid overflow for downhill
    moves; the two forms are identical for u in [0, 1).
    """
    delta_e = np.asarray(delta_e, dtype=float)
    u = np.asarray(u, dtype=float)
    return u < np.exp(-beta * np.maximum(delta_e, 0.0))


def seed_stream(base_seed: int, tag: str, N: int, run_index: int) -> np.random.Generator:
    """Independent reproducible stream for one (protocol, sector, run) task."""
    ss = np.random.SeedSequence(
        entropy=int(base_seed),
        spawn_key=(zlib.crc32(tag.encode()), int(N), int(run_index)),
    )
    return np.random.Generator(np.random.Philox(ss))


@dataclass(frozen=True)
class _Pool:
    energies: np.ndarray
    parities: np.ndarray
    legit: np.ndarray


def _chain_pool(chain: FullChainSpectrum, target_nd: int) -> _Pool:
    e, p, m = [], [], []
    for nd, block in enumerate(chain.blocks):
        k = len(block.energies)
        e.append(block.energies)
        p.append(np.full(k, -1.0 if nd % 2 else 1.0))
        m.append(np.full(k, nd == target_nd))
    return _Pool(np.concatenate(e), np.concatenate(p), np.concatenate(m))


def _merge(pools: list[_Pool]) -> _Pool:
    return _Pool(
        np.concatenate([p.energies for p in pools]),
        np.concatenate([p.parities for p in pools]),
        np.concatenate([p.legit for p in pools]),
    )


def _walk_block(pool: _Pool, beta: float, iterations: int, window_start: int,
                rng: np.random.Generator, size: int):
    """One block of walkers, full trajectory, deterministic draw order."""
    dim = len(pool.energies)
    cur = rng.integers(0, dim, size)
    counts = np.zeros(iterations, dtype=np.int64)
    sums = np.zeros(iterations)
    wsum = np.zeros(size)
    wcnt = np.zeros(size, dtype=np.int64)
    for t in range(iterations):
        prop = rng.integers(0, dim, size)
        u = rng.random(size)
        accept = metropolis_accept(pool.energies[prop] - pool.energies[cur], beta, u)
        cur = np.where(accept, prop, cur)
        inside = pool.legit[cur]
        n = int(inside.sum())
        counts[t] = n
        if n:
            signed = np.where(inside, pool.parities[cur], 0.0)
            sums[t] = signed.sum()
            if t >= window_start:
                wsum += signed
                wcnt += inside
    return counts, sums, wsum, wcnt


def _run_pools(config: ProtocolConfig, pools: list[tuple[str, _Pool]],
               threads: int) -> WittenTrace:
    """Drive `config.runs` walkers over each named pool and fold the results."""
    iters = config.iterations
    window_start = iters - max(1, iters // 5)

    tasks = []
    for tag, pool in pools:
        for start in range(0, config.runs, BLOCK_SIZE):
            size = min(BLOCK_SIZE, config.runs - start)
            tasks.append((tag, pool, start, size))

    def job(task):
        tag, pool, start, size = task
        rng = seed_stream(config.base_seed, tag, config.N, start)
        return _walk_block(pool, config.beta, iters, window_start, rng, size)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            results = list(ex.map(job, tasks))
    else:
        results = [job(t) for t in tasks]

    counts = np.zeros(iters, dtype=np.int64)
    sums = np.zeros(iters)
    wsums, wcnts = [], []
    for cnt, s, ws, wc in results:  # fixed task order: deterministic fold
        counts += cnt
        sums += s
        wsums.append(ws)
        wcnts.append(wc)
    wsum = np.concatenate(wsums)
    wcnt = np.concatenate(wcnts)

    with np.errstate(invalid="ignore", divide="ignore"):
        estimate = np.where(counts > 0, sums / np.maximum(counts, 1), np.nan)
        # parities are +-1: sample variance = (n - s^2/n)/(n-1)
        var = (counts - sums**2 / np.maximum(counts, 1)) / np.maximum(counts - 1, 1)
        stderr = np.where(
            counts > 1, np.sqrt(np.maximum(var, 0.0) / np.maximum(counts, 1)),
            np.where(counts == 1, 0.0, np.nan),
        )

    window = estimate[window_start:]
    valid = ~np.isnan(window)
    window_estimate = float(window[valid].mean()) if valid.any() else float("nan")
    total = int(wcnt.sum())
    if total > 0:
        ratio = wsum.sum() / total
        resid = wsum - ratio * wcnt
        window_stderr = float(np.sqrt((resid**2).sum()) / total)
    else:
        window_stderr = float("nan")

    return WittenTrace(
        config=config,
        estimate=estimate,
        stderr=stderr,
        legitimate_count=counts,
        window_estimate=window_estimate,
        window_stderr=window_stderr,
        window_legit=total,
    )


def run_gca(config: ProtocolConfig, cache_dir=None, threads: int = 1) -> WittenTrace:
    """Walkers over the union pool of all chain lengths in the sector window."""
    if config.protocol != PROTOCOL_GCA:
        raise ValueError("config.protocol must be 'gca'")
    return _run_pools(config, [("gca", _gca_pool(config, cache_dir))], threads)


def _gca_pool(config: ProtocolConfig, cache_dir) -> _Pool:
    pools = []
    for key in decompose_n_sector(config.N).members:
        chain = _full_chain(key.L, config.params, cache_dir)
        pools.append(_chain_pool(chain, key.n_d))
    if not pools:
        raise ValueError(f"empty pool for N={config.N}")
    return _merge(pools)


def gca_occupancy(config: ProtocolConfig, cache_dir=None, threads: int = 1,
                  mode: str = "final") -> tuple[np.ndarray, np.ndarray]:
    """Occupancy counts per pooled eigenstate -> (counts, pool energies).

    Replays the exact trajectories of run_gca (same streams, same draw
    order). mode 'final' counts each walker's state at the last iteration
    only: walkers are independent, so those counts are an i.i.d. sample of
    the long-run occupation, fit for distribution tests. mode 'visits'
    accumulates every visit including the initial state, for reachability
    checks; visit counts are autocorrelated along a trajectory.
    """
    if config.protocol != PROTOCOL_GCA:
        raise ValueError("config.protocol must be 'gca'")
    if mode not in ("final", "visits"):
        raise ValueError(f"unknown mode {mode!r}")
    pool = _gca_pool(config, cache_dir)
    dim = len(pool.energies)

    tasks = [
        (start, min(BLOCK_SIZE, config.runs - start))
        for start in range(0, config.runs, BLOCK_SIZE)
    ]

    def job(task):
        start, size = task
        rng = seed_stream(config.base_seed, "gca", config.N, start)
        cur = rng.integers(0, dim, size)
        visits = np.zeros(dim, dtype=np.int64)
        if mode == "visits":
            visits += np.bincount(cur, minlength=dim)
        for _ in range(config.iterations):
            prop = rng.integers(0, dim, size)
            u = rng.random(size)
            accept = metropolis_accept(
                pool.energies[prop] - pool.energies[cur], config.beta, u
            )
            cur = np.where(accept, prop, cur)
            if mode == "visits":
                visits += np.bincount(cur, minlength=dim)
        if mode == "final":
            visits += np.bincount(cur, minlength=dim)
        return visits

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            results = list(ex.map(job, tasks))
    else:
        results = [job(t) for t in tasks]
    counts = np.zeros(dim, dtype=np.int64)
    for v in results:
        counts += v
    return counts, pool.energies.copy()


def run_qgca(config: ProtocolConfig, cache_dir=None, threads: int = 1) -> WittenTrace:
    """Independent fixed-length walkers, one pool per member chain.

    The estimate pools in-sector walkers across all chains, so it tracks
    the parity histogram a per-chain measurement protocol accumulates.
    """
    if config.protocol != PROTOCOL_QGCA:
        raise ValueError("config.protocol must be 'qgca'")
    pools = []
    for key in decompose_n_sector(config.N).members:
        chain = _full_chain(key.L, config.params, cache_dir)
        pools.append((f"qgca:L{key.L}", _chain_pool(chain, key.n_d)))
    return _run_pools(config, pools, threads)


def run_protocol(config: ProtocolConfig, cache_dir=None, threads: int = 1) -> WittenTrace:
    if config.protocol == PROTOCOL_GCA:
        return run_gca(config, cache_dir, threads)
    return run_qgca(config, cache_dir, threads)


def write_trace_csv(trace: WittenTrace, path: str | Path, extra_meta: dict | None = None) -> None:
    """CSV with a JSON metadata header line; floats in round-trip form."""
    cfg = trace.config
    meta = {
        "protocol": cfg.protocol,
        "N": cfg.N,
        "beta": cfg.beta,
        "params": {"J": cfg.params.J, "Delta": cfg.params.Delta, "h": cfg.params.h},
        "base_seed": cfg.base_seed,
        "runs": cfg.runs,
        "iterations": cfg.iterations,
        "window_estimate": None if np.isnan(trace.window_estimate) else trace.window_estimate,
        "window_stderr": None if np.isnan(trace.window_stderr) else trace.window_stderr,
        "window_legit": trace.window_legit,
    }
    if extra_meta:
        meta.update(extra_meta)
    lines = ["# " + json.dumps(meta, sort_keys=True)]
    lines.append("iteration,estimate,stderr,legitimate_count")
    for i in range(cfg.iterations):
        lines.append(
            f"{i + 1},{float(trace.estimate[i])!r},{float(trace.stderr[i])!r},"
            f"{int(trace.legitimate_count[i])}"
        )
    Path(path).write_text("\n".join(lines) + "\n")
