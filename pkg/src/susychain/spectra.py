"""Eigendecomposition of block matrices, full-chain spectra, and a disk cache.

Spectra are the only expensive objects in the package (everything else is
arithmetic over them), so they get a checksummed binary cache keyed by the
block and the exact coupling values.
"""

from __future__ import annotations

import hashlib
import json
import os
import struct
import tempfile
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np

from .basis import SectorKey
from .model import ModelParams, SectorMatrix, build_hamiltonian

CACHE_VERSION = 1
_MAGIC = b"SCSP"


class SolverError(RuntimeError):
    """Eigensolver failed to converge on a block."""

    def __init__(self, key: SectorKey, detail: str):
        super().__init__(f"eigensolver failed on block (L={key.L}, n_d={key.n_d}): {detail}")
        self.key = key


@dataclass(frozen=True)
class ChainSectorSpectrum:
    """Eigenpairs of one (L, n_d) block: ascending energies, column states."""

    key: SectorKey
    params: ModelParams
    energies: np.ndarray
    states: np.ndarray


@dataclass(frozen=True)
class FullChainSpectrum:
    """All magnetization blocks of one chain; 2**L levels in total."""

    L: int
    params: ModelParams
    blocks: tuple[ChainSectorSpectrum, ...]

    @property
    def level_count(self) -> int:
        return sum(len(b.energies) for b in self.blocks)

    def all_energies(self) -> np.ndarray:
        return np.concatenate([b.energies for b in self.blocks])


def diagonalize(matrix: SectorMatrix) -> ChainSectorSpectrum:
    """Dense symmetric eigendecomposition with a fixed sign convention.

    Each eigenvector is normalized so its largest-magnitude component is
    positive, making the output reproducible across runs and cacheable
    byte-for-byte.
    """
    try:
        energies, states = np.linalg.eigh(matrix.entries)
    except np.linalg.LinAlgError as exc:
        raise SolverError(matrix.key, str(exc)) from exc
    for k in range(states.shape[1]):
        lead = np.argmax(np.abs(states[:, k]))
        if states[lead, k] < 0:
            states[:, k] = -states[:, k]
    return ChainSectorSpectrum(matrix.key, matrix.params, energies, states)


def full_chain_spectrum(L: int, params: ModelParams) -> FullChainSpectrum:
    """Diagonalize every n_d block of an L-site chain."""
    blocks = tuple(
        diagonalize(build_hamiltonian(SectorKey(L, nd), params)) for nd in range(L + 1)
    )
    return FullChainSpectrum(L, params, blocks)


def partition_function(spec: FullChainSpectrum, beta: float) -> float:
    """Canonical Z = sum over all 2**L levels of exp(-beta E)."""
    if beta < 0:
        raise ValueError("beta must be >= 0")
    return float(np.exp(-beta * spec.all_energies()).sum())


def charpoly_eigenvalues(matrix: np.ndarray) -> np.ndarray:
    """Independent eigenvalue oracle: characteristic polynomial roots.

    Coefficients via the Faddeev-LeVerrier recurrence in exact rational
    arithmetic (float entries are exact rationals), rough roots via the
    companion matrix, then two exact-arithmetic Newton steps per root.
    Companion roots alone are only good to ~1e-7 at dimension 8; the
    polish recovers full precision for simple roots. Used to cross-check
    the main solver on blocks of dimension <= 8; those blocks have no
    internal degeneracies at couplings of interest, so simple-root Newton
    is safe.
    """
    n = matrix.shape[0]
    if n > 12:
        raise ValueError("characteristic-polynomial oracle limited to small matrices")
    a = [[Fraction(x) for x in row] for row in matrix.tolist()]
    m = [[Fraction(int(i == j)) for j in range(n)] for i in range(n)]
    coeffs = [Fraction(1)]
    for k in range(1, n + 1):
        am = [
            [sum(a[i][t] * m[t][j] for t in range(n)) for j in range(n)]
            for i in range(n)
        ]
        c = -sum(am[i][i] for i in range(n)) / k
        coeffs.append(c)
        m = [
            [am[i][j] + (c if i == j else Fraction(0)) for j in range(n)]
            for i in range(n)
        ]
    seeds = np.sort(np.roots([float(c) for c in coeffs]).real)

    deriv = [coeffs[k] * (n - k) for k in range(n)]

    def horner(poly, x):
        acc = Fraction(0)
        for c in poly:
            acc = acc * x + c
        return acc

    polished = []
    for seed in seeds:
        x = Fraction(float(seed))
        for _ in range(2):
            dp = horner(deriv, x)
            if dp == 0:
                break
            x = x - horner(coeffs, x) / dp
        polished.append(float(x))
    return np.sort(polished)


# ---------------------------------------------------------------------------
# disk cache

def _fmt(x: float) -> str:
    return repr(float(x))


def _entry_path(cache_dir: Path, key: SectorKey, params: ModelParams) -> Path:
    name = (
        f"L{key.L}_nd{key.n_d}"
        f"_J{_fmt(params.J)}_D{_fmt(params.Delta)}_h{_fmt(params.h)}.spec"
    )
    return cache_dir / f"v{CACHE_VERSION}" / name


def cache_put(cache_dir: str | Path, spectrum: ChainSectorSpectrum) -> Path:
    """Store a block spectrum; atomic via rename, checksummed payload."""
    path = _entry_path(Path(cache_dir), spectrum.key, spectrum.params)
    path.parent.mkdir(parents=True, exist_ok=True)
    dim = len(spectrum.energies)
    payload = (
        np.ascontiguousarray(spectrum.energies, dtype=np.float64).tobytes()
        + np.ascontiguousarray(spectrum.states, dtype=np.float64).tobytes()
    )
    header = struct.pack(
        "<4sIII3dI32s",
        _MAGIC,
        CACHE_VERSION,
        spectrum.key.L,
        spectrum.key.n_d,
        spectrum.params.J,
        spectrum.params.Delta,
        spectrum.params.h,
        dim,
        hashlib.sha256(payload).digest(),
    )
    fd, tmp = tempfile.mkstemp(dir=path.parent, suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(header)
            f.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    sidecar = {
        "version": CACHE_VERSION,
        "L": spectrum.key.L,
        "n_d": spectrum.key.n_d,
        "J": spectrum.params.J,
        "Delta": spectrum.params.Delta,
        "h": spectrum.params.h,
        "energies": [float(e) for e in spectrum.energies],
    }
    path.with_suffix(".json").write_text(json.dumps(sidecar, indent=1))
    return path


_HEADER_SIZE = struct.calcsize("<4sIII3dI32s")


def cache_get(
    cache_dir: str | Path, key: SectorKey, params: ModelParams
) -> ChainSectorSpectrum | None:
    """Load a block spectrum; any corruption or mismatch is a miss."""
    path = _entry_path(Path(cache_dir), key, params)
    try:
        raw = path.read_bytes()
    except OSError:
        return None
    if len(raw) < _HEADER_SIZE:
        return None
    magic, version, L, nd, J, Delta, h, dim, digest = struct.unpack(
        "<4sIII3dI32s", raw[:_HEADER_SIZE]
    )
    if magic != _MAGIC or version != CACHE_VERSION:
        return None
    if (L, nd) != (key.L, key.n_d) or (J, Delta, h) != (params.J, params.Delta, params.h):
        return None
    payload = raw[_HEADER_SIZE:]
    if len(payload) != dim * 8 + dim * dim * 8:
        return None
    if hashlib.sha256(payload).digest() != digest:
        return None
    energies = np.frombuffer(payload[: dim * 8], dtype=np.float64).copy()
    states = (
        np.frombuffer(payload[dim * 8 :], dtype=np.float64).reshape(dim, dim).copy()
    )
    return ChainSectorSpectrum(key, params, energies, states)


def cached_block(
    key: SectorKey, params: ModelParams, cache_dir: str | Path | None = None
) -> ChainSectorSpectrum:
    """Diagonalize one block, going through the cache when one is configured."""
    if cache_dir is not None:
        hit = cache_get(cache_dir, key, params)
        if hit is not None:
            return hit
    spec = diagonalize(build_hamiltonian(key, params))
    if cache_dir is not None:
        cache_put(cache_dir, spec)
    return spec
