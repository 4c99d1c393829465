"""Dense block Hamiltonians for the open XXZ chain with boundary fields.

The model on L sites, restricted to one (L, n_d) magnetization block:

    H = sum_{i=1}^{L-1} [ J (S+_i S-_{i+1} + S-_i S+_{i+1}) + Delta Sz_i Sz_{i+1} ]
        - h (Sz_1 + Sz_L) + (3L - 1)/4

The constant term prices chain length so blocks of different L can share an
energy reference. At (J, Delta, h) = (-1, 1, 1/2) the spectrum is
non-negative and every positive level is two-fold degenerate across
neighboring lengths with opposite parity; that supersymmetric structure is
what the rest of the package measures.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .basis import SectorKey, enumerate_sector

# Couplings with exact binary representations; the degeneracy structure
# holds only exactly at this point.
SUSY_POINT = None  # assigned below, needs the class


@dataclass(frozen=True)
class ModelParams:
    """Couplings: hopping J, Ising anisotropy Delta, edge field h."""

    J: float = -1.0
    Delta: float = 1.0
    h: float = 0.5

    def is_susy_point(self) -> bool:
        return self.J == -1.0 and self.Delta == 1.0 and self.h == 0.5

    def replace(self, **kw) -> "ModelParams":
        d = {"J": self.J, "Delta": self.Delta, "h": self.h}
        d.update(kw)
        return ModelParams(**d)


SUSY_POINT = ModelParams()


@dataclass(frozen=True)
class SectorMatrix:
    """Dense real symmetric matrix of one operator on one block."""

    key: SectorKey
    params: ModelParams | None
    entries: np.ndarray

    def __post_init__(self):
        if self.entries.shape != (self.key.dimension, self.key.dimension):
            raise ValueError("matrix shape does not match block dimension")


def _diagonal_energy(bits: int, L: int, params: ModelParams) -> float:
    sz = [0.5 - ((bits >> i) & 1) for i in range(L)]
    e = params.Delta * sum(sz[i] * sz[i + 1] for i in range(L - 1))
    if L == 1:
        # Single site: the boundary term reads site 1 twice. Only this
        # convention keeps the N=3 pair degenerate.
        e -= 2.0 * params.h * sz[0]
    else:
        e -= params.h * (sz[0] + sz[L - 1])
    return e + (3.0 * L - 1.0) / 4.0


def build_hamiltonian(key: SectorKey, params: ModelParams) -> SectorMatrix:
    """Hamiltonian restricted to the (L, n_d) block.

    S+ S- + S- S+ on a bond exchanges an adjacent up/down pair, so the
    off-diagonal entries are J on exchange-connected config pairs. The
    block never couples outside itself (magnetization is conserved).
    """
    configs = enumerate_sector(key)
    index = {c.bits: i for i, c in enumerate(configs)}
    dim = len(configs)
    H = np.zeros((dim, dim))
    for col, c in enumerate(configs):
        H[col, col] = _diagonal_energy(c.bits, key.L, params)
        for bond in range(key.L - 1):
            b0 = (c.bits >> bond) & 1
            b1 = (c.bits >> (bond + 1)) & 1
            if b0 != b1:
                flipped = c.bits ^ ((1 << bond) | (1 << (bond + 1)))
                row = index[flipped]
                H[row, col] = params.J
                H[col, row] = params.J
    return SectorMatrix(key, params, H)


def build_dh_ddelta(key: SectorKey) -> SectorMatrix:
    """d H / d Delta: diagonal matrix of sum_i Sz_i Sz_{i+1}."""
    configs = enumerate_sector(key)
    diag = np.empty(len(configs))
    for i, c in enumerate(configs):
        sz = [0.5 - ((c.bits >> b) & 1) for b in range(key.L)]
        diag[i] = sum(sz[b] * sz[b + 1] for b in range(key.L - 1))
    return SectorMatrix(key, None, np.diag(diag))


def build_dh_dj(key: SectorKey) -> SectorMatrix:
    """d H / d J: the bare adjacency matrix of adjacent-exchange moves."""
    configs = enumerate_sector(key)
    index = {c.bits: i for i, c in enumerate(configs)}
    dim = len(configs)
    A = np.zeros((dim, dim))
    for col, c in enumerate(configs):
        for bond in range(key.L - 1):
            b0 = (c.bits >> bond) & 1
            b1 = (c.bits >> (bond + 1)) & 1
            if b0 != b1:
                flipped = c.bits ^ ((1 << bond) | (1 << (bond + 1)))
                A[index[flipped], col] = 1.0
                A[col, index[flipped]] = 1.0
    return SectorMatrix(key, None, A)
