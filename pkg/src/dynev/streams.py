"""Seeded generators of PSD-preserving decremental update streams.

Every stream is PSD by construction, not by numerical accident: the
Gram-factor modes remove (fractions of) columns of an explicit factor
``A_0 = sum_i x_i x_i^T``, so each prefix of the stream leaves an exact sum
of outer products behind; the planted-spectrum mode removes fractions of
exact eigendirections, so the spectrum evolves analytically.

Obliviousness is structural: a stream is a pure function of its seeded
``StreamSpec`` and is fully generated before any solver consumes it.  The
generators may inspect ``A_0`` (the adversarial mode ranks factor columns by
alignment with the top eigenvector), which is still oblivious — nothing here
ever observes solver output.

Modes
-----
cholesky-drain    remove whole factor columns in a seeded random order
scaled-drain      remove alpha*x_i with alpha ~ U[0.35, 0.9] (leaves
                  (1-alpha^2) x_i x_i^T behind)
adversarial-slow  repeatedly remove 0.45-scaled bites of the columns most
                  aligned with the top eigenvector of A_0, at most 4 bites
                  per column (0.45^2 * 4 < 1 keeps the leftover PSD);
                  designed to keep the tracked witness barely alive for
                  long stretches
eig-drain         planted spectrum (1 - eps_target/4)^i in an exact random
                  eigenbasis; the stream fully removes successive top
                  directions at evenly spaced steps until the top eigenvalue
                  has decayed by the ``depth`` factor, with negligible
                  keep-alive bites of the current top direction in between.
                  The staircase keeps the instantaneous top gap at the
                  planted ratio, so certification never degenerates into
                  resolving near-ties, while still forcing the full epoch
                  cascade.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .powermethod import power_iterate_block
from .sparse import SparseSymMatrix, SparseVector

__all__ = [
    "StreamSpec",
    "gen_cholesky_drain",
    "gen_eig_drain",
    "generate",
    "replay_dense",
]

_MODES = ("cholesky-drain", "scaled-drain", "eig-drain", "adversarial-slow")
_BITE_ALPHA = 0.45
_MAX_BITES = 4  # 4 * 0.45^2 = 0.81 <= 1: leftover stays PSD
_MICRO_FRACTION = 1e-6  # eig-drain keep-alive bite: fraction of the top eigenvalue


@dataclass(frozen=True)
class StreamSpec:
    """Pure description of a generated instance."""

    mode: str
    n: int
    T: int
    density: float = 0.15
    seed: int = 0
    eps_target: float = 0.2
    drain_all: bool = False  # eig-drain only: remove every direction fully
    depth: float = 0.25  # eig-drain only: target top-eigenvalue decay factor

    def __post_init__(self):
        if self.mode not in _MODES:
            raise ValueError(f"stream mode must be one of {_MODES}, got {self.mode!r}")
        if self.n < 1:
            raise ValueError(f"stream n must be >= 1, got {self.n}")
        if self.T < 0:
            raise ValueError(f"stream T must be >= 0, got {self.T}")
        if not (0.0 < self.density <= 1.0):
            raise ValueError(f"stream density must be in (0, 1], got {self.density}")
        if not (0.0 < self.eps_target < 1.0):
            raise ValueError(f"stream eps_target must be in (0, 1), got {self.eps_target}")
        if not (0.0 < self.depth < 1.0):
            raise ValueError(f"stream depth must be in (0, 1), got {self.depth}")


def _factor_columns(spec: StreamSpec, m: int, rng: np.random.Generator) -> list[SparseVector]:
    """m unit-norm sparse columns with ~density*n nonzeros each."""
    k = max(1, int(round(spec.density * spec.n)))
    cols = []
    for _ in range(m):
        idx = np.sort(rng.choice(spec.n, size=k, replace=False))
        val = rng.standard_normal(k)
        val[val == 0.0] = 1.0  # astronomically unlikely; keeps entries nonzero
        val /= np.linalg.norm(val)
        cols.append(SparseVector(spec.n, idx.astype(np.int64), val))
    return cols


def _gram(cols: list[SparseVector], n: int) -> np.ndarray:
    """Dense sum of outer products (exactly symmetric by construction)."""
    A = np.zeros((n, n))
    for x in cols:
        xd = x.to_dense()
        A += np.outer(xd, xd)
    return A


def _scale_column(x: SparseVector, alpha: float) -> SparseVector:
    return SparseVector(x.dim, x.idx, alpha * x.val)


def gen_cholesky_drain(spec: StreamSpec) -> tuple[SparseSymMatrix, list[SparseVector]]:
    """Gram-factor instance for the cholesky-drain / scaled-drain /
    adversarial-slow modes; returns (A0, updates)."""
    if spec.mode not in ("cholesky-drain", "scaled-drain", "adversarial-slow"):
        raise ValueError(f"gen_cholesky_drain: unsupported mode {spec.mode!r}")
    rng = np.random.default_rng(spec.seed)
    m = max(spec.n, spec.T)
    cols = _factor_columns(spec, m, rng)
    dense = _gram(cols, spec.n)
    A0 = SparseSymMatrix.from_dense(dense)

    updates: list[SparseVector] = []
    if spec.mode == "cholesky-drain":
        if spec.T > m:
            raise ValueError(f"stream T = {spec.T} exceeds the {m} factor columns")
        order = rng.permutation(m)[: spec.T]
        updates = [cols[i] for i in order]
    elif spec.mode == "scaled-drain":
        if spec.T > m:
            raise ValueError(f"stream T = {spec.T} exceeds the {m} factor columns")
        order = rng.permutation(m)[: spec.T]
        alphas = rng.uniform(0.35, 0.9, size=spec.T)
        updates = [_scale_column(cols[i], a) for i, a in zip(order, alphas)]
    else:  # adversarial-slow
        if spec.T > _MAX_BITES * m:
            raise ValueError(
                f"stream T = {spec.T} exceeds the bite capacity {_MAX_BITES * m}"
            )
        # Rank columns by alignment with the top eigendirection of A_0
        # (computed here, before any solver runs — still oblivious).
        W, quads, _ = power_iterate_block(lambda X: dense @ X, spec.n, 6, 500,
                                          spec.seed + 777_001)
        u1 = W[:, int(np.argmax(quads))]
        scores = np.array([x.dot(u1) ** 2 for x in cols])
        bites = np.zeros(m, dtype=np.int64)
        for _ in range(spec.T):
            eligible = scores * (1.0 - _BITE_ALPHA**2 * bites)
            eligible[bites >= _MAX_BITES] = -1.0
            i = int(np.argmax(eligible))
            updates.append(_scale_column(cols[i], _BITE_ALPHA))
            bites[i] += 1
    return A0, updates


def gen_eig_drain(spec: StreamSpec) -> tuple[SparseSymMatrix, list[SparseVector]]:
    """Planted-spectrum instance; each step drains the current top direction."""
    if spec.mode != "eig-drain":
        raise ValueError(f"gen_eig_drain: unsupported mode {spec.mode!r}")
    rng = np.random.default_rng(spec.seed)
    n = spec.n
    Q, R = np.linalg.qr(rng.standard_normal((n, n)))
    Q = Q * np.sign(np.where(np.diag(R) == 0.0, 1.0, np.diag(R)))[None, :]
    lam = (1.0 - spec.eps_target / 4.0) ** np.arange(n)
    dense = (Q * lam) @ Q.T
    dense = 0.5 * (dense + dense.T)
    A0 = SparseSymMatrix.from_dense(dense)

    updates: list[SparseVector] = []
    cur = lam.copy()
    if spec.drain_all:
        for i in range(min(spec.T, n)):
            updates.append(SparseVector.from_dense(math.sqrt(cur[i]) * Q[:, i]))
            cur[i] = 0.0
        return A0, updates

    # Full removals of successive planted directions, evenly spaced so the
    # top eigenvalue decays from 1 to ~depth over the stream; every other
    # step removes a negligible slice of the current top direction so the
    # stream has a genuine rank-one update at each of the T steps.
    gap = spec.eps_target / 4.0
    n_bites = max(1, math.ceil(math.log(spec.depth) / math.log(1.0 - gap)))
    n_bites = min(n_bites, n - 1) if n > 1 else 0
    if spec.T <= n_bites:
        bite_steps = set(range(1, spec.T + 1))
    else:
        bite_steps = {(j + 1) * spec.T // (n_bites + 1) for j in range(n_bites)}
    drained = 0
    for t in range(1, spec.T + 1):
        if t in bite_steps:
            updates.append(SparseVector.from_dense(math.sqrt(cur[drained]) * Q[:, drained]))
            cur[drained] = 0.0
            drained += 1
        else:
            beta = math.sqrt(_MICRO_FRACTION * cur[drained])
            updates.append(SparseVector.from_dense(beta * Q[:, drained]))
            cur[drained] *= 1.0 - _MICRO_FRACTION
    return A0, updates


def generate(spec: StreamSpec) -> tuple[SparseSymMatrix, list[SparseVector]]:
    """Mode dispatcher."""
    if spec.mode == "eig-drain":
        return gen_eig_drain(spec)
    return gen_cholesky_drain(spec)


def replay_dense(A0: SparseSymMatrix, updates: list[SparseVector]) -> Iterator[np.ndarray]:
    """Yield dense A_0, A_1, …, A_T (fresh copies; oracle-side helper)."""
    A = A0.to_dense()
    yield A.copy()
    for v in updates:
        vd = v.to_dense()
        A -= np.outer(vd, vd)
        yield A.copy()
