"""Dense verification oracle and spectrum profiling.

``exact_spectrum`` is a cyclic Jacobi eigensolver — deliberately not LAPACK,
so the verification path shares no code with anything being verified and is
portable to a whiteboard.  The hot rotation loop is compiled with numba when
available (pure-python fallback otherwise, same algorithm).

``spectrum_profile`` bins a spectrum into fixed-width levels below a *static*
reference value lambda0 (the top eigenvalue of the initial matrix — the
reference deliberately does not track the current matrix), flags "important"
levels whose dimension is a threshold fraction of everything above them, and
accumulates the cumulative level dimensions Phi_j used to monitor decremental
runs: under rank-one removals each Phi_j can only go down, which
``potential_trace`` checks across recompute events.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .powermethod import log2_guarded
from .sparse import SparseSymMatrix

__all__ = [
    "ExactSpectrum",
    "SpectrumProfile",
    "exact_spectrum",
    "exact_spectrum_warm",
    "spectrum_profile",
    "potential_trace",
    "write_potential_csv",
    "JACOBI_CAP",
]

JACOBI_CAP = 512  # oracle refuses larger inputs; this is a verification tool
_OFF_TOL = 1e-14  # stop when off-diagonal Frobenius mass <= _OFF_TOL * ||A||_F
_MAX_SWEEPS = 64

try:
    from numba import njit

    NUMBA_AVAILABLE = True
except ImportError:  # pragma: no cover - environment without numba
    NUMBA_AVAILABLE = False

    def njit(*args, **kwargs):
        def wrap(f):
            return f

        if args and callable(args[0]):
            return args[0]
        return wrap


@njit(cache=True)
def _jacobi_core(A, V, off_target, max_sweeps):  # pragma: no cover - compiled
    n = A.shape[0]
    sweeps = 0
    # skip threshold: total squared mass of skipped entries stays far below
    # the stopping target, so skipping cannot stall convergence
    skip = off_target / (4.0 * n * n) if n > 0 else 0.0
    for _ in range(max_sweeps):
        off2 = 0.0
        for p in range(n - 1):
            for q in range(p + 1, n):
                off2 += A[p, q] * A[p, q]
        if math.sqrt(2.0 * off2) <= off_target:
            break
        sweeps += 1
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if abs(apq) <= skip:
                    continue
                theta = (A[q, q] - A[p, p]) / (2.0 * apq)
                if theta >= 0.0:
                    t = 1.0 / (theta + math.sqrt(1.0 + theta * theta))
                else:
                    t = -1.0 / (-theta + math.sqrt(1.0 + theta * theta))
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = t * c
                app = A[p, p]
                aqq = A[q, q]
                A[p, p] = app - t * apq
                A[q, q] = aqq + t * apq
                A[p, q] = 0.0
                A[q, p] = 0.0
                for i in range(n):
                    if i != p and i != q:
                        aip = A[i, p]
                        aiq = A[i, q]
                        A[i, p] = c * aip - s * aiq
                        A[p, i] = A[i, p]
                        A[i, q] = s * aip + c * aiq
                        A[q, i] = A[i, q]
                for i in range(n):
                    vip = V[i, p]
                    viq = V[i, q]
                    V[i, p] = c * vip - s * viq
                    V[i, q] = s * vip + c * viq
    return sweeps


@dataclass
class ExactSpectrum:
    """Eigenvalues in descending order; eigenvectors as matching columns."""

    values: np.ndarray
    vectors: np.ndarray

    @property
    def n(self) -> int:
        return int(self.values.size)

    @property
    def lambda_max(self) -> float:
        return float(self.values[0]) if self.values.size else 0.0

    @property
    def lambda_min(self) -> float:
        return float(self.values[-1]) if self.values.size else 0.0


def _as_dense_sym(A, cap: int) -> np.ndarray:
    if isinstance(A, SparseSymMatrix):
        A = A.to_dense()
    A = np.asarray(A, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"exact_spectrum: expected a square matrix, got {A.shape}")
    n = A.shape[0]
    if n > cap:
        raise ValueError(f"exact_spectrum: n = {n} exceeds the oracle cap {cap}")
    scale = np.abs(A).max(initial=0.0)
    if np.abs(A - A.T).max(initial=0.0) > 1e-12 * max(1.0, scale):
        raise ValueError("exact_spectrum: matrix is not symmetric within 1e-12")
    return A


def exact_spectrum(A, cap: int = JACOBI_CAP) -> ExactSpectrum:
    """Full eigendecomposition by cyclic Jacobi sweeps (desk scale, n <= cap)."""
    B = _as_dense_sym(A, cap).copy()
    n = B.shape[0]
    V = np.eye(n)
    fro = np.linalg.norm(B)
    if fro > 0.0:
        _jacobi_core(B, V, _OFF_TOL * fro, _MAX_SWEEPS)
    vals = np.diag(B).copy()
    order = np.argsort(-vals, kind="stable")
    return ExactSpectrum(values=vals[order], vectors=np.ascontiguousarray(V[:, order]))


def exact_spectrum_warm(A, prev_vectors: np.ndarray, cap: int = JACOBI_CAP) -> ExactSpectrum:
    """Jacobi oracle warm-started from a nearby eigenbasis.

    Conjugates A into the previous step's basis (near-diagonal after a
    rank-one change), runs the same rotation kernel, composes the bases.
    Spends 2-3 sweeps instead of ~8 on per-step verification chains;
    accuracy contracts are unchanged (checked against the original A).
    """
    B0 = _as_dense_sym(A, cap)
    B = prev_vectors.T @ B0 @ prev_vectors
    B = (B + B.T) / 2.0
    n = B.shape[0]
    VB = np.eye(n)
    fro = np.linalg.norm(B)
    if fro > 0.0:
        _jacobi_core(B, VB, _OFF_TOL * fro, _MAX_SWEEPS)
    vals = np.diag(B).copy()
    order = np.argsort(-vals, kind="stable")
    return ExactSpectrum(
        values=vals[order], vectors=np.ascontiguousarray((prev_vectors @ VB)[:, order])
    )


# ---------------------------------------------------------------------------
# Level profile.


@dataclass
class SpectrumProfile:
    """Level decomposition of a spectrum against a static reference lambda0.

    ``levels[v]`` counts eigenvalues in the band of index v (width
    ``level_width`` in relative units below lambda0); ``below`` counts
    eigenvalues beneath the whole level window.  ``potentials[j]`` is the
    cumulative dimension of levels 0..j.  ``dim_span`` is the dimension of
    the subspace with eigenvalues >= (1-3*eps)*lambda0.
    """

    lambda0: float
    eps: float
    level_width: float
    levels: np.ndarray
    below: int
    important: list[int]
    potentials: np.ndarray
    dim_span: int

    @property
    def num_levels(self) -> int:
        return int(self.levels.size)


def _profile_params(n: int, eps: float) -> tuple[float, int, float]:
    lg = log2_guarded(n / eps)
    width = eps / (5.0 * lg)
    num_levels = int(math.ceil(15.0 * lg))
    imp_thr = eps / (600.0 * lg ** 3)
    return width, num_levels, imp_thr


def spectrum_profile(A_or_values, lambda0: float, eps: float) -> SpectrumProfile:
    """Bin eigenvalues of the current matrix against the *initial* lambda0.

    Accepts a dense/
    sparse symmetric matrix (eigenvalues computed via the Jacobi oracle) or a
    precomputed 1-d eigenvalue array.  Boundary convention: with
    x = (1 - lambda/lambda0)/width, snapped to the nearest integer when within
    a 1e-10 relative-to-lambda0 distance, the level is floor(x) clamped below
    at 0; floor(x) past the last level goes to the ``below`` bin.
    """
    if lambda0 <= 0.0:
        raise ValueError(f"spectrum_profile: lambda0 must be positive, got {lambda0}")
    if not (0.0 < eps < 1.0):
        raise ValueError(f"spectrum_profile: eps must be in (0, 1), got {eps}")
    vals = np.asarray(A_or_values)
    if vals.ndim != 1:
        vals = exact_spectrum(A_or_values).values
    n = int(vals.size)
    if n == 0:
        raise ValueError("spectrum_profile: empty spectrum")
    width, num_levels, imp_thr = _profile_params(n, eps)

    x = (1.0 - vals / lambda0) / width
    snap_tol = 1e-10 / width  # 1e-10 relative to lambda0, expressed in x units
    r = np.round(x)
    snapped = np.abs(x - r) <= snap_tol
    x = np.where(snapped, r, x)

    idx = np.floor(x).astype(np.int64)
    idx[x <= 0.0] = 0
    levels = np.zeros(num_levels, dtype=np.int64)
    in_window = idx < num_levels
    np.add.at(levels, idx[in_window], 1)
    below = int(n - in_window.sum())

    # dim of the span of eigenvalues >= (1-3eps)*lambda0, same snap convention
    rel = 1.0 - vals / lambda0
    dim_span = int(np.sum(rel <= 3.0 * eps + 1e-10))

    prefix = np.concatenate([[0], np.cumsum(levels)[:-1]])
    important = [int(v) for v in range(num_levels) if levels[v] >= imp_thr * prefix[v]]
    potentials = np.cumsum(levels)

    return SpectrumProfile(
        lambda0=float(lambda0),
        eps=float(eps),
        level_width=float(width),
        levels=levels,
        below=below,
        important=important,
        potentials=potentials,
        dim_span=dim_span,
    )


def potential_trace(events, lambda0: float, eps: float) -> list[tuple]:
    """Per-event potential table: rows ``(event, j, Phi_j)``.

    ``events`` is a sequence of ``(label, matrix_or_values)`` snapshots taken
    at recompute events of a decremental run.  All snapshots are profiled
    against the same static lambda0.
    """
    rows: list[tuple] = []
    for label, snap in events:
        prof = spectrum_profile(snap, lambda0, eps)
        for j, phi in enumerate(prof.potentials):
            rows.append((label, j, int(phi)))
    return rows


def potential_violations(rows: list[tuple]) -> list[tuple]:
    """Pairs of consecutive events where some Phi_j increased (should be none)."""
    by_event: dict = {}
    order: list = []
    for label, j, phi in rows:
        if label not in by_event:
            by_event[label] = {}
            order.append(label)
        by_event[label][j] = phi
    bad = []
    for a, b in zip(order, order[1:]):
        for j, phi in by_event[b].items():
            if phi > by_event[a].get(j, phi):
                bad.append((a, b, j, by_event[a][j], phi))
    return bad


def write_potential_csv(path, rows: list[tuple]) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["event", "j", "Phi_j"])
        for label, j, phi in rows:
            w.writerow([label, j, phi])
