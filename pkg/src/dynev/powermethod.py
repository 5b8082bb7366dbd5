"""Randomized block power method with witness selection.

Runs R independent power-iteration copies from seeded Gaussian starts,
normalizing every iteration, and classifies the resulting Rayleigh quotients
("quads") against accuracy thresholds:

* all quads < 1 - eps          -> no witness (the operator's top eigenvalue is
                                  certifiably below the target band),
* some quad >= 1 - 5*eps       -> that copy (smallest index) is the witness,
* only the band [1-eps, 1-5*eps) is populated -> smallest such copy is
                                  returned with ``band_fallback`` set.

Copy r draws its start from ``default_rng(seed + r)``, so runs are bitwise
reproducible and individual copies can be reconstructed in isolation.

Iteration budget: the a-priori count K = ceil(4*log2(n/eps)/eps) is far past
the float64 fixed point on anything with a spectral gap, so by default the
loop also stops once every copy's Rayleigh quotient has stagnated for several
consecutive iterations (a deterministic function of the starts).  Disable
with ``early_stop=False`` to run the full committed K.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .sparse import DynamicOperator

__all__ = [
    "PowerConfig",
    "CandidateSet",
    "PowerOutcome",
    "power_method",
    "power_iterate_block",
    "projection_diagnostic",
    "ideal_projection_profile",
]

THRESH_SLACK = 1e-12  # additive slack on every threshold comparison

# Early-stop controls: stop after the Rayleigh quotient of every copy has
# moved by <= STALL_RTOL (relatively) for STALL_PATIENCE consecutive
# iterations, but never before MIN_ITERS.  The defaults polish quads to
# machine precision; maintenance callers that only need threshold decisions
# pass looser per-call values (see MAINT_STALL_RTOL).
MIN_ITERS = 32
STALL_PATIENCE = 4
STALL_RTOL = 1e-12

# Maintenance profile used by the decremental tracker's recomputes.  Rayleigh
# quotients approach the top eigenvalue from below, so stopping early is
# one-sided safe: a witness is never over-credited, and an under-converged
# run at worst wastes a slice of the epoch error budget (bounded by
# rtol/(2*relative spectral gap), and by the gap itself in near-tied
# spectra).  1e-5 keeps that slice at the 1e-3 scale, two orders under the
# tracker's eps/2 maintenance margin at the accuracies the solver accepts.
MAINT_STALL_RTOL = 1e-5
MAINT_STALL_PATIENCE = 6


def ceil_log2(x: float) -> int:
    """ceil(log2(x)) as an int, guarded for x <= 1."""
    if x <= 1.0:
        return 0
    return int(math.ceil(math.log2(x)))


def log2_guarded(x: float) -> float:
    """log2(x) clamped below at 1 (keeps n=2 formulas finite and sane)."""
    return max(math.log2(x), 1.0) if x > 1 else 1.0


def clamp_eps(eps: float, n: int) -> float:
    """Clamp the requested accuracy into the band the analysis supports.

    Below ~1/n the iteration count blows up without improving the witness;
    above 0.24 the 1-5*eps selection threshold goes vacuous.  For n <= 4 the
    band is empty and the upper cap wins.
    """
    return min(max(eps, 1.0000001 / n), 0.24)


@dataclass(frozen=True)
class PowerConfig:
    """Resolved run parameters (after eps clamping)."""

    eps_raw: float
    eps_eff: float
    n: int
    R: int
    K: int
    seed: int
    early_stop: bool = True

    @classmethod
    def make(cls, eps: float, n: int, seed: int, early_stop: bool = True) -> "PowerConfig":
        if not (0.0 < eps < 1.0):
            raise ValueError(f"power_method: eps must be in (0, 1), got {eps}")
        if n < 1:
            raise ValueError(f"power_method: n must be >= 1, got {n}")
        eps_eff = clamp_eps(eps, n)
        R = 10 if n <= 2 else max(1, int(math.ceil(10.0 * math.log2(n))))
        K = max(1, int(math.ceil(4.0 * math.log2(n / eps_eff) / eps_eff)))
        return cls(eps_raw=eps, eps_eff=eps_eff, n=n, R=R, K=K, seed=seed, early_stop=early_stop)


@dataclass
class CandidateSet:
    """All R witnesses with their fresh quadratic forms.

    ``W`` has one unit column per copy; ``quads[r]`` is the measured
    ``w_r^T A w_r``.  ``r0`` is the selected witness index (None when the run
    found nothing above 1 - eps).  ``band_fallback`` records that the
    smallest copy above the 1 - 5*eps selection bar sat in the
    [1-5*eps, 1-eps) band, so selection was promoted to the smallest copy
    clearing 1 - eps instead.
    """

    W: np.ndarray
    quads: np.ndarray
    r0: int | None
    band_fallback: bool

    @property
    def witness(self) -> np.ndarray:
        if self.r0 is None:
            raise ValueError("CandidateSet: no witness was selected")
        return self.W[:, self.r0]


@dataclass
class PowerOutcome:
    """Result of one randomized power-method run.

    ``found`` is False only when every copy's quad form fell below
    1 - eps (minus slack); the candidate set is populated either way.
    """

    found: bool
    cand: CandidateSet
    config: PowerConfig
    iters: int

    @property
    def best_quad(self) -> float:
        return float(np.max(self.cand.quads)) if self.cand.quads.size else 0.0


def power_iterate_block(apply_fn, n: int, R: int, K: int, seed: int,
                        early_stop: bool = True,
                        stall_rtol: float = STALL_RTOL,
                        stall_patience: int = STALL_PATIENCE,
                        target: float | None = None,
                        min_iters: int = MIN_ITERS,
                        warm: np.ndarray | None = None) -> tuple[np.ndarray, np.ndarray, int]:
    """Run R power-iteration copies for up to K steps; return (W, quads, iters).

    ``apply_fn`` maps an (n, R) block to A @ block.  Copies are normalized
    every iteration; a copy whose image vanishes exactly is frozen at the zero
    vector and reports quad 0.  The returned W columns are unit (or zero) and
    quads are freshly measured with one extra application.

    When ``target`` is set (and ``early_stop`` is on), the loop also exits as
    soon as some copy's Rayleigh quotient reaches it: quotients increase
    monotonically under power iteration, so any threshold decision keyed at
    or below the target is already determined.

    ``warm`` replaces the first columns' random starts with caller-supplied
    vectors (zero-norm columns are ignored); callers iterating over slowly
    changing matrices pass their previous witness to skip the burn-in.
    """
    X = np.empty((n, R))
    for r in range(R):
        X[:, r] = np.random.default_rng(seed + r).standard_normal(n)
    if warm is not None:
        warm = np.asarray(warm, dtype=np.float64)
        if warm.ndim == 1:
            warm = warm[:, None]
        for c in range(min(warm.shape[1], R)):
            if float(np.linalg.norm(warm[:, c])) > 0.0 and np.isfinite(warm[:, c]).all():
                X[:, c] = warm[:, c]
    norms = np.linalg.norm(X, axis=0)
    nz = norms > 0.0
    X[:, nz] /= norms[nz]
    X[:, ~nz] = 0.0

    rho_prev = np.full(R, np.inf)
    stall = 0
    iters = 0
    for _ in range(K):
        Y = apply_fn(X)
        rho = np.einsum("ij,ij->j", X, Y)
        norms = np.linalg.norm(Y, axis=0)
        nz = norms > 0.0
        X = np.where(nz[None, :], Y / np.where(nz, norms, 1.0)[None, :], 0.0)
        iters += 1
        if early_stop:
            if target is not None and iters >= min_iters and float(np.max(rho)) >= target:
                break
            moved = np.abs(rho - rho_prev) > stall_rtol * np.maximum(np.abs(rho), 1e-300)
            stall = 0 if moved.any() else stall + 1
            rho_prev = rho
            if iters >= min_iters and stall >= stall_patience:
                break

    Y = apply_fn(X)
    quads = np.einsum("ij,ij->j", X, Y)
    return X, quads, iters


def power_method(eps: float, op: DynamicOperator, seed: int, *,
                 early_stop: bool = True,
                 stall_rtol: float = STALL_RTOL,
                 stall_patience: int = STALL_PATIENCE,
                 target_exit: bool = False) -> PowerOutcome:
    """Randomized power method against the (implicit, scaled) operator.

    The thresholds are meant for operators normalized so the top eigenvalue
    is near 1 (the tracker's situation); on raw operators the outcome's
    ``quads`` are still the true Rayleigh quotients and ``best_quad`` is a
    lower estimate of the top eigenvalue regardless of thresholds.

    ``target_exit`` stops the iteration once a copy provably clears the
    1 - eps acceptance bar (used by maintenance recomputes, where a positive
    decision needs no further polishing).
    """
    cfg = PowerConfig.make(eps, op.n, seed, early_stop=early_stop)
    target = (1.0 - cfg.eps_eff) + 1e-9 if target_exit else None
    W, quads, iters = power_iterate_block(
        op.matvec_block, cfg.n, cfg.R, cfg.K, cfg.seed, early_stop=cfg.early_stop,
        stall_rtol=stall_rtol, stall_patience=stall_patience, target=target,
    )
    # False only when every copy is below 1 - eps.  Otherwise selection is
    # keyed to the lower 1 - 5*eps bar (smallest index); if that pick itself
    # lands in the [1-5*eps, 1-eps) band we promote to the smallest copy
    # clearing 1 - eps and flag the override.
    thr_pass = 1.0 - cfg.eps_eff - THRESH_SLACK
    thr_sel = 1.0 - 5.0 * cfg.eps_eff - THRESH_SLACK

    passing = np.nonzero(quads >= thr_pass)[0]
    if not passing.size:
        cand = CandidateSet(W=W, quads=quads, r0=None, band_fallback=False)
        return PowerOutcome(found=False, cand=cand, config=cfg, iters=iters)
    sel = int(np.nonzero(quads >= thr_sel)[0][0])
    if quads[sel] >= thr_pass:
        cand = CandidateSet(W=W, quads=quads, r0=sel, band_fallback=False)
    else:
        cand = CandidateSet(W=W, quads=quads, r0=int(passing[0]), band_fallback=True)
    return PowerOutcome(found=True, cand=cand, config=cfg, iters=iters)


def projection_diagnostic(W: np.ndarray, eigvecs: np.ndarray) -> np.ndarray:
    """Squared projections of each witness onto each eigenvector.

    Returns ``P`` with ``P[r, i] = (w_r . u_i)^2`` where ``u_i`` are the
    columns of ``eigvecs``.  Float dot products bottom out around 1e-32;
    projections decayed below that are indistinguishable from roundoff — use
    :func:`ideal_projection_profile` for the extreme-decay regime.
    """
    W = np.asarray(W)
    if W.ndim == 1:
        W = W[:, None]
    vecs = getattr(eigvecs, "vectors", eigvecs)
    P = (W.T @ vecs) ** 2
    return P


def ideal_projection_profile(lambdas, alpha, K: int, dps: int = 60):
    """Exact squared projections of the K-step power iterate, in mpmath.

    With start coefficients ``alpha_i = u_i . v0`` in the eigenbasis, the
    normalized iterate after K applications has
    ``(w . u_i)^2 = lambda_i^{2K} alpha_i^2 / sum_j lambda_j^{2K} alpha_j^2``
    independent of the per-iteration normalization.  Arbitrary-precision
    arithmetic keeps ratios meaningful long after float64 underflows.

    Returns a list of ``mpmath.mpf`` summing to 1 (zero-denominator inputs,
    i.e. a start exactly orthogonal to the whole spectrum, return all zeros).
    """
    import mpmath as mp

    with mp.workdps(dps):
        lam = [mp.mpf(float(x)) for x in np.asarray(lambdas, dtype=np.float64)]
        al = [mp.mpf(float(x)) for x in np.asarray(alpha, dtype=np.float64)]
        terms = [(l ** (2 * K)) * a * a if l != 0 else mp.mpf(0) for l, a in zip(lam, al)]
        denom = mp.fsum(terms)
        if denom == 0:
            return [mp.mpf(0) for _ in terms]
        return [t / denom for t in terms]
