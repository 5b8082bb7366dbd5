"""Decremental witness tracker: lazy recertification of the top eigenvalue.

Holds the R witnesses from the last power-method run together with cached
quadratic forms.  A rank-one update costs only R sparse dot products (each
cache decreases by ``scale*(v.w)^2``); the power method is re-run only when
every cache has fallen below the failure threshold.  Once a recompute comes
back empty the state is dead, absorbingly: the operator's top eigenvalue has
certifiably left the tracked band and a caller that wants to keep going must
rescale (see eigtracker).

Threshold: the nominal failure bar is ``1 - 40*eps``.  It is floored at a
tiny positive value (a non-positive Rayleigh quotient certifies nothing, and
a fully drained operator must die rather than hand out zero-quality
witnesses) and capped at the power method's own pass bar ``1 - eps_eff``
(otherwise parameter corners where ``40*eps < eps_eff`` would re-trigger a
recompute on every update despite the recompute succeeding).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .powermethod import (
    MAINT_STALL_PATIENCE,
    MAINT_STALL_RTOL,
    THRESH_SLACK,
    CandidateSet,
    PowerOutcome,
    clamp_eps,
    power_method,
)
from .sparse import DynamicOperator, SparseSymMatrix, SparseVector

__all__ = ["TrackerState", "Witness", "Dead", "DEAD", "init", "init_from_operator", "update", "stats"]

_THRESH_FLOOR = 1e-12
_SEED_STRIDE = 1_000_003  # recompute j uses seed + j*_SEED_STRIDE


@dataclass
class Witness:
    """A live certification: unit vector w with w^T A_t w = quad >= threshold."""

    r_t: int
    w: np.ndarray
    quad: float


class Dead:
    """Absorbing failure: the power method found nothing above 1 - eps."""

    def __repr__(self):
        return "Dead"


DEAD = Dead()

UpdateResult = Witness | Dead


class TrackerState:
    """Mutable tracker over one DynamicOperator (single-writer)."""

    def __init__(self, op: DynamicOperator, eps: float, seed: int):
        self.op = op
        self.eps = float(eps)
        self.eps_eff = clamp_eps(eps, op.n)
        self.seed = int(seed)
        self.cand: CandidateSet | None = None
        self.r_t: int = -1
        self.dead = False
        self.recompute_count = 0
        self.touched_nnz_total = 0
        self.last_outcome: PowerOutcome | None = None

    @property
    def threshold(self) -> float:
        return min(max(1.0 - 40.0 * self.eps - THRESH_SLACK, _THRESH_FLOOR),
                   1.0 - self.eps_eff - THRESH_SLACK)

    @property
    def t(self) -> int:
        return self.op.t

    @property
    def quads(self) -> np.ndarray:
        return self.cand.quads if self.cand is not None else np.zeros(0)

    def current_witness(self) -> Witness:
        if self.dead or self.cand is None:
            raise ValueError("tracker is dead: no current witness")
        return Witness(self.r_t, self.cand.W[:, self.r_t].copy(),
                       float(self.cand.quads[self.r_t]))

    def rescale_caches(self, factor: float) -> UpdateResult:
        """Multiply all caches by a positive factor and rescan the threshold.

        Epoch-restart hook for the rescaling layer: when the operator's scale
        field changes by 1/factor, the cached quadratic forms remain exact
        after multiplying by factor, so the last power-method run's witnesses
        can be revived without re-running anything.  Clears the dead flag on
        success; leaves it set when every rescaled cache is still below
        threshold.
        """
        if not (factor > 0.0 and np.isfinite(factor)):
            raise ValueError(f"rescale_caches: factor must be positive finite, got {factor}")
        if self.cand is None:
            return DEAD
        self.cand.quads *= factor
        live = np.nonzero(self.cand.quads >= self.threshold)[0]
        if live.size:
            self.dead = False
            self.r_t = int(live[0])
            return self.current_witness()
        self.dead = True
        self.r_t = -1
        return DEAD

    def _run_power_method(self) -> PowerOutcome:
        """One recompute: counts against recompute_count, fresh derived seed.

        Runs the maintenance profile: loose stall tolerance plus an exit as
        soon as some copy clears the acceptance bar.  Both cuts are one-sided
        safe (quads only ever under-report), so they trade a slice of the
        epoch error margin for a large constant-factor saving on the streams
        where recomputes dominate.
        """
        self.recompute_count += 1
        pm_seed = self.seed + self.recompute_count * _SEED_STRIDE
        before = self.op.touched_nnz
        out = power_method(
            self.eps, self.op, pm_seed,
            stall_rtol=MAINT_STALL_RTOL, stall_patience=MAINT_STALL_PATIENCE,
            target_exit=True,
        )
        self.touched_nnz_total += self.op.touched_nnz - before
        self.last_outcome = out
        return out

    def _adopt(self, out: PowerOutcome) -> UpdateResult:
        """Install a power-method outcome as the new witness set (or die)."""
        self.cand = out.cand
        if not out.found:
            # The outcome certifies nothing above 1 - eps: the failure bar of
            # this tracker may be lower, but a vanished witness set means the
            # scale is wrong — the rescaling layer owns what happens next.
            self.dead = True
            self.r_t = -1
            return DEAD
        self.r_t = out.cand.r0
        return self.current_witness()


def init(eps: float, A0: SparseSymMatrix, seed: int, scale: float = 1.0) -> TrackerState:
    """Fresh tracker over A0 (building its own operator at the given scale)."""
    return init_from_operator(eps, DynamicOperator(A0, scale=scale), seed)


def init_from_operator(eps: float, op: DynamicOperator, seed: int) -> TrackerState:
    """Fresh tracker over an existing operator (scale and update log included).

    Used by the rescaling layer at epoch restarts, where the operator already
    carries the full update history.  Counts as the first recompute.
    """
    if not (0.0 < eps < 1.0):
        raise ValueError(f"tracker init: eps must be in (0, 1), got {eps}")
    if eps > 0.24:
        # clamped range of the power method; larger values make every
        # threshold in this module vacuous at once
        raise ValueError(f"tracker init: eps must be <= 0.24, got {eps}")
    state = TrackerState(op, eps, seed)
    state._adopt(state._run_power_method())
    return state


def update(state: TrackerState, v: SparseVector) -> UpdateResult:
    """Feed one rank-one removal; return the surviving witness or Dead.

    Dead states absorb: the update is still logged on the operator (so replay
    and stats stay consistent) but no numerical work happens.
    """
    if v.dim != state.op.n:
        raise ValueError(f"update: dimension mismatch ({v.dim} vs {state.op.n})")
    state.op.push(v)
    if state.dead:
        return DEAD

    # All R caches take the rank-one decrement; cost is exactly R*nnz(v).
    cand = state.cand
    proj = cand.W[v.idx, :].T @ v.val if v.nnz else np.zeros(cand.quads.shape[0])
    cand.quads -= state.op.scale * (proj * proj)
    state.touched_nnz_total += cand.quads.shape[0] * v.nnz

    if np.all(np.isfinite(cand.quads)):
        live = np.nonzero(cand.quads >= state.threshold)[0]
        if live.size:
            state.r_t = int(live[0])
            return state.current_witness()
    # else: non-finite caches fall through to a full recompute, which
    # refreshes every cache from scratch.

    return state._adopt(state._run_power_method())


def stats(state: TrackerState) -> dict:
    """Counters for the harness; JSON-serializable."""
    return {
        "recompute_count": int(state.recompute_count),
        "t": int(state.t),
        "touched_nnz_total": int(state.touched_nnz_total),
    }
