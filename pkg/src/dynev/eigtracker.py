"""Approximate top-eigenvalue maintenance under rank-one removals.

The public solver.  It normalizes the matrix so the inner decremental
tracker always works at unit scale: a scale estimate ``nu`` is obtained from
a high-accuracy power-method run, the operator carries ``1/nu`` as a
multiplicative scale field, and the tracker certifies witnesses against
thresholds near 1.  When the top eigenvalue decays below the tracked band
the tracker dies; the solver then shrinks ``nu`` geometrically (factor
``rho = 1 - eps_inner/log2 n`` per epoch) until the last run's best witness
clears the band again, and revives the tracker by rescaling its caches
in place — the witness vectors themselves are scale-free, so no new
power-method work is needed for a revival.  Below a configured floor the
matrix is declared numerically zero and ``lambda = 0`` is reported forever.

Reported values: ``lambda_t`` is always the *measured* quadratic form
``w_t^T A_t w_t`` of the selected witness (nu times its cached value), never
a nominal per-epoch constant.  A genuine Rayleigh quotient of a unit vector
can never exceed the true top eigenvalue, which gives the two-sided
guarantee (1-eps)*lambda_max <= lambda_t <= lambda_max directly.

The update stream must be oblivious: chosen in advance, not adaptively from
observed outputs.  Internal randomness is fully determined by the seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import tracker as _tracker
from .powermethod import PowerConfig, log2_guarded, power_iterate_block
from .sparse import DynamicOperator, SparseSymMatrix, SparseVector
from .tracker import DEAD, TrackerState

__all__ = [
    "EigenEstimate",
    "EigenTracker",
    "InfeasibleSdpError",
    "SdpSolution",
    "new",
    "query",
    "sdp_query",
    "snapshot",
    "update",
]

_INNER_SEED_OFFSET = 500_009
_EPS_INNER_DIVISOR = 80.0
_FLOOR_REL = 1e-12


@dataclass
class EigenEstimate:
    """Current (eigenvalue, witness, epoch) triple; treat as immutable."""

    lambda_: float
    w: np.ndarray
    epoch: int


@dataclass
class SdpSolution:
    """Rank-one feasible point Y = Q Q^T of the covering view min Tr[Y] s.t. Tr[A Y] >= 1."""

    value: float
    Q: np.ndarray


class InfeasibleSdpError(ValueError):
    """The covering constraint Tr[A_t Y] >= 1 is unsatisfiable (A_t is numerically zero)."""


class EigenTracker:
    """Mutable solver state.  Build with ``new``; single-writer."""

    def __init__(self, eps_user: float, A0: SparseSymMatrix, seed: int):
        if not (0.0 < eps_user < 1.0):
            raise ValueError(f"eps_user must be in (0, 1), got {eps_user}")
        self.eps_user = float(eps_user)
        # The inner tracker's failure bar sits at 1 - 40*eps_inner; dividing
        # by 80 puts that bar at 1 - eps_user/2, leaving half the error
        # budget as margin for the scale estimate and cache drift.
        self.eps_inner = self.eps_user / _EPS_INNER_DIVISOR
        self.seed = int(seed)
        self.op = DynamicOperator(A0)
        self._lg = log2_guarded(A0.n)
        self._rho = 1.0 - self.eps_inner / self._lg
        self.nu = 0.0
        self.epoch = 0
        self.perm_dead = False
        self.inner: TrackerState | None = None
        self.floor = 0.0
        self._estimate: EigenEstimate | None = None

    @property
    def n(self) -> int:
        return self.op.n

    # -- construction ------------------------------------------------------

    def _estimate_scale(self) -> float:
        """High-accuracy power-method estimate of lambda_max(A0).

        Returns the largest Rayleigh *ratio* (w^T A w)/(w^T w) over the R
        copies.  The explicit ratio matters: it is exact on scalar matrices
        (every copy measures exactly c on c*I) and exactly equivariant under
        power-of-two rescaling of the input.
        """
        eps_nu = self.eps_inner / (4.0 * self._lg)
        cfg = PowerConfig.make(eps_nu, self.n, self.seed)
        W, _, _ = power_iterate_block(self.op.matvec_block, self.n, cfg.R, cfg.K, self.seed)
        best = 0.0
        for r in range(cfg.R):
            w = W[:, r]
            den = float(w @ w)
            if den > 0.0:
                best = max(best, float(self.op.quad_form(w)) / den)
        return best

    def _zero_estimate(self) -> EigenEstimate:
        w = np.zeros(self.n)
        if self._estimate is not None:
            w = self._estimate.w  # keep the last witness direction
        else:
            w[0] = 1.0
        return EigenEstimate(lambda_=0.0, w=w, epoch=self.epoch)

    def _go_permanently_dead(self) -> None:
        self.perm_dead = True
        self.nu = 0.0
        self._estimate = self._zero_estimate()

    def _adopt_witness(self, wit: _tracker.Witness) -> None:
        self._estimate = EigenEstimate(
            lambda_=self.nu * wit.quad, w=wit.w, epoch=self.epoch
        )

    # -- epoch machinery ---------------------------------------------------

    def _handle_death(self) -> None:
        """Shrink nu until the tracker revives or the floor is reached.

        The dead run's best cache, unscaled to an absolute Rayleigh quotient
        Qhat, lower-bounds lambda_max and (by the run's own convergence
        guarantee) is within a (1 - eps_eff) factor of it.  The smallest
        k >= 1 with Qhat >= (1 - eps_eff)*nu*rho^k therefore lands nu where
        the best witness clears the tracker's bar again; all k epochs are
        charged at once and the caches are rescaled exactly, so the shrink
        loop costs no matrix work at all unless floating-point corners force
        a genuine recompute.
        """
        inner = self.inner
        assert inner is not None
        while True:
            out = inner.last_outcome
            best_scaled = 0.0
            if out is not None and out.cand.quads.size:
                best_scaled = float(np.max(out.cand.quads))
            q_hat = best_scaled * self.nu
            if not (q_hat > 0.0) or not math.isfinite(q_hat):
                self._go_permanently_dead()
                return
            target = 1.0 - inner.eps_eff
            ratio = q_hat / (target * self.nu)
            if ratio >= 1.0:
                k = 1
            else:
                k = max(1, int(math.ceil(math.log(ratio) / math.log(self._rho))))
            # guard the log rounding: make nu*rho^k*target <= q_hat hold in floats
            for _ in range(2):
                if self.nu * self._rho**k * target <= q_hat:
                    break
                k += 1
            nu_new = self.nu * self._rho**k
            if not (nu_new >= self.floor) or nu_new <= 0.0:
                self._go_permanently_dead()
                return
            cache_factor = self.nu / nu_new
            self.nu = nu_new
            self.epoch += k
            self.op.set_scale(1.0 / nu_new)
            res = inner.rescale_caches(cache_factor)
            if res is not DEAD:
                self._adopt_witness(res)
                return
            # Float corner (or an empty candidate set): pay for a real
            # recompute at the new scale, then loop if even that fails.
            res = inner._adopt(inner._run_power_method())
            if res is not DEAD:
                self._adopt_witness(res)
                return

    # -- public operations -------------------------------------------------

    def update(self, v: SparseVector) -> EigenEstimate:
        if v.dim != self.n:
            raise ValueError(f"update: dimension mismatch ({v.dim} vs {self.n})")
        if self.perm_dead:
            self.op.push(v)  # keep the replay log complete
            self._estimate = self._zero_estimate()
            return self._estimate
        res = _tracker.update(self.inner, v)
        if res is DEAD:
            self._handle_death()
        else:
            self._adopt_witness(res)
        return self._estimate

    def query(self) -> EigenEstimate:
        """Read-only; returns the stored estimate without touching anything."""
        return self._estimate

    def witness_quality(self) -> float:
        """Freshly measured w^T A_t w of the current witness (unscaled).

        Unlike ``query().lambda_``, which reads the maintained cache, this
        recomputes the quadratic form against the live operator; harnesses
        use it to report cache drift.  Costs one operator quadratic form.
        """
        est = self._estimate
        if est is None:
            return 0.0
        q = float(self.op.quad_form(est.w))
        return q / self.op.scale if self.op.scale > 0.0 else q

    def sdp_query(self) -> SdpSolution:
        """Rank-one solution of min Tr[Y] s.t. Tr[A_t Y] >= 1, Y >= 0.

        Q = w_t / sqrt(lambda_t), so Tr[A_t Q Q^T] = (w^T A_t w)/lambda_t = 1
        up to cache drift, and the objective Tr[Y] = 1/lambda_t is within a
        (1 + eps_user) factor of the optimum 1/lambda_max.
        """
        est = self._estimate
        if self.perm_dead or est is None or not (est.lambda_ > 0.0):
            raise InfeasibleSdpError(
                "covering constraint Tr[A Y] >= 1 is unsatisfiable: "
                "tracked matrix is numerically zero"
            )
        Q = est.w / math.sqrt(est.lambda_)
        return SdpSolution(value=float(Q @ Q), Q=Q)

    def snapshot(self) -> dict:
        """JSON-serializable state summary for harnesses and logs."""
        st = (
            _tracker.stats(self.inner)
            if self.inner is not None
            else {"recompute_count": 0, "t": self.op.t, "touched_nnz_total": 0}
        )
        return {
            "epoch": int(self.epoch),
            "nu": float(self.nu),
            "lambda": float(self._estimate.lambda_) if self._estimate else 0.0,
            "t": int(st["t"]),
            "recompute_count": int(st["recompute_count"]),
            "touched_nnz_total": int(st["touched_nnz_total"]),
            "dead": bool(self.perm_dead),
        }


def new(eps_user: float, A0: SparseSymMatrix, seed: int) -> EigenTracker:
    """Fresh solver over A0 (PSD by promise).

    An all-zero A0 yields a permanently-dead solver that reports lambda = 0.
    """
    tr = EigenTracker(eps_user, A0, seed)
    nu = tr._estimate_scale()
    if not (nu > 0.0) or not math.isfinite(nu):
        tr._go_permanently_dead()
        return tr
    tr.nu = nu
    tr.floor = nu * _FLOOR_REL
    tr.op.set_scale(1.0 / nu)
    tr.inner = _tracker.init_from_operator(
        tr.eps_inner, tr.op, tr.seed + _INNER_SEED_OFFSET
    )
    if tr.inner.dead:
        tr._handle_death()
    else:
        tr._adopt_witness(tr.inner.current_witness())
    return tr


def update(tr: EigenTracker, v: SparseVector) -> EigenEstimate:
    return tr.update(v)


def query(tr: EigenTracker) -> EigenEstimate:
    return tr.query()


def sdp_query(tr: EigenTracker) -> SdpSolution:
    return tr.sdp_query()


def snapshot(tr: EigenTracker) -> dict:
    return tr.snapshot()
