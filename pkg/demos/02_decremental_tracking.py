"""Track the top eigenvalue of a matrix being drained by rank-one removals.

Generates a Gram-factor instance, removes factor columns one at a time, and
prints the tracked estimate next to the exact value at a few checkpoints.
Most updates are absorbed by cheap witness-cache bookkeeping; the tracker
only reruns its power method when every cached witness has degraded, so the
recompute counter stays far below one solve per update.  (Epochs are
fine-grained multiplicative shrink steps of the estimate's upper bound, so
their count is large by design.)

Run:  python3 demos/02_decremental_tracking.py
"""

import numpy as np

from dynev import eigtracker, oracle, streams

n, T, eps = 60, 180, 0.2
spec = streams.StreamSpec(mode="cholesky-drain", n=n, T=T, seed=11, eps_target=eps)
A0, updates = streams.generate(spec)

tr = eigtracker.new(eps, A0, seed=1)
dense = A0.to_dense().copy()

print(f"n = {n}, T = {T}, eps = {eps} (guarantee: estimate within a "
      f"factor {1 - eps} of the true top)\n")
print(f"{'t':>5} {'estimate':>12} {'exact':>12} {'ratio':>8} {'epoch':>6} {'recomputes':>11}")
checkpoints = {0, 1, 30, 60, 90, 120, 150, 180}
for t, v in enumerate(updates, start=1):
    est = eigtracker.update(tr, v)
    dv = np.zeros(n)
    dv[v.idx] = v.val
    dense -= np.outer(dv, dv)
    if t in checkpoints:
        snap = eigtracker.snapshot(tr)
        exact = float(oracle.exact_spectrum(dense).lambda_max)
        ratio = est.lambda_ / exact if exact > 0 else float("nan")
        print(f"{t:>5} {est.lambda_:>12.6f} {exact:>12.6f} {ratio:>8.4f} "
              f"{snap['epoch']:>6} {snap['recompute_count']:>11}")

snap = eigtracker.snapshot(tr)
print(f"\ntotal recomputes: {snap['recompute_count']} over {T} updates "
      f"({snap['recompute_count'] / T:.2f} per step; a naive tracker "
      f"re-solves every step)")
print(f"total touched nonzeros: {snap['touched_nnz_total']:,} — dominated "
      f"by the fixed per-recompute iteration budget, which pays off as n "
      f"grows while the recompute count stays polylogarithmic per step")
