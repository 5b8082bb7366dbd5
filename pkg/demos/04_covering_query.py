"""Query a covering-program view of the tracked matrix.

At any point during a decremental stream, ``sdp_query`` returns a rank-one
feasible solution Q built from the maintained witness: it satisfies
Q^T A Q >= 1 and its value tr(Q Q^T) is within (1+eps) of the optimum
1/lambda_max.  When the matrix has drained to (numerically) zero the program
is infeasible and the query raises.

Run:  python3 demos/04_covering_query.py
"""

import numpy as np

from dynev import eigtracker, oracle, sparse, streams

spec = streams.StreamSpec(mode="cholesky-drain", n=40, T=30, seed=11,
                          eps_target=0.15)
A0, updates = streams.generate(spec)

tracker = eigtracker.new(0.15, A0, seed=3)
dense = A0.to_dense()

print(f"{'t':>4}  {'lambda_max':>11}  {'1/lambda_max':>12}  "
      f"{'sdp value':>10}  {'Q^T A Q':>8}")
checkpoints = {0, 10, 20, 30}
for t in range(len(updates) + 1):
    if t in checkpoints:
        lam = oracle.exact_spectrum(dense).lambda_max
        sol = eigtracker.sdp_query(tracker)
        quad = float(sol.Q @ dense @ sol.Q)
        print(f"{t:>4}  {lam:>11.5f}  {1.0 / lam:>12.5f}  "
              f"{sol.value:>10.5f}  {quad:>8.4f}")
        assert quad >= 1.0 - 1e-9
        assert sol.value <= (1.0 + 0.15) / lam + 1e-9
    if t < len(updates):
        eigtracker.update(tracker, updates[t])
        v = updates[t].to_dense()
        dense = dense - np.outer(v, v)

# drain everything that's left and show the infeasible case
vals, vecs = np.linalg.eigh((dense + dense.T) / 2)
for lam, w in zip(vals, vecs.T):
    if lam > 1e-13:
        u = np.sqrt(lam) * w
        nz = np.nonzero(np.abs(u) > 0)[0]
        eigtracker.update(tracker, sparse.SparseVector(spec.n, nz, u[nz]))

try:
    eigtracker.sdp_query(tracker)
except eigtracker.InfeasibleSdpError as exc:
    print(f"\nafter draining the rest: {exc}")
