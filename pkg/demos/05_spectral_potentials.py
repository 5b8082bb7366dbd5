"""Watch the spectrum's level potentials fall as a matrix drains.

The oracle bins the spectrum of each snapshot into narrow multiplicative
levels below lambda_0 and accumulates them into potentials Phi_j (how much
spectral mass sits at level j or higher).  Along a decremental stream these
potentials are non-increasing at every level — a structural invariant the
test suite checks on every profiled run.

Run:  python3 demos/05_spectral_potentials.py
"""

from dynev import oracle, streams

spec = streams.StreamSpec(mode="eig-drain", n=36, T=108, seed=21, depth=0.3)
A0, updates = streams.generate(spec)

lambda0 = oracle.exact_spectrum(A0.to_dense()).lambda_max
eps = 0.2

events = []
for t, dense in enumerate(streams.replay_dense(A0, updates)):
    if t % 18 == 0:
        events.append((f"t={t}", dense))

rows = oracle.potential_trace(events, lambda0, eps)
violations = oracle.potential_violations(rows)

profile0 = oracle.spectrum_profile(events[0][1], lambda0, eps)
n_levels = len(profile0.potentials)
shown = [0, n_levels // 4, n_levels // 2, n_levels - 1]

print(f"level width (1-eps/(5 log2(n/eps)))^j below lambda_0 = {lambda0:.4f}; "
      f"{n_levels} levels, eps = {eps}")
print(f"{'event':>6} | " + "  ".join(f"Phi_{j:<3d}" for j in shown)
      + "  dim_span")
for label, _ in events:
    phis = {j: phi for lab, j, phi in rows if lab == label}
    prof = oracle.spectrum_profile(dict(events)[label], lambda0, eps)
    print(f"{label:>6} | " + "  ".join(f"{phis[j]:>6d}" for j in shown)
          + f"  {prof.dim_span:>8d}")

print(f"\nmonotonicity violations across {len(events)} events: "
      f"{len(violations)}")
assert violations == []
