"""Exact spectrum oracle (rotation-based eigensolver) and spectrum-level
profiling utilities."""

from __future__ import annotations

import csv
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dynev import oracle, sparse

from conftest import random_gram, rotated_diag, sym


# ---------------------------------------------------------------------------
# exact_spectrum


def test_diagonal_matrix_sorted_with_permuted_identity_vectors():
    es = oracle.exact_spectrum(np.diag([3.0, 1.0, 2.0]))
    assert np.array_equal(es.values, [3.0, 2.0, 1.0])
    expect_axis = [0, 2, 1]  # eigenvalue 3 lives on axis 0, 2 on axis 2, ...
    for col, axis in enumerate(expect_axis):
        assert abs(es.vectors[axis, col]) == pytest.approx(1.0, abs=1e-12)
        mask = np.ones(3, dtype=bool)
        mask[axis] = False
        assert np.all(np.abs(es.vectors[mask, col]) <= 1e-12)


def test_matches_numpy_on_rotated_diagonal():
    values = np.array([5.0, 3.5, 2.0, 1.0, 0.5, 0.25])
    A, _ = rotated_diag(values, seed=2)
    es = oracle.exact_spectrum(A)
    ref = np.sort(np.linalg.eigvalsh(A))[::-1]
    assert np.allclose(es.values, ref, atol=1e-10)
    # eigen-equation residual
    for i in range(6):
        r = A @ es.vectors[:, i] - es.values[i] * es.vectors[:, i]
        assert np.linalg.norm(r) <= 1e-9


def test_zero_matrix_spectrum_is_zero():
    es = oracle.exact_spectrum(np.zeros((4, 4)))
    assert np.array_equal(es.values, np.zeros(4))


def test_accepts_sparse_container_and_enforces_cap():
    A = sym(np.diag([2.0, 1.0]))
    assert oracle.exact_spectrum(A).lambda_max == pytest.approx(2.0, abs=1e-12)
    with pytest.raises(ValueError):
        oracle.exact_spectrum(np.eye(8), cap=4)


def test_warm_restart_agrees_with_cold():
    A, Q = rotated_diag([4.0, 2.0, 1.0, 0.5], seed=9)
    cold = oracle.exact_spectrum(A)
    B = A - 0.05 * np.outer(Q[:, 0], Q[:, 0])
    warm = oracle.exact_spectrum_warm(B, cold.vectors)
    ref = np.sort(np.linalg.eigvalsh(B))[::-1]
    assert np.allclose(warm.values, ref, atol=1e-10)


def test_spectrum_on_gram_matrix_nonnegative():
    A = random_gram(25, 40, seed=4)
    es = oracle.exact_spectrum(A)
    assert es.lambda_min >= -1e-10
    assert np.all(np.diff(es.values) <= 1e-12)  # sorted descending


# ---------------------------------------------------------------------------
# spectrum_profile


def test_flat_spectrum_concentrates_in_level_zero():
    n = 30
    prof = oracle.spectrum_profile(np.full(n, 2.5), lambda0=2.5, eps=0.2)
    assert prof.levels[0] == n
    assert np.all(prof.levels[1:] == 0)
    assert np.all(prof.potentials == n)
    assert prof.below == 0
    assert prof.important[0] == 0
    assert prof.dim_span == n


def test_span_dimension_threshold():
    # the span counts eigenvalues >= (1 - 3*eps) * lambda0
    prof = oracle.spectrum_profile(np.array([1.0, 0.5]), lambda0=1.0, eps=0.2)
    assert prof.dim_span == 2  # 0.5 >= 0.4
    prof = oracle.spectrum_profile(np.array([1.0, 0.5]), lambda0=1.0, eps=0.1)
    assert prof.dim_span == 1  # 0.5 < 0.7


def test_everything_below_span_cut():
    prof = oracle.spectrum_profile(np.array([0.2, 0.1]), lambda0=1.0, eps=0.2)
    assert prof.dim_span == 0


def test_level_width_and_count_formulas():
    n, eps = 64, 0.2
    prof = oracle.spectrum_profile(np.ones(n), lambda0=1.0, eps=eps)
    lg = math.log2(n / eps)
    assert prof.level_width == pytest.approx(eps / (5.0 * lg), rel=1e-12)
    assert len(prof.levels) == math.ceil(15.0 * lg)


def test_boundary_snap_is_stable():
    # an eigenvalue a hair (<= 1e-10) past a level boundary snaps back;
    # the width must come from a profile of the same size (it depends on n)
    w = oracle.spectrum_profile(np.ones(4), lambda0=1.0, eps=0.2).level_width
    vals = np.array([1.0, 1.0 - w, 1.0 - w + 1e-12, 1.0 - w - 1e-12])
    prof = oracle.spectrum_profile(vals, lambda0=1.0, eps=0.2)
    assert prof.levels[0] == 1
    assert prof.levels[1] == 3


def test_validation_errors():
    with pytest.raises(ValueError):
        oracle.spectrum_profile(np.ones(3), lambda0=0.0, eps=0.2)
    with pytest.raises(ValueError):
        oracle.spectrum_profile(np.ones(3), lambda0=1.0, eps=1.5)
    with pytest.raises(ValueError):
        oracle.spectrum_profile(np.array([]), lambda0=1.0, eps=0.2)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000))
def test_partition_is_exact(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 40))
    lambda0 = float(rng.uniform(0.5, 4.0))
    vals = rng.uniform(-0.2 * lambda0, lambda0, size=n)
    prof = oracle.spectrum_profile(vals, lambda0=lambda0, eps=0.2)
    assert int(prof.levels.sum()) + prof.below == n
    assert np.array_equal(prof.potentials, np.cumsum(prof.levels))


# ---------------------------------------------------------------------------
# potential traces


def test_potential_trace_rows_and_monotone_drain():
    lambda0, eps = 1.0, 0.2
    snaps = [
        ("t=0", np.array([1.0, 0.9, 0.8])),
        ("t=5", np.array([0.9, 0.8, 0.0])),
        ("t=9", np.array([0.8, 0.0, 0.0])),
    ]
    rows = oracle.potential_trace(snaps, lambda0, eps)
    labels = {r[0] for r in rows}
    assert labels == {"t=0", "t=5", "t=9"}
    assert oracle.potential_violations(rows) == []


def test_potential_violations_detects_increase():
    lambda0, eps = 1.0, 0.2
    snaps = [
        ("a", np.array([1.0, 0.2])),
        ("b", np.array([1.0, 1.0])),  # mass moved UP: potential must rise
    ]
    rows = oracle.potential_trace(snaps, lambda0, eps)
    assert oracle.potential_violations(rows) != []


def test_potential_csv_format(tmp_path):
    rows = oracle.potential_trace(
        [("t=0", np.array([1.0, 0.5])), ("t=1", np.array([0.5, 0.5]))], 1.0, 0.2)
    p = tmp_path / "phi.csv"
    oracle.write_potential_csv(p, rows)
    with open(p, newline="") as fh:
        got = list(csv.reader(fh))
    assert got[0] == ["event", "j", "Phi_j"]
    assert len(got) == 1 + len(rows)
    for raw, row in zip(got[1:], rows):
        assert raw[0] == row[0]
        assert int(raw[1]) == row[1]
        assert int(raw[2]) == row[2]


def test_drain_run_potentials_mostly_strictly_decreasing():
    """Decremental drain: at recompute events the cumulative level-dimension
    counts never increase, and most events strictly lose mass."""
    from dynev import eigtracker, streams

    n, T, eps = 60, 240, 0.2
    spec = streams.StreamSpec(mode="cholesky-drain", n=n, T=T, seed=13, eps_target=eps)
    A0, updates = streams.generate(spec)
    lambda0 = float(oracle.exact_spectrum(A0).lambda_max)

    tr = eigtracker.new(eps, A0, seed=1)
    dense = A0.to_dense().copy()
    events = [("t=0", oracle.exact_spectrum(dense).values.copy())]
    last_rc = eigtracker.snapshot(tr)["recompute_count"]
    for t, v in enumerate(updates, start=1):
        eigtracker.update(tr, v)
        dv = np.zeros(n)
        dv[v.idx] = v.val
        dense -= np.outer(dv, dv)
        rc = eigtracker.snapshot(tr)["recompute_count"]
        if rc != last_rc:
            events.append((f"t={t}", oracle.exact_spectrum(dense).values.copy()))
            last_rc = rc

    assert len(events) >= 3  # the drain must actually trigger recomputes
    rows = oracle.potential_trace(events, lambda0, eps)
    assert oracle.potential_violations(rows) == []

    # >= 90% of consecutive event pairs lose mass in some level (strict
    # decrease of at least one cumulative count; none may increase, per the
    # violations check above).  Once the window is empty the potential is
    # identically zero and cannot strictly decrease, so those pairs are
    # excluded.
    vecs: dict[str, list[int]] = {}
    for label, j, phi in rows:
        vecs.setdefault(label, []).append(phi)
    order = [label for label, _ in events]
    live_pairs = [(a, b) for a, b in zip(order, order[1:]) if vecs[a][-1] > 0]
    assert live_pairs
    strict = sum(
        1
        for a, b in live_pairs
        if any(pb < pa for pa, pb in zip(vecs[a], vecs[b]))
    )
    assert strict >= 0.9 * len(live_pairs)
