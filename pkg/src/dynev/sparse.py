"""Sparse storage and the implicit decremental operator.

The whole library works against one operator abstraction::

    value(op) = scale * (A0 - sum_i v_i v_i^T)

where ``A0`` is a sparse symmetric PSD base matrix and the ``v_i`` are the
rank-one update vectors pushed so far.  The operator is never materialized:
``matvec`` applies the base and subtracts the update contributions through a
stacked sparse matrix ``U`` whose rows are the update vectors
(``y = scale*(A0 x - U^T (U x))``).  ``quad_form`` uses the same identity,
``w^T A_t w = w^T A0 w - ||U w||^2``, and single-update cache maintenance goes
through :func:`quad_form_increment` which only touches ``nnz(v)`` entries.

Dense vectors are plain float64 numpy arrays throughout (``DenseVector`` is a
type alias, not a wrapper class).
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
import scipy.io
import scipy.sparse as sp

__all__ = [
    "DenseVector",
    "SparseVector",
    "SparseSymMatrix",
    "DynamicOperator",
    "matvec",
    "quad_form",
    "quad_form_increment",
    "push_update",
    "gaussian_vector",
    "read_matrix_market",
    "write_matrix_market",
    "write_dense_matrix_market",
    "read_stream_jsonl",
    "write_stream_jsonl",
]

# Dense vectors are bare numpy arrays; the alias exists so signatures can say
# what they mean.
DenseVector = np.ndarray


def _as_rng(rng_or_seed) -> np.random.Generator:
    if isinstance(rng_or_seed, np.random.Generator):
        return rng_or_seed
    return np.random.default_rng(rng_or_seed)


def gaussian_vector(n: int, rng_or_seed) -> DenseVector:
    """Length-``n`` vector of iid standard normals.

    Deterministic for a given integer seed; also accepts an existing
    ``numpy.random.Generator`` (drawn from, advancing its state).
    """
    if n < 1:
        raise ValueError(f"gaussian_vector: n must be >= 1, got {n}")
    return _as_rng(rng_or_seed).standard_normal(n)


@dataclass(frozen=True)
class SparseVector:
    """Sparse vector with sorted unique indices and no stored zeros.

    ``idx`` is strictly increasing int64, ``val`` float64 of the same length.
    ``nnz == 0`` is legal and acts as a no-op wherever the vector is used.
    """

    dim: int
    idx: np.ndarray
    val: np.ndarray

    def __post_init__(self):
        idx = np.asarray(self.idx, dtype=np.int64)
        val = np.asarray(self.val, dtype=np.float64)
        object.__setattr__(self, "idx", idx)
        object.__setattr__(self, "val", val)
        if self.dim < 1:
            raise ValueError(f"SparseVector: dim must be >= 1, got {self.dim}")
        if idx.ndim != 1 or val.ndim != 1 or idx.shape != val.shape:
            raise ValueError("SparseVector: idx and val must be 1-d arrays of equal length")
        if idx.size:
            if idx[0] < 0 or idx[-1] >= self.dim:
                raise ValueError(
                    f"SparseVector: indices must lie in [0, {self.dim}), got range "
                    f"[{idx.min()}, {idx.max()}]"
                )
            if np.any(np.diff(idx) <= 0):
                raise ValueError("SparseVector: indices must be strictly increasing")
            if not np.all(np.isfinite(val)):
                raise ValueError("SparseVector: values must be finite")
            if np.any(val == 0.0):
                raise ValueError("SparseVector: explicit zeros are not stored")

    @property
    def nnz(self) -> int:
        return int(self.idx.size)

    @classmethod
    def from_dense(cls, x, dim: int | None = None) -> "SparseVector":
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 1:
            raise ValueError("SparseVector.from_dense: expected a 1-d array")
        idx = np.nonzero(x)[0]
        return cls(dim if dim is not None else x.size, idx, x[idx])

    def to_dense(self) -> DenseVector:
        out = np.zeros(self.dim)
        out[self.idx] = self.val
        return out

    def dot(self, w: DenseVector) -> float:
        """Inner product with a dense vector, touching only nnz entries."""
        if w.shape[0] != self.dim:
            raise ValueError(f"dot: dimension mismatch ({w.shape[0]} vs {self.dim})")
        return float(self.val @ w[self.idx])

    def norm_sq(self) -> float:
        return float(self.val @ self.val)


class SparseSymMatrix:
    """Symmetric sparse matrix in CSR form with the full (two-triangle) pattern."""

    def __init__(self, csr: sp.csr_matrix):
        csr = sp.csr_matrix(csr, dtype=np.float64)
        if csr.shape[0] != csr.shape[1]:
            raise ValueError(f"SparseSymMatrix: matrix must be square, got {csr.shape}")
        # Canonicalize so equality/round-trip checks are well defined.
        csr.sum_duplicates()
        csr.eliminate_zeros()
        csr.sort_indices()
        d = csr - csr.T
        if d.nnz and np.max(np.abs(d.data)) > 1e-12 * max(1.0, np.max(np.abs(csr.data), initial=0.0)):
            raise ValueError("SparseSymMatrix: input is not symmetric")
        self.csr = csr

    @property
    def n(self) -> int:
        return self.csr.shape[0]

    @property
    def nnz(self) -> int:
        return int(self.csr.nnz)

    @classmethod
    def from_dense(cls, a) -> "SparseSymMatrix":
        a = np.asarray(a, dtype=np.float64)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError("SparseSymMatrix.from_dense: expected a square 2-d array")
        if not np.allclose(a, a.T, rtol=0.0, atol=1e-12 * max(1.0, np.abs(a).max(initial=0.0))):
            raise ValueError("SparseSymMatrix.from_dense: input is not symmetric")
        return cls(sp.csr_matrix(np.asarray((a + a.T) / 2.0)))

    @classmethod
    def from_coo(cls, n: int, rows, cols, vals) -> "SparseSymMatrix":
        """Build from triplets.

        Accepts either a full symmetric triplet list or a single triangle
        (the missing mirror entries are filled in).  Mixed/partial input that
        is neither symmetric nor triangular is rejected.
        """
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        vals = np.asarray(vals, dtype=np.float64)
        m = sp.csr_matrix(sp.coo_matrix((vals, (rows, cols)), shape=(n, n)))
        lower = sp.tril(m, k=-1)
        upper = sp.triu(m, k=1)
        if lower.nnz == 0 or upper.nnz == 0:
            # one triangle given: mirror it
            m = m + m.T - sp.diags(m.diagonal())
        return cls(sp.csr_matrix(m))

    @classmethod
    def identity(cls, n: int) -> "SparseSymMatrix":
        return cls(sp.identity(n, format="csr", dtype=np.float64))

    @classmethod
    def diag(cls, d) -> "SparseSymMatrix":
        return cls(sp.csr_matrix(sp.diags(np.asarray(d, dtype=np.float64))))

    def to_dense(self) -> np.ndarray:
        return self.csr.toarray()

    def matvec(self, x: DenseVector) -> DenseVector:
        if x.shape[0] != self.n:
            raise ValueError(f"matvec: dimension mismatch ({x.shape[0]} vs {self.n})")
        return self.csr @ x


class DynamicOperator:
    """Implicit decremental operator ``scale * (A0 - sum_i v_i v_i^T)``.

    Updates are append-only; the base is never mutated by a push.  The stacked
    update matrix ``U`` (one row per update) is rebuilt lazily after pushes.
    ``touched_nnz`` counts the nonzeros read by matvec/quad_form calls — the
    library's work measure (wall time is reported separately and is
    informational only).
    """

    def __init__(self, base: SparseSymMatrix, scale: float = 1.0):
        if not np.isfinite(scale) or scale <= 0.0:
            raise ValueError(f"DynamicOperator: scale must be positive and finite, got {scale}")
        self.base = base
        self.scale = float(scale)
        self.updates: list[SparseVector] = []
        self.t = 0
        self.touched_nnz = 0
        # Append-only CSR buffers for the stacked update matrix (capacity
        # doubles on demand, so a push is amortized O(nnz(v)) and a stack
        # (re)build is O(1) slicing instead of re-copying the whole log).
        self._ubuf_idx = np.empty(64, dtype=np.int64)
        self._ubuf_val = np.empty(64, dtype=np.float64)
        self._ubuf_ptr = np.zeros(65, dtype=np.int64)
        self._ubuf_nnz = 0
        self._ubuf_rows = 0
        self._nnz_updates = 0
        self._stack: sp.csr_matrix | None = None
        self._stack_rows = 0

    @property
    def n(self) -> int:
        return self.base.n

    @property
    def nnz_updates_total(self) -> int:
        return self._nnz_updates

    @property
    def cost_per_matvec(self) -> int:
        """Nonzeros touched by one matvec: nnz(A0) + sum_i nnz(v_i)."""
        return self.base.nnz + self._nnz_updates

    def set_scale(self, scale: float) -> None:
        """Change the global scale.  Caller owns invalidating any cached quads."""
        if not np.isfinite(scale) or scale <= 0.0:
            raise ValueError(f"set_scale: scale must be positive and finite, got {scale}")
        self.scale = float(scale)

    def push(self, v: SparseVector) -> None:
        if v.dim != self.n:
            raise ValueError(f"push_update: dimension mismatch ({v.dim} vs {self.n})")
        self.updates.append(v)
        need = self._ubuf_nnz + v.nnz
        if need > self._ubuf_idx.size:
            cap = max(2 * self._ubuf_idx.size, need)
            self._ubuf_idx = np.concatenate([self._ubuf_idx, np.empty(cap - self._ubuf_idx.size, dtype=np.int64)])
            self._ubuf_val = np.concatenate([self._ubuf_val, np.empty(cap - self._ubuf_val.size, dtype=np.float64)])
        if self._ubuf_rows + 2 > self._ubuf_ptr.size:
            grow = np.zeros(self._ubuf_ptr.size, dtype=np.int64)
            self._ubuf_ptr = np.concatenate([self._ubuf_ptr, grow])
        self._ubuf_idx[self._ubuf_nnz : need] = v.idx
        self._ubuf_val[self._ubuf_nnz : need] = v.val
        self._ubuf_nnz = need
        self._ubuf_rows += 1
        self._ubuf_ptr[self._ubuf_rows] = need
        self._nnz_updates += v.nnz
        self.t += 1
        self._stack = None
        # nnz == 0 updates are accepted no-ops; they still advance t.

    def _stacked(self) -> sp.csr_matrix | None:
        """CSR view over the update log (one row per update), cached until
        the next push."""
        if self._ubuf_rows == 0:
            return None
        if self._stack is None or self._stack_rows != self._ubuf_rows:
            self._stack = sp.csr_matrix(
                (
                    self._ubuf_val[: self._ubuf_nnz],
                    self._ubuf_idx[: self._ubuf_nnz],
                    self._ubuf_ptr[: self._ubuf_rows + 1],
                ),
                shape=(self._ubuf_rows, self.n),
            )
            self._stack_rows = self._ubuf_rows
        return self._stack

    def matvec(self, x: DenseVector) -> DenseVector:
        if x.shape[0] != self.n:
            raise ValueError(f"matvec: dimension mismatch ({x.shape[0]} vs {self.n})")
        y = self.base.csr @ x
        u = self._stacked()
        if u is not None:
            y -= u.T @ (u @ x)
        y *= self.scale
        self.touched_nnz += self.cost_per_matvec
        if not np.all(np.isfinite(y)):
            raise FloatingPointError("matvec: non-finite output")
        return y

    def matvec_block(self, X: np.ndarray) -> np.ndarray:
        """Apply to ``R`` columns at once (shape ``(n, R)``)."""
        if X.shape[0] != self.n:
            raise ValueError(f"matvec: dimension mismatch ({X.shape[0]} vs {self.n})")
        Y = self.base.csr @ X
        u = self._stacked()
        if u is not None:
            Y -= u.T @ (u @ X)
        Y *= self.scale
        self.touched_nnz += self.cost_per_matvec * X.shape[1]
        if not np.all(np.isfinite(Y)):
            raise FloatingPointError("matvec: non-finite output")
        return Y

    def quad_form(self, w: DenseVector) -> float:
        """``w^T value(op) w`` computed from scratch (not via cached increments)."""
        if w.shape[0] != self.n:
            raise ValueError(f"quad_form: dimension mismatch ({w.shape[0]} vs {self.n})")
        q = float(w @ (self.base.csr @ w))
        u = self._stacked()
        if u is not None:
            s = u @ w
            q -= float(s @ s)
        self.touched_nnz += self.cost_per_matvec
        return self.scale * q

    def quad_form_block(self, W: np.ndarray) -> np.ndarray:
        """Fresh quadratic forms for each column of ``W`` (shape ``(n, R)``)."""
        if W.shape[0] != self.n:
            raise ValueError(f"quad_form: dimension mismatch ({W.shape[0]} vs {self.n})")
        q = np.einsum("ij,ij->j", W, self.base.csr @ W)
        u = self._stacked()
        if u is not None:
            s = u @ W
            q = q - np.einsum("ij,ij->j", s, s)
        self.touched_nnz += self.cost_per_matvec * W.shape[1]
        return self.scale * q

    def to_dense(self) -> np.ndarray:
        """Materialize the current value densely (tests and small oracles only)."""
        a = self.base.to_dense()
        u = self._stacked()
        if u is not None:
            ud = u.toarray()
            a = a - ud.T @ ud
        return self.scale * a

    def compact(self) -> "DynamicOperator":
        """Fold the update log into a new base; never called automatically.

        Returns a fresh operator whose base equals the current value at
        scale 1 divided by ``scale`` — i.e. ``value(new) == value(self)`` with
        an empty update log.  The folded base is generally denser than ``A0``
        and no longer exactly PSD at float precision; intended for replay
        convenience, not for the hot path.
        """
        folded = self.to_dense() / self.scale
        folded = (folded + folded.T) / 2.0
        out = DynamicOperator(SparseSymMatrix.from_dense(folded), scale=self.scale)
        out.t = self.t
        return out


# ---------------------------------------------------------------------------
# Operation-style wrappers (the API the rest of the library is written
# against; thin delegations to the methods above).


def matvec(op: DynamicOperator, x: DenseVector) -> DenseVector:
    return op.matvec(x)


def quad_form(op: DynamicOperator, w: DenseVector) -> float:
    return op.quad_form(w)


def quad_form_increment(q_prev: float, v: SparseVector, w: DenseVector, scale: float) -> float:
    """Cached-quad maintenance: ``q_new = q_prev - scale * (v . w)^2``.

    Touches only ``nnz(v)`` entries of ``w``; the caller is responsible for
    having ``q_prev`` measured against the same operator scale.
    """
    d = v.dot(w)
    return q_prev - scale * d * d


def push_update(op: DynamicOperator, v: SparseVector) -> None:
    """Append a rank-one update.  No PSD feasibility check is performed."""
    op.push(v)


# ---------------------------------------------------------------------------
# File formats.


def write_matrix_market(path, a: SparseSymMatrix, comment: str = "") -> None:
    """Write as Matrix Market coordinate real symmetric (1-based on disk)."""
    scipy.io.mmwrite(str(path), sp.coo_matrix(a.csr), comment=comment, symmetry="symmetric")


def write_dense_matrix_market(path, X: np.ndarray, comment: str = "") -> None:
    """Write a dense rectangular matrix in Matrix Market array format."""
    scipy.io.mmwrite(str(path), np.asarray(X, dtype=np.float64), comment=comment)


def read_matrix_market(path) -> SparseSymMatrix:
    try:
        m = scipy.io.mmread(str(path))
    except Exception as e:  # surface the offending file in the message
        raise ValueError(f"{path}: not a readable Matrix Market file: {e}") from e
    if m.shape[0] != m.shape[1]:
        raise ValueError(f"{path}: matrix is not square: {m.shape}")
    return SparseSymMatrix(sp.csr_matrix(m))


def write_stream_jsonl(path, updates: list[SparseVector]) -> None:
    """One JSON object per update: ``{"t": k, "idx": [...], "val": [...]}``.

    ``t`` is the 1-based update ordinal; indices are 0-based and sorted.
    """
    with open(path, "w") as f:
        for k, v in enumerate(updates, start=1):
            f.write(
                json.dumps({"t": k, "idx": v.idx.tolist(), "val": v.val.tolist()})
                + "\n"
            )


def read_stream_jsonl(path, dim: int) -> list[SparseVector]:
    """Parse an update stream, validating ordinals and index bounds.

    Errors carry 1-based line numbers so CLI users can find bad records.
    """
    out: list[SparseVector] = []
    with open(path) as f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as e:
                raise ValueError(f"{path}: line {lineno}: invalid JSON: {e}") from e
            if not isinstance(rec, dict) or not {"t", "idx", "val"} <= rec.keys():
                raise ValueError(f'{path}: line {lineno}: expected keys "t", "idx", "val"')
            if rec["t"] != len(out) + 1:
                raise ValueError(
                    f"{path}: line {lineno}: update ordinal t={rec['t']} out of order "
                    f"(expected {len(out) + 1})"
                )
            try:
                out.append(SparseVector(dim, np.asarray(rec["idx"]), np.asarray(rec["val"])))
            except ValueError as e:
                raise ValueError(f"{path}: line {lineno}: {e}") from e
    return out
