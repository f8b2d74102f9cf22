"""Vector and symmetric/skew tensor algebra in dimension 2 or 3.

Symmetric tensors are stored by their upper triangle so symmetry holds by
construction; skew tensors store only the strictly upper triangle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

SUPPORTED_DIMS = (2, 3)

UNIT_TOL = 1e-12


def as_vector(v, dim: int | None = None) -> np.ndarray:
    """Validate and return a 1d float array of dimension 2 or 3."""
    arr = np.asarray(v, dtype=float)
    if arr.ndim != 1 or arr.shape[0] not in SUPPORTED_DIMS:
        raise ValueError(f"expected a vector of dimension 2 or 3, got shape {arr.shape}")
    if dim is not None and arr.shape[0] != dim:
        raise ValueError(f"dimension mismatch: expected {dim}, got {arr.shape[0]}")
    return arr


def as_direction(v, dim: int | None = None) -> np.ndarray:
    """Validate a unit vector (norm within 1e-12 of one)."""
    arr = as_vector(v, dim)
    nrm = float(np.linalg.norm(arr))
    if abs(nrm - 1.0) > UNIT_TOL:
        raise ValueError(f"direction must be a unit vector, got |v| = {nrm}")
    return arr


def unit(v) -> np.ndarray:
    """Normalize a nonzero vector."""
    arr = as_vector(v)
    nrm = float(np.linalg.norm(arr))
    if nrm == 0.0:
        raise ValueError("cannot normalize the zero vector")
    return arr / nrm


def tri_pairs(dim: int) -> tuple[tuple[int, int], ...]:
    """Index pairs (i, j), i <= j, of the upper triangle in row-major order."""
    return tuple((i, j) for i in range(dim) for j in range(i, dim))


# Number of upper-triangle entries: 3 for n=2, 6 for n=3.
def tri_size(dim: int) -> int:
    return dim * (dim + 1) // 2


@dataclass(frozen=True)
class SymTensor:
    """Symmetric n x n tensor stored by its upper triangle (row-major)."""

    dim: int
    entries: tuple[float, ...]

    def __post_init__(self):
        if self.dim not in SUPPORTED_DIMS:
            raise ValueError(f"unsupported dimension {self.dim}")
        if len(self.entries) != tri_size(self.dim):
            raise ValueError(
                f"expected {tri_size(self.dim)} entries for dim {self.dim}, got {len(self.entries)}"
            )
        object.__setattr__(self, "entries", tuple(float(e) for e in self.entries))

    @staticmethod
    def zero(dim: int) -> "SymTensor":
        return SymTensor(dim, (0.0,) * tri_size(dim))

    @staticmethod
    def identity(dim: int) -> "SymTensor":
        ent = [0.0] * tri_size(dim)
        for k, (i, j) in enumerate(tri_pairs(dim)):
            if i == j:
                ent[k] = 1.0
        return SymTensor(dim, tuple(ent))

    @staticmethod
    def from_upper(dim: int, upper) -> "SymTensor":
        return SymTensor(dim, tuple(np.asarray(upper, dtype=float)))

    def to_matrix(self) -> np.ndarray:
        m = np.zeros((self.dim, self.dim))
        for k, (i, j) in enumerate(tri_pairs(self.dim)):
            m[i, j] = self.entries[k]
            m[j, i] = self.entries[k]
        return m

    def entry(self, i: int, j: int) -> float:
        if i > j:
            i, j = j, i
        return self.entries[tri_pairs(self.dim).index((i, j))]

    def apply(self, v) -> np.ndarray:
        """Matrix-vector product A v."""
        return self.to_matrix() @ as_vector(v, self.dim)

    def __add__(self, other: "SymTensor") -> "SymTensor":
        if not isinstance(other, SymTensor) or other.dim != self.dim:
            return NotImplemented
        return SymTensor(self.dim, tuple(a + b for a, b in zip(self.entries, other.entries)))

    def __sub__(self, other: "SymTensor") -> "SymTensor":
        if not isinstance(other, SymTensor) or other.dim != self.dim:
            return NotImplemented
        return SymTensor(self.dim, tuple(a - b for a, b in zip(self.entries, other.entries)))

    def __neg__(self) -> "SymTensor":
        return SymTensor(self.dim, tuple(-a for a in self.entries))

    def __mul__(self, s: float) -> "SymTensor":
        return SymTensor(self.dim, tuple(a * float(s) for a in self.entries))

    __rmul__ = __mul__


def sym_part(m) -> SymTensor:
    """Symmetric part (M + M^T)/2 of a general square matrix."""
    arr = np.asarray(m, dtype=float)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] not in SUPPORTED_DIMS:
        raise ValueError(f"expected a 2x2 or 3x3 matrix, got shape {arr.shape}")
    dim = arr.shape[0]
    s = (arr + arr.T) / 2.0
    return SymTensor(dim, tuple(s[i, j] for i, j in tri_pairs(dim)))


def sym_outer(a, b) -> SymTensor:
    """Symmetric tensor product (a (x) b + b (x) a) / 2."""
    va = as_vector(a)
    vb = as_vector(b, va.shape[0])
    dim = va.shape[0]
    return SymTensor(
        dim, tuple(0.5 * (va[i] * vb[j] + vb[i] * va[j]) for i, j in tri_pairs(dim))
    )


def frobenius(a: SymTensor) -> float:
    """Frobenius norm, off-diagonal entries counted twice."""
    total = 0.0
    for k, (i, j) in enumerate(tri_pairs(a.dim)):
        w = 1.0 if i == j else 2.0
        total += w * a.entries[k] * a.entries[k]
    return math.sqrt(total)


def contract(a: SymTensor, b: SymTensor) -> float:
    """Full double contraction sum_ij A_ij B_ij."""
    if a.dim != b.dim:
        raise ValueError(f"dimension mismatch: {a.dim} vs {b.dim}")
    total = 0.0
    for k, (i, j) in enumerate(tri_pairs(a.dim)):
        w = 1.0 if i == j else 2.0
        total += w * a.entries[k] * b.entries[k]
    return total


@dataclass(frozen=True)
class SkewTensor:
    """Skew-symmetric n x n tensor stored by its strictly upper triangle."""

    dim: int
    entries: tuple[float, ...]

    def __post_init__(self):
        if self.dim not in SUPPORTED_DIMS:
            raise ValueError(f"unsupported dimension {self.dim}")
        n_off = tri_size(self.dim) - self.dim
        if len(self.entries) != n_off:
            raise ValueError(
                f"expected {n_off} strictly-upper entries for dim {self.dim}, got {len(self.entries)}"
            )
        object.__setattr__(self, "entries", tuple(float(e) for e in self.entries))

    @staticmethod
    def zero(dim: int) -> "SkewTensor":
        return SkewTensor(dim, (0.0,) * (tri_size(dim) - dim))

    def to_matrix(self) -> np.ndarray:
        m = np.zeros((self.dim, self.dim))
        pairs = [(i, j) for i in range(self.dim) for j in range(i + 1, self.dim)]
        for k, (i, j) in enumerate(pairs):
            m[i, j] = self.entries[k]
            m[j, i] = -self.entries[k]
        return m

    def apply(self, v) -> np.ndarray:
        return self.to_matrix() @ as_vector(v, self.dim)


# ----------------------------------------------------------------------------
# Batched upper-triangle helpers. Arrays of shape (..., tri_size(dim)) hold one
# symmetric tensor per row; used by field evaluation on stacked point arrays.

def tri_from_matrices(mats: np.ndarray) -> np.ndarray:
    """Upper triangles of a (..., n, n) stack of symmetric matrices."""
    dim = mats.shape[-1]
    cols = [0.5 * (mats[..., i, j] + mats[..., j, i]) for i, j in tri_pairs(dim)]
    return np.stack(cols, axis=-1)


def tri_outer(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Batched symmetric product of (..., n) vector arrays."""
    dim = a.shape[-1]
    cols = [0.5 * (a[..., i] * b[..., j] + a[..., j] * b[..., i]) for i, j in tri_pairs(dim)]
    return np.stack(cols, axis=-1)


def tri_norm(tri: np.ndarray, dim: int) -> np.ndarray:
    """Batched Frobenius norm of upper-triangle rows."""
    w = np.array([1.0 if i == j else 2.0 for i, j in tri_pairs(dim)])
    return np.sqrt(np.sum(w * tri * tri, axis=-1))


def tri_quadratic(tri: np.ndarray, xi: np.ndarray, dim: int) -> np.ndarray:
    """Batched quadratic form xi^T A xi for upper-triangle rows."""
    out = 0.0
    for k, (i, j) in enumerate(tri_pairs(dim)):
        w = 1.0 if i == j else 2.0
        out = out + w * tri[..., k] * xi[i] * xi[j]
    return out


def sym_from_tri(tri, dim: int) -> SymTensor:
    return SymTensor(dim, tuple(np.asarray(tri, dtype=float)))
