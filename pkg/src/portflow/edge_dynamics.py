"""Per-edge 2x2 hyperbolic data: coefficients, eigenstructure, Riemann transform.

Each edge carries the system  dt p + M(x) dx p + N(x) p = 0  on [0, 1] with
strictly hyperbolic M. The Riemann basis F(x) has the eigenvector for the
larger eigenvalue in its first column; u = F^-1 p decouples the principal
part into transport at speeds lambda_plus > lambda_minus.
"""

from __future__ import annotations

import numpy as np

from .errors import (
    NotStrictlyHyperbolicError,
    SignChangeError,
    SingularBasisError,
    ZeroEigenvalueError,
)

TOL_DELTA = 1e-10
TOL_ZERO = 1e-10
DET_FLOOR = 1e-8


class CoefficientField:
    """A 2x2 real matrix field on [0,1]: constant, or tabulated with linear interpolation."""

    def __init__(self, kind: str, data: np.ndarray):
        self.kind = kind
        self.data = np.asarray(data, dtype=float)
        if kind == "constant":
            if self.data.shape != (2, 2):
                raise ValueError("constant field needs a 2x2 matrix")
        elif kind == "tabulated":
            if self.data.ndim != 3 or self.data.shape[1:] != (2, 2):
                raise ValueError("tabulated field needs samples of shape (S+1, 2, 2)")
            if self.data.shape[0] < 3:
                raise ValueError("tabulated field needs at least 3 sample nodes (S >= 2)")
        else:
            raise ValueError(f"unknown field kind {kind!r}")

    @classmethod
    def constant(cls, matrix) -> "CoefficientField":
        return cls("constant", np.asarray(matrix, dtype=float))

    @classmethod
    def tabulated(cls, samples) -> "CoefficientField":
        return cls("tabulated", np.asarray(samples, dtype=float))

    @classmethod
    def zero(cls) -> "CoefficientField":
        return cls("constant", np.zeros((2, 2)))

    @property
    def is_constant(self) -> bool:
        return self.kind == "constant"

    @property
    def is_zero(self) -> bool:
        return self.is_constant and not self.data.any()

    def __call__(self, x) -> np.ndarray:
        """Evaluate at x (scalar or array); returns (..., 2, 2)."""
        x = np.asarray(x, dtype=float)
        if self.is_constant:
            out = np.broadcast_to(self.data, x.shape + (2, 2))
            return out.copy()
        s = self.data.shape[0] - 1
        pos = np.clip(x * s, 0.0, float(s))
        idx = np.minimum(pos.astype(np.intp), s - 1)
        w = (pos - idx)[..., None, None]
        return (1.0 - w) * self.data[idx] + w * self.data[idx + 1]


def eigen_decompose(m, tol_delta: float = TOL_DELTA, tol_zero: float = TOL_ZERO):
    """Eigenvalues and unit eigenvectors of a strictly hyperbolic 2x2 matrix.

    Returns (lam_plus, lam_minus, f_plus, f_minus) with lam_minus < lam_plus,
    eigenvectors of unit Euclidean norm with positive first nonzero component.
    """
    m = np.asarray(m, dtype=float)
    lam_p, lam_m, f = _eigen_stack(m[None, ...], tol_delta, tol_zero, where="")
    return float(lam_p[0]), float(lam_m[0]), f[0, :, 0].copy(), f[0, :, 1].copy()


def _eigen_stack(mats: np.ndarray, tol_delta: float, tol_zero: float, where: str):
    """Vectorized decomposition of a stack (n, 2, 2); raises on any bad node."""
    tr = mats[:, 0, 0] + mats[:, 1, 1]
    det = mats[:, 0, 0] * mats[:, 1, 1] - mats[:, 0, 1] * mats[:, 1, 0]
    delta = tr * tr - 4.0 * det
    bad = delta <= tol_delta
    if bad.any():
        i = int(np.argmax(bad))
        raise NotStrictlyHyperbolicError(
            f"discriminant {delta[i]:.3e} <= {tol_delta:.1e}{where} (node {i})"
        )
    root = np.sqrt(delta)
    lam_p = 0.5 * (tr + root)
    lam_m = 0.5 * (tr - root)
    small = np.minimum(np.abs(lam_p), np.abs(lam_m)) <= tol_zero
    if small.any():
        i = int(np.argmax(small))
        raise ZeroEigenvalueError(f"eigenvalue magnitude <= {tol_zero:.1e}{where} (node {i})")
    f = np.empty((mats.shape[0], 2, 2))
    f[:, :, 0] = _eigvec(mats, lam_p)
    f[:, :, 1] = _eigvec(mats, lam_m)
    return lam_p, lam_m, f


def _eigvec(mats: np.ndarray, lam: np.ndarray) -> np.ndarray:
    """Unit eigenvector (b, lam-a) or (lam-d, c), whichever is larger, sign-fixed."""
    a, b = mats[:, 0, 0], mats[:, 0, 1]
    c, d = mats[:, 1, 0], mats[:, 1, 1]
    v1 = np.stack([b, lam - a], axis=1)
    v2 = np.stack([lam - d, c], axis=1)
    n1 = np.einsum("ij,ij->i", v1, v1)
    n2 = np.einsum("ij,ij->i", v2, v2)
    v = np.where((n1 >= n2)[:, None], v1, v2)
    v = v / np.linalg.norm(v, axis=1, keepdims=True)
    lead = np.where(np.abs(v[:, 0]) > 1e-12, v[:, 0], v[:, 1])
    return v * np.sign(lead)[:, None]


class EdgeSystem:
    """Eigen-decomposed edge data on a uniform grid of G+1 nodes.

    Attributes:
        edge: edge id.
        grid: number of intervals G.
        xs: the G+1 grid nodes on [0, 1].
        lam_plus, lam_minus: nodal eigenvalue arrays, lam_minus < lam_plus.
        basis: nodal Riemann basis F, shape (G+1, 2, 2), columns (f_plus, f_minus).
        basis_inv: nodal inverses of F.
        alpha: number of positive eigenvalues (constant along the edge).
    """

    def __init__(
        self,
        edge: int,
        m_field: CoefficientField,
        n_field: CoefficientField | None = None,
        grid: int = 64,
        explicit_basis=None,
        tol_delta: float = TOL_DELTA,
        tol_zero: float = TOL_ZERO,
        det_floor: float = DET_FLOOR,
    ):
        if grid < 2:
            raise ValueError("edge grid needs G >= 2")
        self.edge = edge
        self.m_field = m_field
        self.n_field = n_field if n_field is not None else CoefficientField.zero()
        self.grid = int(grid)
        self.xs = np.linspace(0.0, 1.0, self.grid + 1)
        self._tol_delta = tol_delta
        self._tol_zero = tol_zero

        mats = m_field(self.xs)
        lam_p, lam_m, f = _eigen_stack(mats, tol_delta, tol_zero, where=f" on edge {edge}")
        self._check_signs(lam_p, lam_m)
        if not m_field.is_constant:
            mids = 0.5 * (self.xs[:-1] + self.xs[1:])
            lam_pm, lam_mm, _ = _eigen_stack(
                m_field(mids), tol_delta, tol_zero, where=f" between nodes of edge {edge}"
            )
            self._check_signs(np.concatenate([lam_p, lam_pm]), np.concatenate([lam_m, lam_mm]))

        if explicit_basis is not None:
            if not m_field.is_constant:
                raise ValueError("an explicit Riemann basis requires a constant M field")
            fb = np.asarray(explicit_basis, dtype=float)
            if fb.shape != (2, 2):
                raise ValueError("explicit basis must be 2x2 with columns (f_plus, f_minus)")
            self._check_explicit(mats[0], lam_p[0], lam_m[0], fb)
            f = np.broadcast_to(fb, (self.grid + 1, 2, 2)).copy()

        detf = f[:, 0, 0] * f[:, 1, 1] - f[:, 0, 1] * f[:, 1, 0]
        if np.min(np.abs(detf)) < det_floor:
            i = int(np.argmin(np.abs(detf)))
            raise SingularBasisError(
                f"|det F| = {abs(detf[i]):.3e} < {det_floor:.1e} on edge {edge} (node {i})"
            )
        inv = np.empty_like(f)
        inv[:, 0, 0] = f[:, 1, 1]
        inv[:, 0, 1] = -f[:, 0, 1]
        inv[:, 1, 0] = -f[:, 1, 0]
        inv[:, 1, 1] = f[:, 0, 0]
        inv /= detf[:, None, None]

        self.lam_plus = lam_p
        self.lam_minus = lam_m
        self.basis = f
        self.basis_inv = inv
        self.alpha = int(lam_p[0] > 0) + int(lam_m[0] > 0)
        self._nbar = None

    def _check_signs(self, lam_p: np.ndarray, lam_m: np.ndarray) -> None:
        for name, lam in (("lambda_plus", lam_p), ("lambda_minus", lam_m)):
            s = np.sign(lam)
            if not np.all(s == s[0]):
                raise SignChangeError(f"{name} changes sign along edge {self.edge}")

    @staticmethod
    def _check_explicit(m0, lam_p, lam_m, fb) -> None:
        scale = max(np.max(np.abs(fb)), 1.0)
        for col, lam in ((0, lam_p), (1, lam_m)):
            resid = m0 @ fb[:, col] - lam * fb[:, col]
            if np.max(np.abs(resid)) > 1e-8 * scale * max(abs(lam), 1.0):
                raise ValueError(
                    f"explicit basis column {col} is not an eigenvector for eigenvalue {lam:g}"
                )

    @property
    def is_constant(self) -> bool:
        """True when M (hence the eigenstructure and speeds) is x-independent."""
        return self.m_field.is_constant

    def speed_values(self, comp: int) -> np.ndarray:
        """Nodal Riemann speed |lambda| for component 0 (plus) or 1 (minus)."""
        lam = self.lam_plus if comp == 0 else self.lam_minus
        return np.abs(lam)

    # -- Riemann transform ------------------------------------------------

    def riemann_transform(self, p: np.ndarray) -> np.ndarray:
        """u = F^-1 p nodewise; p has shape (2, G+1)."""
        p = np.asarray(p, dtype=float)
        return np.einsum("nij,jn->in", self.basis_inv, p)

    def inverse_transform(self, u: np.ndarray) -> np.ndarray:
        """p = F u nodewise; u has shape (2, G+1)."""
        u = np.asarray(u, dtype=float)
        return np.einsum("nij,jn->in", self.basis, u)

    # -- lower-order coupling ----------------------------------------------

    def _dx_basis(self) -> np.ndarray:
        if self.is_constant:
            return np.zeros_like(self.basis)
        h = 1.0 / self.grid
        d = np.empty_like(self.basis)
        d[1:-1] = (self.basis[2:] - self.basis[:-2]) / (2.0 * h)
        d[0] = (self.basis[1] - self.basis[0]) / h
        d[-1] = (self.basis[-1] - self.basis[-2]) / h
        return d

    def nbar_nodes(self) -> np.ndarray:
        """Transformed lower-order matrix F^-1 M (dx F) + F^-1 N F at the grid nodes."""
        if self._nbar is None:
            mats = self.m_field(self.xs)
            nmat = self.n_field(self.xs)
            dxf = self._dx_basis()
            inner = np.einsum("nij,njk->nik", mats, dxf) + np.einsum(
                "nij,njk->nik", nmat, self.basis
            )
            self._nbar = np.einsum("nij,njk->nik", self.basis_inv, inner)
        return self._nbar

    def lower_order_matrix(self, x: float) -> np.ndarray:
        """N-bar evaluated at x by linear interpolation between grid nodes."""
        nodes = self.nbar_nodes()
        pos = np.clip(float(x) * self.grid, 0.0, float(self.grid))
        idx = min(int(pos), self.grid - 1)
        w = pos - idx
        return (1.0 - w) * nodes[idx] + w * nodes[idx + 1]

    @property
    def has_lower_order(self) -> bool:
        return (not self.n_field.is_zero) or (not self.is_constant)


def classify_edge(sys: EdgeSystem) -> int:
    """Number of positive eigenvalues of M on this edge (0, 1 or 2)."""
    return sys.alpha
