"""Small dense linear algebra and quadrature helpers shared across modules."""

from __future__ import annotations

import numpy as np
import scipy.linalg


def simpson_weights(n_intervals: int, h: float) -> np.ndarray:
    """Composite Simpson weights for n_intervals uniform intervals of width h.

    Needs n_intervals >= 2. Odd interval counts are closed with a 3/8 rule on
    the last three intervals, keeping fourth order throughout.
    """
    if n_intervals < 2:
        raise ValueError("composite Simpson needs at least 2 intervals")
    w = np.zeros(n_intervals + 1)
    if n_intervals % 2 == 0:
        body = n_intervals
    else:
        body = n_intervals - 3
        if body < 0:
            raise ValueError("odd interval counts need n_intervals >= 3")
    if body > 0:
        w[0] += 1.0
        w[1:body:2] += 4.0
        w[2:body:2] += 2.0
        w[body] += 1.0
        w[: body + 1] *= h / 3.0
    if n_intervals % 2 == 1:
        w38 = np.array([1.0, 3.0, 3.0, 1.0]) * (3.0 * h / 8.0)
        w[body:] += w38
    return w


def lu_rcond(a: np.ndarray):
    """LU factorization with partial pivoting plus a reciprocal 1-norm condition estimate.

    Returns ((lu, piv), rcond). rcond is 0.0 for exactly singular input.
    """
    a = np.asarray(a, dtype=float)
    anorm = np.linalg.norm(a, 1) if a.size else 0.0
    with np.errstate(all="ignore"):
        import warnings

        with warnings.catch_warnings():
            warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
            lu, piv = scipy.linalg.lu_factor(a, check_finite=False)
    if not np.all(np.isfinite(lu)):
        return (lu, piv), 0.0
    gecon = scipy.linalg.get_lapack_funcs("gecon", (lu,))
    rcond, info = gecon(lu, anorm, norm="1")
    if info != 0:
        rcond = 0.0
    return (lu, piv), float(rcond)


def equilibrated_rcond(a: np.ndarray) -> float:
    """Reciprocal condition estimate after scaling each row to unit max norm."""
    a = np.asarray(a, dtype=float)
    if a.size == 0:
        return 1.0
    scale = np.max(np.abs(a), axis=1, keepdims=True)
    scale[scale == 0.0] = 1.0
    _, rcond = lu_rcond(a / scale)
    return rcond


def expm2(mats: np.ndarray) -> np.ndarray:
    """Matrix exponential of a stack of real 2x2 matrices, closed form.

    expm(A) = e^mu (c1*I + c2*D) with D = A - mu*I traceless, D^2 = delta^2 * I,
    c1 = cosh(delta), c2 = sinh(delta)/delta (trigonometric branch for
    delta^2 < 0, quadratic series near zero).
    """
    mats = np.asarray(mats, dtype=float)
    single = mats.ndim == 2
    a = mats.reshape(-1, 2, 2)
    mu = 0.5 * (a[:, 0, 0] + a[:, 1, 1])
    d = a - mu[:, None, None] * np.eye(2)
    dsq = d[:, 0, 0] ** 2 + d[:, 0, 1] * d[:, 1, 0]
    c1 = np.empty_like(dsq)
    c2 = np.empty_like(dsq)
    tiny = np.abs(dsq) < 1e-12
    pos = (dsq > 0) & ~tiny
    neg = (dsq < 0) & ~tiny
    s = np.sqrt(dsq[pos])
    c1[pos] = np.cosh(s)
    c2[pos] = np.sinh(s) / s
    w = np.sqrt(-dsq[neg])
    c1[neg] = np.cos(w)
    c2[neg] = np.sin(w) / w
    c1[tiny] = 1.0 + dsq[tiny] / 2.0
    c2[tiny] = 1.0 + dsq[tiny] / 6.0
    out = c1[:, None, None] * np.eye(2) + c2[:, None, None] * d
    out *= np.exp(mu)[:, None, None]
    return out[0] if single else out.reshape(mats.shape)


def derivative_interior(values: np.ndarray, h: float) -> np.ndarray:
    """Fourth-order centered first derivative at interior nodes 2..n-3."""
    v = np.asarray(values, dtype=float)
    if v.shape[-1] < 5:
        raise ValueError("need at least 5 nodes for the 5-point stencil")
    return (v[..., :-4] - 8.0 * v[..., 1:-3] + 8.0 * v[..., 3:-1] - v[..., 4:]) / (12.0 * h)
