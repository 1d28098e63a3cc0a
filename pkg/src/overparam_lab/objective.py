"""Empirical and population objectives for the quadratic-activation student.

The student output on ``x`` is ``||x^T W||^2`` and the loss is

    f(W) = 1/(4n) sum_i (||x_i^T W||^2 - y_i)^2 .

Curvature is only ever needed as a quadratic form ``vec(V)^T H vec(V)``, which
is evaluated sample by sample, so the dK x dK Hessian is never formed and no
vectorisation order has to be chosen.
"""
from __future__ import annotations

import numpy as np

from .model import Dataset, TeacherProblem

__all__ = [
    "residuals",
    "empirical_loss",
    "empirical_gradient",
    "hessian_quadratic_form",
    "population_loss",
    "population_gradient",
    "population_hessian_quadratic_form",
]


def _check_w(W, d: int) -> np.ndarray:
    W = np.asarray(W, dtype=float)
    if W.ndim != 2 or W.shape[0] != d:
        raise ValueError(f"W must have shape ({d}, K), got {W.shape}")
    return W


def _check_pair(W, V):
    V = np.asarray(V, dtype=float)
    if V.shape != W.shape:
        raise ValueError(f"V shape {V.shape} does not match W shape {W.shape}")
    return V


def residuals(W, data: Dataset):
    """Return ``(P, r)`` with ``P = X W`` and ``r_i = ||x_i^T W||^2 - y_i``."""
    W = _check_w(W, data.d)
    P = data.X @ W
    r = np.einsum("ik,ik->i", P, P) - data.y
    return P, r


def empirical_loss(W, data: Dataset) -> float:
    _, r = residuals(W, data)
    # 1-D np.sum reduces pairwise
    return float(np.sum(r * r) / (4 * data.n))


def empirical_gradient(W, data: Dataset) -> np.ndarray:
    """Gradient of :func:`empirical_loss`; column k is
    ``1/n sum_i r_i (x_i^T w_k) x_i``."""
    P, r = residuals(W, data)
    return data.X.T @ (r[:, None] * P) / data.n


def hessian_quadratic_form(W, V, data: Dataset) -> float:
    """``vec(V)^T grad^2 f(W) vec(V)``, computed as

    ``1/n sum_i [ r_i ||x_i^T V||^2 + 2 (x_i^T W V^T x_i)^2 ]``.
    """
    W = _check_w(W, data.d)
    V = _check_pair(W, V)
    P, r = residuals(W, data)
    Q = data.X @ V
    cross = np.einsum("ik,ik->i", P, Q)
    terms = r * np.einsum("ik,ik->i", Q, Q) + 2.0 * cross * cross
    return float(np.sum(terms) / data.n)


def population_loss(W, teacher: TeacherProblem) -> float:
    """Expected loss over ``x ~ N(0, I_d)``.

    With ``M = W W^T - w* w*^T``, ``E[(x^T M x)^2] = tr(M)^2 + 2 ||M||_F^2``.
    """
    W = _check_w(W, teacher.d)
    ws = teacher.w_star
    # ||M||_F^2 expanded to avoid forming the d x d matrix
    G = W.T @ W
    a = W.T @ ws
    m_fro2 = np.sum(G * G) - 2.0 * (a @ a) + teacher.sq_norm ** 2
    m_tr = np.trace(G) - teacher.sq_norm
    return float((m_tr * m_tr + 2.0 * m_fro2) / 4.0)


def population_gradient(W, teacher: TeacherProblem) -> np.ndarray:
    """Expected gradient. Column k equals

    ``(3||w_k||^2 - ||w*||^2) w_k - 2 (w*^T w_k) w*
      + sum_{j != k} [2 (w_j^T w_k) w_j + ||w_j||^2 w_k]``.
    """
    W = _check_w(W, teacher.d)
    ws = teacher.w_star
    sq = np.einsum("dk,dk->k", W, W)
    # 2 W (W^T W) covers the j == k term 2||w_k||^2 w_k and the 2(w_j^T w_k) w_j sum
    return (
        2.0 * W @ (W.T @ W)
        + (np.sum(sq) - teacher.sq_norm) * W
        - 2.0 * np.outer(ws, W.T @ ws)
    )


def population_hessian_quadratic_form(W, V, teacher: TeacherProblem) -> float:
    """Expectation of :func:`hessian_quadratic_form` over the Gaussian design.

    Uses the unit-norm global optimum ``w* q^T`` for the label term, so
    ``||w* q^T||_F = ||w*||`` and ``||V^T w* q^T||_F = ||V^T w*||``.
    """
    W = _check_w(W, teacher.d)
    V = _check_pair(W, V)
    ws = teacher.w_star
    vv = np.sum(V * V)
    VtW = V.T @ W
    WtV = VtW.T
    Vtw = V.T @ ws
    WVt = W @ V.T
    label = teacher.sq_norm * vv + 2.0 * (Vtw @ Vtw)
    model = np.sum(W * W) * vv + 2.0 * np.sum(VtW * VtW)
    tr = np.trace(WtV)
    coupling = tr * tr + np.sum(WtV * WtV.T) + np.sum(WVt * WVt)
    return float(model - label + 2.0 * coupling)
