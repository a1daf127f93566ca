"""Ambient linear algebra on C^n = R^{2n} and pointwise geometry of immersions.

Vectors are real arrays whose last axis has length 2n: slots ``0..n-1`` hold
real parts and slots ``n..2n-1`` imaginary parts.  Every function here is
vectorised over arbitrary leading (batch) axes.

Sign conventions
----------------
``mean_curvature`` returns ``H = Delta_g u``, the normal projection of
``g^{ij} u_ij`` in R^{2n}.  The mean curvature inside the unit sphere is then
``Hbar = H + m u``, which is orthogonal to ``u``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np


class DegenerateMetricError(ValueError):
    """Raised when the induced metric is singular (non-immersed point)."""


# ----------------------------------------------------------------------------
# ambient vectors
# ----------------------------------------------------------------------------

def J(v: np.ndarray) -> np.ndarray:
    """Complex structure, J(x, y) = (-y, x), i.e. multiplication by i."""
    v = np.asarray(v)
    n = v.shape[-1] // 2
    return np.concatenate([-v[..., n:], v[..., :n]], axis=-1)


def inner(v: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Euclidean inner product of R^{2n} along the last axis."""
    return np.einsum("...k,...k->...", v, w)


def symplectic_pair(v: np.ndarray, w: np.ndarray) -> np.ndarray:
    """<Jv, w>, the standard symplectic form."""
    return inner(J(v), w)


def to_real(z: np.ndarray) -> np.ndarray:
    """C^n -> R^{2n} with the (Re..., Im...) slot layout."""
    z = np.asarray(z, dtype=complex)
    return np.concatenate([z.real, z.imag], axis=-1)


def to_complex(v: np.ndarray) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    n = v.shape[-1] // 2
    return v[..., :n] + 1j * v[..., n:]


# ----------------------------------------------------------------------------
# jets and metric
# ----------------------------------------------------------------------------

@dataclass(frozen=True)
class Jet:
    """Value and partial derivatives of an immersion at parameter point(s).

    Shapes (with ``...`` the batch axes): ``t (..., m)``, ``u (..., 2n)``,
    ``first (..., m, 2n)``, ``second (..., m, m, 2n)``,
    ``third (..., m, m, m, 2n)`` or ``None``.
    """

    t: np.ndarray
    u: np.ndarray
    first: np.ndarray
    second: Optional[np.ndarray] = None
    third: Optional[np.ndarray] = None

    @property
    def m(self) -> int:
        return self.first.shape[-2]

    @property
    def n(self) -> int:
        return self.u.shape[-1] // 2

    @property
    def order(self) -> int:
        if self.third is not None:
            return 3
        if self.second is not None:
            return 2
        return 1

    @property
    def batch_shape(self) -> tuple:
        return self.u.shape[:-1]

    def require(self, order: int) -> None:
        if self.order < order:
            raise ValueError(f"jet of order {self.order} given, order {order} required")


@dataclass(frozen=True)
class MetricData:
    g: np.ndarray
    ginv: np.ndarray
    det: np.ndarray


def induced_metric(jet: Jet, check: bool = True) -> MetricData:
    """g_ij = <u_i, u_j> with inverse and determinant.

    Raises DegenerateMetricError when the metric has rank < m anywhere in the
    batch (relative test against the metric's own scale).
    """
    g = np.einsum("...ik,...jk->...ij", jet.first, jet.first)
    det = np.linalg.det(g)
    if check:
        scale = np.max(np.abs(np.diagonal(g, axis1=-2, axis2=-1)), axis=-1)
        bad = ~(det > 1e-13 * np.maximum(scale, 1e-300) ** jet.m)
        if np.any(bad):
            idx = np.argwhere(np.atleast_1d(bad))[0]
            raise DegenerateMetricError(
                f"induced metric is degenerate (det={np.atleast_1d(det)[tuple(idx)]:.3e})"
            )
    ginv = np.linalg.inv(g)
    return MetricData(g=g, ginv=ginv, det=det)


def tangent_projection_coeffs(jet: Jet, metric: MetricData, v: np.ndarray) -> np.ndarray:
    """Coefficients c^k with Pr_T v = c^k u_k."""
    pairing = np.einsum("...lk,...k->...l", jet.first, v)
    return np.einsum("...kl,...l->...k", metric.ginv, pairing)


def normal_part(jet: Jet, metric: MetricData, v: np.ndarray) -> np.ndarray:
    """Component of v orthogonal to span{u_1, ..., u_m} in R^{2n}."""
    c = tangent_projection_coeffs(jet, metric, v)
    return v - np.einsum("...k,...kd->...d", c, jet.first)


def mean_curvature(jet: Jet, metric: Optional[MetricData] = None) -> np.ndarray:
    """Mean curvature vector in R^{2n}; equals Delta_g u."""
    jet.require(2)
    metric = metric or induced_metric(jet)
    trace = np.einsum("...ij,...ijd->...d", metric.ginv, jet.second)
    return normal_part(jet, metric, trace)


def sphere_mean_curvature(jet: Jet, metric: Optional[MetricData] = None) -> np.ndarray:
    """Mean curvature inside the unit sphere, H + m u."""
    return mean_curvature(jet, metric) + jet.m * jet.u


def second_fundamental_form(jet: Jet, metric: Optional[MetricData] = None) -> np.ndarray:
    """A_ij: part of u_ij orthogonal to span{u, u_1, ..., u_m}.

    Shape ``(..., m, m, 2n)``.  Its g-trace is the sphere mean curvature.
    """
    jet.require(2)
    metric = metric or induced_metric(jet)
    pairing = np.einsum("...ijd,...ld->...ijl", jet.second, jet.first)
    c = np.einsum("...kl,...ijl->...ijk", metric.ginv, pairing)
    A = jet.second - np.einsum("...ijk,...kd->...ijd", c, jet.first)
    uu = inner(jet.u, jet.u)[..., None, None]
    radial = np.einsum("...ijd,...d->...ij", A, jet.u) / uu
    return A - radial[..., None] * jet.u[..., None, None, :]


def metric_derivative(jet: Jet) -> np.ndarray:
    """dg[..., a, b, j] = d g_ab / dt^j."""
    jet.require(2)
    t1 = np.einsum("...ajd,...bd->...abj", jet.second, jet.first)
    return t1 + np.swapaxes(t1, -3, -2)


def mean_curvature_derivative(jet: Jet, metric: Optional[MetricData] = None):
    """Return ``(H, dH)`` with ``dH[..., j, :] = d H / dt^j`` from an order-3 jet.

    H = Y - c^k u_k with Y = g^{ab} u_ab and c = g^{-1} <Y, u_.>; the derivative is
    expanded by the chain rule through g^{-1}.
    """
    jet.require(3)
    metric = metric or induced_metric(jet)
    ginv = metric.ginv
    dg = metric_derivative(jet)
    dginv = -np.einsum("...ac,...cdj,...db->...abj", ginv, dg, ginv)

    Y = np.einsum("...ab,...abd->...d", ginv, jet.second)
    dY = np.einsum("...abj,...abd->...jd", dginv, jet.second) + np.einsum(
        "...ab,...abjd->...jd", ginv, jet.third
    )
    d = np.einsum("...ld,...d->...l", jet.first, Y)
    dd = np.einsum("...jd,...ld->...jl", dY, jet.first) + np.einsum(
        "...d,...ljd->...jl", Y, jet.second
    )
    c = np.einsum("...kl,...l->...k", ginv, d)
    dc = np.einsum("...klj,...l->...jk", dginv, d) + np.einsum("...kl,...jl->...jk", ginv, dd)

    H = Y - np.einsum("...k,...kd->...d", c, jet.first)
    dH = (
        dY
        - np.einsum("...k,...kjd->...jd", c, jet.second)
        - np.einsum("...jk,...kd->...jd", dc, jet.first)
    )
    return H, dH


def divergence(jet: Jet, metric: MetricData, dV: np.ndarray) -> np.ndarray:
    """div_L V = g^{ij} <d_j V, u_i> for an ambient field V given its derivatives.

    ``dV[..., j, :]`` is the partial derivative of V along t^j.  V need not be
    tangent to L.
    """
    return np.einsum("...ij,...jd,...id->...", metric.ginv, dV, jet.first)
