"""The 1-forms alpha = <Ju, du> and beta = <JH, du>, and the Lagrangian angle.

alpha is closed exactly when the link is isotropic (d alpha = 2 omega) and
co-closed exactly when <JH, u> = 0 (delta alpha = -<Ju, Delta_g u>).  On a
Legendrian link of top dimension n - 1 the cone is Lagrangian and its angle
theta satisfies d theta = beta.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .geometry import (
    J,
    Jet,
    induced_metric,
    inner,
    mean_curvature,
    metric_derivative,
    sphere_mean_curvature,
    to_complex,
)
from .hopf import alpha_jacobian
from .immersions import Immersion
from .sampling import grid_map
from .stationarity import (
    EXACT_TOL,
    alpha_coefficients,
    div_JH,
    isotropy_deviation_f,
    isotropy_residual,
)

# theta = SIGN * arg det_C(u, e_1, ..., e_{n-1}); fixed so that d theta = <JH, .>
LAGRANGIAN_ANGLE_SIGN = -1
PERIOD_NODES = 1024
ANGLE_STEP = 1e-4


class NotLegendrianError(ValueError):
    """Lagrangian angle requested where the cone is not Lagrangian."""


def wrap_angle(x):
    """Map angles to (-pi, pi]."""
    y = np.mod(np.asarray(x, dtype=float) + np.pi, 2 * np.pi) - np.pi
    return np.where(y == -np.pi, np.pi, y)


@dataclass
class OneFormSample:
    t: np.ndarray
    coeffs: np.ndarray


@dataclass
class AngleSample:
    t: np.ndarray
    theta: np.ndarray
    branch: np.ndarray


def alpha_form(jet: Jet) -> OneFormSample:
    return OneFormSample(jet.t, alpha_coefficients(jet))


def beta_form(jet: Jet) -> OneFormSample:
    """beta_i = <J H, u_i>."""
    return OneFormSample(jet.t, np.einsum("...d,...id->...i", J(mean_curvature(jet)), jet.first))


def _d_alpha(jet: Jet) -> np.ndarray:
    D = alpha_jacobian(jet)
    m = jet.m
    if m < 2:
        return np.zeros(jet.batch_shape)
    iu = np.triu_indices(m, 1)
    curl = D - np.swapaxes(D, -1, -2)
    return np.max(np.abs(curl[..., iu[1], iu[0]]), axis=-1)


def d_alpha_residual(imm: Immersion, t) -> np.ndarray:
    """max_{i<j} |d_j alpha_i - d_i alpha_j| from exact jets."""
    return _d_alpha(imm.jet(np.asarray(t, dtype=float), 2))


@dataclass
class DeltaAlpha:
    coordinate: np.ndarray   # -(1/sqrt g) d_j (sqrt g g^{ij} alpha_i)
    closed_form: np.ndarray  # -<Ju, Delta_g u>

    @property
    def difference(self) -> np.ndarray:
        return self.coordinate - self.closed_form


def _delta_alpha(jet: Jet) -> DeltaAlpha:
    metric = induced_metric(jet)
    ginv = metric.ginv
    alpha = alpha_coefficients(jet)
    D = alpha_jacobian(jet)
    dg = metric_derivative(jet)
    dginv = -np.einsum("...ac,...cdj,...db->...abj", ginv, dg, ginv)
    dlogsqrt = 0.5 * np.einsum("...ab,...abj->...j", ginv, dg)
    coord = -(np.einsum("...j,...ij,...i->...", dlogsqrt, ginv, alpha)
              + np.einsum("...ijj,...i->...", dginv, alpha)
              + np.einsum("...ij,...ij->...", ginv, D))
    closed = -inner(J(jet.u), mean_curvature(jet, metric))
    return DeltaAlpha(coord, closed)


def delta_alpha(imm: Immersion, t) -> DeltaAlpha:
    """Codifferential of alpha by the coordinate formula and by -<Ju, Delta u>."""
    return _delta_alpha(imm.jet(np.asarray(t, dtype=float), 2))


# ----------------------------------------------------------------------------
# Lagrangian angle
# ----------------------------------------------------------------------------

def _gram_schmidt(first: np.ndarray) -> np.ndarray:
    """Orthonormalise u_1, ..., u_m in coordinate order (real inner product)."""
    frame = []
    for i in range(first.shape[-2]):
        v = first[..., i, :].copy()
        for e in frame:
            v = v - inner(v, e)[..., None] * e
        nrm = np.linalg.norm(v, axis=-1)
        if np.any(nrm < 1e-12):
            raise ValueError("degenerate tangent frame")
        frame.append(v / nrm[..., None])
    return np.stack(frame, axis=-2)


def lagrangian_angle(jet: Jet, tol: float = 1e-8) -> AngleSample:
    """theta = SIGN * arg det_C[u, e_1, ..., e_{n-1}] in (-pi, pi].

    Requires m = n - 1 and a Legendrian point (|Pr Ju| < tol).
    """
    if jet.m != jet.n - 1:
        raise ValueError("the Lagrangian angle needs a link of dimension n - 1")
    f = isotropy_deviation_f(jet)
    if np.any(np.sqrt(f) >= tol) or np.any(isotropy_residual(jet) >= tol):
        raise NotLegendrianError("cone is not Lagrangian here; the angle is undefined")
    cols = np.concatenate([jet.u[..., None, :], _gram_schmidt(jet.first)], axis=-2)
    M = np.swapaxes(to_complex(cols), -1, -2)
    theta = wrap_angle(LAGRANGIAN_ANGLE_SIGN * np.angle(np.linalg.det(M)))
    return AngleSample(jet.t, theta, np.zeros(np.shape(theta), dtype=int))


def unwrap_angle_grid(theta: np.ndarray):
    """Unwrap a 2-D angle grid: first column along axis 0, then each row.

    Returns ``(unwrapped, branch)`` with ``unwrapped = theta + 2 pi branch``.
    """
    th = np.asarray(theta, dtype=float)
    out = np.empty_like(th)
    out[:, 0] = np.unwrap(th[:, 0])
    for i in range(th.shape[0]):
        row = np.unwrap(th[i])
        out[i] = row + (out[i, 0] - row[0])
    branch = np.rint((out - th) / (2 * np.pi)).astype(int)
    return out, branch


def angle_gradient_check(imm: Immersion, resolution: Sequence[int] = (128, 128),
                         h: float = ANGLE_STEP, tol: float = 1e-8) -> float:
    """max |d_i theta (central differences) - <JH, u_i>| over the grid.

    Steps whose wrapped angle jump exceeds pi/2 are retried at half the step.
    """
    pts = imm.domain.grid(resolution).reshape(-1, imm.m)
    beta = beta_form(imm.jet(pts, 2)).coeffs
    worst = 0.0
    for j in range(imm.m):
        e = np.zeros(imm.m)
        e[j] = 1.0
        step = np.full(len(pts), h)
        keep = imm.domain.inside(pts + h * e) & imm.domain.inside(pts - h * e)
        P = pts[keep]
        step = step[keep]
        for _ in range(6):
            tp = lagrangian_angle(imm.jet(P + step[:, None] * e, 1), tol).theta
            tm = lagrangian_angle(imm.jet(P - step[:, None] * e, 1), tol).theta
            jump = wrap_angle(tp - tm)
            bad = np.abs(jump) > np.pi / 2
            if not np.any(bad):
                break
            step = np.where(bad, step / 2, step)
        dtheta = jump / (2 * step)
        if dtheta.size:
            worst = max(worst, float(np.max(np.abs(dtheta - beta[keep, j]))))
    return worst


# ----------------------------------------------------------------------------
# periods and harmonicity
# ----------------------------------------------------------------------------

def beta_periods(imm: Immersion, nodes: int = PERIOD_NODES, base=None) -> np.ndarray:
    """Integrals of beta over the domain's fundamental cycles (trapezoid rule).

    Each cycle is the straight loop ``base + tau * v``, tau in [0, 1).
    """
    base = np.zeros(imm.m) if base is None else np.asarray(base, dtype=float)
    tau = np.arange(nodes) / nodes
    out = []
    for v in imm.domain.cycles:
        pts = base + tau[:, None] * v
        beta = beta_form(imm.jet(pts, 2)).coeffs
        out.append(float(np.mean(beta @ v)))
    return np.array(out)


@dataclass
class HarmonicityResult:
    residual: float            # max |div_L(JH) + <JH, H>|
    periods: np.ndarray
    theta_spread: Optional[float]
    max_hbar: float

    @property
    def exact(self) -> bool:
        return bool(np.all(np.abs(self.periods) <= EXACT_TOL))


def theta_harmonicity(imm: Immersion, resolution: Sequence[int] = (128, 128),
                      nodes: int = PERIOD_NODES, tol: float = 1e-8,
                      threads: int = 1) -> HarmonicityResult:
    """Laplacian of theta, periods of beta, and the spread of theta over the grid.

    ``theta_spread`` is None when the link is not Legendrian of dimension n - 1.
    """
    out = grid_map(imm, resolution, lambda jet: {
        "lap": div_JH(jet) + inner(J(mean_curvature(jet)), mean_curvature(jet)),
        "hbar": np.linalg.norm(sphere_mean_curvature(jet), axis=-1)}, order=3, threads=threads)
    spread = None
    if imm.m == imm.n - 1:
        try:
            th = lagrangian_angle(imm.jet(out["t"], 1), tol).theta
        except NotLegendrianError:
            th = None
        if th is not None:
            spread = float(np.max(np.abs(wrap_angle(th - th.flat[0]))))
    return HarmonicityResult(float(np.max(np.abs(out["lap"]))), beta_periods(imm, nodes),
                             spread, float(np.max(out["hbar"])))


def hodge_fields(jet: Jet) -> dict:
    """Pointwise Hodge identities for one grid chunk of order-2 jets."""
    da = _delta_alpha(jet)
    H = mean_curvature(jet)
    return {
        "d_alpha": _d_alpha(jet),
        "isotropy": isotropy_residual(jet),
        "delta_coord": da.coordinate,
        "delta_closed": da.closed_form,
        "JH_H": inner(J(H), H),
    }
