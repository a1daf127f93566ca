"""Isotropy and Legendrian residuals, the deviation f, and stationarity of the cone.

The link-level quantities are

* ``alpha_i = <Ju, u_i>`` (vanishes exactly at Legendrian points of an isotropic link),
* ``f = g^{ij} alpha_i alpha_j = |Pr Ju|^2`` in ``[0, 1]``,
* ``S1 = div_L(J H)`` and ``S2 = <J H, u>`` with ``H = Delta_g u``.

The cone C(L) = {r u} is Hamiltonian stationary when both S1 and S2 vanish.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .geometry import (
    J,
    Jet,
    divergence,
    induced_metric,
    inner,
    mean_curvature,
    mean_curvature_derivative,
)
from .immersions import ConeImmersion, Immersion
from .sampling import grid_map

# identities evaluated from exact jets vs. finite-difference fallbacks
EXACT_TOL = 1e-10
FD_TOL = 1e-6
FD_STEP = 1e-4


def hysteresis_flag(value: float, tol: float) -> Optional[bool]:
    """True below tol, False above 10*tol, None (indeterminate) in between."""
    if value < tol:
        return True
    if value > 10 * tol:
        return False
    return None


def symplectic_matrix(jet: Jet) -> np.ndarray:
    """omega_ij = <J u_i, u_j>, shape (..., m, m)."""
    return np.einsum("...id,...jd->...ij", J(jet.first), jet.first)


def isotropy_residual(jet: Jet) -> np.ndarray:
    """max_{i<j} |<J u_i, u_j>|; identically 0 for curves."""
    m = jet.m
    if m < 2:
        return np.zeros(jet.batch_shape)
    w = np.abs(symplectic_matrix(jet))
    iu = np.triu_indices(m, 1)
    return np.max(w[..., iu[0], iu[1]], axis=-1)


def alpha_coefficients(jet: Jet) -> np.ndarray:
    return np.einsum("...d,...id->...i", J(jet.u), jet.first)


def legendrian_residual(jet: Jet):
    """Return ``(alpha, norm)`` with alpha_i = <Ju, u_i> and norm = |Pr Ju|."""
    return alpha_coefficients(jet), np.sqrt(isotropy_deviation_f(jet))


def isotropy_deviation_f(jet: Jet) -> np.ndarray:
    """f = |Pr Ju|^2 (= g^{ij} alpha_i alpha_j).

    Ju is projected onto an orthonormal tangent frame from a QR factorisation,
    which keeps f within a few ulp of [0, |u|^2]; contracting with an explicit
    g^{-1} overshoots by about cond(g) ulp.
    """
    induced_metric(jet)  # degeneracy check
    Q, _ = np.linalg.qr(np.swapaxes(jet.first, -1, -2))
    proj = np.einsum("...di,...d->...i", Q, J(jet.u))
    return np.sum(proj**2, axis=-1)


def project_Ju(jet: Jet) -> np.ndarray:
    """Coordinate coefficients c^j = g^{ij} alpha_i of Pr Ju."""
    alpha = alpha_coefficients(jet)
    return np.einsum("...ij,...i->...j", induced_metric(jet).ginv, alpha)


def stationarity_S2(jet: Jet) -> np.ndarray:
    """<J H, u> (equals -<Delta_g u, J u>)."""
    return inner(J(mean_curvature(jet)), jet.u)


def div_JH(jet: Jet) -> np.ndarray:
    """div_L(J H) from an order-3 jet."""
    metric = induced_metric(jet)
    _, dH = mean_curvature_derivative(jet, metric)
    return divergence(jet, metric, J(dH))


def _div_JH_fd(imm: Immersion, t: np.ndarray, h: float = FD_STEP) -> np.ndarray:
    jet = imm.jet(t, 1)
    metric = induced_metric(jet)
    parts = []
    for j in range(imm.m):
        e = np.zeros(imm.m)
        e[j] = h
        Hp = mean_curvature(imm.jet(t + e, 2))
        Hm = mean_curvature(imm.jet(t - e, 2))
        parts.append((Hp - Hm) / (2 * h))
    dH = np.stack(parts, axis=-2)
    return divergence(jet, metric, J(dH))


def stationarity_S1(imm: Immersion, t, method: str = "exact") -> np.ndarray:
    """div_L(J H) at t.

    ``method="exact"`` uses third-derivative rules (falling back to central
    differencing of H when the immersion has none); ``method="fd"`` forces the
    finite-difference route, accurate to about ``FD_TOL``.
    """
    t = np.asarray(t, dtype=float)
    if method == "exact" and imm.max_order >= 3:
        return div_JH(imm.jet(t, 3))
    if method not in ("exact", "fd"):
        raise ValueError(f"unknown method {method!r}")
    return _div_JH_fd(imm, t)


def div_Ju_identity(imm: Immersion, t) -> np.ndarray:
    """div_L(Ju) = g^{ij} <J u_j, u_i>, zero for any immersion."""
    jet = imm.jet(np.asarray(t, dtype=float), 1)
    metric = induced_metric(jet)
    return divergence(jet, metric, J(jet.first))


@dataclass(frozen=True)
class StationarityResidual:
    """The two r-independent parts of div_C(J H_C) at one link point."""

    S1: float
    S2: float

    def cone_residual(self, r):
        """div of J H_C on the cone at radius r.

        The link at radius r has metric r^2 g and the cone mean curvature
        scales like 1/r, so both parts enter with the same weight 1/r^2.
        """
        r = np.asarray(r, dtype=float)
        return (self.S1 - self.S2) / r**2


def stationarity_residual(imm: Immersion, t) -> StationarityResidual:
    t = np.asarray(t, dtype=float)
    s1 = stationarity_S1(imm, t)
    s2 = stationarity_S2(imm.jet(t, 2))
    return StationarityResidual(float(s1), float(s2))


def cone_divergence_direct(imm: Immersion, t, r) -> np.ndarray:
    """div_C(J H_C) computed on the cone itself, as an (m+1)-fold in R^{2n}.

    Independent of the S1/S2 assembly: the cone is built as its own immersion
    and the generic mean-curvature machinery is run on it.
    """
    t = np.asarray(t, dtype=float)
    r = np.broadcast_to(np.asarray(r, dtype=float), t.shape[:-1])
    cone = ConeImmersion(imm, float(np.min(r)), float(np.max(r)))
    x = np.concatenate([r[..., None], t], axis=-1)
    return div_JH(cone.jet(x, 3))


@dataclass
class HSConeSummary:
    max_S1: float
    max_S2: float
    tol: float
    resolution: tuple
    max_cone: float = float("nan")  # max |S1 - S2| = max |div_C(J H_C)| at r = 1

    @property
    def hamiltonian_stationary_cone(self) -> Optional[bool]:
        return hysteresis_flag(max(self.max_S1, self.max_S2), self.tol)

    def as_dict(self) -> dict:
        return {
            "max_abs_S1": self.max_S1,
            "max_abs_S2": self.max_S2,
            "max_abs_cone_divergence": self.max_cone,
            "tol": self.tol,
            "hamiltonian_stationary_cone": self.hamiltonian_stationary_cone,
        }


def stationarity_fields(jet: Jet) -> dict:
    """Pointwise fields for a grid chunk of order-3 jets."""
    alpha = alpha_coefficients(jet)
    metric = induced_metric(jet)
    H, dH = mean_curvature_derivative(jet, metric)
    return {
        "f": isotropy_deviation_f(jet),
        "alpha": alpha,
        "isotropy": isotropy_residual(jet),
        "S1": divergence(jet, metric, J(dH)),
        "S2": inner(J(H), jet.u),
        "div_Ju": divergence(jet, metric, J(jet.first)),
    }


def hs_cone_classify(imm: Immersion, resolution: Sequence[int] = (128, 128),
                     tol: float = EXACT_TOL, threads: int = 1) -> HSConeSummary:
    """Max |S1| and |S2| over a grid and the Hamiltonian-stationary-cone flag."""
    if imm.max_order >= 3:
        fields = grid_map(imm, resolution, lambda jet: {
            "S1": div_JH(jet), "S2": stationarity_S2(jet)}, order=3, threads=threads)
    else:
        pts = imm.domain.grid(resolution)
        fields = {"S1": _div_JH_fd(imm, pts), "S2": stationarity_S2(imm.jet(pts, 2))}
    s1, s2 = fields["S1"], fields["S2"]
    return HSConeSummary(float(np.max(np.abs(s1))), float(np.max(np.abs(s2))), tol,
                         tuple(int(r) for r in resolution), float(np.max(np.abs(s1 - s2))))
