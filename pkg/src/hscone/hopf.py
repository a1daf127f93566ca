"""Hopf function, Legendrian points and Poincare-Hopf index counting on surface links.

In isothermal coordinates z = t1 + i t2 the Hopf function is

    w = <Ju, u_z> = (alpha_1 - i alpha_2) / 2,

holomorphic whenever the link is isotropic and <JH, u> = 0.  A zero of order k
of w is a Legendrian point where the field (alpha_1, -alpha_2) winds k times
and the tangential projection Pr Ju has index -k.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Union

import numpy as np

from .geometry import J, Jet, induced_metric
from .immersions import Immersion
from .sampling import grid_map
from .stationarity import (
    EXACT_TOL,
    alpha_coefficients,
    isotropy_deviation_f,
    isotropy_residual,
    stationarity_S2,
)

log = logging.getLogger(__name__)

CANDIDATE_F = 1e-4
NEWTON_TOL = 1e-12
NEWTON_MAX_ITER = 50
WINDING_SLACK = 0.1  # rad


class WindingAmbiguityError(RuntimeError):
    """Unwrapped angle is not close to a multiple of 2 pi."""


class PreconditionError(ValueError):
    """Analysis requested outside its hypotheses."""


class _EverywhereLegendrian:
    """Sentinel: the deviation f stays below tolerance on the whole grid."""

    def __repr__(self):
        return "EVERYWHERE_LEGENDRIAN"

    def __bool__(self):
        return True


EVERYWHERE_LEGENDRIAN = _EverywhereLegendrian()


@dataclass
class LegendrianPoint:
    t: np.ndarray
    multiplicity: int  # winding of (alpha_1, -alpha_2); the zero order k of w
    residual_at_zero: float
    converged: bool = True

    @property
    def index_prju(self) -> int:
        return -self.multiplicity

    def as_row(self) -> dict:
        return {"t1": float(self.t[0]), "t2": float(self.t[1]), "multiplicity": self.multiplicity,
                "index": self.index_prju, "residual": self.residual_at_zero,
                "converged": self.converged}


# ----------------------------------------------------------------------------
# pointwise quantities
# ----------------------------------------------------------------------------

def hopf_function(jet: Jet) -> np.ndarray:
    if jet.m != 2:
        raise PreconditionError("the Hopf function is defined for surface links (m = 2)")
    alpha = alpha_coefficients(jet)
    return 0.5 * (alpha[..., 0] - 1j * alpha[..., 1])


def alpha_jacobian(jet: Jet) -> np.ndarray:
    """D[..., i, j] = d alpha_i / d t^j = <J u_j, u_i> + <J u, u_ij>."""
    jet.require(2)
    Ju = J(jet.u)
    return (np.einsum("...jd,...id->...ij", J(jet.first), jet.first)
            + np.einsum("...d,...ijd->...ij", Ju, jet.second))


def _cr(jet: Jet) -> np.ndarray:
    D = alpha_jacobian(jet)
    # w = (alpha_1 - i alpha_2)/2, d_zbar = (d_1 + i d_2)/2
    dw1 = 0.5 * (D[..., 0, 0] - 1j * D[..., 1, 0])
    dw2 = 0.5 * (D[..., 0, 1] - 1j * D[..., 1, 1])
    return np.abs(0.5 * (dw1 + 1j * dw2))


def cauchy_riemann_residual(imm: Immersion, t) -> np.ndarray:
    """|d w / d zbar| from order-2 jets.

    Holomorphy is only expected in isothermal coordinates on isotropic links
    with <JH, u> = 0; a warning is logged when those fail at t.
    """
    if imm.m != 2:
        raise PreconditionError("Cauchy-Riemann residual needs m = 2")
    jet = imm.jet(np.asarray(t, dtype=float), 2)
    g = induced_metric(jet).g
    iso_defect = np.max((np.abs(g[..., 0, 0] - g[..., 1, 1]) + np.abs(g[..., 0, 1])) / g[..., 0, 0])
    if iso_defect > EXACT_TOL or np.max(isotropy_residual(jet)) > EXACT_TOL \
            or np.max(np.abs(stationarity_S2(jet))) > EXACT_TOL:
        log.warning("Cauchy-Riemann residual requested where holomorphy is not expected")
    return _cr(jet)


@dataclass
class IsothermalCheck:
    defect: float
    tol: float
    phi2: Optional[np.ndarray] = None

    @property
    def isothermal(self) -> bool:
        return self.defect <= self.tol


def isothermal_check(imm: Immersion, resolution: Sequence[int] = (64, 64),
                     tol: float = EXACT_TOL) -> IsothermalCheck:
    """max (|g11 - g22| + |g12|) / g11 over the grid; records phi^2 = g11 if isothermal."""
    if imm.m != 2:
        raise PreconditionError("isothermal check needs m = 2")
    out = grid_map(imm, resolution, lambda jet: {"g": induced_metric(jet).g}, order=1)
    g = out["g"]
    defect = float(np.max((np.abs(g[..., 0, 0] - g[..., 1, 1]) + np.abs(g[..., 0, 1])) / g[..., 0, 0]))
    chk = IsothermalCheck(defect, tol)
    if chk.isothermal:
        chk.phi2 = g[..., 0, 0]
    return chk


# ----------------------------------------------------------------------------
# winding numbers
# ----------------------------------------------------------------------------

def winding_number(field_fn: Callable, center, rho: float, samples: int = 64) -> int:
    """Winding of a planar vector field around a circle of radius rho.

    ``field_fn`` maps points of shape (N, 2) to vectors of shape (N, 2).
    """
    c = np.asarray(center, dtype=float)
    ang = 2 * np.pi * np.arange(samples + 1) / samples
    pts = c + rho * np.stack([np.cos(ang), np.sin(ang)], axis=-1)
    vec = np.asarray(field_fn(pts), dtype=float)
    norms = np.hypot(vec[:, 0], vec[:, 1])
    if np.any(norms == 0):
        raise WindingAmbiguityError("field vanishes on the winding circle")
    phase = np.unwrap(np.arctan2(vec[:, 1], vec[:, 0]))
    total = phase[-1] - phase[0]
    k = int(np.rint(total / (2 * np.pi)))
    if abs(total - 2 * np.pi * k) > WINDING_SLACK:
        raise WindingAmbiguityError(f"unwrapped angle {total:.4f} is not a multiple of 2 pi")
    return k


def point_index(imm: Immersion, p: Union[LegendrianPoint, np.ndarray], rho: float = 1e-2,
                samples: int = 64) -> int:
    """Zero order k at p: winding of (alpha_1, -alpha_2).  Pr Ju has index -k."""
    center = p.t if isinstance(p, LegendrianPoint) else np.asarray(p, dtype=float)

    def fld(pts):
        alpha = alpha_coefficients(imm.jet(pts, 1))
        return np.stack([alpha[:, 0], -alpha[:, 1]], axis=-1)

    return winding_number(fld, center, rho, samples)


# ----------------------------------------------------------------------------
# zero location
# ----------------------------------------------------------------------------

def _local_minima(f: np.ndarray, periodic: Sequence[bool]) -> np.ndarray:
    mask = np.ones(f.shape, dtype=bool)
    for di in (-1, 0, 1):
        for dj in (-1, 0, 1):
            if di == dj == 0:
                continue
            shifted = f
            valid = np.ones(f.shape, dtype=bool)
            for axis, d in ((0, di), (1, dj)):
                if d == 0:
                    continue
                shifted = np.roll(shifted, -d, axis=axis)
                if not periodic[axis]:
                    edge = [slice(None)] * 2
                    edge[axis] = -1 if d == 1 else 0
                    valid[tuple(edge)] = False
            mask &= (f <= shifted) | ~valid
    return mask


def newton_refine(imm: Immersion, t0, tol: float = NEWTON_TOL, max_iter: int = NEWTON_MAX_ITER):
    """Newton iteration on F(t) = alpha(t).  Returns (t, |F|, converged)."""
    t = np.asarray(t0, dtype=float).copy()
    res = np.inf
    for _ in range(max_iter + 1):
        jet = imm.jet(t, 2)
        F = alpha_coefficients(jet)
        res = float(np.linalg.norm(F))
        if res < tol:
            return t, res, True
        D = alpha_jacobian(jet)
        try:
            step = np.linalg.solve(D, F)
        except np.linalg.LinAlgError:
            break
        t_new = t - step
        try:
            imm.domain.check(t_new)
        except ValueError:
            break
        t = t_new
    return t, res, False


def find_legendrian_points(imm: Immersion, resolution: Sequence[int] = (128, 128),
                           tol: float = EXACT_TOL, candidate_threshold: float = CANDIDATE_F,
                           rho: Optional[float] = None, samples: int = 64,
                           isotropy_tol: float = 1e-8, newton_tol: float = NEWTON_TOL):
    """Locate zeros of Pr Ju on a surface link.

    Returns ``EVERYWHERE_LEGENDRIAN`` when f < tol on the whole grid, otherwise
    a list of :class:`LegendrianPoint` (possibly empty).
    """
    if imm.m != 2:
        raise PreconditionError("Legendrian point search needs m = 2")
    out = grid_map(imm, resolution, lambda jet: {
        "f": isotropy_deviation_f(jet),
        "iso": isotropy_residual(jet)}, order=1)
    if float(np.max(out["iso"])) > isotropy_tol:
        raise PreconditionError("link is not isotropic; Legendrian points are not isolated zeros of alpha")
    f, pts = out["f"], out["t"]
    if float(np.max(f)) < tol:
        return EVERYWHERE_LEGENDRIAN

    cand = _local_minima(f, imm.domain.periodic) & (f < candidate_threshold)
    cells = imm.domain.spacing(resolution)
    if rho is None:
        lengths = np.linalg.norm(imm.domain.lattice * cells[None, :], axis=0)
        rho = 0.5 * float(np.min(lengths))

    found: List[LegendrianPoint] = []
    for idx in sorted(map(tuple, np.argwhere(cand))):
        t, res, ok = newton_refine(imm, pts[idx], newton_tol)
        if not ok:
            log.warning("Newton did not converge at candidate %s (|alpha| = %.3e)", pts[idx], res)
            t, res = pts[idx], float(np.linalg.norm(alpha_coefficients(imm.jet(pts[idx], 1))))
        t = imm.domain.reduce(t)
        dup = False
        for q in found:
            if np.all(np.abs(imm.domain.grid_delta(q.t, t)) <= cells * (1 + 1e-9)):
                dup = True
                if res < q.residual_at_zero:
                    q.t, q.residual_at_zero, q.converged = t, res, ok
                break
        if not dup:
            found.append(LegendrianPoint(t, 0, res, ok))

    for p in found:
        r = rho
        for attempt in range(4):
            try:
                p.multiplicity = point_index(imm, p, r, samples)
                break
            except WindingAmbiguityError:
                if attempt == 3:
                    raise
                r /= 2
    found.sort(key=lambda p: tuple(np.round(imm.domain.to_grid_coords(p.t), 12)))
    return found


# ----------------------------------------------------------------------------
# Poincare-Hopf
# ----------------------------------------------------------------------------

@dataclass
class IndexAudit:
    genus: int
    euler_characteristic: int
    n_points: Optional[int]
    sum_index: Optional[int]
    sum_multiplicity: Optional[int]
    everywhere_legendrian: bool
    passed: bool
    message: str = ""

    def as_dict(self) -> dict:
        return {k: getattr(self, k) for k in (
            "genus", "euler_characteristic", "n_points", "sum_index", "sum_multiplicity",
            "everywhere_legendrian", "passed", "message")}


def poincare_hopf_audit(points, genus: int) -> IndexAudit:
    """Check sum of Pr Ju indices = 2 - 2g and sum of zero orders = 2g - 2."""
    chi = 2 - 2 * int(genus)
    if points is EVERYWHERE_LEGENDRIAN:
        return IndexAudit(genus, chi, None, None, None, True, True,
                          "everywhere Legendrian: audit passes vacuously")
    pts = list(points)
    s_idx = sum(p.index_prju for p in pts)
    s_mult = sum(p.multiplicity for p in pts)
    passed = s_idx == chi and s_mult == 2 * genus - 2
    msg = f"{len(pts)} Legendrian points, chi = {chi}, index sum = {s_idx}"
    if genus == 0 and pts:
        passed = False
        msg += "; isolated Legendrian points cannot occur in genus 0"
    return IndexAudit(genus, chi, len(pts), s_idx, s_mult, False, passed, msg)


# ----------------------------------------------------------------------------
# grid summary
# ----------------------------------------------------------------------------

@dataclass
class HopfSummary:
    isothermal_defect: float
    gated: Optional[str]
    max_cr_residual: Optional[float]
    hopf_min_abs: float
    hopf_max_abs: float
    hypotheses: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "isothermal_defect": self.isothermal_defect,
            "cr_residual": self.gated if self.gated else self.max_cr_residual,
            "hopf_abs_min": self.hopf_min_abs,
            "hopf_abs_max": self.hopf_max_abs,
            "hypotheses": self.hypotheses,
        }


def hopf_analysis(imm: Immersion, resolution: Sequence[int] = (128, 128),
                  tol: float = EXACT_TOL, threads: int = 1) -> HopfSummary:
    """Grid scan of w and its d/dzbar, gated on isothermal coordinates."""
    if imm.m != 2:
        raise PreconditionError("Hopf analysis needs m = 2")
    out = grid_map(imm, resolution, lambda jet: {
        "g": induced_metric(jet).g, "w": hopf_function(jet), "cr": _cr(jet),
        "iso": isotropy_residual(jet), "S2": stationarity_S2(jet)}, order=2, threads=threads)
    g = out["g"]
    defect = float(np.max((np.abs(g[..., 0, 0] - g[..., 1, 1]) + np.abs(g[..., 0, 1])) / g[..., 0, 0]))
    hyp = {"isotropy_max": float(np.max(out["iso"])),
           "S2_max": float(np.max(np.abs(out["S2"])))}
    absw = np.abs(out["w"])
    if defect > tol:
        return HopfSummary(defect, "gated: not isothermal", None, float(absw.min()), float(absw.max()), hyp)
    cr = float(np.max(out["cr"]))
    if hyp["isotropy_max"] > tol or hyp["S2_max"] > tol:
        log.warning("holomorphy hypotheses fail; CR residual reported for information only")
    return HopfSummary(defect, None, cr, float(absw.min()), float(absw.max()), hyp)
