"""Built-in immersions and the homogeneous-torus parameter family.

A homogeneous torus in S^5 is

    u(s, t) = (r_1 e^{i(a_1 s + b_1 t)}, r_2 e^{i(a_2 s + b_2 t)}, r_3 e^{i(a_3 s + b_3 t)})

with q_k = r_k^2 summing to 1 and integer weight vectors a, b.  Every member is
isotropic with a Hamiltonian stationary cone.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .immersions import (
    ExponentialImmersion,
    Immersion,
    PhaseTwistedImmersion,
    SphereChartImmersion,
    cosine_phase,
    patch_domain,
    quadratic_phase,
)


class CatalogError(ValueError):
    """Unknown catalog name or invalid parameters."""


@dataclass(frozen=True)
class HomogeneousTorusParams:
    q: tuple
    a: tuple
    b: tuple

    def __post_init__(self):
        q = np.asarray(self.q, dtype=float)
        a = np.asarray(self.a, dtype=float)
        b = np.asarray(self.b, dtype=float)
        if not (q.shape == a.shape == b.shape) or q.ndim != 1:
            raise CatalogError("q, a, b must be equal-length vectors")
        if np.any(q < 0) or abs(q.sum() - 1.0) > 1e-14 * max(1, len(q)):
            raise CatalogError(f"q must lie on the simplex (sum = {q.sum()!r})")
        if np.linalg.matrix_rank(np.vstack([a, b])) < 2:
            raise CatalogError("weight matrix [a; b] must have rank 2")
        if np.linalg.eigvalsh(self.metric)[0] <= 1e-14:
            raise CatalogError("induced metric is not positive definite")
        object.__setattr__(self, "q", tuple(float(x) for x in q))
        object.__setattr__(self, "a", tuple(float(x) for x in a))
        object.__setattr__(self, "b", tuple(float(x) for x in b))

    @property
    def weights(self) -> np.ndarray:
        return np.column_stack([self.a, self.b])

    @property
    def metric(self) -> np.ndarray:
        q, W = np.asarray(self.q, dtype=float), np.column_stack([self.a, self.b]).astype(float)
        return W.T @ (q[:, None] * W)

    def permuted(self, perm) -> "HomogeneousTorusParams":
        p = list(perm)
        return HomogeneousTorusParams(tuple(np.array(self.q)[p]), tuple(np.array(self.a)[p]),
                                      tuple(np.array(self.b)[p]))

    def as_dict(self) -> dict:
        return {"q": list(self.q), "a": list(self.a), "b": list(self.b)}


CLIFFORD = HomogeneousTorusParams((1 / 3, 1 / 3, 1 / 3), (1, 0, -1), (0, 1, -1))
S3_TORUS = HomogeneousTorusParams((0.5, 0.5, 0.0), (1, 0, 0), (0, 1, 0))
# Legendrian, Hamiltonian stationary, not minimal: lambda = (5, 2, 1)
IRIYEH = HomogeneousTorusParams((1 / 6, 1 / 3, 1 / 2), (2, -1, 0), (1, 1, -1))

PRESETS = {"clifford": CLIFFORD, "s3": S3_TORUS, "iriyeh": IRIYEH}

CATALOG = {
    "great_sphere": {"chart": "latlong | mercator (default latlong)", "rotated": "bool"},
    "clifford_torus": {"isothermal": "bool (default false)"},
    "s3_torus": {"isothermal": "bool (default false)"},
    "homogeneous_torus": {"q": "3 floats summing to 1", "a": "3 integers", "b": "3 integers",
                          "preset": "clifford | s3 | iriyeh (instead of q, a, b)",
                          "isothermal": "bool (default false)"},
}


def homogeneous_torus(params: HomogeneousTorusParams, name: str = "homogeneous_torus",
                      isothermal: bool = False) -> ExponentialImmersion:
    imm = ExponentialImmersion(params.q, params.weights, name=name, genus=1)
    return imm.isothermal() if isothermal else imm


def make_catalog_immersion(name: str, params: Optional[dict] = None) -> Immersion:
    """Build a catalog immersion from its name and a parameter dict."""
    params = dict(params or {})
    iso = bool(params.pop("isothermal", False))
    if name == "great_sphere":
        chart = params.pop("chart", "latlong")
        rotated = bool(params.pop("rotated", False))
        _no_extra(name, params)
        try:
            imm = SphereChartImmersion(chart=chart)
        except ValueError as exc:
            raise CatalogError(str(exc)) from exc
        return imm.rotated() if rotated else imm
    if name == "clifford_torus":
        _no_extra(name, params)
        return homogeneous_torus(CLIFFORD, name, iso)
    if name == "s3_torus":
        _no_extra(name, params)
        return homogeneous_torus(S3_TORUS, name, iso)
    if name == "homogeneous_torus":
        preset = params.pop("preset", None)
        if preset is not None:
            if preset not in PRESETS:
                raise CatalogError(f"unknown preset {preset!r}")
            p = PRESETS[preset]
        else:
            try:
                p = HomogeneousTorusParams(tuple(params.pop("q")), tuple(params.pop("a")),
                                           tuple(params.pop("b")))
            except KeyError as exc:
                raise CatalogError(f"homogeneous_torus needs parameter {exc.args[0]}") from exc
        _no_extra(name, params)
        return homogeneous_torus(p, name, iso)
    raise CatalogError(f"unknown catalog immersion {name!r}; known: {sorted(CATALOG)}")


def _no_extra(name, params):
    if params:
        raise CatalogError(f"unexpected parameters for {name}: {sorted(params)}")


# ----------------------------------------------------------------------------
# fixtures (not catalog entries)
# ----------------------------------------------------------------------------

def great_circle() -> ExponentialImmersion:
    """Unit-speed Legendrian great circle (e^{is}, e^{-is}) / sqrt 2 in S^3."""
    return ExponentialImmersion([0.5, 0.5], [[1.0], [-1.0]], name="great_circle", genus=None)


def non_isotropic_sphere() -> SphereChartImmersion:
    """Round S^2 in R (+) C inside C^3: tangent planes contain complex lines."""
    frame = np.zeros((6, 3))
    frame[0, 2] = 1.0  # Re z_1 <- sin(lat)
    frame[1, 0] = 1.0  # Re z_2
    frame[4, 1] = 1.0  # Im z_2
    return SphereChartImmersion(3, frame, name="non_isotropic_sphere")


def planted_zero_fixture(center=(0.1234, -0.0567), strength: float = 0.5,
                         half_width: float = 1.0) -> PhaseTwistedImmersion:
    """Isotropic patch with one simple Legendrian point at ``center``.

    The isothermal Clifford torus is twisted by a saddle phase
    psi = strength * ((x - x0)^2 - (y - y0)^2) / 2, so alpha = d psi and the Hopf
    function is w = strength * (z - z0) / 2.
    """
    c = np.asarray(center, dtype=float)
    base = homogeneous_torus(CLIFFORD, "clifford_torus", isothermal=True)
    psi = quadratic_phase(c, strength * np.diag([1.0, -1.0]))
    dom = patch_domain([-half_width] * 2, [half_width] * 2)
    return PhaseTwistedImmersion(base, psi, domain=dom, name="planted_zero", genus=None)


def twisted_clifford_fixture(amplitude: float = 0.3) -> PhaseTwistedImmersion:
    """Clifford torus twisted by psi = amplitude (cos s + cos t).

    Isotropic, with four Legendrian points at the critical points of psi: two
    saddles (winding +1) and an extremum pair (winding -1).
    """
    return PhaseTwistedImmersion(homogeneous_torus(CLIFFORD, "clifford_torus"),
                                 cosine_phase(amplitude), name="twisted_clifford", genus=1)


FIXTURES = {
    "twisted_clifford": {"amplitude": "float (default 0.3)"},
    "planted_zero": {"center": "2 floats", "strength": "float (default 0.5)"},
    "non_isotropic_sphere": {},
}


def make_immersion(name: str, params: Optional[dict] = None) -> Immersion:
    """Catalog entries plus the test fixtures, by name."""
    if name in CATALOG:
        return make_catalog_immersion(name, params)
    params = dict(params or {})
    try:
        if name == "twisted_clifford":
            imm = twisted_clifford_fixture(float(params.pop("amplitude", 0.3)))
        elif name == "planted_zero":
            kw = {}
            if "center" in params:
                kw["center"] = tuple(float(x) for x in params.pop("center"))
            if "strength" in params:
                kw["strength"] = float(params.pop("strength"))
            imm = planted_zero_fixture(**kw)
        elif name == "non_isotropic_sphere":
            imm = non_isotropic_sphere()
        else:
            raise CatalogError(f"unknown immersion {name!r}; known: {sorted(CATALOG) + sorted(FIXTURES)}")
    except (TypeError, ValueError) as exc:
        if isinstance(exc, CatalogError):
            raise
        raise CatalogError(f"bad parameters for {name}: {exc}") from exc
    _no_extra(name, params)
    return imm
