"""Parametrised immersions u: L -> S^{2n-1} with closed-form derivative jets.

Every immersion exposes ``jet(t, order)`` returning a :class:`~hscone.geometry.Jet`
with the value and partial derivatives up to ``order`` (at most 3).  ``t`` may be
a single point of shape ``(m,)`` or a batch ``(..., m)``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .geometry import Jet, to_complex, to_real


class DomainError(ValueError):
    """Parameter point outside the chart."""


class JetOrderError(ValueError):
    """Requested derivative order not supported by the immersion."""


# ----------------------------------------------------------------------------
# parameter domains
# ----------------------------------------------------------------------------

@dataclass(frozen=True)
class Axis:
    lo: float
    hi: float
    kind: str = "periodic"  # periodic | open | closed

    def samples(self, count: int) -> np.ndarray:
        if self.kind == "periodic":
            return self.lo + (self.hi - self.lo) * np.arange(count) / count
        if self.kind == "open":
            # cell centred: half a step away from both ends (sphere poles)
            return self.lo + (self.hi - self.lo) * (np.arange(count) + 0.5) / count
        return np.linspace(self.lo, self.hi, count)


@dataclass(frozen=True)
class Domain:
    """Parameter domain: a box of grid coordinates mapped linearly to parameters.

    Parameters are ``t = lattice @ s`` with ``s`` ranging over ``axes``.  Period
    tori use unit fractional axes and the period lattice; charts use the
    identity map.  ``cycles`` lists parameter-space vectors spanning the
    non-contractible loops that the analyses integrate over.
    """

    kind: str
    axes: tuple
    lattice: np.ndarray
    cycles: tuple = ()

    @property
    def m(self) -> int:
        return len(self.axes)

    @property
    def periodic(self) -> tuple:
        return tuple(ax.kind == "periodic" for ax in self.axes)

    def to_grid_coords(self, t: np.ndarray) -> np.ndarray:
        return np.einsum("ij,...j->...i", np.linalg.inv(self.lattice), t)

    def to_params(self, s: np.ndarray) -> np.ndarray:
        return np.einsum("ij,...j->...i", self.lattice, s)

    def inside(self, t: np.ndarray) -> np.ndarray:
        """Boolean mask of parameter points lying in the chart."""
        s = self.to_grid_coords(np.asarray(t, dtype=float))
        ok = np.ones(s.shape[:-1], dtype=bool)
        for i, ax in enumerate(self.axes):
            si = s[..., i]
            if ax.kind == "open":
                ok &= (si > ax.lo) & (si < ax.hi)
            elif ax.kind == "closed":
                slack = 1e-12 * (ax.hi - ax.lo)
                ok &= (si >= ax.lo - slack) & (si <= ax.hi + slack)
            else:
                ok &= np.isfinite(si)
        return ok

    def check(self, t: np.ndarray) -> None:
        if not np.all(self.inside(t)):
            raise DomainError(f"parameter point outside the {self.kind} chart")

    def grid_axes(self, resolution: Sequence[int]) -> list:
        if len(resolution) != self.m:
            raise ValueError(f"need {self.m} grid resolutions, got {len(resolution)}")
        return [ax.samples(int(r)) for ax, r in zip(self.axes, resolution)]

    def grid(self, resolution: Sequence[int]) -> np.ndarray:
        """Parameter points of a tensor grid, shape ``(*resolution, m)``."""
        s = np.stack(np.meshgrid(*self.grid_axes(resolution), indexing="ij"), axis=-1)
        return self.to_params(s)

    def spacing(self, resolution: Sequence[int]) -> np.ndarray:
        """Grid step along each axis in grid coordinates."""
        out = []
        for ax, r in zip(self.axes, resolution):
            if ax.kind == "closed":
                out.append((ax.hi - ax.lo) / (r - 1))
            else:
                out.append((ax.hi - ax.lo) / r)
        return np.array(out)

    def grid_delta(self, t1: np.ndarray, t2: np.ndarray) -> np.ndarray:
        """Grid-coordinate displacement t2 - t1, reduced modulo periodic axes."""
        ds = self.to_grid_coords(np.asarray(t2) - np.asarray(t1))
        for i, ax in enumerate(self.axes):
            if ax.kind == "periodic":
                span = ax.hi - ax.lo
                ds[..., i] = (ds[..., i] + 0.5 * span) % span - 0.5 * span
        return ds

    def reduce(self, t: np.ndarray) -> np.ndarray:
        """Representative of t with periodic grid coordinates in [lo, hi)."""
        s = self.to_grid_coords(np.asarray(t, dtype=float))
        for i, ax in enumerate(self.axes):
            if ax.kind == "periodic":
                s[..., i] = ax.lo + (s[..., i] - ax.lo) % (ax.hi - ax.lo)
        return self.to_params(s)


def torus_domain(lattice=None, m: int = 2) -> Domain:
    L = 2 * np.pi * np.eye(m) if lattice is None else np.asarray(lattice, dtype=float)
    axes = tuple(Axis(0.0, 1.0, "periodic") for _ in range(L.shape[0]))
    cycles = tuple(L[:, i].copy() for i in range(L.shape[1]))
    return Domain("torus", axes, L, cycles)


def sphere_domain() -> Domain:
    """Latitude-longitude chart; latitude samples stay half a step off the poles."""
    axes = (Axis(-np.pi / 2, np.pi / 2, "open"), Axis(0.0, 2 * np.pi, "periodic"))
    return Domain("sphere", axes, np.eye(2))


def mercator_domain(y_max: float = 3.0) -> Domain:
    axes = (Axis(0.0, 2 * np.pi, "periodic"), Axis(-y_max, y_max, "closed"))
    return Domain("cylinder", axes, np.eye(2), (np.array([2 * np.pi, 0.0]),))


def patch_domain(lower: Sequence[float], upper: Sequence[float]) -> Domain:
    axes = tuple(Axis(float(a), float(b), "closed") for a, b in zip(lower, upper))
    return Domain("patch", axes, np.eye(len(axes)))


# ----------------------------------------------------------------------------
# immersions
# ----------------------------------------------------------------------------

class Immersion:
    """Base class.  Subclasses implement ``_jet(t, order)`` on validated input."""

    name: str = "immersion"
    max_order: int = 3

    def __init__(self, n: int, m: int, domain: Domain, genus: Optional[int] = None,
                 name: Optional[str] = None):
        self.n = int(n)
        self.m = int(m)
        self.domain = domain
        self.genus = genus
        if name is not None:
            self.name = name
        if domain.m != self.m:
            raise ValueError("domain dimension does not match immersion dimension")

    def jet(self, t, order: int = 2) -> Jet:
        if order not in (1, 2, 3):
            raise JetOrderError(f"order must be 1, 2 or 3, got {order}")
        if order > self.max_order:
            raise JetOrderError(f"{self.name} has derivative rules only up to order {self.max_order}")
        t = np.asarray(t, dtype=float)
        if t.shape[-1:] != (self.m,):
            raise DomainError(f"expected parameter points with {self.m} coordinates")
        self.domain.check(t)
        return self._jet(t, order)

    def __call__(self, t) -> np.ndarray:
        return self.jet(t, 1).u

    def _jet(self, t: np.ndarray, order: int) -> Jet:  # pragma: no cover - abstract
        raise NotImplementedError

    def describe(self) -> dict:
        return {"name": self.name, "n": self.n, "m": self.m, "genus": self.genus,
                "domain": self.domain.kind}


def evaluate_jet(imm: Immersion, t, order: int = 2) -> Jet:
    return imm.jet(t, order)


def _multi_indices(m: int, order: int):
    return itertools.product(range(m), repeat=order)


def _complex_jet(t, u, first, second=None, third=None) -> Jet:
    return Jet(
        t=t,
        u=to_real(u),
        first=to_real(first),
        second=None if second is None else to_real(second),
        third=None if third is None else to_real(third),
    )


class ExponentialImmersion(Immersion):
    """u_k(t) = sqrt(q_k) exp(i <w_k, t>): homogeneous tori and great circles.

    ``q`` are the squared radii (summing to 1), ``weights`` an ``n x m`` real
    matrix whose rows are the phase gradients.
    """

    def __init__(self, q, weights, lattice=None, genus: Optional[int] = None,
                 name: str = "homogeneous_torus", domain: Optional[Domain] = None):
        self.q = np.asarray(q, dtype=float)
        self.weights = np.atleast_2d(np.asarray(weights, dtype=float))
        if self.weights.shape[0] != self.q.shape[0]:
            raise ValueError("weights must have one row per complex coordinate")
        if np.any(self.q < 0) or abs(self.q.sum() - 1.0) > 1e-12:
            raise ValueError("squared radii must be nonnegative and sum to 1")
        n, m = self.weights.shape
        if domain is None:
            domain = torus_domain(lattice, m)
        if genus is None and domain.kind == "torus" and m == 2:
            genus = 1
        super().__init__(n, m, domain, genus, name)
        self.radii = np.sqrt(self.q)

    def _jet(self, t, order):
        phase = np.einsum("km,...m->...k", self.weights, t)
        u = self.radii * np.exp(1j * phase)
        iw = 1j * self.weights.T  # (m, n)
        first = iw * u[..., None, :]
        second = third = None
        if order >= 2:
            second = iw[:, None, :] * iw[None, :, :] * u[..., None, None, :]
        if order >= 3:
            third = iw[:, None, None, :] * iw[None, :, None, :] * iw[None, None, :, :] \
                * u[..., None, None, None, :]
        return _complex_jet(t, u, first, second, third)

    def metric_matrix(self) -> np.ndarray:
        return self.weights.T @ (self.q[:, None] * self.weights)

    def reparametrized(self, M, name: Optional[str] = None) -> "ExponentialImmersion":
        """Same torus in coordinates t = M t'."""
        M = np.asarray(M, dtype=float)
        lattice = np.linalg.solve(M, self.domain.lattice)
        return ExponentialImmersion(self.q, self.weights @ M, lattice, self.genus,
                                    name or self.name)

    def isothermal(self) -> "ExponentialImmersion":
        """Linear reparametrisation with metric equal to the identity (phi^2 = 1)."""
        C = np.linalg.cholesky(self.metric_matrix())
        return self.reparametrized(np.linalg.inv(C).T, self.name)

    def describe(self) -> dict:
        d = super().describe()
        d.update(q=self.q.tolist(), weights=self.weights.tolist(),
                 lattice=self.domain.lattice.tolist())
        return d


# derivatives of cos/sin: d^k cos(x) = cos(x + k pi/2)
def _dcos(x, k):
    return np.cos(x + k * np.pi / 2)


def _dsin(x, k):
    return np.sin(x + k * np.pi / 2)


def _dsech(y, k):
    S, T = 1 / np.cosh(y), np.tanh(y)
    return [S, -S * T, S * T**2 - S**3, -S * T**3 + 5 * S**3 * T][k]


def _dtanh(y, k):
    S, T = 1 / np.cosh(y), np.tanh(y)
    return [T, S**2, -2 * S**2 * T, 4 * S**2 * T**2 - 2 * S**4][k]


class SphereChartImmersion(Immersion):
    """Round 2-sphere x(t) in R^3 mapped into R^{2n} by an orthonormal frame.

    ``chart="latlong"``: t = (latitude, longitude), x = (cos a cos b, cos a sin b, sin a).
    ``chart="mercator"``: t = (longitude, y), x = (sech y cos b, sech y sin b, tanh y),
    which is conformal.  ``frame`` is a ``2n x 3`` matrix with orthonormal
    columns; the real frame gives the great sphere in the real locus of C^n.
    """

    def __init__(self, n: int = 3, frame=None, chart: str = "latlong",
                 name: str = "great_sphere", y_max: float = 3.0):
        if frame is None:
            frame = np.zeros((2 * n, 3))
            frame[0, 0] = frame[1, 1] = frame[2, 2] = 1.0
        self.frame = np.asarray(frame, dtype=float)
        if self.frame.shape != (2 * n, 3):
            raise ValueError("frame must have shape (2n, 3)")
        if not np.allclose(self.frame.T @ self.frame, np.eye(3), atol=1e-14):
            raise ValueError("frame columns must be orthonormal")
        if chart == "latlong":
            domain = sphere_domain()
        elif chart == "mercator":
            domain = mercator_domain(y_max)
        else:
            raise ValueError(f"unknown sphere chart {chart!r}")
        self.chart = chart
        super().__init__(n, 2, domain, 0, name)

    def _xderiv(self, t, p, q):
        """Derivative of x with p hits on the first and q on the second coordinate."""
        if self.chart == "latlong":
            a, b = t[..., 0], t[..., 1]
            ca = _dcos(a, p)
            comps = [ca * _dcos(b, q), ca * _dsin(b, q),
                     _dsin(a, p) if q == 0 else np.zeros_like(a)]
        else:
            b, y = t[..., 0], t[..., 1]
            s = _dsech(y, q)
            comps = [s * _dcos(b, p), s * _dsin(b, p),
                     _dtanh(y, q) if p == 0 else np.zeros_like(y)]
        return np.einsum("dc,...c->...d", self.frame, np.stack(comps, axis=-1))

    def _block(self, t, order):
        shape = t.shape[:-1] + (2,) * order + (2 * self.n,)
        out = np.empty(shape)
        for idx in _multi_indices(2, order):
            p = idx.count(0)
            out[(Ellipsis,) + idx + (slice(None),)] = self._xderiv(t, p, order - p)
        return out

    def _jet(self, t, order):
        return Jet(
            t=t,
            u=self._xderiv(t, 0, 0),
            first=self._block(t, 1),
            second=self._block(t, 2) if order >= 2 else None,
            third=self._block(t, 3) if order >= 3 else None,
        )

    def rotated(self) -> "SphereChartImmersion":
        """Same sphere with the chart poles moved onto the old equator."""
        R = np.array([[0.0, 0.0, 1.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
        return SphereChartImmersion(self.n, self.frame @ R, self.chart, self.name)

    def describe(self) -> dict:
        d = super().describe()
        d.update(chart=self.chart)
        return d


# ----------------------------------------------------------------------------
# phase twist: u = exp(i psi) v
# ----------------------------------------------------------------------------

def quadratic_phase(center, hessian, value: float = 0.0):
    """psi(t) = value + (t - c)^T Q (t - c) / 2 as a scalar jet function."""
    c = np.asarray(center, dtype=float)
    Q = np.asarray(hessian, dtype=float)
    m = c.shape[0]

    def psi(t):
        d = t - c
        p0 = value + 0.5 * np.einsum("...i,ij,...j->...", d, Q, d)
        p1 = np.einsum("ij,...j->...i", Q, d)
        p2 = np.broadcast_to(Q, t.shape[:-1] + (m, m))
        p3 = np.zeros(t.shape[:-1] + (m, m, m))
        return p0, p1, p2, p3

    return psi


def cosine_phase(amplitude: float, m: int = 2):
    """psi(t) = amplitude * sum_i cos(t_i), periodic on the 2 pi lattice."""

    def psi(t):
        c, s = np.cos(t), np.sin(t)
        p0 = amplitude * c.sum(axis=-1)
        p1 = -amplitude * s
        eye = np.eye(m)
        p2 = -amplitude * c[..., :, None] * eye
        p3 = np.zeros(t.shape[:-1] + (m, m, m))
        for i in range(m):
            p3[..., i, i, i] = amplitude * s[..., i]
        return p0, p1, p2, p3

    return psi


class PhaseTwistedImmersion(Immersion):
    """u = exp(i psi(t)) v(t) for a base immersion v and a real phase psi.

    For a Legendrian base, ``<Ju, u_i> = d_i psi``: the twist plants Legendrian
    points at the critical points of psi while keeping u isotropic.
    """

    def __init__(self, base: Immersion, psi: Callable, domain: Optional[Domain] = None,
                 name: str = "phase_twisted", genus: Optional[int] = None):
        self.base = base
        self.psi = psi
        if domain is None:
            # same parameter surface as the base, so the same genus
            domain = base.domain
            genus = base.genus if genus is None else genus
        super().__init__(base.n, base.m, domain, genus, name)
        self.max_order = base.max_order

    def _jet(self, t, order):
        vj = self.base._jet(t, order)
        v = [to_complex(vj.u), to_complex(vj.first)]
        if order >= 2:
            v.append(to_complex(vj.second))
        if order >= 3:
            v.append(to_complex(vj.third))
        p0, p1, p2, p3 = self.psi(t)
        h1, h2, h3 = 1j * p1, 1j * p2, 1j * p3
        E0 = np.exp(1j * p0)
        E1 = h1 * E0[..., None]
        E2 = (h2 + h1[..., :, None] * h1[..., None, :]) * E0[..., None, None]
        sym3 = lambda a: a + np.einsum("...ikj->...ijk", a) + np.einsum("...jki->...ijk", a)
        E3 = (h3 + sym3(h2[..., :, :, None] * h1[..., None, None, :])
              + h1[..., :, None, None] * h1[..., None, :, None] * h1[..., None, None, :]) \
            * E0[..., None, None, None]

        u = E0[..., None] * v[0]
        first = E1[..., :, None] * v[0][..., None, :] + E0[..., None, None] * v[1]
        second = third = None
        if order >= 2:
            cross = E1[..., :, None, None] * v[1][..., None, :, :]
            second = (E2[..., None] * v[0][..., None, None, :] + cross
                      + np.swapaxes(cross, -3, -2) + E0[..., None, None, None] * v[2])
        if order >= 3:
            a = E2[..., :, :, None, None] * v[1][..., None, None, :, :]  # E_ij v_k
            b = E1[..., :, None, None, None] * v[2][..., None, :, :, :]  # E_i v_jk
            third = (E3[..., None] * v[0][..., None, None, None, :]
                     + a + np.einsum("...ikjd->...ijkd", a) + np.einsum("...jkid->...ijkd", a)
                     + b + np.einsum("...jikd->...ijkd", b) + np.einsum("...kijd->...ijkd", b)
                     + E0[..., None, None, None, None] * v[3])
        return _complex_jet(t, u, first, second, third)


# ----------------------------------------------------------------------------
# generic fallback and cone
# ----------------------------------------------------------------------------

class FiniteDifferenceImmersion(Immersion):
    """Jets by nested central differences (step ``h`` per derivative order).

    Truncation error is O(h^2) per level; rounding error grows like eps/h^k at
    order k (about 1e-12, 1e-8, 1e-4 for h = 1e-4).
    """

    def __init__(self, func: Callable, n: int, m: int, domain: Domain, h: float = 1e-4,
                 genus: Optional[int] = None, name: str = "finite_difference"):
        self.func = func
        self.h = h
        super().__init__(n, m, domain, genus, name)

    def _deriv(self, t, order):
        if order == 0:
            return np.asarray(self.func(t), dtype=float)
        parts = []
        for j in range(self.m):
            e = np.zeros(self.m)
            e[j] = self.h
            parts.append((self._deriv(t + e, order - 1) - self._deriv(t - e, order - 1)) / (2 * self.h))
        # new index goes last among derivative axes, before the ambient axis
        return np.stack(parts, axis=-2)

    def _jet(self, t, order):
        return Jet(
            t=t,
            u=self._deriv(t, 0),
            first=self._deriv(t, 1),
            second=self._deriv(t, 2) if order >= 2 else None,
            third=self._deriv(t, 3) if order >= 3 else None,
        )


class ConeImmersion(Immersion):
    """X(r, t) = r u(t), the cone over a link, as an (m+1)-fold in R^{2n}."""

    def __init__(self, link: Immersion, r_min: float = 0.1, r_max: float = 10.0):
        self.link = link
        base = link.domain
        axes = (Axis(r_min, r_max, "closed"),) + base.axes
        lattice = np.eye(link.m + 1)
        lattice[1:, 1:] = base.lattice
        super().__init__(link.n, link.m + 1, Domain("cone", axes, lattice),
                         None, f"cone({link.name})")
        self.max_order = link.max_order

    def _jet(self, t, order):
        r = t[..., 0]
        lj = self.link._jet(t[..., 1:], order)
        m, d = self.m, 2 * self.n
        rr = r[..., None]
        first = np.zeros(t.shape[:-1] + (m, d))
        first[..., 0, :] = lj.u
        first[..., 1:, :] = rr[..., None] * lj.first
        second = third = None
        if order >= 2:
            second = np.zeros(t.shape[:-1] + (m, m, d))
            second[..., 0, 1:, :] = lj.first
            second[..., 1:, 0, :] = lj.first
            second[..., 1:, 1:, :] = rr[..., None, None] * lj.second
        if order >= 3:
            third = np.zeros(t.shape[:-1] + (m, m, m, d))
            third[..., 0, 1:, 1:, :] = lj.second
            third[..., 1:, 0, 1:, :] = lj.second
            third[..., 1:, 1:, 0, :] = lj.second
            third[..., 1:, 1:, 1:, :] = rr[..., None, None, None] * lj.third
        return Jet(t=t, u=rr * lj.u, first=first, second=second, third=third)
