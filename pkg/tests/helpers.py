"""Shared test helpers: catalog links, finite differences, random chart points."""

import numpy as np

from hscone.catalog import IRIYEH, homogeneous_torus, make_catalog_immersion


def catalog_immersions(isothermal=False):
    """The four catalog links (the general torus as the Iriyeh-type member)."""
    opt = {"isothermal": isothermal}
    return {
        "great_sphere": make_catalog_immersion("great_sphere"),
        "clifford_torus": make_catalog_immersion("clifford_torus", dict(opt)),
        "s3_torus": make_catalog_immersion("s3_torus", dict(opt)),
        "iriyeh_torus": homogeneous_torus(IRIYEH, "iriyeh_torus", isothermal),
    }


def fd_derivative(fn, t, h=1e-4):
    """Central differences of ``fn(t) -> (N, ...)``; the direction goes on axis 1."""
    t = np.asarray(t, dtype=float)
    parts = []
    for j in range(t.shape[-1]):
        e = np.zeros(t.shape[-1])
        e[j] = h
        parts.append((fn(t + e) - fn(t - e)) / (2 * h))
    return np.stack(parts, axis=1)


def random_points(imm, count, rng, margin=0.05):
    """Uniform samples in grid coordinates, kept ``margin`` away from chart edges."""
    s = []
    for ax in imm.domain.axes:
        lo, hi = ax.lo, ax.hi
        if ax.kind != "periodic":
            pad = margin * (hi - lo)
            lo, hi = lo + pad, hi - pad
        s.append(rng.uniform(lo, hi, count))
    return imm.domain.to_params(np.stack(s, axis=-1))


def jet_fd_error(imm, pts, h=1e-4):
    """Worst relative error of exact jets against central differences of the next lower order."""
    jet = imm.jet(pts, 3)
    worst = 0.0
    for lower, upper in (("u", "first"), ("first", "second"), ("second", "third")):
        fd = fd_derivative(lambda p: getattr(imm.jet(p, 3), lower), pts, h)
        exact = getattr(jet, upper)
        scale = max(1.0, float(np.max(np.abs(exact))))
        worst = max(worst, float(np.max(np.abs(fd - exact))) / scale)
    return worst
