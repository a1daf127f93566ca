"""Sympy oracles: jets and the Laplace-Beltrami operator for explicit immersions."""

import itertools

import numpy as np
import sympy as sp

from hscone.geometry import Jet

s, t = sp.symbols("s t", real=True)
SYMS = (s, t)

# a generic (non-spherical) surface in C^3, real slots then imaginary slots
GENERIC_SURFACE = [
    sp.cos(s) * (2 + sp.cos(t)),
    sp.sin(s) * (2 + sp.cos(t)),
    sp.sin(t) + s * t / 5,
    sp.cos(s + t) / 3,
    sp.sin(2 * s - t) / 4,
    s**2 / 7 - t / 3,
]


def _lam(exprs):
    fs = [sp.lambdify(SYMS, e, "numpy", cse=True) for e in exprs]

    def ev(pts):
        pts = np.asarray(pts, dtype=float)
        cols = [np.broadcast_to(np.asarray(f(pts[:, 0], pts[:, 1]), dtype=float), pts.shape[:1])
                for f in fs]
        return np.stack(cols, axis=-1)
    return ev


def symbolic_jet(exprs, pts, order=3):
    """Jet of ``exprs`` (real coordinate functions of s, t) at ``pts``."""
    m, d = len(SYMS), len(exprs)
    blocks = [_lam(exprs)(pts)]
    for k in range(1, order + 1):
        flat = [e.diff(*idx) for idx in itertools.product(SYMS, repeat=k) for e in exprs]
        blocks.append(_lam(flat)(pts).reshape(len(pts), *([m] * k), d))
    blocks += [None] * (4 - len(blocks))
    return Jet(np.asarray(pts, dtype=float), *blocks)


def laplace_beltrami(exprs):
    """Delta_g x = (1/sqrt g) d_i (sqrt g g^{ij} d_j x), componentwise."""
    X = sp.Matrix(exprs)
    D = X.jacobian(sp.Matrix(SYMS))
    g = D.T * D
    det = g.det()
    ginv = g.adjugate() / det
    root = sp.sqrt(det)
    out = []
    for c in range(len(exprs)):
        grad = [X[c].diff(v) for v in SYMS]
        flux = [root * sum(ginv[i, j] * grad[j] for j in range(2)) for i in range(2)]
        out.append(sum(flux[i].diff(SYMS[i]) for i in range(2)) / root)
    return out


def evaluate(exprs, pts):
    return _lam(list(exprs))(pts)


def complex_step_gradient(exprs, pts, h=1e-30):
    """(N, m, len(exprs)) derivatives by the complex step Im f(t + ih e_j) / h."""
    fs = [sp.lambdify(SYMS, e, "numpy", cse=True) for e in exprs]
    pts = np.asarray(pts, dtype=float)
    out = np.empty((len(pts), len(SYMS), len(exprs)))
    for j in range(len(SYMS)):
        z = pts.astype(complex)
        z[:, j] += 1j * h
        for c, f in enumerate(fs):
            out[:, j, c] = np.imag(f(z[:, 0], z[:, 1])) / h
    return out
