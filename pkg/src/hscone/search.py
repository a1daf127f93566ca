"""Closed-form classification of homogeneous tori and a damped least-squares search.

For weights w_k = (a_k, b_k) and squared radii q_k the torus has metric
g = sum_k q_k w_k w_k^T, and with lambda_k = w_k^T g^{-1} w_k:

* Legendrian   <=>  sum a_k q_k = sum b_k q_k = 0
* minimal      <=>  lambda_k = 2 on every active component (q_k > 0)
* |Hbar|^2     =    sum_k (2 - lambda_k)^2 q_k
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional

import numpy as np

from .catalog import CatalogError, HomogeneousTorusParams, homogeneous_torus
from .geometry import sphere_mean_curvature
from .stationarity import (
    alpha_coefficients,
    div_JH,
    isotropy_deviation_f,
    isotropy_residual,
    stationarity_S2,
)

TARGETS = ("legendrian", "minimal")
ACTIVE_Q = 1e-9


@dataclass
class FamilyClassification:
    isotropic: bool
    legendrian: bool
    minimal: bool
    f_value: float
    hbar_norm2: float
    lam: tuple
    weight_sums: tuple
    cross_check: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {"isotropic": self.isotropic, "legendrian": self.legendrian,
                "minimal": self.minimal, "f_value": self.f_value, "hbar_norm2": self.hbar_norm2,
                "lambda": list(self.lam), "weight_sums": list(self.weight_sums),
                "cross_check": self.cross_check}


def family_invariants(q, a, b):
    """(weight sums, lambda, f, |Hbar|^2) of a (possibly real-weighted) torus."""
    q, a, b = (np.asarray(x, dtype=float) for x in (q, a, b))
    W = np.column_stack([a, b])
    g = W.T @ (q[:, None] * W)
    ginv = np.linalg.inv(g)
    lam = np.einsum("ki,ij,kj->k", W, ginv, W)
    sums = W.T @ q
    f = float(sums @ ginv @ sums)
    hbar2 = float(np.sum((2 - lam) ** 2 * q))
    return sums, lam, f, hbar2


def classify_family_member(p: HomogeneousTorusParams, tol: float = 1e-10,
                           cross_check: bool = False, resolution=(16, 16),
                           raise_on_mismatch: bool = True) -> FamilyClassification:
    """Evaluate the algebraic conditions; optionally confirm them on a grid.

    The grid check compares against the generic pointwise operations.  A
    disagreement beyond ``tol`` (scaled by max lambda^2) raises RuntimeError
    unless ``raise_on_mismatch`` is False; the errors and the scaled tolerance
    are kept in ``cross_check`` either way.
    """
    sums, lam, f, hbar2 = family_invariants(p.q, p.a, p.b)
    q = np.asarray(p.q)
    active = q > ACTIVE_Q
    out = FamilyClassification(
        isotropic=True,
        legendrian=bool(np.max(np.abs(sums)) < tol),
        minimal=bool(np.all(np.abs(lam[active] - 2) < tol)),
        f_value=f,
        hbar_norm2=hbar2,
        lam=tuple(float(x) for x in lam),
        weight_sums=tuple(float(x) for x in sums),
    )
    if cross_check:
        imm = homogeneous_torus(p)
        jet = imm.jet(imm.domain.grid(resolution).reshape(-1, 2), 3)
        alpha = alpha_coefficients(jet)
        fg = isotropy_deviation_f(jet)
        hb = np.sum(sphere_mean_curvature(jet) ** 2, axis=-1)
        cc = {
            "isotropy_max": float(np.max(isotropy_residual(jet))),
            "S1_max": float(np.max(np.abs(div_JH(jet)))),
            "S2_max": float(np.max(np.abs(stationarity_S2(jet)))),
            "f_error": float(np.max(np.abs(fg - f))),
            "alpha_error": float(np.max(np.abs(alpha - sums))),
            "hbar2_error": float(np.max(np.abs(hb - hbar2))),
        }
        scale = max(1.0, float(np.max(lam)) ** 2)
        bad = [k for k, v in cc.items() if v > tol * scale]
        if bad and raise_on_mismatch:
            raise RuntimeError(f"closed-form classification disagrees with grid sampling: {bad}")
        cc["tol"] = tol * scale
        out.cross_check = cc
    return out


# ----------------------------------------------------------------------------
# damped least squares
# ----------------------------------------------------------------------------

def project_to_simplex(v: np.ndarray) -> np.ndarray:
    """Euclidean projection onto {q >= 0, sum q = 1}."""
    v = np.asarray(v, dtype=float)
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    k = np.arange(1, len(v) + 1)
    rho = np.nonzero(u - css / k > 0)[0][-1]
    return np.maximum(v - css[rho] / (rho + 1), 0.0)


@dataclass
class SearchResult:
    q: np.ndarray
    a: np.ndarray
    b: np.ndarray
    residual: float
    iterations: int
    converged: bool
    trace: list

    def params(self) -> Optional[HomogeneousTorusParams]:
        try:
            return HomogeneousTorusParams(tuple(self.q), tuple(self.a), tuple(self.b))
        except CatalogError:
            return None

    def as_dict(self) -> dict:
        return {"q": self.q.tolist(), "a": self.a.tolist(), "b": self.b.tolist(),
                "residual": self.residual, "iterations": self.iterations,
                "converged": self.converged}


def _residuals(x, n, targets, fix_weights, weights, active):
    q = x[:n]
    if fix_weights:
        a, b = weights
    else:
        a, b = x[n:2 * n], x[2 * n:]
    parts = []
    if "legendrian" in targets:
        parts.append([a @ q, b @ q])
    if "minimal" in targets:
        W = np.column_stack([a, b])
        g = W.T @ (q[:, None] * W)
        try:
            ginv = np.linalg.inv(g)
        except np.linalg.LinAlgError:
            return None
        lam = np.einsum("ki,ij,kj->k", W, ginv, W)
        parts.append(lam[active] - 2.0)
    r = np.concatenate([np.ravel(p) for p in parts]) if parts else np.zeros(0)
    return r if np.all(np.isfinite(r)) else None


def search_legendrian_hs(init: HomogeneousTorusParams, targets: Iterable[str] = TARGETS,
                         fix_weights: bool = False, max_iter: int = 1000, tol: float = 1e-8,
                         stop_tol: float = 1e-13, damping: float = 1e-3,
                         fd_step: float = 1e-7) -> SearchResult:
    """Drive the chosen target residuals to zero over (q, a, b).

    Steps solve (J^T J + mu I) dx = -J^T r restricted to sum dq = 0, and the
    trial q is projected back onto the simplex.  mu halves after an accepted
    (downhill) step and doubles after a rejected one.  Weights are real during
    the search; see :func:`snap_weights` for integer rounding.
    """
    targets = tuple(targets)
    unknown = set(targets) - set(TARGETS)
    if unknown:
        raise ValueError(f"unknown search targets {sorted(unknown)}")
    q0, a0, b0 = (np.asarray(v, dtype=float) for v in (init.q, init.a, init.b))
    n = len(q0)
    if not targets:
        return SearchResult(q0, a0, b0, 0.0, 0, True, [])

    x = np.concatenate([q0] if fix_weights else [q0, a0, b0])
    weights = (a0, b0)
    P = np.eye(len(x))
    P[:n, :n] -= 1.0 / n

    def split(x):
        if fix_weights:
            return x[:n], a0, b0
        return x[:n], x[n:2 * n], x[2 * n:]

    def evaluate(x, active):
        return _residuals(x, n, targets, fix_weights, weights, active)

    active = x[:n] > ACTIVE_Q
    r = evaluate(x, active)
    if r is None:
        raise ValueError("initial parameters give a degenerate torus")
    cost = float(r @ r)
    mu = damping
    trace = [(0, float(np.sqrt(cost)), mu)]
    it = 0
    while it < max_iter and np.sqrt(cost) > stop_tol:
        it += 1
        Jm = np.empty((len(r), len(x)))
        for j in range(len(x)):
            e = np.zeros(len(x))
            e[j] = fd_step
            rp, rm = evaluate(x + e, active), evaluate(x - e, active)
            if rp is None or rm is None:
                Jm[:, j] = 0.0
            else:
                Jm[:, j] = (rp - rm) / (2 * fd_step)
        Jp = Jm @ P
        A = Jp.T @ Jp + mu * np.eye(len(x))
        step = np.linalg.solve(A, -Jp.T @ r)
        trial = x + step
        trial[:n] = project_to_simplex(trial[:n])
        rt = evaluate(trial, active)
        ct = np.inf if rt is None else float(rt @ rt)
        if ct < cost:
            x = trial
            mu = max(mu / 2, 1e-10)
            new_active = x[:n] > ACTIVE_Q
            if not np.array_equal(new_active, active):
                active = new_active
                rt = evaluate(x, active)
                ct = float(rt @ rt)
            r, cost = rt, ct
        else:
            mu *= 2
            if mu > 1e12:
                trace.append((it, float(np.sqrt(cost)), mu))
                break
        trace.append((it, float(np.sqrt(cost)), mu))
    q, a, b = split(x)
    res = float(np.sqrt(cost))
    return SearchResult(q.copy(), np.array(a, dtype=float), np.array(b, dtype=float), res, it,
                        res < tol, trace)


def snap_weights(result: SearchResult, targets: Iterable[str] = TARGETS, tol: float = 1e-8):
    """Round weights to integers, re-solve for q, and re-verify by classification.

    Returns ``(SearchResult, FamilyClassification or None)``; the classification
    is None when the snapped weights give a degenerate torus.
    """
    a, b = np.rint(result.a), np.rint(result.b)
    try:
        start = HomogeneousTorusParams(tuple(result.q), tuple(a), tuple(b))
    except CatalogError:
        return result, None
    snapped = search_legendrian_hs(start, targets, fix_weights=True, tol=tol)
    p = snapped.params()
    return snapped, (classify_family_member(p, tol=max(tol, 1e-10)) if p is not None else None)


def random_simplex(rng: np.random.Generator, k: int = 3) -> np.ndarray:
    return rng.dirichlet(np.ones(k))
