"""Relative equilibria: vertical candidates and the shape-point solver.

At a relative equilibrium the shape is frozen (omega = 0) and the dynamics
reduces to

    N^R_B [ (cov_R d^{ka si}) p_ka p_si / 2 + V_,R ] = 0
    (cov_m d^{ka si}) p_ka p_si / 2 + V_,m = 0
    c^nu_{mu be} d^{mu si} p_si p_nu = 0.

The vertical equation is solved by taking p proportional to an eigenvector
of the (symmetric) matrix d^{mu si}; which eigenvector and at what magnitude
are caller inputs (``eigen_index``, ``magnitude``). The two horizontal
equations are solved jointly over (Q*, f~) restricted to the gauge surface
by a damped Gauss-Newton iteration with finite-difference Jacobians,
recomputing the candidate p from the current d whenever the shape point
moves (fixed-point + Newton hybrid).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from . import fdiff
from .connection_geometry import GeometryEngine
from .errors import ComplexEigenpair, NoConvergence, SingularJacobian
from .gauge_slice import projector_set

log = logging.getLogger(__name__)

EIGEN_TIE_TOL = 1e-10
RESIDUAL_TOL = 1e-10
MAX_ITER = 100


@dataclass(frozen=True)
class RelativeEquilibrium:
    q_star: np.ndarray
    f_tilde: np.ndarray
    p: np.ndarray
    eigen_index: int
    residual_horizontal_p: float
    residual_horizontal_v: float
    residual_vertical: float
    residual_gauge: float
    iterations: int

    def as_dict(self):
        return {
            "q_star": self.q_star.tolist(),
            "f_tilde": self.f_tilde.tolist(),
            "p": self.p.tolist(),
            "eigen_index": int(self.eigen_index),
            "residuals": {
                "horizontal_p": float(self.residual_horizontal_p),
                "horizontal_v": float(self.residual_horizontal_v),
                "vertical": float(self.residual_vertical),
                "gauge": float(self.residual_gauge),
            },
            "iterations": int(self.iterations),
        }


def _orbit_metric_inverse(system, q_star, f_tilde):
    return projector_set(system, q_star, f_tilde).d_inv


def _eigenbasis(d_inv):
    """Deterministic orthonormal eigenbasis of d^{mu si}, ascending values.

    Sign fixed by the first component of largest magnitude; near-degenerate
    pairs are logged (the returned basis is still orthonormal).
    """
    asym = np.max(np.abs(d_inv - d_inv.T))
    if asym > 1e-10:
        vals, vecs = np.linalg.eig(d_inv)
        if np.max(np.abs(vals.imag)) > 1e-12:
            raise ComplexEigenpair(
                f"orbit metric eigenproblem returned complex pair (asymmetry {asym:.2e})")
        vals, vecs = vals.real, vecs.real
        order = np.argsort(vals)
        vals, vecs = vals[order], vecs[:, order]
    else:
        vals, vecs = np.linalg.eigh(0.5 * (d_inv + d_inv.T))
    scale = max(1.0, float(np.max(np.abs(vals))))
    for i in range(len(vals) - 1):
        if abs(vals[i + 1] - vals[i]) < EIGEN_TIE_TOL * scale:
            log.info("near-degenerate orbit-metric eigenvalues %g, %g at indices %d, %d",
                     vals[i], vals[i + 1], i, i + 1)
    for j in range(vecs.shape[1]):
        k = int(np.argmax(np.abs(vecs[:, j])))
        if vecs[k, j] < 0:
            vecs[:, j] = -vecs[:, j]
    return vals, vecs


def vertical_residual(system, q_star, f_tilde, p):
    """c^nu_{mu be} d^{mu si} p_si p_nu, zero at admissible vertical momenta."""
    d_inv = _orbit_metric_inverse(system, np.asarray(q_star, float), np.asarray(f_tilde, float))
    w = d_inv @ np.asarray(p, dtype=float)
    return np.einsum('nmb,m,n->b', system.group.structure_constants, w, p)


def vertical_candidates(system, q_star, f_tilde, magnitude, residual_tol=RESIDUAL_TOL):
    """Eigenvector momenta of d^{mu si}, scaled to ``magnitude``.

    Returns a list of (p, eigenvalue, index) triples, each verified against
    the vertical equilibrium equation.
    """
    q_star = np.asarray(q_star, dtype=float)
    f_tilde = np.asarray(f_tilde, dtype=float)
    d_inv = _orbit_metric_inverse(system, q_star, f_tilde)
    vals, vecs = _eigenbasis(d_inv)
    out = []
    for idx in range(len(vals)):
        p = magnitude * vecs[:, idx]
        res = np.max(np.abs(vertical_residual(system, q_star, f_tilde, p)))
        if res > residual_tol * max(1.0, magnitude ** 2):
            log.warning("eigen candidate %d fails the vertical residual (%.3e); skipped", idx, res)
            continue
        out.append((p, float(vals[idx]), idx))
    return out


def equilibrium_residual(system, q_star, f_tilde, p, engine=None):
    """The two horizontal residual blocks (projected P block, V block)."""
    engine = engine or GeometryEngine(system)
    cache = engine.cache(np.asarray(q_star, float), np.asarray(f_tilde, float))
    r_p = cache.proj.nproj.T @ (0.5 * np.einsum('ksR,k,s->R', cache.cov_dinv_p, p, p)
                                + cache.v_grad_p)
    r_v = 0.5 * np.einsum('ksm,k,s->m', cache.cov_dinv_v, p, p) + cache.v_grad_v
    return r_p, r_v


def solve_equilibrium(system, seed_point, p_magnitude, eigen_index=0,
                      tol=RESIDUAL_TOL, max_iter=MAX_ITER, gauge_tol=1e-12,
                      fd_step=1e-6):
    """Find a relative equilibrium near ``seed_point`` = (q_star, f_tilde).

    Damped Gauss-Newton on the stacked residual [N^T(1); (2); chi] over the
    full (Q*, f~) coordinates, with p recomputed from the current orbit
    metric at every iterate.
    """
    engine = GeometryEngine(system)
    q = np.asarray(seed_point[0], dtype=float).copy()
    f = np.asarray(seed_point[1], dtype=float).copy()
    n_p, n_v = system.n_p, system.n_v

    def candidate_p(qx, fx):
        d_inv = _orbit_metric_inverse(system, qx, fx)
        vals, vecs = _eigenbasis(d_inv)
        if eigen_index < 0 or eigen_index >= len(vals):
            raise ValueError(f"eigen_index {eigen_index} out of range 0..{len(vals) - 1}")
        return p_magnitude * vecs[:, eigen_index]

    def residual(x, p):
        qx, fx = x[:n_p], x[n_p:]
        r_p, r_v = equilibrium_residual(system, qx, fx, p, engine)
        return np.concatenate([r_p, r_v, system.gauge(qx)])

    x = np.concatenate([q, f])
    p = candidate_p(q, f)
    rnorm = float(np.max(np.abs(residual(x, p))))
    iterations = 0
    for iterations in range(1, max_iter + 1):
        if rnorm < tol:
            break
        jac = np.zeros((n_p + n_v + system.n_g, n_p + n_v))
        for i in range(n_p + n_v):
            e = np.zeros(n_p + n_v)
            e[i] = fd_step
            jac[:, i] = (residual(x + e, p) - residual(x - e, p)) / (2.0 * fd_step)
        r = residual(x, p)
        step, _, rank, _ = np.linalg.lstsq(jac, -r, rcond=None)
        if rank < n_p + n_v:
            raise SingularJacobian(
                f"equilibrium Jacobian rank {rank} < {n_p + n_v} at iteration {iterations}")
        scale = 1.0
        for _ in range(30):
            x_new = x + scale * step
            p_new = candidate_p(x_new[:n_p], x_new[n_p:])
            new_norm = float(np.max(np.abs(residual(x_new, p_new))))
            if new_norm < rnorm or new_norm < tol:
                x, p, rnorm = x_new, p_new, new_norm
                break
            scale *= 0.5
        else:
            raise NoConvergence("equilibrium line search stalled",
                                iterations=iterations, residual=rnorm)
    if rnorm >= tol:
        raise NoConvergence(f"equilibrium residual {rnorm:.3e} above {tol:g} "
                            f"after {max_iter} iterations",
                            iterations=max_iter, residual=rnorm)
    q, f = x[:n_p], x[n_p:]
    r_p, r_v = equilibrium_residual(system, q, f, p, engine)
    return RelativeEquilibrium(
        q_star=q, f_tilde=f, p=p, eigen_index=eigen_index,
        residual_horizontal_p=float(np.max(np.abs(r_p))),
        residual_horizontal_v=float(np.max(np.abs(r_v))),
        residual_vertical=float(np.max(np.abs(vertical_residual(system, q, f, p)))),
        residual_gauge=float(np.max(np.abs(system.gauge(q)))),
        iterations=iterations)
