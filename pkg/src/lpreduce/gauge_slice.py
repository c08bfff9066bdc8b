"""Dependent (gauge-fixed) coordinates and the projector family.

The gauge surface Sigma is the zero set of the gauge functions chi^alpha.
``solve_gauge`` finds the group point a(Q) with chi(F(Q, a^-1)) = 0 by a
damped Newton iteration whose Jacobian is the Faddeev-Popov matrix: writing
the update multiplicatively, a <- a * eps, the residual changes to first
order by -Phi(Q*) eps, so the Faddeev-Popov solve is the exact chain-rule
Newton step through dF/da.

``projector_set`` assembles, at a point (Q, f) (batched):
  Phi^beta_mu   = chi^beta_A K^A_mu               (Faddeev-Popov)
  Lambda        = Phi^-1 chi_A
  nproj         = 1 - K Lambda          (idempotent, kills Killing columns)
  nproj_v       = -K_V Lambda           (V-block N^m_A)
  pperp         = 1 - chi^T (chi chi^T)^-1 chi    (slice-tangent projector,
                  transpose taken with the metric and orbit-metric weights)
  hproj         = 1 - K d^-1 K^T G                (horizontal projector)
with the orbit metrics gamma, gamma' and d = gamma + gamma'.

Comma derivatives with respect to the dependent coordinates apply
``pperp`` to ambient gradients; ``dependent_derivative`` centralizes that
rule.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import fdiff, lie_group, system_model
from .errors import NoConvergence, SingularFP

GAUGE_TOL = 1e-12
MAX_NEWTON = 50


@dataclass(frozen=True)
class AdaptedPoint:
    """(Q*, f~, a) with chi(Q*) = 0."""

    q_star: np.ndarray
    f_tilde: np.ndarray
    a: np.ndarray


@dataclass(frozen=True)
class ProjectorSet:
    """Pointwise projector family; fields batched like the inputs."""

    metric_p: np.ndarray
    metric_p_inv: np.ndarray
    killing_p: np.ndarray
    killing_v: np.ndarray
    gauge_grad: np.ndarray
    fp: np.ndarray
    fp_inv: np.ndarray
    lam: np.ndarray
    nproj: np.ndarray
    nproj_v: np.ndarray
    pperp: np.ndarray
    hproj: np.ndarray
    gamma_p: np.ndarray
    gamma_v: np.ndarray
    d: np.ndarray
    d_inv: np.ndarray

    def killing_stacked(self):
        return np.concatenate([self.killing_p, self.killing_v], axis=-2)

    def nproj_extended(self):
        """Block matrix [[N, 0], [N^m_A, 1]] on P+V indices."""
        np_, nv = self.killing_p.shape[-2], self.killing_v.shape[-2]
        shape = self.nproj.shape[:-2] + (np_ + nv, np_ + nv)
        out = np.zeros(shape)
        out[..., :np_, :np_] = self.nproj
        out[..., np_:, :np_] = self.nproj_v
        out[..., np_:, np_:] = np.eye(nv)
        return out


def solve_gauge(system, Q, initial=None, gauge_tol=GAUGE_TOL, max_iter=MAX_NEWTON):
    """Group coordinates a(Q) bringing Q onto the gauge surface.

    Damped Newton with step halving; raises :class:`NoConvergence` outside
    the section domain and :class:`SingularFP` at transversality loss.
    """
    Q = np.asarray(Q, dtype=float)
    a = np.zeros(system.n_g) if initial is None else np.asarray(initial, dtype=float).copy()
    point = system.action(Q, lie_group.inverse(a))
    res = system.gauge(point)
    rnorm = float(np.max(np.abs(res)))
    for iteration in range(max_iter):
        if rnorm < gauge_tol:
            return a
        fp = system_model.gauge_gradient(system, point) @ system_model.killing_p(system, point)
        try:
            step = np.linalg.solve(fp, res)
        except np.linalg.LinAlgError as exc:
            raise SingularFP(f"Faddeev-Popov matrix singular during gauge solve at iteration {iteration}") from exc
        scale = 1.0
        for _ in range(30):
            try:
                # left-multiplicative update: for a -> eps * a the residual
                # moves by -Phi(Y) eps, so Phi is the exact Newton Jacobian
                candidate = lie_group.multiply(system.group, scale * step, a)
            except Exception:
                scale *= 0.5
                continue
            new_point = system.action(Q, lie_group.inverse(candidate))
            new_res = system.gauge(new_point)
            new_norm = float(np.max(np.abs(new_res)))
            if new_norm < rnorm or new_norm < gauge_tol:
                a, point, res, rnorm = candidate, new_point, new_res, new_norm
                break
            scale *= 0.5
        else:
            raise NoConvergence("gauge Newton line search stalled",
                                iterations=iteration, residual=rnorm)
    if rnorm < gauge_tol:
        return a
    raise NoConvergence(f"gauge solve did not reach {gauge_tol:g} in {max_iter} iterations",
                        iterations=max_iter, residual=rnorm)


def decompose(system, Q, f, initial=None, gauge_tol=GAUGE_TOL):
    """Adapted coordinates (Q*, f~, a) of an ambient point (Q, f)."""
    a = solve_gauge(system, Q, initial=initial, gauge_tol=gauge_tol)
    q_star = system.action(Q, lie_group.inverse(a))
    f_tilde = system.representation(a) @ np.asarray(f, dtype=float)
    return AdaptedPoint(q_star=q_star, f_tilde=f_tilde, a=a)


def compose(system, point):
    """Ambient coordinates (Q, f) of an adapted point."""
    Q = system.action(point.q_star, point.a)
    f = system.rep_inverse(point.a) @ point.f_tilde
    return Q, f


def projector_set(system, q_star, f_tilde):
    """Projector family at (Q*, f~); accepts batched points."""
    Q = np.asarray(q_star, dtype=float)
    f = np.asarray(f_tilde, dtype=float)
    G = system.metric_p(Q)
    K = system_model.killing_p(system, Q)
    KV = system_model.killing_v(system, f)
    X = system_model.gauge_gradient(system, Q)
    GV = system.metric_v
    try:
        Gi = np.linalg.inv(G)
    except np.linalg.LinAlgError as exc:
        raise SingularFP("P metric not invertible") from exc
    fp = X @ K
    try:
        fp_inv = np.linalg.inv(fp)
    except np.linalg.LinAlgError as exc:
        raise SingularFP("Faddeev-Popov matrix singular") from exc
    lam = fp_inv @ X
    n_p = system.n_p
    nproj = np.broadcast_to(np.eye(n_p), G.shape).copy() - K @ lam
    nproj_v = -KV @ lam
    KtG = np.swapaxes(K, -1, -2) @ G
    KVtG = np.swapaxes(KV, -1, -2) @ GV
    gamma_p = KtG @ K
    gamma_v = KVtG @ KV
    d = gamma_p + gamma_v
    try:
        d_inv = np.linalg.inv(d)
    except np.linalg.LinAlgError as exc:
        raise SingularFP("orbit metric singular") from exc
    d_inv = 0.5 * (d_inv + np.swapaxes(d_inv, -1, -2))
    # slice-tangent projector: chi^T uses metric and orbit-metric weights
    chiT = Gi @ np.swapaxes(X, -1, -2) @ gamma_p
    M = X @ chiT
    pperp = np.broadcast_to(np.eye(n_p), G.shape).copy() - chiT @ np.linalg.solve(M, X)
    # horizontal projector on P+V
    Kst = np.concatenate([K, KV], axis=-2)
    KstG = np.concatenate([KtG, KVtG], axis=-1)
    n_t = n_p + system.n_v
    hproj = np.broadcast_to(np.eye(n_t), d.shape[:-2] + (n_t, n_t)).copy() \
        - Kst @ d_inv @ KstG
    return ProjectorSet(metric_p=G, metric_p_inv=Gi, killing_p=K, killing_v=KV,
                        gauge_grad=X, fp=fp, fp_inv=fp_inv, lam=lam,
                        nproj=nproj, nproj_v=nproj_v, pperp=pperp, hproj=hproj,
                        gamma_p=gamma_p, gamma_v=gamma_v, d=d, d_inv=d_inv)


def dependent_derivative(system, q_star, f_tilde, field, step=fdiff.STEP):
    """Comma derivative over Q* of an ambient field: pperp-projected gradient.

    ``field`` maps a batch of ambient Q points to arrays (any trailing
    shape); the result carries the derivative direction in the last axis.
    """
    q_star = np.asarray(q_star, dtype=float)
    raw = fdiff.gradient(field, q_star, step)
    pp = projector_set(system, q_star, f_tilde).pperp
    return np.einsum('...D,DA->...A', raw, pp)
