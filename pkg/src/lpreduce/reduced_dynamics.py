"""Reduced equations of motion in dependent coordinates, with reconstruction.

State: (Q*, f~, omega_p, omega_v, p, a). The shape velocities are
quasi-velocities (omega_p = dQ*/dt tangent to the gauge surface,
omega_v = df~/dt); p is the vertical momentum covector and the group point a
is evolved purely for reconstruction, never feeding back into the shape or
vertical equations.

Right-hand side assembly (all coefficients section-valued, from one
:class:`~lpreduce.connection_geometry.GeometryCache`):

* quadratic form over the stacked index Rt = (T, m):
    S_Rt = Gamma-quad_Rt + curv^al_{Qt Rt} omega^Qt p_al
           + (cov_Rt d^{ka si}) p_ka p_si / 2 + V_,Rt
* first horizontal block: N domega_p = -(N G^-1 N_ext^T S); the complement
  of the rank-deficient projected equation is closed by differentiating the
  gauge tangency chi_A omega^A = 0;
* second horizontal block solves for domega_v explicitly;
* vertical block: dp_be = -c^nu_{mu be} (d^-1 p)^mu p_nu
                          + c^nu_{si be} (A omega)^si p_nu;
* reconstruction: da = v(a) [omega_grp - rhobar (A omega)] with
  omega_grp = rhobar d^-1 p.

The integrator is fixed-step classical RK4 with optional post-step gauge
re-projection (Newton back onto chi = 0 plus pperp velocity projection)
whenever the monitored residual exceeds ten times the gauge tolerance.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import lie_group
from .connection_geometry import GeometryEngine
from .errors import SingularLinearSystem, SingularOrbitMetric
from .gauge_slice import GAUGE_TOL, solve_gauge

REPROJECT_FACTOR = 10.0


@dataclass
class ReducedState:
    """Dynamical state of the reduced system."""

    q_star: np.ndarray
    f_tilde: np.ndarray
    omega_p: np.ndarray
    omega_v: np.ndarray
    p: np.ndarray
    a: np.ndarray

    def copy(self):
        return ReducedState(*(np.array(getattr(self, f)) for f in
                              ('q_star', 'f_tilde', 'omega_p', 'omega_v', 'p', 'a')))

    def pack(self):
        return np.concatenate([self.q_star, self.f_tilde, self.omega_p,
                               self.omega_v, self.p, self.a])

    @staticmethod
    def unpack(vec, n_p, n_v, n_g):
        parts = np.split(np.asarray(vec, dtype=float),
                         np.cumsum([n_p, n_v, n_p, n_v, n_g]))
        return ReducedState(*parts)


@dataclass
class Trajectory:
    """Time series of reduced states plus per-step invariant monitors."""

    times: np.ndarray
    states: list
    energy: np.ndarray
    vertical_invariant: np.ndarray
    gauge_residual: np.ndarray
    tangency_residual: np.ndarray
    reprojections: int = 0
    complete: bool = True
    failure: str = ""

    def state_array(self):
        return np.stack([s.pack() for s in self.states])


def check_state(system, state, gauge_tol=GAUGE_TOL, tangency_tol=1e-9):
    """Enforce the state invariants: chi(Q*) = 0 and chi_A omega = 0."""
    from .system_model import gauge_gradient
    gauge_res = float(np.max(np.abs(system.gauge(state.q_star))))
    tan_res = float(np.max(np.abs(gauge_gradient(system, state.q_star) @ state.omega_p)))
    if gauge_res > gauge_tol * REPROJECT_FACTOR:
        raise ValueError(f"state violates the gauge constraint: |chi| = {gauge_res:.3e}")
    if tan_res > tangency_tol:
        raise ValueError(f"state velocity not tangent to the gauge surface: {tan_res:.3e}")
    return gauge_res, tan_res


def _quadratic_terms(cache, omega_p, omega_v):
    """Gamma-quad_Rt: lowered-Christoffel quadratic form over Rt = (T, m)."""
    wp, wv = omega_p, omega_v
    quad_p = (np.einsum('BMT,B,M->T', cache.gam_ppp, wp, wp)
              + 2.0 * np.einsum('qBT,q,B->T', cache.gam_vpp, wv, wp)
              + np.einsum('pqT,p,q->T', cache.gam_vvp, wv, wv))
    quad_v = (np.einsum('BMm,B,M->m', cache.gam_ppv, wp, wp)
              + 2.0 * np.einsum('qBm,q,B->m', cache.gam_vpv, wv, wp)
              + np.einsum('pqm,p,q->m', cache.gam_vvv, wv, wv))
    return quad_p, quad_v


def _force_terms(cache, omega_p, omega_v, p):
    """curv + covariant-d + potential force over Rt = (T, m)."""
    th_p = (np.einsum('aQR,Q,a->R', cache.curv_pp, omega_p, p)
            - np.einsum('aRq,q,a->R', cache.curv_pv, omega_v, p)
            + 0.5 * np.einsum('ksR,k,s->R', cache.cov_dinv_p, p, p)
            + cache.v_grad_p)
    th_v = (np.einsum('aQm,Q,a->m', cache.curv_pv, omega_p, p)
            + np.einsum('aqm,q,a->m', cache.curv_vv, omega_v, p)
            + 0.5 * np.einsum('ksm,k,s->m', cache.cov_dinv_v, p, p)
            + cache.v_grad_v)
    return th_p, th_v


def rhs(system, state, engine=None):
    """Time derivative of a reduced state."""
    engine = engine or GeometryEngine(system)
    cache = engine.cache(state.q_star, state.f_tilde)
    proj = cache.proj
    wp, wv, p = state.omega_p, state.omega_v, state.p

    quad_p, quad_v = _quadratic_terms(cache, wp, wv)
    th_p, th_v = _force_terms(cache, wp, wv, p)
    s_p = quad_p + th_p
    s_v = quad_v + th_v
    # w_F = N^{Rt}_F S_Rt; then the projected equation N domega = -N G^-1 w
    w = proj.nproj.T @ s_p + proj.nproj_v.T @ s_v
    giw = proj.metric_p_inv @ w
    rhs1 = proj.nproj @ giw

    # gauge-tangency closure for the unprojected acceleration components
    hess = np.einsum('mAB,A,B->m', cache.gauge_hess, wp, wp)
    stacked = np.vstack([proj.nproj, proj.gauge_grad])
    target = np.concatenate([-rhs1, -hess])
    domega_p, _, rank, _ = np.linalg.lstsq(stacked, target, rcond=None)
    if rank < system.n_p:
        raise SingularLinearSystem(
            f"gauge closure system rank {rank} < {system.n_p}")

    gv_inv_sv = np.linalg.solve(system.metric_v, s_v)
    domega_v = -(proj.nproj_v @ domega_p) - proj.nproj_v @ giw - gv_inv_sv

    try:
        d_inv_p = np.linalg.solve(proj.d, p)
    except np.linalg.LinAlgError as exc:
        raise SingularOrbitMetric("orbit metric singular in vertical equation") from exc
    c = system.group.structure_constants
    a_omega = cache.pot_p @ wp + cache.pot_v @ wv
    dp = (-np.einsum('nmb,m,n->b', c, d_inv_p, p)
          + np.einsum('nsb,s,n->b', c, a_omega, p))

    mats = lie_group.maurer_cartan(system.group, state.a)
    da = mats.v @ mats.rhobar @ (d_inv_p - a_omega)

    return ReducedState(q_star=wp.copy(), f_tilde=wv.copy(), omega_p=domega_p,
                        omega_v=domega_v, p=dp, a=da)


def energy(system, state, engine=None):
    """Legendre energy of the reduced Lagrangian."""
    engine = engine or GeometryEngine(system)
    b = engine.bundle(state.q_star, state.f_tilde)
    wp, wv, p = state.omega_p, state.omega_v, state.p
    kinetic = (wp @ b['gh_pp'] @ wp + 2.0 * wp @ b['gh_pv'] @ wv
               + wv @ b['gh_vv'] @ wv + p @ b['d_inv'] @ p)
    return 0.5 * float(kinetic) + float(b['potential'])


def vertical_invariant(system, state):
    """Conserved covector rho^nu_al p_nu (the dressed vertical momentum)."""
    rho = lie_group.adjoint(system.group, state.a)
    return rho.T @ state.p


def _reproject(system, state, gauge_tol):
    """Newton the shape point back onto chi = 0 and re-project the velocity."""
    correction = solve_gauge(system, state.q_star, gauge_tol=gauge_tol)
    q_new = system.action(state.q_star, lie_group.inverse(correction))
    f_new = system.representation(correction) @ state.f_tilde
    a_new = lie_group.multiply(system.group, correction, state.a)
    from .gauge_slice import projector_set
    proj = projector_set(system, q_new, f_new)
    omega_p = proj.pperp @ state.omega_p
    return ReducedState(q_star=q_new, f_tilde=f_new, omega_p=omega_p,
                        omega_v=state.omega_v.copy(), p=state.p.copy(), a=a_new)


def integrate(system, initial, t_end, dt, gauge_tol=GAUGE_TOL, engine=None,
              validate_initial=True):
    """Fixed-step RK4 integration of the reduced system.

    Numerical failures mid-run (chart exit, singular geometry) truncate the
    trajectory: the result carries ``complete=False`` and the reason.
    """
    if dt <= 0 or t_end <= 0:
        raise ValueError("dt and t_end must be positive")
    engine = engine or GeometryEngine(system)
    if validate_initial:
        check_state(system, initial, gauge_tol=gauge_tol)
    n_steps = int(round(t_end / dt))
    from .system_model import gauge_gradient

    def pack_rhs(vec):
        st = ReducedState.unpack(vec, system.n_p, system.n_v, system.n_g)
        return rhs(system, st, engine).pack()

    state = initial.copy()
    times = [0.0]
    states = [state.copy()]
    monitors = {'energy': [energy(system, state, engine)],
                'vert': [vertical_invariant(system, state)],
                'gauge': [float(np.max(np.abs(system.gauge(state.q_star))))],
                'tan': [float(np.max(np.abs(gauge_gradient(system, state.q_star) @ state.omega_p)))]}
    reprojections = 0
    complete, failure = True, ""
    y = state.pack()
    for step in range(1, n_steps + 1):
        try:
            k1 = pack_rhs(y)
            k2 = pack_rhs(y + 0.5 * dt * k1)
            k3 = pack_rhs(y + 0.5 * dt * k2)
            k4 = pack_rhs(y + dt * k3)
        except Exception as exc:  # noqa: BLE001 - truncation semantics
            complete, failure = False, f"{type(exc).__name__}: {exc}"
            break
        y = y + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        state = ReducedState.unpack(y, system.n_p, system.n_v, system.n_g)
        gauge_res = float(np.max(np.abs(system.gauge(state.q_star))))
        if gauge_res > REPROJECT_FACTOR * gauge_tol:
            state = _reproject(system, state, gauge_tol)
            y = state.pack()
            gauge_res = float(np.max(np.abs(system.gauge(state.q_star))))
            reprojections += 1
        if float(np.linalg.norm(state.a)) > system.group.chart_radius:
            complete, failure = False, "ChartExit: reconstruction variable left the chart"
            break
        times.append(step * dt)
        states.append(state.copy())
        monitors['energy'].append(energy(system, state, engine))
        monitors['vert'].append(vertical_invariant(system, state))
        monitors['gauge'].append(gauge_res)
        monitors['tan'].append(float(np.max(np.abs(
            gauge_gradient(system, state.q_star) @ state.omega_p))))
    return Trajectory(times=np.array(times), states=states,
                      energy=np.array(monitors['energy']),
                      vertical_invariant=np.stack(monitors['vert']),
                      gauge_residual=np.array(monitors['gauge']),
                      tangency_residual=np.array(monitors['tan']),
                      reprojections=reprojections,
                      complete=complete, failure=failure)
