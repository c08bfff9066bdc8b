"""Full-space Euler-Lagrange integrator and the reduced-vs-full comparison.

The oracle integrates the unreduced system in the original coordinates
(Q, f):

    G_AB Qdd^B + Gamma_{A,BC} Qd^B Qd^C + V_,A = 0,
    G_mn fdd^n + V_,m = 0,

with the metric Christoffels from a batched 4th-order stencil. ``compare``
matches initial data (decomposition of the full initial point, velocities
pushed through the adapted-frame transformation, vertical momentum from the
connection form), integrates both sides on the same grid and reports the
max/mean deviation of the decomposed trajectories together with the
conservation monitors.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import fdiff, lie_group, system_model
from .connection_geometry import GeometryEngine
from .errors import SingularMetric
from .gauge_slice import GAUGE_TOL, decompose, projector_set
from .reduced_dynamics import ReducedState, energy as reduced_energy, integrate as reduced_integrate, vertical_invariant


@dataclass
class FullState:
    q: np.ndarray
    f: np.ndarray
    qdot: np.ndarray
    fdot: np.ndarray

    def copy(self):
        return FullState(*(np.array(getattr(self, k)) for k in ('q', 'f', 'qdot', 'fdot')))

    def pack(self):
        return np.concatenate([self.q, self.f, self.qdot, self.fdot])

    @staticmethod
    def unpack(vec, n_p, n_v):
        parts = np.split(np.asarray(vec, dtype=float), np.cumsum([n_p, n_v, n_p]))
        return FullState(*parts)


class FullOracle:
    """Euler-Lagrange right-hand side for one system."""

    def __init__(self, system, fd_step=fdiff.STEP):
        self.system = system
        self.fd_step = float(fd_step)
        self._metric_v_inv = np.linalg.inv(system.metric_v)

    def _metric_derivative(self, q):
        pts = fdiff.fd4_points(q, self.fd_step)
        return fdiff.fd4_combine(self.system.metric_p(pts), self.fd_step)

    def _potential_gradients(self, q, f):
        n_p, n_v = self.system.n_p, self.system.n_v
        qpts = np.vstack([fdiff.fd4_points(q, self.fd_step),
                          np.repeat(q[None, :], 4 * n_v, axis=0)])
        fpts = np.vstack([np.repeat(f[None, :], 4 * n_p, axis=0),
                          fdiff.fd4_points(f, self.fd_step)])
        vals = self.system.potential(qpts, fpts)
        grad = fdiff.fd4_combine(vals, self.fd_step)
        return grad[:n_p], grad[n_p:]

    def rhs(self, state):
        q, f, qd, fd = state.q, state.f, state.qdot, state.fdot
        G = self.system.metric_p(q)
        dG = self._metric_derivative(q)  # dG[A, B, C] = G_{AB,C}
        # Gamma[A, B, C] = (G_{AB,C} + G_{AC,B} - G_{BC,A}) / 2
        gam = 0.5 * (dG + dG.transpose(0, 2, 1) - dG.transpose(2, 0, 1))
        vq, vf = self._potential_gradients(q, f)
        force = np.einsum('ABC,B,C->A', gam, qd, qd) + vq
        try:
            qdd = -np.linalg.solve(G, force)
        except np.linalg.LinAlgError as exc:
            raise SingularMetric("P metric singular in full-space dynamics") from exc
        fdd = -self._metric_v_inv @ vf
        return FullState(q=qd.copy(), f=fd.copy(), qdot=qdd, fdot=fdd)

    def energy(self, state):
        G = self.system.metric_p(state.q)
        return float(0.5 * (state.qdot @ G @ state.qdot
                            + state.fdot @ self.system.metric_v @ state.fdot)
                     + self.system.potential(state.q, state.f))

    def noether(self, state):
        """Momentum covector K^A_al G_AB Qd^B + K^m_al G_mn fd^n."""
        G = self.system.metric_p(state.q)
        K = system_model.killing_p(self.system, state.q)
        KV = system_model.killing_v(self.system, state.f)
        return K.T @ G @ state.qdot + KV.T @ self.system.metric_v @ state.fdot


def full_rhs(system, state, fd_step=fdiff.STEP):
    """Module-level convenience wrapper around :class:`FullOracle`."""
    return FullOracle(system, fd_step).rhs(state)


@dataclass
class FullTrajectory:
    times: np.ndarray
    states: list
    energy: np.ndarray
    noether: np.ndarray
    complete: bool = True
    failure: str = ""


def integrate_full(system, initial, t_end, dt, oracle=None):
    """Fixed-step RK4 for the full-space system."""
    if dt <= 0 or t_end <= 0:
        raise ValueError("dt and t_end must be positive")
    oracle = oracle or FullOracle(system)
    n_p, n_v = system.n_p, system.n_v

    def pack_rhs(vec):
        return oracle.rhs(FullState.unpack(vec, n_p, n_v)).pack()

    n_steps = int(round(t_end / dt))
    y = initial.pack()
    state = initial.copy()
    times = [0.0]
    states = [state]
    energies = [oracle.energy(state)]
    noethers = [oracle.noether(state)]
    complete, failure = True, ""
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
        state = FullState.unpack(y, n_p, n_v)
        times.append(step * dt)
        states.append(state)
        energies.append(oracle.energy(state))
        noethers.append(oracle.noether(state))
    return FullTrajectory(times=np.array(times), states=states,
                          energy=np.array(energies), noether=np.stack(noethers),
                          complete=complete, failure=failure)


def reduced_initial_from_full(system, full_state, gauge_tol=GAUGE_TOL):
    """Matched reduced initial data for a full state.

    The shape velocities come from the adapted-frame decomposition of the
    coordinate velocity; the group quasi-velocity is extracted from the
    connection form (u(a) adot + dressed potentials contracted with the
    shape velocities) and converted to the vertical momentum p.
    """
    point = decompose(system, full_state.q, full_state.f, gauge_tol=gauge_tol)
    jac = system_model.action_jacobian_q(system, point.q_star, point.a)
    w = np.linalg.solve(jac, full_state.qdot)
    proj = projector_set(system, point.q_star, point.f_tilde)
    omega_p = proj.nproj @ w
    lam_w = proj.lam @ w
    mats = lie_group.maurer_cartan(system.group, point.a)
    adot = mats.vbar @ lam_w
    omega_v = system.representation(point.a) @ full_state.fdot - proj.killing_v @ lam_w
    engine = GeometryEngine(system)
    b = engine.bundle(point.q_star, point.f_tilde)
    omega_grp = mats.u @ adot + mats.rhobar @ (b['pot_p'] @ omega_p + b['pot_v'] @ omega_v)
    p = proj.d @ mats.rho @ omega_grp
    return ReducedState(q_star=point.q_star, f_tilde=point.f_tilde,
                        omega_p=omega_p, omega_v=omega_v, p=p, a=point.a)


@dataclass
class ComparisonReport:
    """Reduced-vs-full equivalence metrics over one run."""

    t_end: float
    dt: float
    max_dev_q_star: float
    max_dev_f_tilde: float
    mean_dev_q_star: float
    mean_dev_f_tilde: float
    max_dev_a: float
    energy_drift_full: float
    energy_drift_reduced: float
    vertical_drift: float
    noether_map_offset: float
    gauge_residual_max: float
    complete: bool
    failure: str
    tolerances: dict
    passed: bool

    def as_dict(self):
        out = {k: getattr(self, k) for k in self.__dataclass_fields__}
        for k, v in out.items():
            if isinstance(v, (np.floating, np.bool_)):
                out[k] = v.item()
        return out


def compare(system, full_initial, t_end, dt, gauge_tol=GAUGE_TOL,
            tol_state=1e-5, tol_reconstruction=1e-4, tol_energy=1e-7,
            tol_vertical=1e-7):
    """Integrate matched reduced and full systems and compare trajectories."""
    oracle = FullOracle(system)
    engine = GeometryEngine(system)
    reduced0 = reduced_initial_from_full(system, full_initial, gauge_tol)
    red = reduced_integrate(system, reduced0, t_end, dt, gauge_tol=gauge_tol, engine=engine)
    full = integrate_full(system, full_initial, t_end, dt, oracle=oracle)
    n = min(len(red.states), len(full.states))
    complete = red.complete and full.complete
    failure = red.failure or full.failure

    dev_q = np.zeros(n)
    dev_f = np.zeros(n)
    dev_a = np.zeros(n)
    noether_offsets = np.zeros(n)
    a_guess = reduced0.a
    for i in range(n):
        fs = full.states[i]
        point = decompose(system, fs.q, fs.f, initial=a_guess, gauge_tol=gauge_tol)
        a_guess = point.a
        rs = red.states[i]
        dev_q[i] = np.max(np.abs(rs.q_star - point.q_star))
        dev_f[i] = np.max(np.abs(rs.f_tilde - point.f_tilde))
        dev_a[i] = np.max(np.abs(rs.a - point.a))
        noether_offsets[i] = np.max(np.abs(vertical_invariant(system, rs) - full.noether[i]))

    e_red = red.energy
    e_full = full.energy
    drift_red = float(np.max(np.abs(e_red - e_red[0])) / max(1.0, abs(e_red[0])))
    drift_full = float(np.max(np.abs(e_full - e_full[0])) / max(1.0, abs(e_full[0])))
    vert_drift = float(np.max(np.abs(red.vertical_invariant - red.vertical_invariant[0])))
    tolerances = {"state": tol_state, "reconstruction": tol_reconstruction,
                  "energy": tol_energy, "vertical": tol_vertical}
    passed = bool(complete and np.max(dev_q) < tol_state and np.max(dev_f) < tol_state
                  and np.max(dev_a) < tol_reconstruction
                  and drift_red < tol_energy and drift_full < tol_energy
                  and vert_drift < tol_vertical)
    return ComparisonReport(
        t_end=t_end, dt=dt,
        max_dev_q_star=float(np.max(dev_q)), max_dev_f_tilde=float(np.max(dev_f)),
        mean_dev_q_star=float(np.mean(dev_q)), mean_dev_f_tilde=float(np.mean(dev_f)),
        max_dev_a=float(np.max(dev_a)),
        energy_drift_full=drift_full, energy_drift_reduced=drift_red,
        vertical_drift=vert_drift,
        noether_map_offset=float(np.max(noether_offsets)),
        gauge_residual_max=float(np.max(red.gauge_residual)),
        complete=complete, failure=failure, tolerances=tolerances, passed=passed)
