"""Built-in example systems.

``so3-warped``: P = R x SO(3) with coordinates Q = (r, q^1, q^2, q^3), the
group acting by right translation on the SO(3) factor; metric
dr^2 + h(r) * (bi-invariant block) with h(r) = 1 + r^2; V = R^3 carrying the
adjoint (vector) representation with G_mn = identity; potential
V = r^2/2 + |f|^2/2; gauge chi^alpha(Q) = q^alpha (section at the
group-factor identity).

Evaluators are batched and accept dual-number object arrays, so the same
code path serves the fast float pipeline and the derivative oracle used in
tests.
"""

from __future__ import annotations

import numpy as np

from . import lie_group
from .dualnum import Dual, generic_inv
from .system_model import SystemDefinition


def _hwarp(r):
    return 1.0 + r * r


def _hwarp_prime(r):
    return 2.0 * r


def _eye_like(template, n):
    if isinstance(template, np.ndarray) and template.dtype == object:
        out = np.empty(template.shape[:-1] + (n, n), dtype=object)
        for idx in np.ndindex(out.shape):
            out[idx] = Dual(1.0 if idx[-1] == idx[-2] else 0.0)
        return out
    return np.zeros(template.shape[:-1] + (n, n)) + np.eye(n)


def _zeros_like(template, shape):
    if isinstance(template, np.ndarray) and template.dtype == object:
        out = np.empty(template.shape[:-1] + shape, dtype=object)
        for idx in np.ndindex(out.shape):
            out[idx] = Dual(0.0)
        return out
    return np.zeros(template.shape[:-1] + shape)


def so3_warped():
    chart = lie_group.so3()

    def metric_p(Q):
        # dual (object) inputs are supported for single points only
        Q = np.asarray(Q)
        r, q = Q[..., 0], Q[..., 1:]
        u = lie_group.mc_u(chart, q)
        block = np.swapaxes(u, -1, -2) @ u
        h = _hwarp(r)
        if Q.dtype == object:
            G = _zeros_like(Q, (4, 4))
            G[0, 0] = Dual(1.0)
            G[1:, 1:] = h * block
            return G
        G = np.zeros(Q.shape[:-1] + (4, 4))
        G[..., 0, 0] = 1.0
        G[..., 1:, 1:] = h[..., None, None] * block
        return G

    def killing_p_fn(Q):
        Q = np.asarray(Q)
        q = Q[..., 1:]
        u = lie_group.mc_u(chart, q)
        if Q.dtype == object:
            v = generic_inv(u)
        else:
            v = np.linalg.inv(u)
        K = _zeros_like(Q, (4, 3))
        K[..., 1:, :] = v
        return K

    def action(Q, a):
        Q = np.asarray(Q, dtype=float)
        a = np.asarray(a, dtype=float)
        if Q.ndim == 1:
            return np.concatenate([Q[:1], lie_group.multiply(chart, Q[1:], a)])
        flat = Q.reshape(-1, 4)
        out = np.empty_like(flat)
        for i, row in enumerate(flat):
            out[i, 0] = row[0]
            out[i, 1:] = lie_group.multiply(chart, row[1:], a)
        return out.reshape(Q.shape)

    def action_jac_q(Q, a):
        # dF/dQ = diag(1, v(q a) rhobar(a) u(q)); see the Maurer-Cartan chain rule
        Q = np.asarray(Q, dtype=float)
        q = Q[1:]
        qa = lie_group.multiply(chart, q, a)
        u_q = lie_group.mc_u(chart, q)
        v_qa = np.linalg.inv(lie_group.mc_u(chart, qa))
        rhobar = lie_group.adjoint(chart, lie_group.inverse(a))
        J = np.zeros((4, 4))
        J[0, 0] = 1.0
        J[1:, 1:] = v_qa @ rhobar @ u_q
        return J

    def representation(a):
        return lie_group.adjoint(chart, a)

    rep_generators = -np.stack([lie_group.adjoint_algebra(chart, e) for e in np.eye(3)])

    def potential(Q, f):
        Q = np.asarray(Q)
        f = np.asarray(f)
        if Q.dtype == object or f.dtype == object:
            acc = 0.5 * Q[..., 0] * Q[..., 0]
            for m in range(3):
                acc = acc + 0.5 * f[..., m] * f[..., m]
            return acc
        return 0.5 * Q[..., 0] ** 2 + 0.5 * np.einsum('...m,...m->...', f, f)

    def gauge(Q):
        return np.asarray(Q)[..., 1:].copy()

    def gauge_grad(Q):
        Q = np.asarray(Q, dtype=float)
        X = np.zeros(Q.shape[:-1] + (3, 4))
        X[..., :, 1:] = np.eye(3)
        return X

    def gauge_hess(Q):
        return np.zeros((3, 4, 4))

    return SystemDefinition(
        name="so3-warped",
        group=chart,
        n_p=4,
        n_v=3,
        metric_p=metric_p,
        metric_v=np.eye(3),
        action=action,
        representation=representation,
        rep_generators=rep_generators,
        potential=potential,
        gauge=gauge,
        gauge_grad=gauge_grad,
        gauge_hess=gauge_hess,
        killing_p_fn=killing_p_fn,
        action_jac_q=action_jac_q,
        sample_width_p=np.array([0.5, 0.35, 0.35, 0.35]),
        sample_center_p=np.array([1.0, 0.0, 0.0, 0.0]),
        sample_width_v=0.5,
    )


_BUILTIN_SYSTEMS = {"so3-warped": so3_warped}


def builtin_system(name):
    try:
        return _BUILTIN_SYSTEMS[name]()
    except KeyError:
        raise KeyError(f"unknown builtin system {name!r}; have {sorted(_BUILTIN_SYSTEMS)}")


def builtin_names():
    return sorted(_BUILTIN_SYSTEMS)
