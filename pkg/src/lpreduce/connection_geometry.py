"""Mechanical connection, curvature, horizontal metric and derived fields.

``GeometryEngine.bundle`` evaluates, on a batch of ambient points (Q, f),
every pointwise quantity the reduced equations need:

  gauge potentials   pot_p^al_B = d^{al be} K^D_be G_DB,
                     pot_v^al_m = d^{al be} K^q_be G_qm
  horizontal metric  gh_pp = G - G K d^-1 K^T G   (and pv / vv blocks)
  orbit metric       d = gamma + gamma'

``GeometryEngine.cache`` assembles one point's full coefficient cache by a
single batched 4th-order stencil evaluation: comma derivatives over the
dependent coordinates (pperp-projected ambient gradients) and plain f
partials feed the curvature two-form, the covariant derivatives of the
orbit metric, the lowered Christoffel symbols of the horizontal metric and
the potential gradient. Curvature sign convention:

  curv^al_{SP} = pot^al_{P,S} - pot^al_{S,P} + c^al_{nu si} pot^nu_S pot^si_P

with blocks (P,P), (P-index first, V-index second) and (V,V); the mixed
block is antisymmetric across storage order, curv^al_{pE} = -curv_pv[al,E,p].

Everything here is section-valued (tilde-free); the dressing by the adjoint
matrix that restores the group dependence is provided separately for the
test-side identities (``tilde_dress``), since it cancels from the final
equations of motion.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import fdiff, lie_group, system_model
from .dualnum import generic_inv
from .errors import SingularOrbitMetric
from .gauge_slice import ProjectorSet, projector_set

_BUNDLE_KEYS = ('pot_p', 'pot_v', 'd', 'gh_pp', 'gh_pv', 'gh_vv', 'potential')


@dataclass(frozen=True)
class GeometryCache:
    """All pointwise coefficients of the reduced equations at (Q*, f~)."""

    q_star: np.ndarray
    f_tilde: np.ndarray
    proj: ProjectorSet
    pot_p: np.ndarray
    pot_v: np.ndarray
    curv_pp: np.ndarray
    curv_pv: np.ndarray
    curv_vv: np.ndarray
    gh_pp: np.ndarray
    gh_pv: np.ndarray
    gh_vv: np.ndarray
    ghi_pp: np.ndarray
    ghi_pv: np.ndarray
    ghi_vv: np.ndarray
    gam_ppp: np.ndarray
    gam_vpp: np.ndarray
    gam_vvp: np.ndarray
    gam_ppv: np.ndarray
    gam_vpv: np.ndarray
    gam_vvv: np.ndarray
    cov_d_p: np.ndarray
    cov_d_v: np.ndarray
    cov_dinv_p: np.ndarray
    cov_dinv_v: np.ndarray
    v_grad_p: np.ndarray
    v_grad_v: np.ndarray
    potential: float
    gauge_hess: np.ndarray
    partials: dict


class GeometryEngine:
    """Batched geometry evaluation for one system."""

    def __init__(self, system, fd_step=fdiff.STEP):
        self.system = system
        self.fd_step = float(fd_step)
        self._metric_v_inv = np.linalg.inv(system.metric_v)

    # -- ambient bundle ----------------------------------------------------
    def bundle(self, Q, f):
        """Pointwise geometry at ambient (Q, f); arbitrary leading batch."""
        system = self.system
        Q = np.asarray(Q, dtype=float)
        f = np.asarray(f, dtype=float)
        G = system.metric_p(Q)
        K = system_model.killing_p(system, Q)
        KV = system_model.killing_v(system, f)
        GV = system.metric_v
        KtG = np.swapaxes(K, -1, -2) @ G
        KVtG = np.swapaxes(KV, -1, -2) @ GV
        d = KtG @ K + KVtG @ KV
        try:
            d_inv = np.linalg.inv(d)
        except np.linalg.LinAlgError as exc:
            raise SingularOrbitMetric("orbit metric singular in bundle evaluation") from exc
        d_inv = 0.5 * (d_inv + np.swapaxes(d_inv, -1, -2))
        pot_p = d_inv @ KtG
        pot_v = d_inv @ KVtG
        gh_pp = G - np.swapaxes(KtG, -1, -2) @ pot_p
        gh_pv = -np.swapaxes(KtG, -1, -2) @ pot_v
        gh_vv = GV - np.swapaxes(KVtG, -1, -2) @ pot_v
        return {'metric_p': G, 'killing_p': K, 'killing_v': KV, 'd': d,
                'd_inv': d_inv, 'pot_p': pot_p, 'pot_v': pot_v,
                'gh_pp': gh_pp, 'gh_pv': gh_pv, 'gh_vv': gh_vv,
                'potential': system.potential(Q, f)}

    # -- stencil derivatives -------------------------------------------------
    def _stencil(self, q_star, f_tilde):
        n_p, n_v = self.system.n_p, self.system.n_v
        nd = n_p + n_v
        h = self.fd_step
        Qpts = np.repeat(q_star[None, :], 1 + 4 * nd, axis=0)
        fpts = np.repeat(f_tilde[None, :], 1 + 4 * nd, axis=0)
        row = 1
        for i in range(n_p):
            for off in fdiff.FD4_OFFSETS:
                Qpts[row, i] += off * h
                row += 1
        for m in range(n_v):
            for off in fdiff.FD4_OFFSETS:
                fpts[row, m] += off * h
                row += 1
        return Qpts, fpts

    def cache(self, q_star, f_tilde):
        """Full geometry cache at one adapted point."""
        system = self.system
        n_p, n_v, n_g = system.n_p, system.n_v, system.n_g
        q_star = np.asarray(q_star, dtype=float)
        f_tilde = np.asarray(f_tilde, dtype=float)
        proj = projector_set(system, q_star, f_tilde)
        Qpts, fpts = self._stencil(q_star, f_tilde)
        data = self.bundle(Qpts, fpts)
        center = {k: data[k][0] for k in _BUNDLE_KEYS}
        derivs = {k: fdiff.fd4_combine(data[k][1:], self.fd_step) for k in _BUNDLE_KEYS}
        # split directions and apply the dependent-derivative rule on Q
        dq = {k: np.einsum('...D,DA->...A', derivs[k][..., :n_p], proj.pperp)
              for k in _BUNDLE_KEYS}
        df = {k: derivs[k][..., n_p:] for k in _BUNDLE_KEYS}

        c = system.group.structure_constants
        pot_p, pot_v = center['pot_p'], center['pot_v']

        # curvature blocks
        quad_pp = np.einsum('gab,aS,bP->gSP', c, pot_p, pot_p)
        curv_pp = np.swapaxes(dq['pot_p'], 1, 2) - dq['pot_p'] + quad_pp
        quad_pv = np.einsum('gab,aE,bp->gEp', c, pot_p, pot_v)
        curv_pv = np.swapaxes(dq['pot_v'], 1, 2) - df['pot_p'] + quad_pv
        quad_vv = np.einsum('gab,ap,bm->gpm', c, pot_v, pot_v)
        curv_vv = np.swapaxes(df['pot_v'], 1, 2) - df['pot_v'] + quad_vv

        # covariant derivatives of d and of its inverse
        cov_d_p = _covariant_d_block(c, center['d'], dq['d'], pot_p)
        cov_d_v = _covariant_d_block(c, center['d'], df['d'], pot_v)
        d_inv = proj.d_inv
        cov_dinv_p = -np.einsum('km,mnD,ns->ksD', d_inv, cov_d_p, d_inv)
        cov_dinv_v = -np.einsum('km,mnD,ns->ksD', d_inv, cov_d_v, d_inv)

        # lowered Christoffel symbols of the horizontal metric
        gq, gf = dq['gh_pp'], df['gh_pp']
        pq, pf = dq['gh_pv'], df['gh_pv']
        vq, vf = dq['gh_vv'], df['gh_vv']
        gam_ppp = 0.5 * (np.einsum('BTM->BMT', gq) + np.einsum('MTB->BMT', gq)
                         - gq)
        gam_vpp = 0.5 * (np.einsum('BTq->qBT', gf) + np.einsum('TqB->qBT', pq)
                         - np.einsum('BqT->qBT', pq))
        gam_vvp = 0.5 * (np.einsum('Tpq->pqT', pf) + np.einsum('Tqp->pqT', pf)
                         - np.einsum('pqT->pqT', vq))
        gam_ppv = 0.5 * (np.einsum('BmM->BMm', pq) + np.einsum('MmB->BMm', pq)
                         - np.einsum('BMm->BMm', gf))
        gam_vpv = 0.5 * (np.einsum('Bmq->qBm', pf) + np.einsum('qmB->qBm', vq)
                         - np.einsum('Bqm->qBm', pf))
        gam_vvv = 0.5 * (np.einsum('pmq->pqm', vf) + np.einsum('qmp->pqm', vf)
                         - vf)

        ghi_pp = proj.nproj @ proj.metric_p_inv @ proj.nproj.T
        ghi_pv = proj.nproj @ proj.metric_p_inv @ proj.nproj_v.T
        ghi_vv = self._metric_v_inv + proj.nproj_v @ proj.metric_p_inv @ proj.nproj_v.T

        return GeometryCache(
            q_star=q_star, f_tilde=f_tilde, proj=proj,
            pot_p=pot_p, pot_v=pot_v,
            curv_pp=curv_pp, curv_pv=curv_pv, curv_vv=curv_vv,
            gh_pp=center['gh_pp'], gh_pv=center['gh_pv'], gh_vv=center['gh_vv'],
            ghi_pp=ghi_pp, ghi_pv=ghi_pv, ghi_vv=ghi_vv,
            gam_ppp=gam_ppp, gam_vpp=gam_vpp, gam_vvp=gam_vvp,
            gam_ppv=gam_ppv, gam_vpv=gam_vpv, gam_vvv=gam_vvv,
            cov_d_p=cov_d_p, cov_d_v=cov_d_v,
            cov_dinv_p=cov_dinv_p, cov_dinv_v=cov_dinv_v,
            v_grad_p=dq['potential'], v_grad_v=df['potential'],
            potential=float(center['potential']),
            gauge_hess=system_model.gauge_hessian(system, q_star),
            partials={'dq': dq, 'df': df})


def _covariant_d_block(c, d, d_der, pot):
    """cov_D d_{mu nu} = d_{mu nu, D} - c^s_{a mu} A^a_D d_{s nu} - (mu<->nu)."""
    cc = np.einsum('sam,aD->smD', c, pot)
    t1 = np.einsum('smD,sn->mnD', cc, d)
    t2 = np.einsum('snD,sm->mnD', cc, d)
    return d_der - t1 - t2


# -- spec-level operation wrappers ------------------------------------------

def potentials(system, q_star, f_tilde):
    """Gauge potentials (pot_p, pot_v) at a point."""
    cache = GeometryEngine(system).cache(np.asarray(q_star, float), np.asarray(f_tilde, float))
    return cache.pot_p, cache.pot_v


def curvature(system, q_star, f_tilde):
    """Curvature blocks (curv_pp, curv_pv, curv_vv) at a point."""
    cache = GeometryEngine(system).cache(np.asarray(q_star, float), np.asarray(f_tilde, float))
    return cache.curv_pp, cache.curv_pv, cache.curv_vv


def horizontal_metric(system, q_star, f_tilde):
    """Horizontal metric blocks and their pseudoinverse blocks."""
    cache = GeometryEngine(system).cache(np.asarray(q_star, float), np.asarray(f_tilde, float))
    return ((cache.gh_pp, cache.gh_pv, cache.gh_vv),
            (cache.ghi_pp, cache.ghi_pv, cache.ghi_vv))


def christoffel_lowered(system, q_star, f_tilde):
    """The six lowered Christoffel tensors of the horizontal metric."""
    cache = GeometryEngine(system).cache(np.asarray(q_star, float), np.asarray(f_tilde, float))
    return (cache.gam_ppp, cache.gam_vpp, cache.gam_vvp,
            cache.gam_ppv, cache.gam_vpv, cache.gam_vvv)


def covariant_d(system, q_star, f_tilde):
    """Covariant derivatives of the orbit metric and of its inverse."""
    cache = GeometryEngine(system).cache(np.asarray(q_star, float), np.asarray(f_tilde, float))
    return cache.cov_d_p, cache.cov_d_v, cache.cov_dinv_p, cache.cov_dinv_v


def tilde_dress(chart, a, tensor, upper_axis=0):
    """Dress one upper algebra index with rhobar(a) (section -> group point)."""
    rhobar = np.linalg.inv(lie_group.adjoint(chart, np.asarray(a, dtype=float)))
    tensor = np.asarray(tensor)
    return np.moveaxis(np.einsum('am,m...->a...', rhobar,
                                 np.moveaxis(tensor, upper_axis, 0)), 0, upper_axis)


def orbit_metric_dressed(chart, a, d):
    """d~ = rho^T d rho at the group point a."""
    rho = lie_group.adjoint(chart, np.asarray(a, dtype=float))
    return rho.T @ d @ rho


# -- generic (dual-capable) horizontal metric --------------------------------

def horizontal_metric_generic(system, Q, f):
    """Horizontal metric blocks on plain or dual-number (object) inputs.

    Single-point path used by the dual-number derivative oracle; mirrors the
    ``bundle`` formulas through :func:`generic_inv`.
    """
    Q = np.asarray(Q)
    f = np.asarray(f)
    G = system.metric_p(Q)
    if system.killing_p_fn is None:
        raise ValueError("generic path requires an analytic Killing evaluator")
    K = system.killing_p_fn(Q)
    KV = np.einsum('anm,m->na', system.rep_generators, f)
    GV = system.metric_v
    KtG = np.swapaxes(K, -1, -2) @ G
    KVtG = np.swapaxes(KV, -1, -2) @ GV
    d = KtG @ K + KVtG @ KV
    d_inv = generic_inv(d)
    pot_p = d_inv @ KtG
    pot_v = d_inv @ KVtG
    gh_pp = G - np.swapaxes(KtG, -1, -2) @ pot_p
    gh_pv = -np.swapaxes(KtG, -1, -2) @ pot_v
    gh_vv = GV - np.swapaxes(KVtG, -1, -2) @ pot_v
    return gh_pp, gh_pv, gh_vv


# -- structure functions of the horizontal frame (test-facing) ---------------

def structure_functions(system, q_star, f_tilde, a, fd_step=fdiff.STEP):
    """Closed-form commutation coefficients of the horizontal frame fields.

    Returns a dict with keys 'c_ppp' (C^T_AB), 'c_vpp' (C^p_AB), 'c_gpp'
    (C^al_AB), 'c_vpv' (C^m_Ap), 'c_gpv' (C^al_Ap), 'c_gvv' (C^al_pq). The
    algebra-valued coefficients carry the group-point dressing rhobar(a).
    Computed off the hot path; used to cross-check finite-difference
    commutators of the frame.
    """
    system = system
    q_star = np.asarray(q_star, dtype=float)
    f_tilde = np.asarray(f_tilde, dtype=float)
    proj = projector_set(system, q_star, f_tilde)
    engine = GeometryEngine(system, fd_step)
    cache = engine.cache(q_star, f_tilde)
    rhobar = np.linalg.inv(lie_group.adjoint(system.group, np.asarray(a, dtype=float)))
    ft_pp = np.einsum('am,mSP->aSP', rhobar, cache.curv_pp)
    ft_pv = np.einsum('am,mEp->aEp', rhobar, cache.curv_pv)
    ft_vv = np.einsum('am,mpq->apq', rhobar, cache.curv_vv)

    # dependent derivatives of the Killing matrix and of Lambda
    def killing_field(Qb):
        return system_model.killing_p(system, Qb)

    def lam_field(Qb):
        X = system_model.gauge_gradient(system, Qb)
        return np.linalg.solve(X @ system_model.killing_p(system, Qb), X)

    k_dq = np.einsum('...D,DA->...A', fdiff.gradient(killing_field, q_star, fd_step),
                     proj.pperp)          # (n_p, n_g, n_p): K^T_{gamma,R}
    lam_dq = np.einsum('...D,DA->...A', fdiff.gradient(lam_field, q_star, fd_step),
                       proj.pperp)        # (n_g, n_p, n_p): Lam^al_{R,D}

    lam, nproj, nproj_v = proj.lam, proj.nproj, proj.nproj_v
    c = system.group.structure_constants
    kv = proj.killing_v

    c_ppp = (np.einsum('gA,RB,TgR->TAB', lam, nproj, k_dq)
             - np.einsum('gB,RA,TgR->TAB', lam, nproj, k_dq))
    c_vpp = (-np.einsum('DA,RB,aRD,pa->pAB', nproj, nproj, lam_dq, kv)
             + np.einsum('DA,RB,aDR,pa->pAB', nproj, nproj, lam_dq, kv)
             - np.einsum('sab,bA,aB,ps->pAB', c, lam, lam, kv))
    c_gpp = (-np.einsum('SA,PB,aSP->aAB', nproj, nproj, ft_pp)
             - np.einsum('EA,pB,aEp->aAB', nproj, nproj_v, ft_pv)
             + np.einsum('EB,pA,aEp->aAB', nproj, nproj_v, ft_pv)
             + np.einsum('mA,pB,apm->aAB', nproj_v, nproj_v, ft_vv))
    c_vpv = np.einsum('amp,aA->mpA', system.rep_generators, lam)
    c_gpv = (-np.einsum('EA,aEp->apA', nproj, ft_pv)
             - np.einsum('mA,amp->apA', nproj_v, ft_vv))
    c_gvv = -ft_vv
    return {'c_ppp': c_ppp, 'c_vpp': c_vpp, 'c_gpp': c_gpp,
            'c_vpv': c_vpv, 'c_gpv': c_gpv, 'c_gvv': c_gvv,
            'curv_dressed': (ft_pp, ft_pv, ft_vv)}


def horizontal_field_apply(system, scalar_field, Q, f, a, step=1e-6):
    """Apply the horizontal frame fields and L_alpha to phi(Q, f, a).

    Ambient evaluation: geometry objects are taken at the given (possibly
    off-section) Q, comma derivatives use the pperp rule. Returns
    (H_P phi (n_p,), H_V phi (n_v,), L phi (n_g,)).
    """
    Q = np.asarray(Q, dtype=float)
    f = np.asarray(f, dtype=float)
    a = np.asarray(a, dtype=float)
    proj = projector_set(system, Q, f)
    engine = GeometryEngine(system)
    b = engine.bundle(Q, f)
    rhobar = np.linalg.inv(lie_group.adjoint(system.group, a))
    t_pot_p = rhobar @ b['pot_p']
    t_pot_v = rhobar @ b['pot_v']
    gq = fdiff.gradient_loop(lambda x: scalar_field(x, f, a), Q, step)
    gf = fdiff.gradient_loop(lambda x: scalar_field(Q, x, a), f, step)
    ga = fdiff.gradient_loop(lambda x: scalar_field(Q, f, x), a, step)
    v = np.linalg.inv(lie_group.mc_u(system.group, a))
    lphi = np.einsum('na,n->a', v, ga)
    dep = np.einsum('DT,D->T', proj.pperp, gq)
    h_p = (np.einsum('TM,T->M', proj.nproj, dep - t_pot_p.T @ lphi)
           + np.einsum('mM,m->M', proj.nproj_v, gf - t_pot_v.T @ lphi))
    h_v = gf - t_pot_v.T @ lphi
    return h_p, h_v, lphi
