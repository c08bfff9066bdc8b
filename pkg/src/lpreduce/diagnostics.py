"""Invariant suites over sampled points, and the one-point geometry dump.

``projector_suite`` and ``connection_suite`` evaluate the defining algebraic
identities of the projector family and of the mechanical connection on a
batch of adapted points and return the worst residual per identity. They
back both the ``check`` CLI command and the acceptance tests.
"""

from __future__ import annotations

import numpy as np

from . import lie_group, system_model
from .connection_geometry import GeometryEngine
from .gauge_slice import decompose, projector_set


def sample_adapted_points(system, count, rng):
    """Random ambient samples pulled back to the gauge surface."""
    Q, f = system.sample_points(count, rng)
    q_stars = np.zeros_like(Q)
    f_tildes = np.zeros_like(f)
    for i in range(count):
        point = decompose(system, Q[i], f[i])
        q_stars[i] = point.q_star
        f_tildes[i] = point.f_tilde
    return q_stars, f_tildes


def _maxabs(x):
    return float(np.max(np.abs(x)))


def projector_suite(system, q_stars, f_tildes):
    """Worst-case residuals of the projector algebra over a batch."""
    proj = projector_set(system, q_stars, f_tildes)
    n = proj.nproj
    pperp = proj.pperp
    hproj = proj.hproj
    next_ = proj.nproj_extended()
    kst = proj.killing_stacked()
    eye_g = np.eye(system.n_g)
    out = {
        "nproj_idempotent": _maxabs(n @ n - n),
        "pperp_idempotent": _maxabs(pperp @ pperp - pperp),
        "nproj_pperp": _maxabs(n @ pperp - pperp),
        "pperp_nproj": _maxabs(pperp @ n - n),
        "nproj_kills_killing": _maxabs(n @ proj.killing_p),
        "gauge_grad_kills_nproj": _maxabs(proj.gauge_grad @ n),
        "hproj_kills_killing": _maxabs(hproj @ kst),
        "hproj_nproj_law": _maxabs(next_ @ hproj - next_),
        "nproj_hproj_law": _maxabs(hproj @ next_ - hproj),
        "orbit_metric_symmetric": _maxabs(proj.d - np.swapaxes(proj.d, -1, -2)),
        "orbit_metric_inverse": _maxabs(proj.d @ proj.d_inv
                                        - np.broadcast_to(eye_g, proj.d.shape)),
        "fp_inverse": _maxabs(proj.fp @ proj.fp_inv
                              - np.broadcast_to(eye_g, proj.fp.shape)),
    }
    # spd check on the orbit metric: smallest eigenvalue must stay positive
    eigs = np.linalg.eigvalsh(proj.d)
    out["orbit_metric_min_eigenvalue"] = float(np.min(eigs))
    return out


def connection_suite(system, q_stars, f_tildes):
    """Connection-form, curvature and pseudoinverse identities over a batch."""
    engine = GeometryEngine(system)
    proj = projector_set(system, q_stars, f_tildes)
    b = engine.bundle(q_stars, f_tildes)
    n_p, n_v, n_g = system.n_p, system.n_v, system.n_g

    # connection form on horizontal fields and Killing fields
    wform = np.concatenate([b['pot_p'], b['pot_v']], axis=-1)
    kst = proj.killing_stacked()
    out = {
        "connection_kills_horizontal": _maxabs(wform @ proj.hproj),
        "connection_pairs_killing": _maxabs(wform @ kst
                                            - np.broadcast_to(np.eye(n_g), proj.d.shape)),
    }

    # horizontal metric blocks against the direct projector contraction
    gfull = np.zeros(q_stars.shape[:-1] + (n_p + n_v, n_p + n_v))
    gfull[..., :n_p, :n_p] = b['metric_p']
    gfull[..., n_p:, n_p:] = system.metric_v
    gh_big = gfull @ proj.hproj
    out["gh_pp_definition"] = _maxabs(gh_big[..., :n_p, :n_p] - b['gh_pp'])
    out["gh_pv_definition"] = _maxabs(gh_big[..., :n_p, n_p:] - b['gh_pv'])
    out["gh_vv_definition"] = _maxabs(gh_big[..., n_p:, n_p:] - b['gh_vv'])
    out["gh_symmetric"] = _maxabs(gh_big - np.swapaxes(gh_big, -1, -2))

    # pseudoinverse orthogonality (block identity)
    gi = np.linalg.inv(b['metric_p'])
    ghi = np.zeros_like(gfull)
    ghi[..., :n_p, :n_p] = proj.nproj @ gi @ np.swapaxes(proj.nproj, -1, -2)
    ghi[..., :n_p, n_p:] = proj.nproj @ gi @ np.swapaxes(proj.nproj_v, -1, -2)
    ghi[..., n_p:, :n_p] = np.swapaxes(ghi[..., :n_p, n_p:], -1, -2)
    ghi[..., n_p:, n_p:] = (np.linalg.inv(system.metric_v)
                            + proj.nproj_v @ gi @ np.swapaxes(proj.nproj_v, -1, -2))
    out["pseudoinverse_orthogonality"] = _maxabs(ghi @ gh_big - proj.nproj_extended())
    out["metric_inv_gh_is_hproj"] = _maxabs(gi @ gh_big[..., :n_p, :] - proj.hproj[..., :n_p, :])
    return out


def curvature_suite(system, q_stars, f_tildes):
    """Curvature antisymmetry and tilde-dressing consistency (per point)."""
    engine = GeometryEngine(system)
    anti_pp = 0.0
    anti_vv = 0.0
    for i in range(q_stars.shape[0]):
        cache = engine.cache(q_stars[i], f_tildes[i])
        anti_pp = max(anti_pp, _maxabs(cache.curv_pp + np.swapaxes(cache.curv_pp, 1, 2)))
        anti_vv = max(anti_vv, _maxabs(cache.curv_vv + np.swapaxes(cache.curv_vv, 1, 2)))
    return {"curvature_pp_antisymmetric": anti_pp,
            "curvature_vv_antisymmetric": anti_vv}


def derive_report(system, q, f, gauge_tol=1e-12):
    """Geometry dump at one (ambient) point, residual-annotated."""
    point = decompose(system, np.asarray(q, dtype=float), np.asarray(f, dtype=float),
                      gauge_tol=gauge_tol)
    qs = point.q_star[None, :]
    ft = point.f_tilde[None, :]
    engine = GeometryEngine(system)
    cache = engine.cache(point.q_star, point.f_tilde)
    proj = cache.proj
    residuals = {}
    residuals.update(projector_suite(system, qs, ft))
    residuals.update(connection_suite(system, qs, ft))
    residuals.update(curvature_suite(system, qs, ft))
    return {
        "point": {"q": np.asarray(q).tolist(), "f": np.asarray(f).tolist(),
                  "q_star": point.q_star.tolist(), "f_tilde": point.f_tilde.tolist(),
                  "a": point.a.tolist()},
        "tensors": {
            "fp": proj.fp.tolist(),
            "fp_inv": proj.fp_inv.tolist(),
            "nproj": proj.nproj.tolist(),
            "nproj_v": proj.nproj_v.tolist(),
            "pperp": proj.pperp.tolist(),
            "hproj": proj.hproj.tolist(),
            "orbit_metric": proj.d.tolist(),
            "orbit_metric_inv": proj.d_inv.tolist(),
            "pot_p": cache.pot_p.tolist(),
            "pot_v": cache.pot_v.tolist(),
            "curv_pp": cache.curv_pp.tolist(),
            "curv_pv": cache.curv_pv.tolist(),
            "curv_vv": cache.curv_vv.tolist(),
            "gh_pp": cache.gh_pp.tolist(),
            "gh_pv": cache.gh_pv.tolist(),
            "gh_vv": cache.gh_vv.tolist(),
            "christoffel_ppp": cache.gam_ppp.tolist(),
            "christoffel_vvv": cache.gam_vvv.tolist(),
            "cov_d_p": cache.cov_d_p.tolist(),
            "cov_d_v": cache.cov_d_v.tolist(),
            "potential": cache.potential,
            "v_grad_p": cache.v_grad_p.tolist(),
            "v_grad_v": cache.v_grad_v.tolist(),
        },
        "residuals": residuals,
    }


def check_report(system, samples, seed, projector_tol=1e-10, connection_tol=1e-9,
                 curvature_tol=1e-10, validation_samples=None):
    """Full `check` command payload: validation + invariant suites."""
    rng = np.random.default_rng(seed)
    validation = system_model.validate(system, samples=validation_samples or samples,
                                       seed=seed)
    q_stars, f_tildes = sample_adapted_points(system, samples, rng)
    suites = {
        "projector": {"tolerance": projector_tol,
                      "residuals": projector_suite(system, q_stars, f_tildes)},
        "connection": {"tolerance": connection_tol,
                       "residuals": connection_suite(system, q_stars, f_tildes)},
        "curvature": {"tolerance": curvature_tol,
                      "residuals": curvature_suite(system, q_stars, f_tildes)},
    }
    passed = validation.passed
    for name, suite in suites.items():
        tol = suite["tolerance"]
        for key, value in suite["residuals"].items():
            if key == "orbit_metric_min_eigenvalue":
                ok = value > 0.0
            else:
                ok = value <= tol
            suite.setdefault("passed", True)
            if not ok:
                suite["passed"] = False
                passed = False
        suite.setdefault("passed", True)
    return {"system": system.name, "samples": samples, "seed": seed,
            "validation": validation.as_dict(), "invariant_suites": suites,
            "passed": passed}
