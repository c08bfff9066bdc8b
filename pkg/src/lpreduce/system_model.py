"""User-defined mechanical system on P x V and its structural validation.

A :class:`SystemDefinition` bundles the metric blocks, the right group
action, the V-representation, the potential and the gauge functions. All
smooth maps are evaluator callables operating on batched coordinate arrays
(leading batch axes, coordinates last). ``validate`` checks every structural
assumption (isometry, equivariance, invariance, freeness) at seeded random
sample points and reports residuals without aborting.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from . import fdiff, lie_group
from .errors import DegenerateOrbit

FREE_ACTION_TOL = 1e-8


@dataclass(frozen=True)
class SystemDefinition:
    """Geometry of one mechanical system.

    Required evaluators (batched over leading axes):
      metric_p(Q) -> (..., n_p, n_p);   potential(Q, f) -> (...,)
      action(Q, a) -> (..., n_p)   for a single group point a
      representation(a) -> (n_v, n_v)   the matrix D(a), with
      Dbar(a) = D(a^-1) realizing the action on V
      gauge(Q) -> (..., n_g)
    Optional analytic derivatives (finite differences otherwise):
      killing_p_fn(Q) -> (..., n_p, n_g)
      gauge_grad(Q) -> (..., n_g, n_p); gauge_hess(Q) -> (n_g, n_p, n_p)
      action_jac_q(Q, a) -> (..., n_p, n_p)
    """

    name: str
    group: lie_group.LieGroupChart
    n_p: int
    n_v: int
    metric_p: callable
    metric_v: np.ndarray
    action: callable
    representation: callable
    rep_generators: np.ndarray
    potential: callable
    gauge: callable
    gauge_grad: callable = None
    gauge_hess: callable = None
    killing_p_fn: callable = None
    action_jac_q: callable = None
    sample_width_p: np.ndarray = None
    sample_center_p: np.ndarray = None
    sample_width_v: float = 0.5
    fd_step: float = fdiff.STEP

    def __post_init__(self):
        object.__setattr__(self, 'metric_v', np.asarray(self.metric_v, dtype=float))
        object.__setattr__(self, 'rep_generators', np.asarray(self.rep_generators, dtype=float))
        if self.sample_width_p is None:
            object.__setattr__(self, 'sample_width_p', np.full(self.n_p, 0.4))
        if self.sample_center_p is None:
            object.__setattr__(self, 'sample_center_p', np.zeros(self.n_p))

    @property
    def n_g(self):
        return self.group.dim

    def with_overrides(self, **kwargs):
        return replace(self, **kwargs)

    def rep_inverse(self, a):
        """Dbar(a) = D(a^-1), the matrix acting on V under the right action."""
        return self.representation(lie_group.inverse(a))

    def sample_points(self, samples, rng):
        """Seeded random (Q, f) samples inside the configured box."""
        q = self.sample_center_p + self.sample_width_p * rng.uniform(-1.0, 1.0, size=(samples, self.n_p))
        f = self.sample_width_v * rng.uniform(-1.0, 1.0, size=(samples, self.n_v))
        return q, f

    def sample_group(self, samples, rng, scale=0.3):
        return scale * self.group.chart_radius * rng.uniform(-1.0, 1.0, size=(samples, self.n_g)) / np.sqrt(self.n_g)


def killing_p(system, Q):
    """Killing matrix K^A_alpha(Q) of the P-action, batched (..., n_p, n_g).

    Analytic when the system supplies it, otherwise FD4 of the action in the
    group coordinates at the identity. Raises :class:`DegenerateOrbit` when
    the columns fail to span an n_g-dimensional orbit direction.
    """
    Q = np.asarray(Q, dtype=float)
    if system.killing_p_fn is not None:
        K = system.killing_p_fn(Q)
    else:
        cols = []
        for alpha in range(system.n_g):
            e = np.zeros(system.n_g)
            e[alpha] = system.fd_step
            samples = [system.action(Q, off * e) for off in fdiff.FD4_OFFSETS]
            cols.append(sum(w * s for w, s in zip(fdiff.FD4_WEIGHTS, samples))
                        / (12.0 * system.fd_step))
        K = np.stack(cols, axis=-1)
    sv = np.linalg.svd(K, compute_uv=False)
    if np.min(sv) < FREE_ACTION_TOL:
        raise DegenerateOrbit(
            f"Killing vectors rank-deficient (min singular value {np.min(sv):.3e}); action not free")
    return K


def killing_v(system, f):
    """K^n_alpha(f) = (Jbar_alpha)^n_m f^m, batched (..., n_v, n_g)."""
    return np.einsum('anm,...m->...na', system.rep_generators, np.asarray(f))


@dataclass
class CheckResult:
    name: str
    max_residual: float
    tolerance: float

    @property
    def passed(self):
        return bool(self.max_residual <= self.tolerance)

    def as_dict(self):
        return {"name": self.name, "max_residual": float(self.max_residual),
                "tolerance": float(self.tolerance), "passed": self.passed}


@dataclass
class ValidationReport:
    system: str
    samples: int
    seed: int
    checks: list

    @property
    def passed(self):
        return all(c.passed for c in self.checks)

    def as_dict(self):
        return {"system": self.system, "samples": self.samples, "seed": self.seed,
                "passed": self.passed, "checks": [c.as_dict() for c in self.checks]}

    def __str__(self):
        lines = [f"validation of {self.system!r} ({self.samples} samples, seed {self.seed})"]
        for c in self.checks:
            status = "pass" if c.passed else "FAIL"
            lines.append(f"  [{status}] {c.name}: max residual {c.max_residual:.3e} (tol {c.tolerance:.1e})")
        lines.append("overall: " + ("pass" if self.passed else "FAIL"))
        return "\n".join(lines)


def validate(system, samples=50, seed=42, tol_action=1e-9, tol_isometry=1e-9,
             tol_potential=1e-9, tol_generators=1e-12, tol_killing=1e-6):
    """Run every structural check of the system at random sample points."""
    if samples < 1:
        raise ValueError("samples must be >= 1")
    rng = np.random.default_rng(seed)
    Q, f = system.sample_points(samples, rng)
    a = system.sample_group(samples, rng)
    b = system.sample_group(samples, rng)
    checks = []

    # identity action is exact by contract
    res = np.max(np.abs(system.action(Q, system.group.identity()) - Q))
    checks.append(CheckResult("action_identity", float(res), 0.0))

    # composition F(F(Q,a),b) = F(Q, ab)
    worst = 0.0
    for i in range(samples):
        try:
            ab = lie_group.multiply(system.group, a[i], b[i])
        except Exception:
            continue
        lhs = system.action(system.action(Q[i], a[i]), b[i])
        rhs = system.action(Q[i], ab)
        worst = max(worst, float(np.max(np.abs(lhs - rhs))))
    checks.append(CheckResult("action_composition", worst, tol_action))

    # isometry of the P metric: G(Q) = J^T G(F(Q,a)) J
    worst = 0.0
    for i in range(samples):
        J = action_jacobian_q(system, Q[i], a[i])
        lhs = system.metric_p(Q[i])
        rhs = J.T @ system.metric_p(system.action(Q[i], a[i])) @ J
        worst = max(worst, float(np.max(np.abs(lhs - rhs))))
    checks.append(CheckResult("metric_p_isometry", worst, tol_isometry))

    # isometry of the V metric: G = Dbar^T G Dbar
    worst = 0.0
    for i in range(samples):
        Dbar = system.rep_inverse(a[i])
        worst = max(worst, float(np.max(np.abs(
            system.metric_v - Dbar.T @ system.metric_v @ Dbar))))
    checks.append(CheckResult("metric_v_isometry", worst, tol_isometry))

    # potential invariance V(Q,f) = V(F(Q,a), Dbar(a) f)
    worst = 0.0
    for i in range(samples):
        Dbar = system.rep_inverse(a[i])
        worst = max(worst, float(abs(system.potential(Q[i], f[i])
                                     - system.potential(system.action(Q[i], a[i]), Dbar @ f[i]))))
    checks.append(CheckResult("potential_invariance", worst, tol_potential))

    # generator commutators [Jbar_a, Jbar_b] = -c^g_{ab} Jbar_g
    J = system.rep_generators
    comm = np.einsum('aij,bjk->abik', J, J) - np.einsum('bij,ajk->abik', J, J)
    target = np.einsum('gab,gik->abik', -system.group.structure_constants, J)
    checks.append(CheckResult("rep_generator_commutators",
                              float(np.max(np.abs(comm - target))), tol_generators))

    # freeness + analytic-vs-FD Killing agreement
    worst_free = np.inf
    worst_fd = 0.0
    for i in range(samples):
        try:
            K = killing_p(system, Q[i])
            worst_free = min(worst_free, float(np.min(np.linalg.svd(K, compute_uv=False))))
        except DegenerateOrbit:
            worst_free = 0.0
            continue
        if system.killing_p_fn is not None:
            Kfd = _killing_fd(system, Q[i])
            worst_fd = max(worst_fd, float(np.max(np.abs(K - Kfd))))
    checks.append(CheckResult("action_freeness",
                              float(max(0.0, FREE_ACTION_TOL - worst_free)), 0.0))
    checks.append(CheckResult("killing_analytic_vs_fd", worst_fd, tol_killing))

    # Killing equivariance K(F(Q,a)) = J_F K(Q) rho(a)
    worst = 0.0
    for i in range(samples):
        Jq = action_jacobian_q(system, Q[i], a[i])
        rho = lie_group.adjoint(system.group, a[i])
        lhs = killing_p(system, system.action(Q[i], a[i]))
        worst = max(worst, float(np.max(np.abs(lhs - Jq @ killing_p(system, Q[i]) @ rho))))
    checks.append(CheckResult("killing_equivariance", worst, tol_killing))

    return ValidationReport(system.name, samples, seed, checks)


def _killing_fd(system, Q):
    cols = []
    for alpha in range(system.n_g):
        e = np.zeros(system.n_g)
        e[alpha] = system.fd_step
        samples = [system.action(Q, off * e) for off in fdiff.FD4_OFFSETS]
        cols.append(sum(w * s for w, s in zip(fdiff.FD4_WEIGHTS, samples)) / (12.0 * system.fd_step))
    return np.stack(cols, axis=-1)


def action_jacobian_q(system, Q, a):
    """dF^A(Q,a)/dQ^B, analytic when supplied else FD4 (single point)."""
    if system.action_jac_q is not None:
        return system.action_jac_q(Q, a)
    return fdiff.gradient_loop(lambda x: system.action(x, a), np.asarray(Q, dtype=float),
                               system.fd_step)


def gauge_gradient(system, Q):
    """chi^alpha_A(Q), batched (..., n_g, n_p)."""
    Q = np.asarray(Q, dtype=float)
    if system.gauge_grad is not None:
        return system.gauge_grad(Q)
    orig = Q.shape[:-1]
    flat = Q.reshape(-1, system.n_p)
    outs = [fdiff.gradient_loop(system.gauge, q, system.fd_step) for q in flat]
    return np.stack(outs).reshape(*orig, system.n_g, system.n_p)


def gauge_hessian(system, Q):
    """chi^alpha_{,AB}(Q) ambient second derivatives (single point)."""
    if system.gauge_hess is not None:
        return system.gauge_hess(np.asarray(Q, dtype=float))
    return fdiff.hessian(system.gauge, np.asarray(Q, dtype=float))
