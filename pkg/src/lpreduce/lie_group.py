"""Charted compact semi-simple Lie groups in exponential coordinates.

A group element is its coordinate vector ``a`` in canonical coordinates of
the first kind, ``g = exp(a^alpha lambda_alpha)``, valid inside
``chart_radius``. Conventions used throughout the library:

* structure constants ``c[gamma, alpha, beta] = c^gamma_{alpha beta}`` with
  ``[lambda_alpha, lambda_beta] = c^gamma_{alpha beta} lambda_gamma``;
* ``u(a)``: left Maurer-Cartan coefficients, ``(a^-1 da)^al = u^al_be da^be``;
* ``ubar(a)``: right Maurer-Cartan coefficients, ``(da a^-1)^al = ubar^al_be da^be``;
* ``v = u^-1``: columns are the left-invariant frame fields L_alpha;
* ``vbar = ubar^-1``: columns are the right-invariant frame fields;
* ``rho(a)``: adjoint matrix, Ad_a lambda_beta = rho^gamma_beta lambda_gamma,
  satisfying rho = ubar v and rho(ab) = rho(a) rho(b); ``rhobar = rho^-1``.

In this chart u = phi(-ad_a), ubar = phi(ad_a), rho = exp(ad_a) with
phi(X) = (e^X - 1)/X, which the built-in charts evaluate in closed form
(their ad matrices satisfy X^3 = -|a|^2 X) and general charts by series.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dualnum import Dual, generic_inv
from .errors import ChartExit, SingularMatrix
from . import fdiff

JACOBI_TOL = 1e-12
_SERIES_TERMS = 48


@dataclass(frozen=True)
class LieGroupChart:
    """Structure constants plus a faithful matrix realization.

    ``realization`` holds the generator matrices of a faithful representation
    (possibly complex), stacked along the first axis; it is only used by
    ``multiply`` as the vehicle for the exponential-coordinate product.
    ``epsilon_like`` marks charts whose ad matrices obey X^3 = -|a|^2 X
    (SO(3)/SU(2) with Levi-Civita constants), enabling closed forms and the
    quaternion product fast path. ``wrap_angle`` is the coordinate-norm
    period at which the canonical representative wraps (pi for SO(3),
    2 pi for SU(2), None to disable wrapping).
    """

    name: str
    dim: int
    structure_constants: np.ndarray
    realization: np.ndarray
    chart_radius: float = 0.9 * np.pi
    epsilon_like: bool = False
    wrap_angle: float | None = None

    def __post_init__(self):
        c = np.asarray(self.structure_constants, dtype=float)
        if c.shape != (self.dim,) * 3:
            raise ValueError(f"structure constants must be ({self.dim},)*3, got {c.shape}")
        if not np.array_equal(c, -np.swapaxes(c, 1, 2)):
            raise ValueError("structure constants must be antisymmetric in the lower pair")
        jac = (np.einsum('sab,rsg->abgr', c, c)
               + np.einsum('sbg,rsa->abgr', c, c)
               + np.einsum('sga,rsb->abgr', c, c))
        if np.max(np.abs(jac)) > JACOBI_TOL:
            raise ValueError(f"Jacobi identity violated by {np.max(np.abs(jac)):.3e}")
        object.__setattr__(self, 'structure_constants', c)
        object.__setattr__(self, 'realization', np.asarray(self.realization))

    @property
    def rep_structure_constants(self):
        """Structure constants of inverse-representation generators (= -c)."""
        return -self.structure_constants

    def identity(self):
        return np.zeros(self.dim)

    def contains(self, a):
        return float(np.linalg.norm(a)) <= self.chart_radius


@dataclass(frozen=True)
class GroupMatrices:
    """Maurer-Cartan coefficient matrices and the adjoint at one point."""

    u: np.ndarray
    ubar: np.ndarray
    v: np.ndarray
    vbar: np.ndarray
    rho: np.ndarray
    rhobar: np.ndarray


def so3(chart_radius=0.9 * np.pi):
    """SO(3) chart: Levi-Civita structure constants, ad-matrix realization."""
    c = _epsilon_constants()
    realization = np.stack([_ad_from(c, e) for e in np.eye(3)])
    return LieGroupChart("so3", 3, c, realization, chart_radius,
                         epsilon_like=True, wrap_angle=np.pi)


def su2(chart_radius=0.9 * np.pi):
    """SU(2) chart: same constants as so3, 2x2 complex realization."""
    c = _epsilon_constants()
    sigma = np.array([[[0, 1], [1, 0]],
                      [[0, -1j], [1j, 0]],
                      [[1, 0], [0, -1]]], dtype=complex)
    realization = -0.5j * sigma
    return LieGroupChart("su2", 3, c, realization, chart_radius,
                         epsilon_like=True, wrap_angle=2.0 * np.pi)


_BUILTIN_GROUPS = {"so3": so3, "su2": su2}


def builtin_group(name, chart_radius=None):
    try:
        factory = _BUILTIN_GROUPS[name]
    except KeyError:
        raise KeyError(f"unknown builtin group {name!r}; have {sorted(_BUILTIN_GROUPS)}")
    return factory() if chart_radius is None else factory(chart_radius)


def _epsilon_constants():
    c = np.zeros((3, 3, 3))
    for a, b, g in [(0, 1, 2), (1, 2, 0), (2, 0, 1)]:
        c[g, a, b] = 1.0
        c[g, b, a] = -1.0
    return c


def _ad_from(c, xi):
    return np.einsum('a,gab->gb', xi, c)


def adjoint_algebra(chart, xi):
    """ad matrix of the algebra element with components ``xi`` (batched)."""
    return np.einsum('...a,gab->...gb', np.asarray(xi), chart.structure_constants)


def _phi_series(x, sign, terms=_SERIES_TERMS):
    """phi(sign * X) = sum (sign X)^k / (k+1)! -- batched or object arrays."""
    n = x.shape[-1]
    if x.dtype == object:
        acc = np.empty((n, n), dtype=object)
        for i in range(n):
            for j in range(n):
                acc[i, j] = Dual(1.0 if i == j else 0.0)
        term = acc.copy()
    else:
        acc = np.broadcast_to(np.eye(n), x.shape).copy()
        term = acc.copy()
    for k in range(1, terms + 1):
        term = (term @ x) * (sign / (k + 1.0))
        acc = acc + term
    return acc


def _mc_coeff_funcs(s):
    """c1(s) = (1-cos t)/t^2, c2(s) = (t-sin t)/t^3 with s = t^2, safely at 0."""
    if isinstance(s, Dual):
        if s.val < 1e-6:
            c1 = 0.5 - s / 24.0 + s * s / 720.0
            c2 = 1.0 / 6.0 - s / 120.0 + s * s / 5040.0
        else:
            t = s.sqrt()
            c1 = (1.0 - t.cos()) / s
            c2 = (t - t.sin()) / (s * t)
        return c1, c2
    s = np.asarray(s, dtype=float)
    small = s < 1e-6
    ssafe = np.where(small, 1.0, s)
    t = np.sqrt(ssafe)
    c1 = np.where(small, 0.5 - s / 24.0 + s * s / 720.0, (1.0 - np.cos(t)) / ssafe)
    c2 = np.where(small, 1.0 / 6.0 - s / 120.0 + s * s / 5040.0,
                  (t - np.sin(t)) / (ssafe * t))
    return c1, c2


def _rot_coeff_funcs(s):
    """r1(s) = sin t / t, r2(s) = (1-cos t)/t^2 with s = t^2."""
    if isinstance(s, Dual):
        if s.val < 1e-6:
            r1 = 1.0 - s / 6.0 + s * s / 120.0
            r2 = 0.5 - s / 24.0 + s * s / 720.0
        else:
            t = s.sqrt()
            r1 = t.sin() / t
            r2 = (1.0 - t.cos()) / s
        return r1, r2
    s = np.asarray(s, dtype=float)
    small = s < 1e-6
    ssafe = np.where(small, 1.0, s)
    t = np.sqrt(ssafe)
    r1 = np.where(small, 1.0 - s / 6.0 + s * s / 120.0, np.sin(t) / t)
    r2 = np.where(small, 0.5 - s / 24.0 + s * s / 720.0, (1.0 - np.cos(t)) / ssafe)
    return r1, r2


def _sq_norm(a):
    if a.dtype == object:
        acc = a[..., 0] * a[..., 0]
        for i in range(1, a.shape[-1]):
            acc = acc + a[..., i] * a[..., i]
        return acc
    return np.einsum('...i,...i->...', a, a)


def mc_u(chart, a):
    """Left Maurer-Cartan matrix u(a) = phi(-ad_a), batched."""
    a = np.asarray(a)
    x = adjoint_algebra(chart, a)
    if chart.epsilon_like and a.dtype != object:
        s = _sq_norm(a)
        c1, c2 = _mc_coeff_funcs(s)
        eye = np.broadcast_to(np.eye(chart.dim), x.shape)
        return eye - c1[..., None, None] * x + c2[..., None, None] * (x @ x)
    if chart.epsilon_like and a.dtype == object:
        c1, c2 = _mc_coeff_funcs(_sq_norm(a))
        eye = np.empty((chart.dim, chart.dim), dtype=object)
        for i in range(chart.dim):
            for j in range(chart.dim):
                eye[i, j] = Dual(1.0 if i == j else 0.0)
        return eye - c1 * x + c2 * (x @ x)
    return _phi_series(x, -1.0)


def mc_ubar(chart, a):
    """Right Maurer-Cartan matrix ubar(a) = phi(ad_a) = u(-a)."""
    return mc_u(chart, -np.asarray(a))


def adjoint(chart, a):
    """Adjoint matrix rho(a) = exp(ad_a), batched."""
    a = np.asarray(a)
    x = adjoint_algebra(chart, a)
    if chart.epsilon_like and a.dtype != object:
        s = _sq_norm(a)
        r1, r2 = _rot_coeff_funcs(s)
        eye = np.broadcast_to(np.eye(chart.dim), x.shape)
        return eye + r1[..., None, None] * x + r2[..., None, None] * (x @ x)
    if chart.epsilon_like and a.dtype == object:
        r1, r2 = _rot_coeff_funcs(_sq_norm(a))
        eye = np.empty((chart.dim, chart.dim), dtype=object)
        for i in range(chart.dim):
            for j in range(chart.dim):
                eye[i, j] = Dual(1.0 if i == j else 0.0)
        return eye + r1 * x + r2 * (x @ x)
    # exp by squaring the phi series: exp(X) = I + X phi(X)
    return np.broadcast_to(np.eye(chart.dim), x.shape) + x @ _phi_series(x, 1.0)


def maurer_cartan(chart, a):
    """All coefficient matrices at ``a`` (single point or batched).

    Raises :class:`SingularMatrix` when u or ubar cannot be inverted.
    """
    a = np.asarray(a, dtype=float)
    u = mc_u(chart, a)
    ubar = mc_ubar(chart, a)
    try:
        v = np.linalg.inv(u)
        vbar = np.linalg.inv(ubar)
    except np.linalg.LinAlgError as exc:
        raise SingularMatrix(f"Maurer-Cartan matrix singular at |a|={np.linalg.norm(a):.4f}") from exc
    rho = ubar @ v
    rhobar = np.linalg.inv(rho)
    return GroupMatrices(u=u, ubar=ubar, v=v, vbar=vbar, rho=rho, rhobar=rhobar)


def inverse(a):
    """Group inverse in exponential coordinates."""
    return -np.asarray(a, dtype=float)


def _quaternion_multiply(chart, a, b):
    na = float(np.linalg.norm(a))
    nb = float(np.linalg.norm(b))
    ahat = a / na
    bhat = b / nb
    half_a, half_b = 0.5 * na, 0.5 * nb
    wa, wb = np.cos(half_a), np.cos(half_b)
    sa, sb = np.sin(half_a), np.sin(half_b)
    w = wa * wb - sa * sb * float(ahat @ bhat)
    vec = wa * sb * bhat + wb * sa * ahat + sa * sb * np.cross(ahat, bhat)
    nv = float(np.linalg.norm(vec))
    angle = 2.0 * np.arctan2(nv, w)
    if nv < 1e-300:
        return np.zeros(chart.dim)
    coords = angle * vec / nv
    if chart.wrap_angle is not None and angle > chart.wrap_angle:
        coords = (angle - 2.0 * chart.wrap_angle) * vec / nv
    return coords


def _coords_from_realization(chart, mat):
    gen = chart.realization
    basis = gen.reshape(chart.dim, -1)
    target = mat.reshape(-1)
    if np.iscomplexobj(gen) or np.iscomplexobj(target):
        basis = np.concatenate([basis.real, basis.imag], axis=1)
        target = np.concatenate([np.asarray(target, dtype=complex).real,
                                 np.asarray(target, dtype=complex).imag])
    coefs, residual, *_ = np.linalg.lstsq(basis.T, target, rcond=None)
    return coefs


def multiply(chart, a, b):
    """Product of two group points in canonical coordinates.

    Exact early-outs for identity arguments keep F(Q, e) = Q exact. Raises
    :class:`ChartExit` when the product leaves the chart radius (or the
    matrix logarithm cannot be trusted).
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if not np.any(a):
        return b.copy()
    if not np.any(b):
        return a.copy()
    if float(np.linalg.norm(a)) > chart.chart_radius or float(np.linalg.norm(b)) > chart.chart_radius:
        raise ChartExit("multiply operand outside chart radius")
    if chart.epsilon_like:
        coords = _quaternion_multiply(chart, a, b)
    else:
        from scipy.linalg import expm, logm
        gen = chart.realization
        ma = expm(np.einsum('i,ijk->jk', a, gen))
        mb = expm(np.einsum('i,ijk->jk', b, gen))
        prod = ma @ mb
        log = logm(prod)
        coords = _coords_from_realization(chart, log)
        check = expm(np.einsum('i,ijk->jk', coords, gen))
        if np.max(np.abs(check - prod)) > 1e-8:
            raise ChartExit("matrix logarithm left the principal branch")
    if float(np.linalg.norm(coords)) > chart.chart_radius:
        raise ChartExit(f"group product |c|={np.linalg.norm(coords):.4f} "
                        f"outside chart radius {chart.chart_radius:.4f}")
    return coords


def left_invariant_apply(chart, a, scalar_field, step=fdiff.STEP):
    """L_alpha(phi) = v^nu_alpha d(phi)/d a^nu as a covector over alpha."""
    a = np.asarray(a, dtype=float)
    grad = fdiff.gradient_loop(lambda x: float(scalar_field(x)), a, step)
    mats = maurer_cartan(chart, a)
    return np.einsum('na,n->a', mats.v, grad)
