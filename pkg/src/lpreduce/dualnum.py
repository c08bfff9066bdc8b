"""Forward-mode dual numbers for directional derivatives.

Used as an independent derivative oracle in the test suite and wherever a
chart supplies smooth closed forms. Scalars are wrapped in :class:`Dual`
(value + one directional derivative) and propagated through numpy object
arrays; ufuncs like ``np.sin`` dispatch to the methods of the same name, so
ordinary tensor code works unchanged apart from matrix inversion, which is
provided here by a pivoted elimination that only compares ``.val`` parts.
"""

from __future__ import annotations

import math

import numpy as np


class Dual:
    """A scalar a + eps*b with eps^2 = 0."""

    __slots__ = ("val", "eps")

    def __init__(self, val, eps=0.0):
        self.val = float(val)
        self.eps = float(eps)

    # -- arithmetic -------------------------------------------------------
    def __add__(self, other):
        if isinstance(other, Dual):
            return Dual(self.val + other.val, self.eps + other.eps)
        return Dual(self.val + other, self.eps)

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, Dual):
            return Dual(self.val - other.val, self.eps - other.eps)
        return Dual(self.val - other, self.eps)

    def __rsub__(self, other):
        return Dual(other - self.val, -self.eps)

    def __mul__(self, other):
        if isinstance(other, Dual):
            return Dual(self.val * other.val,
                        self.eps * other.val + self.val * other.eps)
        return Dual(self.val * other, self.eps * other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Dual):
            inv = 1.0 / other.val
            return Dual(self.val * inv,
                        (self.eps - self.val * other.eps * inv) * inv)
        return Dual(self.val / other, self.eps / other)

    def __rtruediv__(self, other):
        inv = 1.0 / self.val
        return Dual(other * inv, -other * self.eps * inv * inv)

    def __pow__(self, n):
        if isinstance(n, Dual):
            raise TypeError("dual exponents not supported")
        if n == 0:
            return Dual(1.0, 0.0)
        return Dual(self.val ** n, n * self.val ** (n - 1) * self.eps)

    def __neg__(self):
        return Dual(-self.val, -self.eps)

    def __pos__(self):
        return self

    def __abs__(self):
        return Dual(abs(self.val), self.eps if self.val >= 0 else -self.eps)

    # comparisons act on the primal part only (used for pivoting/branching)
    def __lt__(self, other):
        return self.val < _val(other)

    def __le__(self, other):
        return self.val <= _val(other)

    def __gt__(self, other):
        return self.val > _val(other)

    def __ge__(self, other):
        return self.val >= _val(other)

    def __eq__(self, other):
        return self.val == _val(other)

    def __hash__(self):
        return hash(self.val)

    def __repr__(self):
        return f"Dual({self.val!r}, {self.eps!r})"

    def __float__(self):
        # only legitimate when the derivative part is irrelevant
        return self.val

    # -- elementary functions (numpy object-ufunc protocol) ---------------
    def sin(self):
        return Dual(math.sin(self.val), math.cos(self.val) * self.eps)

    def cos(self):
        return Dual(math.cos(self.val), -math.sin(self.val) * self.eps)

    def exp(self):
        e = math.exp(self.val)
        return Dual(e, e * self.eps)

    def sqrt(self):
        s = math.sqrt(self.val)
        return Dual(s, 0.5 * self.eps / s if s != 0.0 else 0.0)

    def log(self):
        return Dual(math.log(self.val), self.eps / self.val)


def _val(x):
    return x.val if isinstance(x, Dual) else x


def seed(x, direction):
    """Wrap array ``x`` as an object array of Duals with eps = direction."""
    x = np.asarray(x, dtype=float)
    direction = np.asarray(direction, dtype=float)
    out = np.empty(x.shape, dtype=object)
    for idx in np.ndindex(x.shape):
        out[idx] = Dual(x[idx], direction[idx])
    return out


def lift(x):
    """Wrap array ``x`` as constant Duals (zero derivative part)."""
    return seed(x, np.zeros_like(np.asarray(x, dtype=float)))


def value(arr):
    """Primal parts of a Dual (or plain float) array."""
    arr = np.asarray(arr)
    if arr.dtype != object:
        return arr.astype(float)
    out = np.empty(arr.shape, dtype=float)
    for idx in np.ndindex(arr.shape):
        out[idx] = _val(arr[idx])
    return out


def derivative(arr):
    """Derivative parts of a Dual array (zeros for plain entries)."""
    arr = np.asarray(arr)
    out = np.empty(arr.shape, dtype=float)
    for idx in np.ndindex(arr.shape):
        e = arr[idx]
        out[idx] = e.eps if isinstance(e, Dual) else 0.0
    return out


def directional(fn, x, direction):
    """Directional derivative of array-valued ``fn`` at ``x``."""
    return derivative(fn(seed(x, direction)))


# -- generic linear algebra ------------------------------------------------

def generic_solve(a, b):
    """Solve a @ x = b; np.linalg for numeric dtypes, elimination for object.

    ``a`` is (n, n); ``b`` is (n,) or (n, m). Batched numeric inputs go
    straight to numpy.
    """
    a = np.asarray(a)
    if a.dtype != object:
        return np.linalg.solve(a, np.asarray(b))
    n = a.shape[0]
    b = np.asarray(b, dtype=object)
    single = b.ndim == 1
    bb = b.reshape(n, -1).copy()
    aa = a.copy()
    for col in range(n):
        piv = max(range(col, n), key=lambda r: abs(_val(aa[r, col])))
        if abs(_val(aa[piv, col])) == 0.0:
            raise np.linalg.LinAlgError("singular object matrix")
        if piv != col:
            aa[[col, piv]] = aa[[piv, col]]
            bb[[col, piv]] = bb[[piv, col]]
        inv = 1.0 / aa[col, col]
        for r in range(col + 1, n):
            ratio = aa[r, col] * inv
            aa[r, col:] = aa[r, col:] - ratio * aa[col, col:]
            bb[r, :] = bb[r, :] - ratio * bb[col, :]
    x = np.empty_like(bb)
    for r in range(n - 1, -1, -1):
        acc = bb[r, :] - aa[r, r + 1:] @ x[r + 1:, :]
        x[r, :] = acc / aa[r, r]
    return x[:, 0] if single else x


def generic_inv(a):
    """Matrix inverse through :func:`generic_solve`."""
    a = np.asarray(a)
    if a.dtype != object:
        return np.linalg.inv(a)
    n = a.shape[0]
    eye = np.empty((n, n), dtype=object)
    for i in range(n):
        for j in range(n):
            eye[i, j] = Dual(1.0 if i == j else 0.0)
    return generic_solve(a, eye)
