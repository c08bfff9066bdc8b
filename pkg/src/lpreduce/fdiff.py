"""Finite-difference stencils.

Uniform differentiation policy: 4th-order central differences with an
absolute step (default 1e-5) wherever no closed form or dual-number path is
available. ``batch_directional`` builds one stacked point set so a single
vectorized evaluation yields derivatives in every coordinate direction.
"""

from __future__ import annotations

import numpy as np

STEP = 1e-5

# offsets/weights for the 4th-order first-derivative stencil
FD4_OFFSETS = (-2.0, -1.0, 1.0, 2.0)
FD4_WEIGHTS = (1.0, -8.0, 8.0, -1.0)  # divide by 12 h


def fd4_points(x, step=STEP):
    """Stencil points around ``x`` for every coordinate direction.

    Returns an array of shape (4 * n, n): direction-major blocks of the
    four offsets of :data:`FD4_OFFSETS`.
    """
    x = np.asarray(x, dtype=float)
    n = x.size
    pts = np.repeat(x[None, :], 4 * n, axis=0)
    for i in range(n):
        for k, off in enumerate(FD4_OFFSETS):
            pts[4 * i + k, i] += off * step
    return pts


def fd4_combine(values, step=STEP):
    """Combine stencil evaluations into first derivatives.

    ``values`` has shape (4 * n, *s) matching :func:`fd4_points`; the result
    has shape (*s, n) with the direction index last.
    """
    values = np.asarray(values)
    n = values.shape[0] // 4
    v = values.reshape(n, 4, *values.shape[1:])
    w = np.array(FD4_WEIGHTS) / (12.0 * step)
    der = np.einsum('k,dk...->d...', w, v)
    return np.moveaxis(der, 0, -1)


def gradient(fn, x, step=STEP):
    """FD4 gradient of ``fn`` (any output shape) in each coordinate of x.

    ``fn`` must accept a batch of points (m, n). Output: (*s, n).
    """
    pts = fd4_points(x, step)
    return fd4_combine(np.asarray(fn(pts)), step)


def gradient_loop(fn, x, step=STEP):
    """Like :func:`gradient` for point-wise (non-batched) callables."""
    x = np.asarray(x, dtype=float)
    cols = []
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = step
        samples = [np.asarray(fn(x + off * e)) for off in FD4_OFFSETS]
        cols.append(sum(w * s for w, s in zip(FD4_WEIGHTS, samples)) / (12.0 * step))
    return np.moveaxis(np.stack(cols), 0, -1)


def hessian(fn, x, step=1e-4):
    """Second-derivative tensor of array-valued ``fn`` (point-wise callable).

    Central 2nd-order cross differences; result shape (*s, n, n), symmetric
    in the trailing pair.
    """
    x = np.asarray(x, dtype=float)
    n = x.size
    f0 = np.asarray(fn(x))
    out = np.zeros(f0.shape + (n, n))
    for i in range(n):
        ei = np.zeros(n)
        ei[i] = step
        out[..., i, i] = (np.asarray(fn(x + ei)) - 2.0 * f0 + np.asarray(fn(x - ei))) / step ** 2
    for i in range(n):
        for j in range(i + 1, n):
            ei = np.zeros(n)
            ej = np.zeros(n)
            ei[i] = step
            ej[j] = step
            mixed = (np.asarray(fn(x + ei + ej)) - np.asarray(fn(x + ei - ej))
                     - np.asarray(fn(x - ei + ej)) + np.asarray(fn(x - ei - ej))) / (4.0 * step ** 2)
            out[..., i, j] = mixed
            out[..., j, i] = mixed
    return out
