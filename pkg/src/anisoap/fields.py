"""Anisotropy data: direction fields b, intensity profiles eps(x), coefficients.

All evaluators are vectorized over numpy arrays and stateless, so they can
be called concurrently from sweep workers.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import ConfigurationError


class VectorField:
    """Unit direction field with optional analytic derivatives.

    ``fn(x, y) -> (bx, by)`` must return unit vectors.  ``grad_fn`` returns
    the four partials ``(dbx_dx, dbx_dy, dby_dx, dby_dy)``.  ``raw_fn`` and
    ``raw_div_fn`` expose the unnormalized field and its divergence when the
    direction comes from normalizing some B.
    """

    def __init__(self, fn, grad_fn=None, raw_fn=None, raw_div_fn=None):
        self._fn = fn
        self._grad_fn = grad_fn
        self.raw = raw_fn
        self.raw_div = raw_div_fn

    def __call__(self, x, y):
        return self._fn(np.asarray(x, dtype=float), np.asarray(y, dtype=float))

    def grad(self, x, y):
        if self._grad_fn is None:
            raise NotImplementedError("field has no analytic gradient")
        return self._grad_fn(np.asarray(x, dtype=float), np.asarray(y, dtype=float))


def b_constant() -> VectorField:
    """The direction field aligned with the x-axis, b = (1, 0)."""

    def fn(x, y):
        z = np.zeros(np.broadcast(x, y).shape)
        return z + 1.0, z

    def grad_fn(x, y):
        z = np.zeros(np.broadcast(x, y).shape)
        return z, z, z, z

    return VectorField(fn, grad_fn,
                       raw_fn=fn,
                       raw_div_fn=lambda x, y: np.zeros(np.broadcast(x, y).shape))


def b_variable(alpha: float, m: int = 1) -> VectorField:
    """Divergence-free direction field with ``m`` oscillation periods in x.

    The unnormalized field is
        B = (alpha*(2y-1)*cos(m*pi*x) + pi,  m*pi*alpha*(y^2-y)*sin(m*pi*x)),
    which never vanishes on the unit square when |alpha| < pi (the first
    component is at least pi - |alpha|).  alpha = 0 reduces to b_constant.
    """
    if abs(alpha) >= np.pi:
        raise ConfigurationError(
            f"|alpha| must be < pi so that B cannot vanish, got {alpha}")
    if m < 1 or int(m) != m:
        raise ConfigurationError(f"m must be a positive integer, got {m}")
    a, mp = float(alpha), m * np.pi

    def raw(x, y):
        return (a * (2 * y - 1) * np.cos(mp * x) + np.pi,
                mp * a * (y * y - y) * np.sin(mp * x))

    def raw_jac(x, y):
        s, c = np.sin(mp * x), np.cos(mp * x)
        d1x = -a * mp * (2 * y - 1) * s
        d1y = 2 * a * c
        d2x = mp * mp * a * (y * y - y) * c
        d2y = mp * a * (2 * y - 1) * s
        return d1x, d1y, d2x, d2y

    def fn(x, y):
        B1, B2 = raw(x, y)
        r = np.hypot(B1, B2)
        return B1 / r, B2 / r

    def grad_fn(x, y):
        # chain rule through b = B/|B|:  db_i = dB_i/r - B_i (B . dB)/r^3
        B1, B2 = raw(x, y)
        d1x, d1y, d2x, d2y = raw_jac(x, y)
        r2 = B1 * B1 + B2 * B2
        r = np.sqrt(r2)
        sx = (B1 * d1x + B2 * d2x) / (r2 * r)
        sy = (B1 * d1y + B2 * d2y) / (r2 * r)
        return (d1x / r - B1 * sx, d1y / r - B1 * sy,
                d2x / r - B2 * sx, d2y / r - B2 * sy)

    return VectorField(fn, grad_fn, raw_fn=raw,
                       raw_div_fn=lambda x, y: np.zeros(np.broadcast(x, y).shape))


class EpsilonField:
    """Anisotropy intensity, either constant or a smoothed step in x.

    The profile kind interpolates between 1 (left of the interface x0) and
    ``eps_min`` (right of it) over a transition of width ~1/a.  Evaluation
    uses the form eps = (s + eps_min) / (1 + s) with s = exp(2a(x0-x)),
    arranged so the limit value eps_min is reached exactly even when it is
    far below the rounding threshold of 1 + tanh.
    """

    def __init__(self, kind, value=None, eps_min=None, a=None, x0=None):
        self.kind = kind
        self.value = value
        self.eps_min = eps_min
        self.a = a
        self.x0 = x0

    @property
    def is_constant(self) -> bool:
        return self.kind == "constant"

    def _s(self, x):
        # exp(2a(x0-x)) split by sign of the exponent to avoid overflow
        t = 2.0 * self.a * (self.x0 - np.asarray(x, dtype=float))
        return np.exp(np.minimum(t, 0.0)), np.exp(np.minimum(-t, 0.0))

    def __call__(self, x, y=None):
        x = np.asarray(x, dtype=float)
        if self.is_constant:
            return np.full(x.shape, self.value)
        s, r = self._s(x)   # s = e^t for t<=0 else 1;  r = e^-t for t>=0 else 1
        em = self.eps_min
        # (s + em) / (1 + s); for t > 0 multiply through by r = 1/s
        return np.where(r < 1.0, (1.0 + em * r) / (1.0 + r), (s + em) / (1.0 + s))

    def dx(self, x, y=None):
        """d eps / dx (the profile varies in x only)."""
        x = np.asarray(x, dtype=float)
        if self.is_constant:
            return np.zeros(x.shape)
        # -2a(1-em) s/(1+s)^2 is symmetric under s -> 1/s
        q = np.exp(-2.0 * self.a * np.abs(x - self.x0))
        return -2.0 * self.a * (1.0 - self.eps_min) * q / (1.0 + q) ** 2

    def logdx(self, x, y=None):
        """d(log eps)/dx = eps'/eps, stable over the whole range of eps_min."""
        x = np.asarray(x, dtype=float)
        if self.is_constant:
            return np.zeros(x.shape)
        s, r = self._s(x)
        em = self.eps_min
        c = -2.0 * self.a * (1.0 - em)
        # s / ((1+s)(s+em)), written with the sub-unit exponential on each side
        return np.where(r < 1.0,
                        c * r / ((1.0 + r) * (1.0 + em * r)),
                        c * s / ((1.0 + s) * (s + em)))


def eps_constant(value: float) -> EpsilonField:
    """Constant intensity; value 0 is admitted only to assemble the limit model."""
    if value < 0:
        raise ConfigurationError(f"eps must be nonnegative, got {value}")
    return EpsilonField("constant", value=float(value))


def eps_tanh(eps_min: float, a: float, x0: float) -> EpsilonField:
    """Smoothed-step intensity from 1 down to ``eps_min`` across x = x0."""
    if eps_min <= 0 or eps_min > 1:
        raise ConfigurationError(f"eps_min must be in (0, 1], got {eps_min}")
    if a <= 0 or not (0 < x0 < 1):
        raise ConfigurationError(f"need a > 0 and x0 in (0,1), got a={a}, x0={x0}")
    f = EpsilonField("tanh", eps_min=float(eps_min), a=float(a), x0=float(x0))
    if __debug__ and eps_min >= 1e-8:
        # where both are representable the stable form must equal the naive one
        xs = np.linspace(0.0, 1.0, 33)
        t = np.tanh(a * (x0 - xs))
        naive = 0.5 * ((1.0 + t) + eps_min * (1.0 - t))
        assert np.max(np.abs(f(xs) - naive)) < 1e-12
    return f


@dataclass(frozen=True)
class AnisotropySpec:
    """Diffusion data: direction b, intensity eps, coefficients A_par, A_perp.

    ``a_par`` is a scalar field (None means 1) and ``a_perp`` a symmetric
    matrix field returning (a11, a12, a22) (None means identity); the
    defaults are the ones exercised by every benchmark case.
    """

    b: VectorField
    eps: EpsilonField
    a_par: Optional[Callable] = None
    a_perp: Optional[Callable] = None


def split_gradient(spec: AnisotropySpec, x, y, grad):
    """Split a gradient into components along and across the direction field.

    Returns ``(grad_par, grad_perp)`` with grad_par = (b.grad) b and
    grad_perp = grad - grad_par (each a coordinate pair).
    """
    b1, b2 = spec.b(x, y)
    g1, g2 = grad
    c = b1 * g1 + b2 * g2
    p1, p2 = c * b1, c * b2
    return (p1, p2), (g1 - p1, g2 - p2)
