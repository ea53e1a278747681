"""Manufactured benchmark cases: exact solutions, forcing terms, error norms.

Every case is built from a limit solution u0 that is constant along the
direction field, plus a fluctuation ``eps * w`` with w = cos(2 pi x) sin(pi y):

    u_exact = u0 + eps(x) * w.

The forcing is the negative divergence of the exact flux.  The flux is
evaluated in a cancellation-free arrangement: the 1/eps factor is applied
analytically to b.grad(u_exact), using b.grad(u0) = 0 exactly, so nothing
ever divides a rounded near-zero by eps.  This keeps forcing values O(1)
for intensities down to (and far below) eps = 1e-100.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import ConfigurationError
from .fem import QuadRule, error_quad_rule, shape_table
from .fields import (AnisotropySpec, EpsilonField, VectorField,
                     b_constant, b_variable)
from .grid import Grid, element_connectivity

_PI = np.pi

# first-derivative weights for a 5-point uniform stencil, one row per
# position of the evaluation point inside the stencil (0 = fully one-sided)
_FD_W = np.array([
    [-25.0 / 12.0, 4.0, -3.0, 4.0 / 3.0, -0.25],
    [-0.25, -5.0 / 6.0, 1.5, -0.5, 1.0 / 12.0],
    [1.0 / 12.0, -2.0 / 3.0, 0.0, 2.0 / 3.0, -1.0 / 12.0],
    [-1.0 / 12.0, 0.5, -1.5, 5.0 / 6.0, 0.25],
    [0.25, -4.0 / 3.0, 3.0, -4.0, 25.0 / 12.0],
])


@dataclass(frozen=True)
class TestCase:
    """A manufactured problem: fields, exact/limit solutions and forcing.

    ``micro`` is the fluctuation w of the ansatz u_exact = u_limit + eps*w.
    ``q_exact`` is the exact micro unknown of the two-field solver (the
    fluctuation re-anchored to vanish on the inflow boundary); it is only
    available in closed form for the aligned-field constant-intensity cases
    and is None otherwise.
    """

    name: str
    spec: AnisotropySpec
    u_exact: Callable
    grad_u_exact: Callable
    u_limit: Callable
    grad_u_limit: Callable
    micro: Callable
    grad_micro: Callable
    f: Callable
    q_exact: Optional[Callable] = None
    grad_q_exact: Optional[Callable] = None
    params: dict = None


def _w(x, y):
    return np.cos(2 * _PI * x) * np.sin(_PI * y)


def _grad_w(x, y):
    return (-2 * _PI * np.sin(2 * _PI * x) * np.sin(_PI * y),
            _PI * np.cos(2 * _PI * x) * np.cos(_PI * y))


def _compose_exact(u0, gu0, eps: EpsilonField):
    def u(x, y):
        return u0(x, y) + eps(x, y) * _w(x, y)

    def gu(x, y):
        g0x, g0y = gu0(x, y)
        wx, wy = _grad_w(x, y)
        e = eps(x, y)
        return g0x + e * wx + _w(x, y) * eps.dx(x, y), g0y + e * wy

    return u, gu


def case_constant_b(eps: EpsilonField) -> TestCase:
    """Aligned-field case: b = (1,0), u_limit = sin(pi y).

    With constant intensity the forcing has the closed form
    (4+eps) pi^2 cos(2 pi x) sin(pi y) + pi^2 sin(pi y) and the exact micro
    unknown is sin(pi y) (cos(2 pi x) - 1).
    """
    spec = AnisotropySpec(b=b_constant(), eps=eps)

    def u0(x, y):
        return np.sin(_PI * y) + 0.0 * np.asarray(x)

    def gu0(x, y):
        z = np.zeros(np.broadcast(x, y).shape)
        return z, _PI * np.cos(_PI * y) + z

    u, gu = _compose_exact(u0, gu0, eps)
    q = gq = None
    if eps.is_constant:
        def f(x, y):
            return ((4.0 + eps.value) * _PI ** 2 * np.cos(2 * _PI * x) * np.sin(_PI * y)
                    + _PI ** 2 * np.sin(_PI * y))

        def q(x, y):
            return np.sin(_PI * y) * (np.cos(2 * _PI * x) - 1.0)

        def gq(x, y):
            return (-2 * _PI * np.sin(2 * _PI * x) * np.sin(_PI * y),
                    _PI * np.cos(_PI * y) * (np.cos(2 * _PI * x) - 1.0))
    case = TestCase(name="const_b", spec=spec, u_exact=u, grad_u_exact=gu,
                    u_limit=u0, grad_u_limit=gu0, micro=_w, grad_micro=_grad_w,
                    f=None, q_exact=q, grad_q_exact=gq,
                    params={"alpha": 0.0, "m": 1, "eps": eps})
    if eps.is_constant:
        object.__setattr__(case, "f", f)
    else:
        object.__setattr__(case, "f", lambda x, y: forcing_eval(case, x, y))
    return case


def case_variable_b(alpha: float, m: int, eps: EpsilonField) -> TestCase:
    """Curved-field case: u_limit = sin(pi y + alpha (y^2-y) cos(m pi x)).

    The direction field follows the level lines of u_limit; alpha = 0
    reduces exactly to the aligned-field case.  Forcing always goes through
    the generic flux-divergence evaluator.
    """
    if abs(alpha) >= _PI:
        raise ConfigurationError(f"|alpha| must be < pi, got {alpha}")
    spec = AnisotropySpec(b=b_variable(alpha, m), eps=eps)
    mp = m * _PI

    def phase(x, y):
        return _PI * y + alpha * (y * y - y) * np.cos(mp * x)

    def u0(x, y):
        return np.sin(phase(x, y))

    def gu0(x, y):
        c = np.cos(phase(x, y))
        return (-alpha * mp * (y * y - y) * np.sin(mp * x) * c,
                (_PI + alpha * (2 * y - 1) * np.cos(mp * x)) * c)

    u, gu = _compose_exact(u0, gu0, eps)
    case = TestCase(name="var_b", spec=spec, u_exact=u, grad_u_exact=gu,
                    u_limit=u0, grad_u_limit=gu0, micro=_w, grad_micro=_grad_w,
                    f=None, params={"alpha": alpha, "m": m, "eps": eps})
    object.__setattr__(case, "f", lambda x, y: forcing_eval(case, x, y))
    return case


def exact_flux(case: TestCase, x, y):
    """The exact diffusive flux A grad(u_exact), cancellation-free in eps.

    The parallel part uses (1/eps) b.grad(u_exact) expanded analytically as
    b.grad(w) + w * b.grad(eps)/eps, both O(1) by construction.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    spec = case.spec
    b1, b2 = spec.b(x, y)
    e = spec.eps(x, y)
    dex = spec.eps.dx(x, y)
    g = spec.eps.logdx(x, y)
    w = case.micro(x, y)
    wx, wy = case.grad_micro(x, y)
    g0x, g0y = case.grad_u_limit(x, y)
    gx = g0x + e * wx + w * dex
    gy = g0y + e * wy
    # (b . grad u)/eps without ever dividing by eps
    par_over_eps = (b1 * wx + b2 * wy) + w * b1 * g
    apar = 1.0 if spec.a_par is None else spec.a_par(x, y)
    # transverse part: project out the parallel component of the full gradient
    bg = b1 * gx + b2 * gy
    px, py = gx - bg * b1, gy - bg * b2
    if spec.a_perp is None:
        q1, q2 = px, py
    else:
        a11, a12, a22 = spec.a_perp(x, y)
        t1, t2 = a11 * px + a12 * py, a12 * px + a22 * py
        bt = b1 * t1 + b2 * t2
        q1, q2 = t1 - bt * b1, t2 - bt * b2
    c = apar * par_over_eps
    return c * b1 + q1, c * b2 + q2


def forcing_eval(case: TestCase, x, y, h_fd: float = 1e-3) -> np.ndarray:
    """Forcing f = -div(A grad u_exact) via 4th-order differences of the flux.

    The divergence stencil is clamped to stay inside the unit square,
    switching to the one-sided 5-point weights near the edges.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    shape = np.broadcast(x, y).shape
    x = np.broadcast_to(x, shape)
    y = np.broadcast_to(y, shape)

    def stencil_pos(t):
        p = np.full(shape, 2, dtype=int)
        near0 = t < 2 * h_fd
        p[near0] = np.floor(t[near0] / h_fd).astype(int)
        near1 = t > 1.0 - 2 * h_fd
        p[near1] = 4 - np.floor((1.0 - t[near1]) / h_fd).astype(int)
        return np.clip(p, 0, 4)

    px, py = stencil_pos(x), stencil_pos(y)
    dF1 = np.zeros(shape)
    dF2 = np.zeros(shape)
    for k in range(5):
        F1, _ = exact_flux(case, x + (k - px) * h_fd, y)
        dF1 += _FD_W[px, k] * F1
        _, F2 = exact_flux(case, x, y + (k - py) * h_fd)
        dF2 += _FD_W[py, k] * F2
    return -(dF1 + dF2) / h_fd


@dataclass(frozen=True)
class ErrorReport:
    """Absolute and relative L2/H1 errors of u (and q when available)."""

    l2_abs_u: float
    h1_abs_u: float
    l2_rel_u: float
    h1_rel_u: float
    l2_abs_q: Optional[float] = None
    h1_abs_q: Optional[float] = None
    l2_rel_q: Optional[float] = None
    h1_rel_q: Optional[float] = None


def _fe_field_error(grid: Grid, nodal, exact, grad_exact, rule: QuadRule):
    """Integrated squared errors and solution norms of one FE field.

    Returns (err_l2sq, err_h1sq, sol_l2sq, sol_h1sq) with the H1 norm being
    the full norm (L2 part plus gradient seminorm).
    """
    conn = element_connectivity(grid)
    N, dXi, dEta = shape_table(rule)
    gxN, gyN = dXi / grid.hx, dEta / grid.hy
    det = grid.hx * grid.hy
    xc = grid.xmin + grid.hx * (2 * np.arange(grid.n_elx) + 1)
    yc = grid.ymin + grid.hy * (2 * np.arange(grid.n_ely) + 1)
    XC, YC = np.meshgrid(xc, yc)
    xq = XC.ravel()[:, None] + grid.hx * rule.points[None, :, 0]
    yq = YC.ravel()[:, None] + grid.hy * rule.points[None, :, 1]

    u_loc = nodal[conn]                                  # (ne, 9)
    uh = u_loc @ N.T                                     # (ne, nq)
    uhx = u_loc @ gxN.T
    uhy = u_loc @ gyN.T
    ue = exact(xq, yq)
    uex, uey = grad_exact(xq, yq)
    w = rule.weights[None, :] * det
    e = uh - ue
    ex, ey = uhx - uex, uhy - uey
    err_l2 = float(np.sum(w * e * e))
    err_h1 = err_l2 + float(np.sum(w * (ex * ex + ey * ey)))
    sol_l2 = float(np.sum(w * uh * uh))
    sol_h1 = sol_l2 + float(np.sum(w * (uhx * uhx + uhy * uhy)))
    return err_l2, err_h1, sol_l2, sol_h1


def errors_against_exact(solution, case: TestCase, rule: QuadRule = None) -> ErrorReport:
    """L2 and H1 errors of a solve result against the case's exact fields.

    Relative errors are normalized by the norms of the computed solution.
    The q field is measured whenever the scheme produced one and the case
    has a closed-form exact micro unknown.
    """
    if rule is None:
        rule = error_quad_rule(4)
    grid = solution.grid
    el2, eh1, sl2, sh1 = _fe_field_error(
        grid, solution.u, case.u_exact, case.grad_u_exact, rule)
    rep = {
        "l2_abs_u": np.sqrt(el2), "h1_abs_u": np.sqrt(eh1),
        "l2_rel_u": np.sqrt(el2 / sl2) if sl2 > 0 else np.inf,
        "h1_rel_u": np.sqrt(eh1 / sh1) if sh1 > 0 else np.inf,
    }
    if getattr(solution, "q", None) is not None and case.q_exact is not None:
        ql2, qh1, qs2, qsh = _fe_field_error(
            grid, solution.q, case.q_exact, case.grad_q_exact, rule)
        rep.update(l2_abs_q=np.sqrt(ql2), h1_abs_q=np.sqrt(qh1),
                   l2_rel_q=np.sqrt(ql2 / qs2) if qs2 > 0 else np.inf,
                   h1_rel_q=np.sqrt(qh1 / qsh) if qsh > 0 else np.inf)
    return ErrorReport(**rep)
