"""Problem setups: the lid-driven cavity and manufactured solutions."""

from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Optional

import numpy as np

from .fem import boundary_dirichlet, build_space, cavity_dirichlet
from .fem.quadrature import collapsed_gauss
from .fem.space import tabulate
from .ipp import Operators, ProblemConfig
from .mesh import barycentric_refine, cavity_mesh, structured_unit_square, tag_cavity_boundary


def unit_square_space(n, barycentric=True):
    mesh = structured_unit_square(n)
    if barycentric:
        mesh = barycentric_refine(mesh)
    return build_space(tag_cavity_boundary(mesh))


def cavity_problem(n, re, barycentric=True, **cfg_kwargs):
    """Space, operators and config for the leaky lid-driven cavity at ``Re = 1/nu``."""
    space = build_space(cavity_mesh(n, barycentric))
    ops = Operators(space)
    cfg = ProblemConfig(nu=1.0 / re, bc=cavity_dirichlet(space), **cfg_kwargs)
    return space, ops, cfg


@dataclass(frozen=True, eq=False)
class FlowProblem:
    """Discrete problem data: space, cached operators, viscosity, Dirichlet data and forcing."""

    space: object
    ops: Operators
    nu: float
    bc: object
    body_force: Optional[Callable] = None

    @classmethod
    def cavity(cls, n, re, barycentric=True):
        space = build_space(cavity_mesh(n, barycentric))
        return cls(space, Operators(space), 1.0 / re, cavity_dirichlet(space))

    @classmethod
    def manufactured(cls, exact, n, barycentric=True, t=0.0):
        space = unit_square_space(n, barycentric)
        bc = boundary_dirichlet(space, exact.velocity(t))
        return cls(space, Operators(space), exact.nu, bc, exact.force(t))

    def config(self, **cfg_kwargs):
        return ProblemConfig(nu=self.nu, bc=self.bc, body_force=self.body_force, **cfg_kwargs)


@dataclass(frozen=True)
class ManufacturedSolution:
    """Exact velocity/pressure given as sympy-parsable strings in ``x, y`` (and ``t``).

    The body force ``f = u_t + u.grad u + grad p - nu lap u`` is derived
    symbolically.
    """

    ux: str
    uy: str
    p: str
    nu: float = 1.0

    @cached_property
    def _funcs(self):
        import sympy

        x, y, t = sympy.symbols("x y t")
        ux, uy, p = (sympy.sympify(s) for s in (self.ux, self.uy, self.p))
        nu = sympy.Float(self.nu)

        def lap(e):
            return sympy.diff(e, x, 2) + sympy.diff(e, y, 2)

        fx = sympy.diff(ux, t) + ux * sympy.diff(ux, x) + uy * sympy.diff(ux, y) + sympy.diff(p, x) - nu * lap(ux)
        fy = sympy.diff(uy, t) + ux * sympy.diff(uy, x) + uy * sympy.diff(uy, y) + sympy.diff(p, y) - nu * lap(uy)
        div = sympy.simplify(sympy.diff(ux, x) + sympy.diff(uy, y))
        if div != 0:
            raise ValueError(f"manufactured velocity is not divergence free: div = {div}")
        grads = [sympy.diff(ux, x), sympy.diff(ux, y), sympy.diff(uy, x), sympy.diff(uy, y)]

        def lam(*exprs):
            return sympy.lambdify((x, y, t), exprs, "numpy")

        return lam(ux, uy), lam(fx, fy), lam(p), lam(*grads)

    @staticmethod
    def _bcast(vals, x):
        return tuple(np.broadcast_to(np.asarray(v, dtype=float), np.shape(x)) for v in vals)

    def velocity(self, t=0.0):
        return lambda x, y: self._bcast(self._funcs[0](x, y, t), x)

    def force(self, t=0.0):
        return lambda x, y: self._bcast(self._funcs[1](x, y, t), x)

    def pressure(self, t=0.0):
        return lambda x, y: self._bcast(self._funcs[2](x, y, t), x)[0]

    def velocity_gradient(self, t=0.0):
        """``(dux/dx, dux/dy, duy/dx, duy/dy)``."""
        return lambda x, y: self._bcast(self._funcs[3](x, y, t), x)

    def problem(self, space, t=0.0, **cfg_kwargs):
        bc = boundary_dirichlet(space, self.velocity(t))
        return ProblemConfig(nu=self.nu, bc=bc, body_force=self.force(t), **cfg_kwargs)


# smooth, homogeneous on the boundary of the unit square
TRIG_VORTEX = ManufacturedSolution(
    ux="pi*sin(pi*x)**2*sin(2*pi*y)",
    uy="-pi*sin(2*pi*x)*sin(pi*y)**2",
    p="cos(pi*x)*cos(pi*y)",
)

# low-frequency field with nonzero boundary data; in the asymptotic regime from n = 8
SMOOTH_TRIG = ManufacturedSolution(
    ux="sin(x)*sin(y)",
    uy="cos(x)*cos(y)",
    p="sin(x)*cos(y)",
)

# quadratic divergence-free velocity, reproduced exactly by P2
QUADRATIC_FLOW = ManufacturedSolution(ux="x**2 + 2*x*y", uy="-2*x*y - y**2", p="x*y - 1/4")


def transient_polynomial(nu=1.0):
    """``u = (1 + t^3) U(x, y)`` with ``U`` quadratic and divergence free."""
    return ManufacturedSolution(
        ux="(1 + t**3)*(x**2 + 2*x*y)",
        uy="-(1 + t**3)*(2*x*y + y**2)",
        p="x*y - 1/4",
        nu=nu,
    )


def velocity_errors(space, coef, exact, order=6):
    """L2 and H1-seminorm errors of a P2 velocity against exact callables.

    ``exact`` is a :class:`ManufacturedSolution`-like object providing
    ``velocity()`` and ``velocity_gradient()`` at a fixed time, or a pair of
    callables.  Integrals use a collapsed Gauss rule of the given order.
    """
    if isinstance(exact, tuple):
        u_fn, grad_fn = exact
    else:
        u_fn, grad_fn = exact.velocity(), exact.velocity_gradient()
    rule = collapsed_gauss(order)
    phi, grads, wdet = tabulate(space, rule)
    p = space.mesh.points[space.mesh.triangles]
    xq = np.einsum("qk,fkd->fqd", rule.points, p)
    uc = coef.reshape(-1, 2)[space.cell_nodes]  # (F, 6, 2)
    uh = np.einsum("qa,fac->fqc", phi, uc)
    guh = np.einsum("fqad,fac->fqcd", grads, uc)  # d u_c / d x_d
    ux, uy = u_fn(xq[..., 0], xq[..., 1])
    g = grad_fn(xq[..., 0], xq[..., 1])
    eu = uh - np.stack([ux, uy], axis=-1)
    eg = guh - np.stack([np.stack(g[:2], -1), np.stack(g[2:], -1)], axis=-2)
    l2 = np.sqrt(np.sum(wdet * np.sum(eu**2, axis=-1)))
    h1 = np.sqrt(np.sum(wdet * np.sum(eg**2, axis=(-1, -2))))
    return float(l2), float(h1)


def observed_rates(hs, errors):
    hs, errors = np.asarray(hs, dtype=float), np.asarray(errors, dtype=float)
    return np.log(errors[:-1] / errors[1:]) / np.log(hs[:-1] / hs[1:])


__all__ = [
    "FlowProblem",
    "ManufacturedSolution",
    "QUADRATIC_FLOW",
    "SMOOTH_TRIG",
    "TRIG_VORTEX",
    "cavity_problem",
    "observed_rates",
    "transient_polynomial",
    "unit_square_space",
    "velocity_errors",
]
