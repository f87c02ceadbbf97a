"""Multicontact Lagrangian structure and its field equations.

From a Lagrangian function L on a jet chart (x^mu, y^a, y^a_mu, s^mu)
this module constructs

    Theta_L = -dL/dy^a_mu dy^a ^ d^{m-1}x_mu + E_L d^m x + ds^mu ^ d^{m-1}x_mu
    E_L     = dL/dy^a_mu y^a_mu - L
    sigma_L = -dL/ds^mu dx^mu
    omega   = d^m x

derives the Herglotz-Euler-Lagrange residuals for holonomic sections,
and solves the contraction equations

    i_X Theta_L = 0,   i_X bar_d Theta_L = 0,   i_X omega = 1

for semi-holonomic multivector fields exactly, returning the solved
family with its free component functions.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from .algebra import InconsistentSystemError, det, solve_affine
from .charts import Chart
from .expr import (
    Expr,
    Symbol,
    ZeroCheck,
    add,
    const,
    diff,
    free_symbols,
    mul,
    substitute,
    var,
)
from .forms import (
    Form,
    Multivector,
    bar_d,
    contract,
    ext_d,
    form_witnesses,
    form_zero_check,
    one_form,
    volume_form,
    wedge,
)


class LagrangianError(Exception):
    pass


class Regularity(Enum):
    REGULAR = "regular"
    REGULAR_GENERICALLY = "regular-generically"
    SINGULAR = "singular"


def check_symbols(chart: Chart, e: Expr, what: str):
    allowed = {s.key for s in chart.symbols}
    for s in free_symbols(e):
        if s.key not in allowed and s.role != "param":
            raise LagrangianError(f"{what} references unknown symbol {s.name!r}")


def d_minus_one_x(chart: Chart, mu: int) -> Form:
    """d^{m-1}x_mu = i_{d/dx^mu} d^m x."""
    X = Multivector(chart, 1, factors=[{chart.base_axes[mu]: const(1)}])
    return contract(X, volume_form(chart))


class LagrangianSystem:
    """Jet chart + Lagrangian with all derived multicontact data cached."""

    def __init__(self, chart: Chart, L):
        from .expr import _coerce

        L = _coerce(L)
        if not chart.field_axes:
            raise LagrangianError("chart has no field coordinates")
        check_symbols(chart, L, "Lagrangian")
        self.chart = chart
        self.lagrangian = L
        m = chart.base_dim
        self.m = m
        fields = chart.field_axes
        self.n = len(fields)
        self.momenta = {
            (a, mu): diff(L, chart.symbols[chart.velocity_axis(a, mu)])
            for a in range(self.n)
            for mu in range(m)
        }
        self.energy = add(
            *[
                mul(self.momenta[(a, mu)], chart.coord(chart.coords[chart.velocity_axis(a, mu)].name))
                for a in range(self.n)
                for mu in range(m)
            ],
            mul(const(-1), L),
        )
        self.omega = volume_form(chart)
        theta = wedge(volume_form(chart), Form.function(chart, self.energy))
        for a in range(self.n):
            dy = one_form(chart, chart.coords[fields[a]].name)
            for mu in range(m):
                theta = theta + wedge(dy, d_minus_one_x(chart, mu)).scale(mul(const(-1), self.momenta[(a, mu)]))
        for mu in range(m):
            ds = one_form(chart, chart.coords[chart.action_axis(mu)].name)
            theta = theta + wedge(ds, d_minus_one_x(chart, mu))
        self.theta = theta
        sigma = Form.zero(chart, 1)
        for mu in range(m):
            dL_ds = diff(L, chart.symbols[chart.action_axis(mu)])
            sigma = sigma + one_form(chart, chart.coords[chart.base_axes[mu]].name).scale(mul(const(-1), dL_ds))
        self.sigma = sigma
        vel_axes = [chart.velocity_axis(a, mu) for a in range(self.n) for mu in range(m)]
        self.hessian = [
            [diff(self.momenta[(a, mu)], chart.symbols[chart.velocity_axis(b, nu)]) for b in range(self.n) for nu in range(m)]
            for a in range(self.n)
            for mu in range(m)
        ]
        self.hessian_det = det(self.hessian)
        if not self.hessian_det.terms:
            self.regularity = Regularity.SINGULAR
        elif self.hessian_det.is_rational:
            self.regularity = Regularity.REGULAR
        else:
            self.regularity = Regularity.REGULAR_GENERICALLY

    @property
    def is_regular(self) -> bool:
        return self.regularity is not Regularity.SINGULAR

    def bar_d_theta(self) -> Form:
        return bar_d(self.theta, self.sigma)

    def __repr__(self):
        return f"LagrangianSystem(L={self.lagrangian})"


def build_lagrangian_system(chart: Chart, L) -> LagrangianSystem:
    return LagrangianSystem(chart, L)


# ---------------------------------------------------------------------------
# Herglotz-Euler-Lagrange residuals over total-derivative placeholders.


def second_derivative_symbol(chart: Chart, field: int, mu: int, nu: int) -> Expr:
    """Placeholder for d^2 y^a / dx^mu dx^nu (symmetric, e.g. y_tx)."""
    lo, hi = sorted((mu, nu))
    fname = chart.coords[chart.field_axes[field]].name
    b = [chart.coords[i].name for i in chart.base_axes]
    return var(f"{fname}_{b[lo]}{b[hi]}", "aux")


def action_derivative_symbol(chart: Chart, nu: int, mu: int) -> Expr:
    """Placeholder for d s^nu / dx^mu (e.g. s_t_t)."""
    sname = chart.coords[chart.action_axis(nu)].name
    bname = chart.coords[chart.base_axes[mu]].name
    return var(f"{sname}_{bname}", "aux")


def total_derivative(e: Expr, chart: Chart, mu: int) -> Expr:
    """Total derivative D_mu along holonomic sections, with second-order
    jet and action derivatives as placeholder symbols."""
    parts = [diff(e, chart.symbols[chart.base_axes[mu]])]
    for a in range(len(chart.field_axes)):
        fa = chart.field_axes[a]
        d = diff(e, chart.symbols[fa])
        if d.terms:
            parts.append(mul(chart.coord(chart.coords[chart.velocity_axis(a, mu)].name), d))
        for nu in range(chart.base_dim):
            dv = diff(e, chart.symbols[chart.velocity_axis(a, nu)])
            if dv.terms:
                parts.append(mul(second_derivative_symbol(chart, a, mu, nu), dv))
    for nu in range(chart.base_dim):
        ds = diff(e, chart.symbols[chart.action_axis(nu)])
        if ds.terms:
            parts.append(mul(action_derivative_symbol(chart, nu, mu), ds))
    return add(*parts)


@dataclass
class EulerLagrangeResiduals:
    """One residual per field (Herglotz-EL) plus the action residual
    sum_mu d s^mu/dx^mu - L."""

    fields: list
    action: Expr


def herglotz_el_residuals(sys: LagrangianSystem) -> EulerLagrangeResiduals:
    chart = sys.chart
    out = []
    for a in range(sys.n):
        lhs = add(*[total_derivative(sys.momenta[(a, mu)], chart, mu) for mu in range(sys.m)])
        dLdy = diff(sys.lagrangian, chart.symbols[chart.field_axes[a]])
        coupling = add(
            *[
                mul(diff(sys.lagrangian, chart.symbols[chart.action_axis(mu)]), sys.momenta[(a, mu)])
                for mu in range(sys.m)
            ]
        )
        out.append(add(lhs, mul(const(-1), dLdy), mul(const(-1), coupling)))
    action = add(
        *[action_derivative_symbol(chart, mu, mu) for mu in range(sys.m)],
        mul(const(-1), sys.lagrangian),
    )
    return EulerLagrangeResiduals(fields=out, action=action)


# ---------------------------------------------------------------------------
# Semi-holonomic multivector solution families.


@dataclass
class SopdeFamily:
    """Solved semi-holonomic family: factor components with the linear
    constraints already substituted; leftover component functions appear
    as free symbols."""

    system: object
    factors: list  # list of dicts axis -> Expr
    free: list  # free component Symbols
    solved: dict  # Symbol -> Expr

    def multivector(self) -> Multivector:
        return Multivector(self.system.chart, len(self.factors), factors=self.factors)

    def instantiate(self, values: dict) -> Multivector:
        """Substitute values for (some of) the free symbols."""
        subs = {s: values.get(s.name, var(s.name, "aux")) for s in self.free}
        factors = [{i: substitute(c, subs) for i, c in f.items()} for f in self.factors]
        return Multivector(self.system.chart, len(self.factors), factors=factors)


def _component_letter(i: int) -> str:
    return chr(ord("A") + i)


def semi_holonomic_ansatz(sys: LagrangianSystem):
    """SOPDE-shaped factors with unknown velocity and action components.

    Unknowns are named per the factor letter and 1-based axis position:
    factor 1 components A1..AN, factor 2 components B1..BN, so that the
    degrees of freedom match the worked conventions (A4, B5, ...).
    """
    chart = sys.chart
    factors = []
    unknowns = []
    for mu in range(sys.m):
        letter = _component_letter(mu)
        comp = {chart.base_axes[mu]: const(1)}
        for a in range(sys.n):
            comp[chart.field_axes[a]] = chart.coord(chart.coords[chart.velocity_axis(a, mu)].name)
        for a in range(sys.n):
            for nu in range(sys.m):
                ax = chart.velocity_axis(a, nu)
                u = Symbol(f"{letter}{ax + 1}", "aux")
                unknowns.append(u)
                comp[ax] = var(u.name, "aux")
        for nu in range(sys.m):
            ax = chart.action_axis(nu)
            u = Symbol(f"{letter}{ax + 1}", "aux")
            unknowns.append(u)
            comp[ax] = var(u.name, "aux")
        factors.append(comp)
    return factors, unknowns


def solve_sopde_family(sys: LagrangianSystem) -> SopdeFamily:
    """Solve i_X Theta_L = 0 and i_X bar_d Theta_L = 0 over the
    semi-holonomic ansatz (m <= 2)."""
    if sys.m > 2:
        raise LagrangianError(f"solve_sopde_family supports base dimension <= 2, got {sys.m}")
    if not sys.is_regular:
        raise LagrangianError("singular Lagrangian: the ansatz equations need not be solvable")
    chart = sys.chart
    factors, unknowns = semi_holonomic_ansatz(sys)
    X = Multivector(chart, sys.m, factors=factors)
    eqs = []
    c0 = contract(X, sys.theta)
    eqs.extend(c for _, c in c0.items())
    c1 = contract(X, sys.bar_d_theta())
    eqs.extend(c for _, c in c1.items())
    try:
        sol = solve_affine(eqs, unknowns)
    except InconsistentSystemError as exc:
        raise LagrangianError(f"contraction equations are inconsistent: {exc}") from exc
    subs = sol.substitution()
    solved_factors = [{i: substitute(c, subs) for i, c in f.items()} for f in factors]
    fam = SopdeFamily(system=sys, factors=solved_factors, free=sol.free, solved=sol.solved)
    X = fam.multivector()
    for label, f in (("i_X Theta_L", contract(X, sys.theta)), ("i_X bar_d Theta_L", contract(X, sys.bar_d_theta()))):
        if f.table:
            raise LagrangianError(f"solved family does not annihilate {label}: {f.table}")
    return fam


# ---------------------------------------------------------------------------
# Dissipation-form defining property.


@dataclass
class CheckResult:
    holds: bool
    certainty: ZeroCheck
    witnesses: list

    def __bool__(self):
        return self.holds


def check_form_zero(f: Form, seed: int = 0, tol: float = 1e-9) -> CheckResult:
    z = form_zero_check(f, seed=seed, tol=tol)
    holds = z is not ZeroCheck.NONZERO
    return CheckResult(holds=holds, certainty=z, witnesses=[] if holds else form_witnesses(f, seed=seed, tol=tol))


def verify_sigma_property(sys, R: Multivector, seed: int = 0, tol: float = 1e-9) -> CheckResult:
    """Check the defining property of the dissipation form,
    sigma ^ i_R Theta = i_R d Theta, for a candidate Reeb field R."""
    lhs = wedge(sys.sigma, contract(R, sys.theta))
    rhs = contract(R, ext_d(sys.theta))
    return check_form_zero(lhs - rhs, seed=seed, tol=tol)
