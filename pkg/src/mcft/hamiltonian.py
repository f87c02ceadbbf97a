"""Legendre transform and the multicontact Hamiltonian structure.

For a regular Lagrangian the fiber derivative p^mu_a = dL/dy^a_mu is
inverted exactly (relations affine in the velocities), and

    H       = E_L composed with the inverse Legendre map
    Theta_H = -p^mu_a dy^a ^ d^{m-1}x_mu + H d^m x + ds^mu ^ d^{m-1}x_mu
    sigma_H = dH/ds^mu dx^mu

The Herglotz-Hamilton-de Donder-Weyl data comes in two shapes: residuals
for sections (over derivative placeholder symbols) and the decomposable
multivector family with the trace constraints imposed.
"""
from __future__ import annotations

from dataclasses import dataclass
from .algebra import InconsistentSystemError, NonlinearSystemError, solve_affine
from .charts import Chart, ham_chart, momentum_name
from .expr import (
    Expr,
    Symbol,
    add,
    const,
    diff,
    mul,
    substitute,
    var,
)
from .forms import Form, Multivector, bar_d, one_form, volume_form, wedge
from .lagrangian import (
    LagrangianSystem,
    check_symbols,
    d_minus_one_x,
)


class LegendreError(Exception):
    def __init__(self, message, unsolved=None):
        super().__init__(message)
        self.unsolved = unsolved or []


class HamiltonianSystem:
    """Hamiltonian chart + H with the multicontact data cached."""

    def __init__(self, chart: Chart, H):
        from .expr import _coerce

        H = _coerce(H)
        check_symbols(chart, H, "Hamiltonian")
        self.chart = chart
        self.hamiltonian = H
        m = chart.base_dim
        self.m = m
        self.n = len(chart.field_axes)
        self.omega = volume_form(chart)
        theta = wedge(volume_form(chart), Form.function(chart, H))
        for a in range(self.n):
            dy = one_form(chart, chart.coords[chart.field_axes[a]].name)
            for mu in range(m):
                p = chart.coord(chart.coords[chart.momentum_axis(a, mu)].name)
                theta = theta + wedge(dy, d_minus_one_x(chart, mu)).scale(mul(const(-1), p))
        for mu in range(m):
            ds = one_form(chart, chart.coords[chart.action_axis(mu)].name)
            theta = theta + wedge(ds, d_minus_one_x(chart, mu))
        self.theta = theta
        sigma = Form.zero(chart, 1)
        for mu in range(m):
            dH_ds = diff(H, chart.symbols[chart.action_axis(mu)])
            sigma = sigma + one_form(chart, chart.coords[chart.base_axes[mu]].name).scale(dH_ds)
        self.sigma = sigma

    def bar_d_theta(self) -> Form:
        return bar_d(self.theta, self.sigma)

    def __repr__(self):
        return f"HamiltonianSystem(H={self.hamiltonian})"


@dataclass
class LegendreTransform:
    """The fiber derivative between a Lagrangian system and its
    Hamiltonian picture.

    ``forward`` maps each momentum name to its expression over the jet
    chart; ``inverse`` maps each velocity name to its expression over the
    Hamiltonian chart.  Both include the shared coordinates identically.
    """

    lagrangian_system: LagrangianSystem
    hamiltonian_system: HamiltonianSystem
    forward: dict  # ham coordinate name -> Expr over jet chart
    inverse: dict  # jet coordinate name -> Expr over ham chart


def legendre(sys: LagrangianSystem) -> LegendreTransform:
    if not sys.is_regular:
        raise LegendreError("singular Lagrangian has no Legendre inverse")
    chart = sys.chart
    bases = [chart.coords[i].name for i in chart.base_axes]
    fields = [chart.coords[i].name for i in chart.field_axes]
    hchart = ham_chart(bases, fields)
    vel_syms = [chart.symbols[chart.velocity_axis(a, mu)] for a in range(sys.n) for mu in range(sys.m)]
    equations = []
    for a in range(sys.n):
        for mu in range(sys.m):
            p = hchart.coord(momentum_name(bases, fields, a, mu))
            equations.append(add(sys.momenta[(a, mu)], mul(const(-1), p)))
    try:
        sol = solve_affine(equations, vel_syms)
    except NonlinearSystemError as exc:
        raise LegendreError(
            f"velocity-momentum relations are not linear in the velocities: {exc}", unsolved=equations
        ) from exc
    except InconsistentSystemError as exc:
        raise LegendreError(f"velocity-momentum relations are not invertible: {exc}", unsolved=equations) from exc
    if sol.free:
        raise LegendreError(
            f"velocity-momentum relations leave velocities undetermined: {[s.name for s in sol.free]}",
            unsolved=equations,
        )
    inverse = {s.name: e for s, e in sol.solved.items()}
    forward = {}
    for i, c in enumerate(hchart.coords):
        if c.role == "momentum":
            forward[c.name] = sys.momenta[(c.field, c.base)]
        else:
            forward[c.name] = chart.coord(c.name)
    for i, c in enumerate(chart.coords):
        if c.role == "velocity":
            continue
        inverse.setdefault(c.name, hchart.coord(c.name))
    H = substitute(sys.energy, {chart.symbol(n): e for n, e in inverse.items() if n in chart._axis})
    hsys = HamiltonianSystem(hchart, H)
    return LegendreTransform(sys, hsys, forward=forward, inverse=inverse)


# ---------------------------------------------------------------------------
# Herglotz-Hamilton-de Donder-Weyl data.


def _dH_dp(hsys: HamiltonianSystem, a: int, mu: int) -> Expr:
    return diff(hsys.hamiltonian, hsys.chart.symbols[hsys.chart.momentum_axis(a, mu)])


def momentum_trace_rhs(hsys: HamiltonianSystem, a: int) -> Expr:
    """-(dH/dy^a + p^mu_a dH/ds^mu)"""
    chart = hsys.chart
    H = hsys.hamiltonian
    parts = [diff(H, chart.symbols[chart.field_axes[a]])]
    for mu in range(hsys.m):
        p = chart.coord(chart.coords[chart.momentum_axis(a, mu)].name)
        parts.append(mul(p, diff(H, chart.symbols[chart.action_axis(mu)])))
    return mul(const(-1), add(*parts))


def action_trace_rhs(hsys: HamiltonianSystem) -> Expr:
    """p^mu_a dH/dp^mu_a - H"""
    chart = hsys.chart
    parts = []
    for a in range(hsys.n):
        for mu in range(hsys.m):
            p = chart.coord(chart.coords[chart.momentum_axis(a, mu)].name)
            parts.append(mul(p, _dH_dp(hsys, a, mu)))
    return add(*parts, mul(const(-1), hsys.hamiltonian))


@dataclass
class HdwFamily:
    system: HamiltonianSystem
    factors: list
    free: list
    solved: dict

    def multivector(self) -> Multivector:
        return Multivector(self.system.chart, len(self.factors), factors=self.factors)


def _letter(i: int) -> str:
    return chr(ord("A") + i)


def hdw_multivector(hsys: HamiltonianSystem) -> HdwFamily:
    """Decomposable solution family: y-components fixed to dH/dp,
    momentum and action components free up to the trace constraints."""
    chart = hsys.chart
    factors = []
    unknowns = []
    for mu in range(hsys.m):
        letter = _letter(mu)
        comp = {chart.base_axes[mu]: const(1)}
        for a in range(hsys.n):
            comp[chart.field_axes[a]] = _dH_dp(hsys, a, mu)
        for a in range(hsys.n):
            for nu in range(hsys.m):
                ax = chart.momentum_axis(a, nu)
                u = Symbol(f"{letter}{ax + 1}", "aux")
                unknowns.append(u)
                comp[ax] = var(u.name, "aux")
        for nu in range(hsys.m):
            ax = chart.action_axis(nu)
            u = Symbol(f"{letter}{ax + 1}", "aux")
            unknowns.append(u)
            comp[ax] = var(u.name, "aux")
        factors.append(comp)
    equations = []
    for a in range(hsys.n):
        trace = add(*[factors[mu][chart.momentum_axis(a, mu)] for mu in range(hsys.m)])
        equations.append(add(trace, mul(const(-1), momentum_trace_rhs(hsys, a))))
    trace = add(*[factors[mu][chart.action_axis(mu)] for mu in range(hsys.m)])
    equations.append(add(trace, mul(const(-1), action_trace_rhs(hsys))))
    sol = solve_affine(equations, unknowns)
    subs = sol.substitution()
    solved_factors = [{i: substitute(c, subs) for i, c in f.items()} for f in factors]
    return HdwFamily(system=hsys, factors=solved_factors, free=sol.free, solved=sol.solved)


@dataclass
class HdwResiduals:
    """Section-equation residuals over derivative placeholder symbols
    (named ``<coord>_<base>``, e.g. y_t, p_t_t, s_t_t)."""

    fields: list  # one per (field, base): dy^a/dx^mu - dH/dp^mu_a
    momenta: list  # one per field: sum_mu dp^mu_a/dx^mu + dH/dy^a + p dH/ds
    action: Expr  # sum_mu ds^mu/dx^mu - (p dH/dp - H)


def _slope(chart: Chart, axis: int, mu: int) -> Expr:
    zname = chart.coords[axis].name
    bname = chart.coords[chart.base_axes[mu]].name
    return var(f"{zname}_{bname}", "aux")


def hdw_residuals(hsys: HamiltonianSystem) -> HdwResiduals:
    chart = hsys.chart
    fields = []
    for a in range(hsys.n):
        for mu in range(hsys.m):
            fields.append(add(_slope(chart, chart.field_axes[a], mu), mul(const(-1), _dH_dp(hsys, a, mu))))
    momenta = []
    for a in range(hsys.n):
        parts = [_slope(chart, chart.momentum_axis(a, mu), mu) for mu in range(hsys.m)]
        momenta.append(add(*parts, mul(const(-1), momentum_trace_rhs(hsys, a))))
    action_parts = [_slope(chart, chart.action_axis(mu), mu) for mu in range(hsys.m)]
    action = add(*action_parts, mul(const(-1), action_trace_rhs(hsys)))
    return HdwResiduals(fields=fields, momenta=momenta, action=action)
