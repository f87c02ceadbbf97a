"""Canonical lifts, Noether classification, and dissipated currents.

A configuration vector field lives on the base/field/action axes of a
jet or Hamiltonian chart, with the projectability conditions

    f^mu = f^mu(x),   F^a = F^a(x, y, s),   g^mu = g^mu(s).

``jet_lift`` prolongs it to the velocities with the flow-consistent
total-derivative formula

    (Y^1)^a_mu = D_mu F^a - y^a_nu df^nu/dx^mu,
    D_mu F^a   = dF^a/dx^mu + y^b_mu dF^a/dy^b,

optionally negated (``paper_sign=True``) for comparison against the
opposite sign convention.  ``hamiltonian_lift`` uses the momentum-side
formula

    (Y*)^mu_a = df^mu/dx^nu p^nu_a - df^nu/dx^nu p^mu_a - dF^b/dy^a p^mu_b.

Classification checks L_Y Theta = 0 (Noether) and additionally
L_Y omega = 0 (strong), attaches the dissipated current xi_Y = i_Y Theta,
and records sigma-invariance.
"""
from __future__ import annotations

from dataclasses import dataclass

from .charts import Chart
from .expr import (
    Expr,
    ZeroCheck,
    add,
    const,
    diff,
    free_symbols,
    mul,
    to_text,
)
from .forms import (
    Form,
    Multivector,
    bar_d,
    contract,
    ext_d,
    form_to_json,
    form_witnesses,
    form_zero_check,
    lie_derivative,
    vector_to_text,
)
from .lagrangian import CheckResult, check_form_zero


class SymmetryError(Exception):
    pass


def _component_symbol_check(chart: Chart, e: Expr, allowed_roles, what: str):
    allowed = {s.key for i, s in enumerate(chart.symbols) if chart.coords[i].role in allowed_roles}
    for s in free_symbols(e):
        if s.role == "param":
            continue
        if s.key not in allowed:
            raise SymmetryError(f"{what} may only depend on {sorted(allowed_roles)}; found {s.name!r}")


def _config_components(Y: Multivector):
    if Y.degree != 1 or not Y.decomposable:
        raise SymmetryError("expected a vector field")
    chart = Y.chart
    comp = Y.factors[0]
    f = {}
    F = {}
    g = {}
    for i, c in comp.items():
        role = chart.coords[i].role
        if role == "base":
            _component_symbol_check(chart, c, ("base",), "a base component f^mu")
            f[i] = c
        elif role == "field":
            _component_symbol_check(chart, c, ("base", "field", "action"), "a field component F^a")
            F[i] = c
        elif role == "action":
            _component_symbol_check(chart, c, ("action",), "an action component g^mu")
            g[i] = c
        elif c.terms:
            raise SymmetryError(
                f"configuration vector field has a {role} component along {chart.coords[i].name}"
            )
    return f, F, g


def jet_lift(Y: Multivector, paper_sign: bool = False) -> Multivector:
    """Prolong a configuration vector field on a jet chart to the
    velocity axes."""
    chart = Y.chart
    f, F, g = _config_components(Y)
    comp = dict(Y.factors[0])
    m = chart.base_dim
    for a, fa in enumerate(chart.field_axes):
        Fa = F.get(fa, const(0))
        for mu in range(m):
            bmu = chart.base_axes[mu]
            parts = [diff(Fa, chart.symbols[bmu])]
            for b, fb in enumerate(chart.field_axes):
                dF = diff(Fa, chart.symbols[fb])
                if dF.terms:
                    parts.append(mul(chart.coord(chart.coords[chart.velocity_axis(b, mu)].name), dF))
            for nu in range(m):
                fnu = f.get(chart.base_axes[nu], const(0))
                dfn = diff(fnu, chart.symbols[bmu])
                if dfn.terms:
                    parts.append(
                        mul(const(-1), chart.coord(chart.coords[chart.velocity_axis(a, nu)].name), dfn)
                    )
            phi = add(*parts)
            if paper_sign:
                phi = mul(const(-1), phi)
            if phi.terms:
                comp[chart.velocity_axis(a, mu)] = phi
    return Multivector(chart, 1, factors=[comp])


def hamiltonian_lift(Y: Multivector) -> Multivector:
    """Canonical lift of a configuration vector field on a Hamiltonian
    chart to the momentum axes."""
    chart = Y.chart
    f, F, g = _config_components(Y)
    comp = dict(Y.factors[0])
    m = chart.base_dim
    for a, fa in enumerate(chart.field_axes):
        for mu in range(m):
            parts = []
            bmu = chart.base_axes[mu]
            fmu = f.get(bmu, const(0))
            for nu in range(m):
                bnu = chart.base_axes[nu]
                dfmu = diff(fmu, chart.symbols[bnu])
                if dfmu.terms:
                    p_nu_a = chart.coord(chart.coords[chart.momentum_axis(a, nu)].name)
                    parts.append(mul(dfmu, p_nu_a))
            div_f = add(
                *[
                    diff(f.get(chart.base_axes[nu], const(0)), chart.symbols[chart.base_axes[nu]])
                    for nu in range(m)
                ]
            )
            p_mu_a = chart.coord(chart.coords[chart.momentum_axis(a, mu)].name)
            if div_f.terms:
                parts.append(mul(const(-1), div_f, p_mu_a))
            for b, fb in enumerate(chart.field_axes):
                dF = diff(F.get(fb, const(0)), chart.symbols[fa])
                if dF.terms:
                    p_mu_b = chart.coord(chart.coords[chart.momentum_axis(b, mu)].name)
                    parts.append(mul(const(-1), dF, p_mu_b))
            comp_val = add(*parts) if parts else const(0)
            if comp_val.terms:
                comp[chart.momentum_axis(a, mu)] = comp_val
    return Multivector(chart, 1, factors=[comp])


# ---------------------------------------------------------------------------
# Classification.

STRONG_NOETHER = "strong-noether"
NOETHER = "noether"
NOT_NOETHER = "not-noether"


@dataclass
class SymmetryReport:
    candidate: Multivector
    classification: str
    sigma_invariant: bool
    lemma_consistent: bool  # strong implies sigma-invariant
    current: Form
    witnesses: list
    numerically_certified: bool

    def to_json(self) -> dict:
        return {
            "candidate": vector_to_text(self.candidate.factors[0], self.candidate.chart),
            "classification": self.classification,
            "sigma_invariant": self.sigma_invariant,
            "current": form_to_json(self.current),
            "witnesses": [
                {"index": list(idx), "coeff": to_text(c)} for idx, c in self.witnesses
            ],
            "numerically_certified": self.numerically_certified,
        }


def classify(Y: Multivector, system, seed: int = 0, tol: float = 1e-9) -> SymmetryReport:
    """Classify a vector field against the system's multicontact
    structure (Theta, omega) and record sigma-invariance."""
    if Y.chart != system.chart:
        raise SymmetryError("candidate lives on a different chart than the system")
    lt = lie_derivative(Y, system.theta)
    lw = lie_derivative(Y, system.omega)
    ls = lie_derivative(Y, system.sigma)
    zt = form_zero_check(lt, seed=seed, tol=tol)
    zw = form_zero_check(lw, seed=seed, tol=tol)
    zs = form_zero_check(ls, seed=seed, tol=tol)
    if zt is ZeroCheck.NONZERO:
        classification = NOT_NOETHER
    elif zw is ZeroCheck.NONZERO:
        classification = NOETHER
    else:
        classification = STRONG_NOETHER
    witnesses = []
    if classification == NOT_NOETHER:
        witnesses = form_witnesses(lt, seed=seed, tol=tol)
    sigma_invariant = zs is not ZeroCheck.NONZERO
    probing = ZeroCheck.PROBABLY_ZERO in (zt, zw, zs)
    return SymmetryReport(
        candidate=Y,
        classification=classification,
        sigma_invariant=sigma_invariant,
        lemma_consistent=(classification != STRONG_NOETHER) or sigma_invariant,
        current=contract(Y, system.theta),
        witnesses=witnesses,
        numerically_certified=probing,
    )


def noether_current(Y: Multivector, system) -> Form:
    """The dissipated (m-1)-form xi_Y = i_Y Theta attached to a
    symmetry candidate."""
    return contract(Y, system.theta)


def check_dissipative(xi: Form, family, sigma: Form, seed: int = 0, tol: float = 1e-9) -> CheckResult:
    """i_X bar_d xi = 0 over the whole family, free symbols symbolic."""
    X = family.multivector() if hasattr(family, "multivector") else family
    if xi.degree != X.degree - 1:
        raise SymmetryError(f"dissipative-form check needs degree {X.degree - 1}, got {xi.degree}")
    return check_form_zero(contract(X, bar_d(xi, sigma)), seed=seed, tol=tol)


def check_conserved(xi: Form, family, seed: int = 0, tol: float = 1e-9) -> CheckResult:
    """i_X d xi = 0 over the whole family, free symbols symbolic."""
    X = family.multivector() if hasattr(family, "multivector") else family
    if xi.degree != X.degree - 1:
        raise SymmetryError(f"conserved-form check needs degree {X.degree - 1}, got {xi.degree}")
    return check_form_zero(contract(X, ext_d(xi)), seed=seed, tol=tol)
