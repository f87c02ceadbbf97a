"""Exterior calculus on a coordinate chart.

Differential forms are degree-k antisymmetric coefficient tables keyed by
strictly increasing axis multi-indices, with the permutation sign always
absorbed into the coefficient.  Multivector fields are either a
decomposable wedge list of vector fields or an expanded table.

Contraction convention: i_{X_1 ^ ... ^ X_m} alpha = i_{X_m} ... i_{X_1} alpha,
i.e. X_1 fills the first argument slot.  The graded Lie derivative is
L_X = d i_X - (-1)^m i_X d.
"""
from __future__ import annotations

from typing import Mapping

from .charts import Chart
from .expr import (
    Expr,
    Symbol,
    ZeroCheck,
    add,
    const,
    diff,
    free_symbols,
    is_zero,
    mul,
    substitute,
    to_text,
    var,
    _coerce,
)

ZERO_E = const(0)


class FormError(Exception):
    pass


def _merge_sign(left: tuple, right: tuple):
    """Sign and merged index for wedging two increasing multi-indices;
    None if they overlap."""
    if set(left) & set(right):
        return None, ()
    inversions = 0
    for i in left:
        for j in right:
            if i > j:
                inversions += 1
    merged = tuple(sorted(left + right))
    return (-1) ** inversions, merged


class Form:
    """Differential k-form: mapping increasing multi-index -> coefficient."""

    __slots__ = ("chart", "degree", "table")

    def __init__(self, chart: Chart, degree: int, table: Mapping[tuple, Expr]):
        if degree < 0:
            raise FormError("negative form degree")
        clean = {}
        for idx, c in table.items():
            idx = tuple(idx)
            if len(idx) != degree or list(idx) != sorted(set(idx)):
                raise FormError(f"bad multi-index {idx} for degree {degree}")
            if any(not (0 <= i < chart.dim) for i in idx):
                raise FormError(f"axis out of range in {idx}")
            c = _coerce(c)
            if c.terms:
                clean[idx] = c
        self.chart = chart
        self.degree = degree
        self.table = clean

    @classmethod
    def zero(cls, chart: Chart, degree: int = 0) -> "Form":
        return cls(chart, degree, {})

    @classmethod
    def function(cls, chart: Chart, f) -> "Form":
        return cls(chart, 0, {(): _coerce(f)})

    def items(self):
        return sorted(self.table.items(), key=lambda kv: kv[0])

    def coeff(self, *axes) -> Expr:
        return self.table.get(tuple(axes), ZERO_E)

    def __eq__(self, other):
        return (
            isinstance(other, Form)
            and other.chart == self.chart
            and other.degree == self.degree
            and other.table == self.table
        )

    def __hash__(self):
        return hash((self.chart, self.degree, tuple(self.items())))

    def __add__(self, other):
        if not isinstance(other, Form):
            return NotImplemented
        if other.chart != self.chart or other.degree != self.degree:
            raise FormError("cannot add forms of different charts or degrees")
        out = dict(self.table)
        for idx, c in other.table.items():
            out[idx] = add(out.get(idx, ZERO_E), c)
        return Form(self.chart, self.degree, out)

    def __neg__(self):
        return self.scale(-1)

    def __sub__(self, other):
        return self + (-other)

    def scale(self, f) -> "Form":
        f = _coerce(f)
        return Form(self.chart, self.degree, {i: mul(f, c) for i, c in self.table.items()})

    def is_structurally_zero(self) -> bool:
        return not self.table

    def __repr__(self):
        return f"Form({form_to_text(self)})"


def one_form(chart: Chart, name: str) -> Form:
    """The coordinate differential d<name>."""
    return Form(chart, 1, {(chart.axis(name),): const(1)})


def volume_form(chart: Chart) -> Form:
    """omega = dx^1 ^ ... ^ dx^m over the base axes."""
    axes = chart.base_axes
    if len(axes) != chart.base_dim:
        raise FormError("chart has no full set of base axes")
    return Form(chart, chart.base_dim, {tuple(axes): const(1)})


def wedge(a: Form, b: Form) -> Form:
    if a.chart != b.chart:
        raise FormError("wedge of forms on different charts")
    k = a.degree + b.degree
    if k > a.chart.dim:
        return Form.zero(a.chart, k)
    out: dict = {}
    for ia, ca in a.table.items():
        for ib, cb in b.table.items():
            sign, merged = _merge_sign(ia, ib)
            if sign is None:
                continue
            term = mul(const(sign), ca, cb)
            out[merged] = add(out.get(merged, ZERO_E), term)
    return Form(a.chart, k, out)


def wedge_all(*forms: Form) -> Form:
    it = iter(forms)
    acc = next(it)
    for f in it:
        acc = wedge(acc, f)
    return acc


def ext_d(a: Form) -> Form:
    """Coordinate exterior derivative."""
    chart = a.chart
    if a.degree >= chart.dim:
        return Form.zero(chart, a.degree + 1)
    out: dict = {}
    for idx, c in a.table.items():
        for i, s in enumerate(chart.symbols):
            if i in idx:
                continue
            dc = diff(c, s)
            if not dc.terms:
                continue
            below = sum(1 for j in idx if j < i)
            merged = tuple(sorted(idx + (i,)))
            term = mul(const((-1) ** below), dc)
            out[merged] = add(out.get(merged, ZERO_E), term)
    return Form(chart, a.degree + 1, out)


# ---------------------------------------------------------------------------
# Multivector fields.


class Multivector:
    """Degree-m multivector field: a decomposable wedge list of vector
    fields, or an expanded antisymmetric table."""

    __slots__ = ("chart", "degree", "factors", "_table")

    def __init__(self, chart: Chart, degree: int, factors=None, table=None):
        if degree < 1 or degree > chart.dim:
            raise FormError(f"multivector degree {degree} out of range")
        self.chart = chart
        self.degree = degree
        if factors is not None:
            factors = tuple({i: _coerce(c) for i, c in f.items() if _coerce(c).terms} for f in factors)
            if len(factors) != degree:
                raise FormError("factor count does not match degree")
            self.factors = factors
            self._table = None
        elif table is not None:
            clean = {}
            for idx, c in table.items():
                idx = tuple(idx)
                if len(idx) != degree or list(idx) != sorted(set(idx)):
                    raise FormError(f"bad multivector index {idx}")
                c = _coerce(c)
                if c.terms:
                    clean[idx] = c
            self.factors = None
            self._table = clean
            if degree == 1:
                # a degree-1 table is a vector field, hence decomposable
                self.factors = ({i[0]: c for i, c in clean.items()},)
        else:
            raise FormError("need factors or table")

    @classmethod
    def vector(cls, chart: Chart, components: Mapping[str, object]) -> "Multivector":
        return cls(chart, 1, factors=[{chart.axis(n): _coerce(c) for n, c in components.items()}])

    @classmethod
    def wedge_of(cls, *vectors: "Multivector") -> "Multivector":
        factors = []
        chart = vectors[0].chart
        for v in vectors:
            if v.chart != chart:
                raise FormError("wedge of multivectors on different charts")
            if not v.decomposable:
                raise FormError("wedge_of needs decomposable inputs")
            factors.extend(v.factors)
        return cls(chart, len(factors), factors=list(factors))

    @property
    def decomposable(self) -> bool:
        return self.factors is not None

    def component(self, factor: int, name: str) -> Expr:
        if not self.decomposable:
            raise FormError("component access needs a decomposable multivector")
        return self.factors[factor].get(self.chart.axis(name), ZERO_E)

    def table(self) -> dict:
        if self._table is None:
            self._table = _expand_factors(self.chart, self.factors)
        return self._table

    def __eq__(self, other):
        return (
            isinstance(other, Multivector)
            and other.chart == self.chart
            and other.degree == self.degree
            and other.table() == self.table()
        )

    def __hash__(self):
        return hash((self.chart, self.degree, tuple(sorted(self.table().items()))))

    def __add__(self, other):
        if not isinstance(other, Multivector):
            return NotImplemented
        if other.chart != self.chart or other.degree != self.degree:
            raise FormError("cannot add multivectors of different charts or degrees")
        out = dict(self.table())
        for idx, c in other.table().items():
            out[idx] = add(out.get(idx, ZERO_E), c)
        return Multivector(self.chart, self.degree, table=out)

    def scale(self, f) -> "Multivector":
        f = _coerce(f)
        return Multivector(self.chart, self.degree, table={i: mul(f, c) for i, c in self.table().items()})

    def __neg__(self):
        return self.scale(-1)

    def __sub__(self, other):
        return self + (-other)

    def is_structurally_zero(self) -> bool:
        return not self.table()

    def __repr__(self):
        return f"Multivector({multivector_to_text(self)})"


def _det(rows: list) -> Expr:
    n = len(rows)
    if n == 1:
        return rows[0][0]
    parts = []
    for j in range(n):
        c = rows[0][j]
        if not c.terms:
            continue
        minor = [r[:j] + r[j + 1 :] for r in rows[1:]]
        parts.append(mul(const((-1) ** j), c, _det(minor)))
    return add(*parts) if parts else ZERO_E


def _expand_factors(chart: Chart, factors) -> dict:
    from itertools import combinations

    axes_used = sorted({i for f in factors for i in f})
    m = len(factors)
    out = {}
    for idx in combinations(axes_used, m):
        rows = [[f.get(i, ZERO_E) for i in idx] for f in factors]
        c = _det(rows)
        if c.terms:
            out[idx] = c
    return out


def _contract_vector(v: Mapping[int, Expr], a: Form) -> Form:
    if a.degree == 0:
        return Form.zero(a.chart, 0)
    out: dict = {}
    for idx, c in a.table.items():
        for pos, axis in enumerate(idx):
            comp = v.get(axis)
            if comp is None or not comp.terms:
                continue
            rest = idx[:pos] + idx[pos + 1 :]
            term = mul(const((-1) ** pos), comp, c)
            out[rest] = add(out.get(rest, ZERO_E), term)
    return Form(a.chart, a.degree - 1, out)


def contract(X: Multivector, a: Form) -> Form:
    """Interior product i_X a; zero when deg a < deg X."""
    if X.chart != a.chart:
        raise FormError("contraction across different charts")
    if a.degree < X.degree:
        return Form.zero(a.chart, 0)
    if X.decomposable:
        out = a
        for f in X.factors:  # X_1 fills the first slot
            out = _contract_vector(f, out)
        return out
    out: dict = {}
    for I, cX in X.table().items():
        for J, cA in a.table.items():
            if not set(I) <= set(J):
                continue
            sign = 1
            remaining = list(J)
            for i in I:
                p = remaining.index(i)
                sign *= (-1) ** p
                remaining.remove(i)
            term = mul(const(sign), cX, cA)
            key = tuple(remaining)
            out[key] = add(out.get(key, ZERO_E), term)
    return Form(a.chart, a.degree - X.degree, out)


def lie_derivative(X: Multivector, a: Form) -> Form:
    """Graded Lie derivative L_X a = d i_X a - (-1)^m i_X d a."""
    m = X.degree
    left = ext_d(contract(X, a))
    right = contract(X, ext_d(a)).scale(-((-1) ** m))
    # degrees: both are a.degree - m + 1 when defined; guard the edge where
    # contraction collapsed to a zero 0-form of mismatched degree
    if left.is_structurally_zero() and left.degree != right.degree:
        left = Form.zero(a.chart, right.degree)
    if right.is_structurally_zero() and right.degree != left.degree:
        right = Form.zero(a.chart, left.degree)
    return left + right


def lie_bracket(X: Multivector, Y: Multivector) -> Multivector:
    """Lie bracket of two vector fields."""
    if X.degree != 1 or Y.degree != 1:
        raise FormError("lie_bracket needs vector fields")
    chart = X.chart
    xf, yf = X.factors[0], Y.factors[0]
    out: dict = {}
    for k in range(chart.dim):
        parts = []
        for i, xi in xf.items():
            yk = yf.get(k)
            if yk is not None:
                parts.append(mul(xi, diff(yk, chart.symbols[i])))
        for i, yi in yf.items():
            xk = xf.get(k)
            if xk is not None:
                parts.append(mul(const(-1), yi, diff(xk, chart.symbols[i])))
        c = add(*parts) if parts else ZERO_E
        if c.terms:
            out[k] = c
    return Multivector(chart, 1, factors=[out])


def schouten(X: Multivector, Y: Multivector) -> Multivector:
    """Schouten-Nijenhuis bracket via the decomposable formula, extended
    bilinearly.  Inputs must be decomposable."""
    if X.chart != Y.chart:
        raise FormError("bracket across different charts")
    if not X.decomposable or not Y.decomposable:
        raise FormError("schouten bracket needs decomposable multivector fields")
    chart = X.chart
    m, n = X.degree, Y.degree
    deg = m + n - 1
    acc: dict = {}
    for i in range(m):
        Xi = Multivector(chart, 1, factors=[X.factors[i]])
        for j in range(n):
            Yj = Multivector(chart, 1, factors=[Y.factors[j]])
            b = lie_bracket(Xi, Yj)
            if b.is_structurally_zero():
                continue
            rest = (
                [b.factors[0]]
                + [X.factors[r] for r in range(m) if r != i]
                + [Y.factors[r] for r in range(n) if r != j]
            )
            sign = (-1) ** ((i + 1) + (j + 1))
            piece = _expand_factors(chart, rest)
            for idx, c in piece.items():
                acc[idx] = add(acc.get(idx, ZERO_E), mul(const(sign), c))
    return Multivector(chart, deg, table=acc)


def bar_d(a: Form, sigma: Form) -> Form:
    """The sigma-twisted derivative: d a + sigma ^ a."""
    if sigma.degree != 1:
        raise FormError("dissipation form must have degree 1")
    return ext_d(a) + wedge(sigma, a)


# ---------------------------------------------------------------------------
# Pullbacks.


class SectionMap:
    """A section of the bundle over the base coordinates.

    Components are expressions in the base coordinates; any non-base,
    non-parameter symbol appearing in them is treated as an opaque
    function of the base, whose partial derivatives become fresh
    placeholder symbols named ``D[<name>,<base>]``.  For holonomic
    sections the field placeholders are bound to the section's velocity
    components automatically.
    """

    def __init__(self, chart: Chart, components: Mapping[str, object], holonomic: bool = False):
        self.chart = chart
        comp = {}
        for i, c in enumerate(chart.coords):
            if c.role == "base":
                comp[i] = var(c.name, "base", i)
        for name, e in components.items():
            comp[chart.axis(name)] = _coerce(e)
        missing = [c.name for i, c in enumerate(chart.coords) if i not in comp]
        if missing:
            raise FormError(f"section leaves coordinates unassigned: {missing}")
        for i, c in enumerate(chart.coords):
            if c.role == "base" and comp[i] != var(c.name, "base", i):
                raise FormError(f"base coordinate {c.name} must map to itself")
        self.components = comp
        self.holonomic = holonomic

    @classmethod
    def symbolic_holonomic(cls, chart: Chart, field_names: Mapping[str, str] | None = None) -> "SectionMap":
        """Generic holonomic section: each field is an opaque function
        symbol, velocities are its derivative placeholders, actions are
        opaque symbols."""
        comp: dict = {}
        for c in chart.coords:
            if c.role == "field":
                comp[c.name] = var(c.name, "aux")
            elif c.role == "action":
                comp[c.name] = var(c.name, "aux")
        for i, c in enumerate(chart.coords):
            if c.role == "velocity":
                fname = chart.coords[chart.field_axes[c.field]].name
                bname = chart.coords[chart.base_axes[c.base]].name
                comp[c.name] = var(f"D[{fname},{bname}]", "aux")
        return cls(chart, comp, holonomic=True)


def d_placeholder(name: str, base: str) -> Expr:
    return var(f"D[{name},{base}]", "aux")


def _section_differential(e: Expr, chart: Chart) -> list:
    """d(e) along the base: list of coefficient exprs per base axis."""
    base_syms = [chart.symbols[i] for i in chart.base_axes]
    base_names = {s.name for s in base_syms}
    out = []
    for mu, bs in enumerate(base_syms):
        parts = [diff(e, bs)]
        for s in sorted(free_symbols(e), key=lambda s: s.key):
            if s.name in base_names or s.role == "param":
                continue
            de = diff(e, s)
            if de.terms:
                parts.append(mul(de, d_placeholder(s.name, bs.name)))
        out.append(add(*parts))
    return out


def pullback(section: SectionMap, a: Form) -> Form:
    """Pull a form back along a section of the bundle over the base."""
    chart = section.chart
    if a.chart != chart:
        raise FormError("form does not live on the section's target chart")
    base = base_chart_of(chart)
    subs = {chart.symbols[i]: e for i, e in section.components.items()}
    diffs = {}
    for i in range(chart.dim):
        coeffs = _section_differential(section.components[i], chart)
        diffs[i] = Form(base, 1, {(mu,): c for mu, c in enumerate(coeffs)})
    out = Form.zero(base, a.degree)
    for idx, c in a.table.items():
        term = Form.function(base, substitute(c, subs))
        for i in idx:
            term = wedge(term, diffs[i])
        out = out + term
    if section.holonomic:
        binds = {}
        for i, c in enumerate(chart.coords):
            if c.role == "velocity":
                fname = chart.coords[chart.field_axes[c.field]].name
                bname = chart.coords[chart.base_axes[c.base]].name
                binds[Symbol(f"D[{fname},{bname}]", "aux")] = section.components[i]
        out = Form(base, out.degree, {i: substitute(cc, binds) for i, cc in out.table.items()})
    return out


_BASE_CACHE: dict = {}


def base_chart_of(chart: Chart) -> Chart:
    key = chart
    if key not in _BASE_CACHE:
        from .charts import base_chart

        _BASE_CACHE[key] = base_chart(chart)
    return _BASE_CACHE[key]


def pullback_along(mapping: Mapping[str, object], a: Form, source: Chart) -> Form:
    """Pull back a form along a smooth map source -> a.chart given by
    closed-form target-coordinate expressions over the source chart."""
    target = a.chart
    comp = {}
    for i, c in enumerate(target.coords):
        if c.name not in mapping:
            raise FormError(f"map misses target coordinate {c.name}")
        comp[i] = _coerce(mapping[c.name])
    allowed = {s.name for s in source.symbols}
    for i, e in comp.items():
        for s in free_symbols(e):
            if s.name not in allowed and s.role != "param":
                raise FormError(f"map component for {target.coords[i].name} uses foreign symbol {s.name}")
    subs = {target.symbols[i]: e for i, e in comp.items()}
    diffs = {
        i: Form(source, 1, {(j,): d for j, d in ((j, diff(e, source.symbols[j])) for j in range(source.dim)) if d.terms})
        for i, e in comp.items()
    }
    out = Form.zero(source, a.degree)
    for idx, c in a.table.items():
        term = Form.function(source, substitute(c, subs))
        for i in idx:
            term = wedge(term, diffs[i])
        out = out + term
    return out


# ---------------------------------------------------------------------------
# Zero checks and rendering.


def form_zero_check(a: Form, seed: int = 0, tol: float = 1e-9) -> ZeroCheck:
    worst = ZeroCheck.ZERO
    for _, c in a.items():
        z = is_zero(c, seed=seed, tol=tol)
        if z is ZeroCheck.NONZERO:
            return ZeroCheck.NONZERO
        if z is ZeroCheck.PROBABLY_ZERO:
            worst = ZeroCheck.PROBABLY_ZERO
    return worst


def form_witnesses(a: Form, seed: int = 0, tol: float = 1e-9) -> list:
    """Nonzero coefficients as (coordinate-name tuple, Expr) pairs."""
    out = []
    for idx, c in a.items():
        if is_zero(c, seed=seed, tol=tol) is ZeroCheck.NONZERO:
            out.append((tuple(a.chart.coords[i].name for i in idx), c))
    return out


def form_to_text(a: Form, name_map=None) -> str:
    if not a.table:
        return "0"
    chunks = []
    for idx, c in a.items():
        dxs = "^".join(f"d{name_map(a.chart.coords[i].name) if name_map else a.chart.coords[i].name}" for i in idx)
        if a.degree == 0:
            chunks.append(to_text(c, name_map))
            continue
        if len(c.terms) == 1:
            s = to_text(c, name_map)
            if s == "1":
                chunks.append(dxs)
            elif s == "-1":
                chunks.append(f"-{dxs}")
            else:
                chunks.append(f"{s} {dxs}")
        else:
            chunks.append(f"({to_text(c, name_map)}) {dxs}")
    out = chunks[0]
    for ch in chunks[1:]:
        out += f" - {ch[1:]}" if ch.startswith("-") else f" + {ch}"
    return out


def form_to_json(a: Form, name_map=None) -> dict:
    return {
        "degree": a.degree,
        "terms": [
            {
                "index": [name_map(a.chart.coords[i].name) if name_map else a.chart.coords[i].name for i in idx],
                "coeff": to_text(c, name_map),
            }
            for idx, c in a.items()
        ],
    }


def vector_to_text(v: Mapping[int, Expr], chart: Chart, name_map=None) -> str:
    parts = []
    for i in sorted(v):
        c = v[i]
        if not c.terms:
            continue
        dn = f"d/d{name_map(chart.coords[i].name) if name_map else chart.coords[i].name}"
        s = to_text(c, name_map)
        if s == "1":
            parts.append(dn)
        elif s == "-1":
            parts.append(f"-{dn}")
        elif len(c.terms) == 1:
            parts.append(f"{s} {dn}")
        else:
            parts.append(f"({s}) {dn}")
    if not parts:
        return "0"
    out = parts[0]
    for p in parts[1:]:
        out += f" - {p[1:]}" if p.startswith("-") else f" + {p}"
    return out


def multivector_to_text(X: Multivector, name_map=None) -> str:
    if X.decomposable:
        if X.degree == 1:
            return vector_to_text(X.factors[0], X.chart, name_map)
        return " ^ ".join(f"({vector_to_text(f, X.chart, name_map)})" for f in X.factors)
    chunks = []
    for idx, c in sorted(X.table().items()):
        dns = "^".join(f"d/d{X.chart.coords[i].name}" for i in idx)
        chunks.append(f"({to_text(c, name_map)}) {dns}")
    return " + ".join(chunks) if chunks else "0"
