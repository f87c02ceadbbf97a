"""Exact symbolic scalar kernel.

Expressions are held in a canonical expanded normal form at all times: a
sum of monomials with rational coefficients, each monomial a product of
integer powers of *atoms*.  An atom is a symbol, an elementary function
application (sin/cos/exp) with a canonical argument, or an inverted
multi-term sum (sums are only ever atomized with negative exponents;
positive powers of sums are always expanded).

Consequences baked into this representation:

* structural equality of canonical forms decides equality for
  polynomial expressions and for rational expressions whose
  denominators are monomials;
* ``is_zero`` falls back to randomized numeric probing when function
  atoms or inverted-sum atoms are present, reporting ``PROBABLY_ZERO``
  instead of a proven ``ZERO``.

There is deliberately no simplification beyond canonicalization: no
factoring, no trigonometric rewriting.
"""
from __future__ import annotations

import math
import random
from fractions import Fraction
from enum import Enum
from typing import Callable, Mapping, Union

__all__ = [
    "ExprError",
    "EvalError",
    "Symbol",
    "Expr",
    "ZeroCheck",
    "var",
    "sym",
    "const",
    "add",
    "mul",
    "pow_",
    "sin",
    "cos",
    "exp",
    "diff",
    "substitute",
    "evaluate",
    "canon",
    "is_zero",
    "free_symbols",
    "div_exact",
    "to_text",
]


class ExprError(Exception):
    pass


class EvalError(ExprError):
    pass


# Role ranks give the canonical symbol ordering: parameters print first
# in monomials, then coordinates in chart order, then derived symbols.
ROLE_RANK = {
    "param": 0,
    "base": 1,
    "field": 2,
    "velocity": 3,
    "momentum": 4,
    "action": 5,
    "aux": 6,
    "generic": 7,
}


class Symbol:
    """A named scalar symbol.

    Identity is the full (name, role, order) tuple; ``role`` and
    ``order`` determine the canonical sort position.  Symbols should be
    obtained from their owning chart or parameter declaration so that
    one name always carries one identity.  Substitution and numeric
    bindings match symbols by name.
    """

    __slots__ = ("name", "role", "order", "key")

    def __init__(self, name: str, role: str = "generic", order: int = 0):
        if role not in ROLE_RANK:
            raise ExprError(f"unknown symbol role {role!r}")
        if not name:
            raise ExprError("empty symbol name")
        self.name = name
        self.role = role
        self.order = order
        self.key = (0, ROLE_RANK[role], order, name)

    def __eq__(self, other):
        return isinstance(other, Symbol) and other.key == self.key

    def __hash__(self):
        return hash(self.key)

    def __repr__(self):
        return f"Symbol({self.name!r})"


class FuncAtom:
    """Elementary function application, opaque to canonicalization."""

    __slots__ = ("fn", "arg", "key")

    def __init__(self, fn: str, arg: "Expr"):
        self.fn = fn
        self.arg = arg
        self.key = (1, fn, arg.key)

    def __eq__(self, other):
        return isinstance(other, FuncAtom) and self.key == other.key

    def __hash__(self):
        return hash(self.key)

    def __repr__(self):
        return f"{self.fn}({self.arg!r})"


class SumAtom:
    """A multi-term sum held atomically; only stored with negative exponents.

    The inner expression is normalized to leading coefficient 1 so that
    rescaled denominators canonicalize identically.
    """

    __slots__ = ("expr", "key")

    def __init__(self, expr: "Expr"):
        self.expr = expr
        self.key = (2, expr.key)

    def __eq__(self, other):
        return isinstance(other, SumAtom) and self.key == other.key

    def __hash__(self):
        return hash(self.key)

    def __repr__(self):
        return f"({self.expr!r})"


Atom = Union[Symbol, FuncAtom, SumAtom]
# A monomial is a tuple of (atom, exponent) pairs sorted by atom key,
# exponents nonzero, SumAtom exponents strictly negative.
Monomial = tuple


class Expr:
    """Immutable canonical expression: tuple of (monomial, coefficient)."""

    __slots__ = ("terms", "key", "_hash")

    def __init__(self, terms):
        self.terms = terms
        self.key = tuple(
            (tuple((a.key, k) for a, k in m), (c.numerator, c.denominator)) for m, c in terms
        )
        self._hash = None

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(self.key)
        return self._hash

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            other = const(other)
        return isinstance(other, Expr) and self.key == other.key

    # -- python operator sugar -------------------------------------------
    def __add__(self, other):
        return add(self, _coerce(other))

    __radd__ = __add__

    def __neg__(self):
        return mul(const(-1), self)

    def __sub__(self, other):
        return add(self, -_coerce(other))

    def __rsub__(self, other):
        return add(_coerce(other), -self)

    def __mul__(self, other):
        return mul(self, _coerce(other))

    __rmul__ = __mul__

    def __truediv__(self, other):
        return mul(self, pow_(_coerce(other), -1))

    def __rtruediv__(self, other):
        return mul(_coerce(other), pow_(self, -1))

    def __pow__(self, k):
        return pow_(self, k)

    def __bool__(self):
        return bool(self.terms)

    def __str__(self):
        return to_text(self)

    def __repr__(self):
        return f"Expr({to_text(self)})"

    @property
    def is_rational(self) -> bool:
        return not self.terms or (len(self.terms) == 1 and self.terms[0][0] == ())

    def as_rational(self) -> Fraction:
        if not self.terms:
            return Fraction(0)
        if self.is_rational:
            return self.terms[0][1]
        raise ExprError(f"not a constant: {self}")

    @property
    def single_symbol(self) -> Symbol:
        """The symbol of a bare-symbol expression (errors otherwise)."""
        if len(self.terms) == 1:
            mono, c = self.terms[0]
            if c == 1 and len(mono) == 1 and mono[0][1] == 1 and isinstance(mono[0][0], Symbol):
                return mono[0][0]
        raise ExprError(f"not a bare symbol: {self}")


ZERO = Expr(())
ONE = Expr((((), Fraction(1)),))


def _coerce(x) -> Expr:
    if isinstance(x, Expr):
        return x
    if isinstance(x, (int, Fraction)):
        return const(x)
    if isinstance(x, Symbol):
        return Expr((((((x, 1),)), Fraction(1)),))
    raise ExprError(f"cannot coerce {x!r} to Expr")


def const(c) -> Expr:
    c = Fraction(c)
    if c == 0:
        return ZERO
    return Expr((((), c),))


def var(name: str, role: str = "generic", order: int = 0) -> Expr:
    return _coerce(Symbol(name, role, order))


def sym(name: str, role: str = "generic", order: int = 0) -> Symbol:
    return Symbol(name, role, order)


def _from_dict(d: dict) -> Expr:
    items = [(m, c) for m, c in d.items() if c != 0]
    items.sort(key=lambda mc: _mono_key(mc[0]))
    return Expr(tuple(items))


def _mono_key(mono: Monomial):
    return tuple((a.key, k) for a, k in mono)


def add(*exprs) -> Expr:
    acc: dict = {}
    for e in exprs:
        for mono, c in _coerce(e).terms:
            nc = acc.get(mono, _F0) + c
            if nc:
                acc[mono] = nc
            elif mono in acc:
                del acc[mono]
    return _from_dict(acc)


_F0 = Fraction(0)


def _merge_factors(m1: Monomial, m2: Monomial) -> dict:
    f: dict = {}
    for a, k in m1:
        f[a] = f.get(a, 0) + k
    for a, k in m2:
        f[a] = f.get(a, 0) + k
    return f


def _expr_from_factors(coeff: Fraction, factors: dict) -> Expr:
    """Build a canonical Expr from a factor multiset, expanding any
    positive powers of sum atoms."""
    plain = []
    expand = []
    for a, k in factors.items():
        if k == 0:
            continue
        if isinstance(a, SumAtom) and k > 0:
            expand.append((a, k))
        else:
            plain.append((a, k))
    plain.sort(key=lambda ak: ak[0].key)
    out = Expr(((tuple(plain), coeff),)) if coeff else ZERO
    for a, k in expand:
        out = mul(out, pow_(a.expr, k))
    return out


def mul(*exprs) -> Expr:
    out = ONE
    for e in exprs:
        e = _coerce(e)
        if not out.terms or not e.terms:
            return ZERO
        acc: dict = {}
        pending = []
        for m1, c1 in out.terms:
            for m2, c2 in e.terms:
                factors = _merge_factors(m1, m2)
                if any(isinstance(a, SumAtom) and k > 0 for a, k in factors.items()):
                    pending.append(_expr_from_factors(c1 * c2, factors))
                    continue
                mono = tuple(sorted(((a, k) for a, k in factors.items() if k), key=lambda ak: ak[0].key))
                nc = acc.get(mono, _F0) + c1 * c2
                if nc:
                    acc[mono] = nc
                elif mono in acc:
                    del acc[mono]
        out = _from_dict(acc)
        if pending:
            out = add(out, *pending)
    return out


def _sum_atom_pow(e: Expr, k: int) -> Expr:
    """Atomize a multi-term sum with a negative exponent, extracting the
    leading coefficient so that scaled sums share one atom."""
    lead = e.terms[0][1]
    inner = mul(const(1 / lead), e) if lead != 1 else e
    atom = SumAtom(inner)
    return Expr(((((atom, k),), lead ** k),))


def pow_(e, k: int) -> Expr:
    e = _coerce(e)
    if not isinstance(k, int):
        raise ExprError("only integer exponents are supported")
    if k == 0:
        return ONE
    if not e.terms:
        if k < 0:
            raise ExprError("division by zero expression")
        return ZERO
    if len(e.terms) == 1:
        mono, c = e.terms[0]
        factors = {a: kk * k for a, kk in mono}
        return _expr_from_factors(c ** k, factors)
    if k > 0:
        out = ONE
        base = e
        n = k
        while n:
            if n & 1:
                out = mul(out, base)
            n >>= 1
            if n:
                base = mul(base, base)
        return out
    return _sum_atom_pow(e, k)


def _func(fn: str, arg) -> Expr:
    arg = _coerce(arg)
    return Expr(((((FuncAtom(fn, arg), 1),), Fraction(1)),))


def sin(arg) -> Expr:
    return _func("sin", arg)


def cos(arg) -> Expr:
    return _func("cos", arg)


def exp(arg) -> Expr:
    return _func("exp", arg)


_FUNC_EVAL: dict = {"sin": math.sin, "cos": math.cos, "exp": math.exp}
_FUNC_DIFF: dict = {
    "sin": lambda u: cos(u),
    "cos": lambda u: -sin(u),
    "exp": lambda u: exp(u),
}


def _atom_diff(atom: Atom, s: Symbol) -> Expr:
    if isinstance(atom, Symbol):
        return ONE if atom == s else ZERO
    if isinstance(atom, FuncAtom):
        inner = diff(atom.arg, s)
        if not inner.terms:
            return ZERO
        return mul(_FUNC_DIFF[atom.fn](atom.arg), inner)
    return diff(atom.expr, s)


def diff(e, v) -> Expr:
    """Exact partial derivative; symbols other than ``v`` are independent."""
    e = _coerce(e)
    s = v if isinstance(v, Symbol) else _coerce(v).single_symbol
    parts = []
    for mono, c in e.terms:
        for i, (a, k) in enumerate(mono):
            da = _atom_diff(a, s)
            if not da.terms:
                continue
            rest = {b: kk for b, kk in mono}
            rest[a] = k - 1
            parts.append(mul(_expr_from_factors(c * k, rest), da))
    return add(*parts) if parts else ZERO


def _atom_subst(atom: Atom, m: dict) -> Expr:
    if isinstance(atom, Symbol):
        hit = m.get(atom.name)
        return hit if hit is not None else _coerce(atom)
    if isinstance(atom, FuncAtom):
        return _func(atom.fn, substitute(atom.arg, m, _normalized=True))
    return substitute(atom.expr, m, _normalized=True)


def substitute(e, mapping: Mapping, _normalized: bool = False) -> Expr:
    """Simultaneous substitution symbol -> Expr, then canonicalization."""
    e = _coerce(e)
    if not _normalized:
        m = {}
        for k, v in mapping.items():
            name = k.name if isinstance(k, Symbol) else _coerce(k).single_symbol.name
            m[name] = _coerce(v)
    else:
        m = mapping  # already name -> Expr
    if not m:
        return e
    parts = []
    for mono, c in e.terms:
        acc = const(c)
        for a, k in mono:
            acc = mul(acc, pow_(_atom_subst(a, m), k))
            if not acc.terms:
                break
        parts.append(acc)
    return add(*parts) if parts else ZERO


class _Resample(Exception):
    pass


def _atom_eval(atom: Atom, b: Mapping[str, float], guard: float) -> float:
    if isinstance(atom, Symbol):
        try:
            return float(b[atom.name])
        except KeyError:
            raise EvalError(f"unbound symbol {atom.name!r}") from None
    if isinstance(atom, FuncAtom):
        return _FUNC_EVAL[atom.fn](evaluate(atom.arg, b, _guard=guard))
    return evaluate(atom.expr, b, _guard=guard)


def evaluate(e, bindings: Mapping[str, float], _guard: float = 0.0) -> float:
    """IEEE double evaluation; every free symbol must be bound."""
    e = _coerce(e)
    total = 0.0
    for mono, c in e.terms:
        v = float(c)
        for a, k in mono:
            base = _atom_eval(a, bindings, _guard)
            if k < 0:
                if base == 0.0:
                    raise EvalError(f"domain error: zero base raised to {k}")
                if _guard and abs(base) < _guard:
                    raise _Resample()
            v *= base ** k
        total += v
    if math.isinf(total) or math.isnan(total):
        raise EvalError("non-finite value in evaluation")
    return total


def canon(e) -> Expr:
    """Re-canonicalize (identity on canonical input; used by property tests)."""
    return substitute(_coerce(e), {})


def free_symbols(e) -> set:
    out: set = set()

    def walk(x: Expr):
        for mono, _ in x.terms:
            for a, _k in mono:
                if isinstance(a, Symbol):
                    out.add(a)
                elif isinstance(a, FuncAtom):
                    walk(a.arg)
                else:
                    walk(a.expr)

    walk(_coerce(e))
    return out


def _needs_probing(e: Expr) -> bool:
    def walk(x: Expr) -> bool:
        for mono, _ in x.terms:
            for a, _k in mono:
                if isinstance(a, FuncAtom) or isinstance(a, SumAtom):
                    return True
        return False

    return walk(e)


class ZeroCheck(Enum):
    ZERO = "zero"
    PROBABLY_ZERO = "probably-zero"
    NONZERO = "nonzero"

    def __bool__(self):
        return self is not ZeroCheck.NONZERO


def is_zero(e, seed: int = 0, tol: float = 1e-9, samples: int = 16) -> ZeroCheck:
    """Trichotomous zero test.

    Canonical form decides polynomial and monomial-denominator cases
    exactly; function-bearing (or inverted-sum) expressions are probed at
    ``samples`` random points per symbol range [-2, 2].
    """
    e = _coerce(e)
    if not e.terms:
        return ZeroCheck.ZERO
    if not _needs_probing(e):
        return ZeroCheck.NONZERO
    rng = random.Random(seed)
    syms = sorted(free_symbols(e), key=lambda s: s.key)
    done = 0
    attempts = 0
    while done < samples:
        attempts += 1
        if attempts > 100 * samples:
            raise ExprError(f"probing failed to find well-conditioned points for {e}")
        b = {s.name: rng.uniform(-2.0, 2.0) for s in syms}
        try:
            v = evaluate(e, b, _guard=1e-3)
        except (_Resample, EvalError):
            continue
        if abs(v) > tol:
            return ZeroCheck.NONZERO
        done += 1
    return ZeroCheck.PROBABLY_ZERO


# ---------------------------------------------------------------------------
# Exact division (used by the linear solver and the Legendre inversion).


def div_exact(num, den) -> Expr:
    """Divide ``num`` by ``den`` exactly.

    Monomial divisors multiply through by the inverse monomial.  For
    multi-term divisors, multivariate long division is attempted; if it
    does not terminate with remainder zero the quotient falls back to an
    inverted-sum atom (still exact, but opaque to canonical zero tests).
    """
    num = _coerce(num)
    den = _coerce(den)
    if not den.terms:
        raise ExprError("division by zero expression")
    if len(den.terms) == 1:
        return mul(num, pow_(den, -1))
    quo = _poly_div(num, den)
    if quo is not None:
        return quo
    return mul(num, _sum_atom_pow(den, -1))


def _mono_divides(da: Monomial, na: Monomial) -> bool:
    nd = dict(na)
    for a, k in da:
        if nd.get(a, 0) < k:
            return False
    return True


def _mono_quot(na: Monomial, da: Monomial):
    f = dict(na)
    for a, k in da:
        f[a] = f.get(a, 0) - k
    return tuple(sorted(((a, k) for a, k in f.items() if k), key=lambda ak: ak[0].key))


def _poly_div(num: Expr, den: Expr):
    # Requires honest polynomials (no negative exponents, no atomized sums).
    for e in (num, den):
        for mono, _ in e.terms:
            if any(k < 0 or isinstance(a, SumAtom) for a, k in mono):
                return None

    atoms = sorted(
        {a for e in (num, den) for mono, _ in e.terms for a, _k in mono},
        key=lambda a: a.key,
        reverse=True,
    )
    pos = {a: i for i, a in enumerate(atoms)}

    def glex(mono: Monomial):
        # Graded-lex key over full exponent vectors: a proper
        # (multiplicative, well-founded) monomial order, unlike the
        # structural canonical key.
        vec = [0] * len(atoms)
        for a, k in mono:
            vec[pos[a]] = k
        return (sum(k for _, k in mono), tuple(vec))

    lead_mono, lead_c = max(den.terms, key=lambda mc: glex(mc[0]))
    rem = num
    quo: dict = {}
    for _ in range(len(num.terms) * 8 + 32):
        if not rem.terms:
            return _from_dict(quo)
        rm, rc = max(rem.terms, key=lambda mc: glex(mc[0]))
        if not _mono_divides(lead_mono, rm):
            return None
        qm = _mono_quot(rm, lead_mono)
        qc = rc / lead_c
        quo[qm] = quo.get(qm, _F0) + qc
        rem = add(rem, mul(Expr(((qm, -qc),)), den))
    return None


# ---------------------------------------------------------------------------
# Rendering.


def _atom_text(a: Atom, name_map) -> str:
    if isinstance(a, Symbol):
        return name_map(a.name) if name_map else a.name
    if isinstance(a, FuncAtom):
        return f"{a.fn}({to_text(a.arg, name_map)})"
    return f"({to_text(a.expr, name_map)})"


def _term_text(mono: Monomial, c: Fraction, name_map) -> str:
    num_parts = []
    den_parts = []
    if abs(c.numerator) != 1 or (not mono and c.denominator == 1):
        num_parts.append(str(abs(c.numerator)))
    if c.denominator != 1:
        den_parts.append(str(c.denominator))
    for a, k in mono:
        s = _atom_text(a, name_map)
        if k > 0:
            num_parts.append(s if k == 1 else f"{s}^{k}")
        else:
            den_parts.append(s if k == -1 else f"{s}^{-k}")
    if not num_parts:
        num_parts.append("1")
    out = "*".join(num_parts)
    if den_parts:
        if len(den_parts) == 1 and "*" not in den_parts[0]:
            out += f"/{den_parts[0]}"
        else:
            out += f"/({'*'.join(den_parts)})"
    return out


def to_text(e, name_map: Callable[[str], str] | None = None) -> str:
    """Deterministic infix rendering of the canonical form."""
    e = _coerce(e)
    if not e.terms:
        return "0"
    chunks = []
    for i, (mono, c) in enumerate(e.terms):
        body = _term_text(mono, c, name_map)
        if i == 0:
            chunks.append(f"-{body}" if c < 0 else body)
        else:
            chunks.append(f" - {body}" if c < 0 else f" + {body}")
    return "".join(chunks)
