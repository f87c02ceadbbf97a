"""Coordinate charts with role-tagged axes.

A chart is an ordered list of named coordinates, each tagged with a role
(base x^mu, field y^a, velocity y^a_mu, momentum p^mu_a, action s^mu, or
generic).  Jet and Hamiltonian charts are built from base/field name
lists with fixed naming conventions:

    velocity of field ``y`` along base ``t``  ->  ``y_t``
    action along base ``t``                   ->  ``s_t``
    momentum dual to ``y`` along ``t``        ->  ``p_t``   (single field)
                                                  ``p_y_t`` (several fields)
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

from .expr import Expr, Symbol


class ChartError(Exception):
    pass


@dataclass(frozen=True)
class Coordinate:
    name: str
    role: str
    field: Optional[int] = None  # index into the chart's field list
    base: Optional[int] = None  # index into the chart's base list


class Chart:
    def __init__(self, coords: Sequence[Coordinate], base_dim: int):
        coords = tuple(coords)
        names = [c.name for c in coords]
        if len(set(names)) != len(names):
            raise ChartError(f"duplicate coordinate names in {names}")
        if base_dim < 1:
            raise ChartError("base dimension must be >= 1")
        n_fields = sum(1 for c in coords if c.role == "field")
        for c in coords:
            if c.role == "velocity" or c.role == "momentum":
                if c.field is None or c.base is None:
                    raise ChartError(f"{c.role} coordinate {c.name} lacks its (field, base) pair")
                if not (0 <= c.field < n_fields) or not (0 <= c.base < base_dim):
                    raise ChartError(f"{c.role} coordinate {c.name} references a missing (field, base) pair")
            if c.role == "action" and (c.base is None or not (0 <= c.base < base_dim)):
                raise ChartError(f"action coordinate {c.name} references a missing base axis")
        self.coords = coords
        self.base_dim = base_dim
        self.symbols = tuple(Symbol(c.name, c.role if c.role in
                                    ("base", "field", "velocity", "momentum", "action") else "generic", i)
                             for i, c in enumerate(coords))
        self._axis = {c.name: i for i, c in enumerate(coords)}
        self._key = (base_dim,) + tuple((c.name, c.role, c.field, c.base) for c in coords)

    @property
    def dim(self) -> int:
        return len(self.coords)

    def __eq__(self, other):
        return isinstance(other, Chart) and self._key == other._key

    def __hash__(self):
        return hash(self._key)

    def __repr__(self):
        return f"Chart({', '.join(c.name for c in self.coords)}; m={self.base_dim})"

    def axis(self, name: str) -> int:
        try:
            return self._axis[name]
        except KeyError:
            raise ChartError(f"no coordinate {name!r} in {self!r}") from None

    def symbol(self, name: str) -> Symbol:
        return self.symbols[self.axis(name)]

    def coord(self, name: str) -> Expr:
        """The coordinate as an expression."""
        from .expr import _coerce

        return _coerce(self.symbol(name))

    def axes_with_role(self, role: str) -> list[int]:
        return [i for i, c in enumerate(self.coords) if c.role == role]

    @property
    def base_axes(self) -> list[int]:
        return self.axes_with_role("base")

    @property
    def field_axes(self) -> list[int]:
        return self.axes_with_role("field")

    def velocity_axis(self, field: int, base: int) -> int:
        for i, c in enumerate(self.coords):
            if c.role == "velocity" and c.field == field and c.base == base:
                return i
        raise ChartError(f"no velocity coordinate for field {field}, base {base}")

    def momentum_axis(self, field: int, base: int) -> int:
        for i, c in enumerate(self.coords):
            if c.role == "momentum" and c.field == field and c.base == base:
                return i
        raise ChartError(f"no momentum coordinate for field {field}, base {base}")

    def action_axis(self, base: int) -> int:
        for i, c in enumerate(self.coords):
            if c.role == "action" and c.base == base:
                return i
        raise ChartError(f"no action coordinate for base {base}")

    def names(self) -> list[str]:
        return [c.name for c in self.coords]


def _check_names(names: Sequence[str], what: str):
    for n in names:
        if not n.isidentifier():
            raise ChartError(f"{what} name {n!r} is not an identifier")


def jet_chart(bases: Sequence[str], fields: Sequence[str]) -> Chart:
    """First-order jet chart extended by action coordinates:
    (x^mu, y^a, y^a_mu, s^mu)."""
    _check_names(bases, "base")
    _check_names(fields, "field")
    if not fields:
        raise ChartError("at least one field required")
    coords = [Coordinate(b, "base", base=i) for i, b in enumerate(bases)]
    coords += [Coordinate(f, "field", field=a) for a, f in enumerate(fields)]
    coords += [
        Coordinate(f"{f}_{b}", "velocity", field=a, base=mu)
        for a, f in enumerate(fields)
        for mu, b in enumerate(bases)
    ]
    coords += [Coordinate(f"s_{b}", "action", base=mu) for mu, b in enumerate(bases)]
    return Chart(coords, len(bases))


def momentum_name(bases: Sequence[str], fields: Sequence[str], field: int, base: int) -> str:
    if len(fields) == 1:
        return f"p_{bases[base]}"
    return f"p_{fields[field]}_{bases[base]}"


def ham_chart(bases: Sequence[str], fields: Sequence[str]) -> Chart:
    """Restricted multimomentum chart extended by action coordinates:
    (x^mu, y^a, p^mu_a, s^mu)."""
    _check_names(bases, "base")
    _check_names(fields, "field")
    if not fields:
        raise ChartError("at least one field required")
    coords = [Coordinate(b, "base", base=i) for i, b in enumerate(bases)]
    coords += [Coordinate(f, "field", field=a) for a, f in enumerate(fields)]
    coords += [
        Coordinate(momentum_name(bases, fields, a, mu), "momentum", field=a, base=mu)
        for a, f in enumerate(fields)
        for mu, b in enumerate(bases)
    ]
    coords += [Coordinate(f"s_{b}", "action", base=mu) for mu, b in enumerate(bases)]
    return Chart(coords, len(bases))


def config_chart(chart: Chart) -> Chart:
    """The configuration chart (x^mu, y^a, s^mu) underlying a jet or
    Hamiltonian chart."""
    coords = [c for c in chart.coords if c.role in ("base", "field", "action")]
    return Chart(coords, chart.base_dim)


def generic_chart(names: Sequence[str], base_dim: int = 1) -> Chart:
    """Unstructured chart for generic exterior-calculus work."""
    _check_names(names, "coordinate")
    return Chart([Coordinate(n, "generic") for n in names], base_dim)


def base_chart(chart: Chart) -> Chart:
    return Chart([c for c in chart.coords if c.role == "base"], chart.base_dim)
