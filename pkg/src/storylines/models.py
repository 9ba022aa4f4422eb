"""Integer-program construction for the three crossing-minimization models.

All models share binary ordering variables ``x[i, u, v]`` ("u is above v at
layer i") kept only for ``u < v``; the opposite orientation is substituted as
``1 - x`` at construction time, so no explicit pair-equality rows exist.
The linearized model adds one crossing variable per gap and co-active pair
with two linking rows; the quadratic model keeps the crossing terms as
products; the propagated model starts from the linearized one and replaces
most per-layer total-order (LOP) triples at eligible layers with propagation
rows tied to the previous layer.

LOP rows are never materialized inside a model: they form a streamed lazy
family (see :meth:`IlpModel.lop_rows`) that the solve loop separates on
demand.  Symmetry-breaking equalities derived from the consistency
properties can be layered onto any built model with :func:`add_sbc`.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace
from math import comb
from typing import Iterable, Iterator

from .consistency import anchor_layer, qualifying_pairs
from .core import Interaction, StorylineInstance

ORDERING = "x"
CROSSING = "y"

FORMULATIONS = ("lin", "qdr", "plo")


@dataclass(frozen=True, order=True)
class VarId:
    """A projected model variable; ordering pairs always satisfy u < v."""

    kind: str
    layer: int
    u: int
    v: int

    def __post_init__(self):
        if self.kind not in (ORDERING, CROSSING):
            raise ValueError(f"unknown variable kind {self.kind!r}")
        if not self.u < self.v:
            raise ValueError(f"variable pair must be ordered, got ({self.u}, {self.v})")

    @property
    def name(self) -> str:
        return f"{self.kind}_{self.layer}_{self.u}_{self.v}"


@dataclass(frozen=True)
class LinConstraint:
    """One linear row: ``sum(coef * var) sense rhs`` with integral data."""

    terms: tuple[tuple[int, VarId], ...]
    sense: str
    rhs: int
    tag: str
    lazy: bool = False

    def __post_init__(self):
        if self.sense not in ("<=", "=", ">="):
            raise ValueError(f"unknown sense {self.sense!r}")

    def canonical(self) -> tuple:
        return (tuple(sorted(self.terms)), self.sense, self.rhs)


class _Row:
    """Accumulates terms over ordered character pairs, projecting to u < v."""

    def __init__(self):
        self.coefs: dict[VarId, int] = {}
        self.lhs_const = 0

    def var(self, var: VarId, coef: int) -> "_Row":
        self.coefs[var] = self.coefs.get(var, 0) + coef
        return self

    def ordered(self, layer: int, u: int, v: int, coef: int) -> "_Row":
        """Add ``coef * x[layer, u, v]`` where (u, v) means "u above v"."""
        if u == v:
            raise ValueError("ordering term needs two distinct characters")
        if u < v:
            return self.var(VarId(ORDERING, layer, u, v), coef)
        # coef * (1 - x[v, u])
        self.lhs_const += coef
        return self.var(VarId(ORDERING, layer, v, u), -coef)

    def build(self, sense: str, rhs: int, tag: str, lazy: bool = False) -> LinConstraint:
        terms = tuple(sorted((c, v) for v, c in self.coefs.items() if c != 0))
        return LinConstraint(terms=terms, sense=sense, rhs=rhs - self.lhs_const, tag=tag, lazy=lazy)


def lop_rows_for_triple(layer: int, a: int, b: int, c: int) -> tuple[LinConstraint, LinConstraint]:
    """The two projected total-order rows of one character triple.

    For a < b < c the family ``x[u,v] + x[v,w] + x[w,u] <= 2`` over all
    orientations collapses to ``0 <= x_ab + x_bc - x_ac <= 1``.
    """
    a, b, c = sorted((a, b, c))
    upper = _Row().ordered(layer, a, b, 1).ordered(layer, b, c, 1).ordered(layer, a, c, -1)
    lower = _Row().ordered(layer, a, b, 1).ordered(layer, b, c, 1).ordered(layer, a, c, -1)
    return (
        upper.build("<=", 1, "LOP", lazy=True),
        lower.build(">=", 0, "LOP", lazy=True),
    )


@dataclass(frozen=True)
class LayerLop:
    """The lazy LOP family of one layer, in closed form.

    ``full_chars`` set means every triple of the layer; otherwise the family
    is the reduced one: every outside pair joined with the representative
    interaction character, plus (optionally) the triples inside the
    interaction cast.
    """

    layer: int
    full_chars: tuple[int, ...] | None = None
    outside: tuple[int, ...] = ()
    rep: int | None = None
    inside: tuple[int, ...] = ()

    def count(self) -> int:
        if self.full_chars is not None:
            return 2 * comb(len(self.full_chars), 3)
        return 2 * comb(len(self.outside), 2) + 2 * comb(len(self.inside), 3)

    def rows(self) -> Iterator[LinConstraint]:
        if self.full_chars is not None:
            for a, b, c in itertools.combinations(self.full_chars, 3):
                yield from lop_rows_for_triple(self.layer, a, b, c)
            return
        for u, v in itertools.combinations(self.outside, 2):
            yield from lop_rows_for_triple(self.layer, u, v, self.rep)
        for a, b, c in itertools.combinations(self.inside, 3):
            yield from lop_rows_for_triple(self.layer, a, b, c)


@dataclass(frozen=True)
class IlpModel:
    """A built formulation: variables, objective, eager rows, lazy LOP family."""

    formulation: str
    inst: StorylineInstance
    variables: tuple[VarId, ...]
    objective: tuple[tuple[int, VarId], ...]
    quad_objective: tuple[tuple[int, VarId, VarId], ...]
    constraints: tuple[LinConstraint, ...]
    lop: tuple[LayerLop, ...]
    sbc: bool = False

    _var_set: frozenset[VarId] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "_var_set", frozenset(self.variables))

    def has_var(self, var: VarId) -> bool:
        return var in self._var_set

    def ordering_vars(self) -> tuple[VarId, ...]:
        return tuple(v for v in self.variables if v.kind == ORDERING)

    def lop_rows(self) -> Iterator[LinConstraint]:
        for layer in self.lop:
            yield from layer.rows()

    def lop_count(self) -> int:
        return sum(layer.count() for layer in self.lop)

    def stats(self) -> dict[str, int]:
        out: dict[str, int] = {
            "vars": len(self.variables),
            "ordering_vars": sum(1 for v in self.variables if v.kind == ORDERING),
            "crossing_vars": sum(1 for v in self.variables if v.kind == CROSSING),
            "lop_rows": self.lop_count(),
            "eager_rows": len(self.constraints),
        }
        for row in self.constraints:
            key = f"rows_{row.tag}"
            out[key] = out.get(key, 0) + 1
        return out

    def check(self) -> None:
        """Assert that every constraint references declared variables only."""
        for row in itertools.chain(self.constraints, self.lop_rows()):
            for _, var in row.terms:
                if not self.has_var(var):
                    raise AssertionError(f"row {row.tag} references undeclared {var.name}")
        for coef_var in self.objective:
            if not self.has_var(coef_var[1]):
                raise AssertionError(f"objective references undeclared {coef_var[1].name}")
        for _, a, b in self.quad_objective:
            if not (self.has_var(a) and self.has_var(b)):
                raise AssertionError("quadratic objective references undeclared variables")

    def export_lp(self, include_lazy: bool = True) -> str:
        """Render the model in LP text format, for offline inspection.

        Lazy LOP rows are materialized when ``include_lazy`` is set; this can
        be large for big instances.
        """
        lines = [
            f"\\ storylines {self.formulation} model: {len(self.variables)} vars,"
            f" {len(self.constraints)} rows, {self.lop_count()} lazy rows",
            "Minimize",
        ]
        obj = " ".join(f"{'+' if c >= 0 else '-'} {abs(c)} {v.name}" for c, v in self.objective)
        if self.quad_objective:
            quad = " ".join(
                f"{'+' if c >= 0 else '-'} {2 * abs(c)} {a.name} * {b.name}"
                for c, a, b in self.quad_objective
            )
            obj = f"{obj} + [ {quad} ] / 2".strip()
        lines.append(f" obj: {obj if obj else '0 ' + self.variables[0].name}")
        lines.append("Subject To")
        rows = itertools.chain(self.constraints, self.lop_rows() if include_lazy else ())
        for n, row in enumerate(rows):
            body = " ".join(
                f"{'+' if c >= 0 else '-'} {abs(c)} {v.name}" for c, v in row.terms
            )
            lines.append(f" r{n}_{row.tag}: {body} {row.sense} {row.rhs}")
        lines.append("Binary")
        for v in self.variables:
            lines.append(f" {v.name}")
        lines.append("End")
        return "\n".join(lines) + "\n"


def representative_char(interaction: Interaction) -> int:
    """Deterministic representative of an interaction: its smallest character id."""
    return min(interaction.chars)


def _ordering_variables(inst: StorylineInstance) -> list[VarId]:
    out = []
    for i in range(inst.n_layers):
        for u, v in itertools.combinations(sorted(inst.active_chars(i)), 2):
            out.append(VarId(ORDERING, i, u, v))
    return out


def _crossing_variables(inst: StorylineInstance) -> list[VarId]:
    out = []
    for g in range(inst.n_layers - 1):
        for u, v in itertools.combinations(sorted(inst.active_interval(g, g + 1)), 2):
            out.append(VarId(CROSSING, g, u, v))
    return out


def _tree_rows(inst: StorylineInstance) -> list[LinConstraint]:
    rows = []
    for inter in inst.interactions:
        i = inter.time
        outsiders = sorted(inst.active_chars(i) - inter.chars)
        for u, v in itertools.combinations(inter.sorted_chars(), 2):
            for w in outsiders:
                row = _Row().ordered(i, u, w, 1).ordered(i, v, w, -1)
                rows.append(row.build("=", 0, "TREE"))
    return rows


def _cr_rows(inst: StorylineInstance) -> list[LinConstraint]:
    rows = []
    for g in range(inst.n_layers - 1):
        for u, v in itertools.combinations(sorted(inst.active_interval(g, g + 1)), 2):
            y = VarId(CROSSING, g, u, v)
            rows.append(
                _Row().var(y, 1).ordered(g, u, v, -1).ordered(g + 1, u, v, 1).build(">=", 0, "CR")
            )
            rows.append(
                _Row().var(y, 1).ordered(g, u, v, 1).ordered(g + 1, u, v, -1).build(">=", 0, "CR")
            )
    return rows


def _full_lop(inst: StorylineInstance) -> tuple[LayerLop, ...]:
    return tuple(
        LayerLop(layer=i, full_chars=tuple(sorted(inst.active_chars(i))))
        for i in range(inst.n_layers)
    )


def build_lin(inst: StorylineInstance) -> IlpModel:
    """Linearized model: ordering + crossing variables, sum of crossings objective."""
    x_vars = _ordering_variables(inst)
    y_vars = _crossing_variables(inst)
    objective = tuple((1, y) for y in y_vars)
    constraints = tuple(_tree_rows(inst) + _cr_rows(inst))
    return IlpModel(
        formulation="lin",
        inst=inst,
        variables=tuple(x_vars + y_vars),
        objective=objective,
        quad_objective=(),
        constraints=constraints,
        lop=_full_lop(inst),
    )


def build_qdr(inst: StorylineInstance) -> IlpModel:
    """Quadratic model: no crossing variables, crossings appear as products.

    After projection every co-active pair contributes
    ``x_i + x_{i+1} - 2 x_i x_{i+1}`` to the objective.
    """
    x_vars = _ordering_variables(inst)
    linear: dict[VarId, int] = {}
    quad: list[tuple[int, VarId, VarId]] = []
    for g in range(inst.n_layers - 1):
        for u, v in itertools.combinations(sorted(inst.active_interval(g, g + 1)), 2):
            a = VarId(ORDERING, g, u, v)
            b = VarId(ORDERING, g + 1, u, v)
            linear[a] = linear.get(a, 0) + 1
            linear[b] = linear.get(b, 0) + 1
            quad.append((-2, a, b))
    objective = tuple(sorted(((c, v) for v, c in linear.items()), key=lambda t: t[1]))
    return IlpModel(
        formulation="qdr",
        inst=inst,
        variables=tuple(x_vars),
        objective=objective,
        quad_objective=tuple(quad),
        constraints=tuple(_tree_rows(inst)),
        lop=_full_lop(inst),
    )


def plo_eligible(inst: StorylineInstance, i: int) -> Interaction | None:
    """The single interaction of layer ``i`` when the propagation reduction applies.

    Requires exactly one interaction at the layer and that no character
    outside it starts at ``i``.
    """
    if i == 0:
        return None
    idxs = inst.layer_interactions(i)
    if len(idxs) != 1:
        return None
    inter = inst.interactions[idxs[0]]
    newcomers = inst.active_chars(i) - inst.active_chars(i - 1)
    if not newcomers <= inter.chars:
        return None
    return inter


def build_plo(inst: StorylineInstance) -> IlpModel:
    """Propagated linear order model: linearized base with reduced LOP families.

    At an eligible layer the triples touching outsiders shrink to "outside
    pair + representative", outside pairs gain propagation rows carrying the
    previous layer's order over, and a fully persistent cast swaps its inside
    triples for equality rows to the previous layer.
    """
    base = build_lin(inst)
    lop: list[LayerLop] = []
    extra: list[LinConstraint] = []
    for i in range(inst.n_layers):
        inter = plo_eligible(inst, i)
        if inter is None:
            lop.append(LayerLop(layer=i, full_chars=tuple(sorted(inst.active_chars(i)))))
            continue
        rep = representative_char(inter)
        outside = tuple(sorted(inst.active_chars(i) - inter.chars))
        cast_persists = inter.chars <= inst.active_chars(i - 1)
        inside = () if cast_persists else inter.sorted_chars()
        lop.append(LayerLop(layer=i, outside=outside, rep=rep, inside=inside))
        seen: set[tuple] = set()
        for p, q in itertools.combinations(outside, 2):
            for u, v in ((p, q), (q, p)):
                r1 = (
                    _Row()
                    .ordered(i, u, v, 1)
                    .ordered(i - 1, u, v, -1)
                    .ordered(i, u, rep, -1)
                    .ordered(i, v, rep, -1)
                    .build(">=", -2, "PROP-R1")
                )
                r2 = (
                    _Row()
                    .ordered(i, u, v, 1)
                    .ordered(i - 1, u, v, -1)
                    .ordered(i, rep, u, -1)
                    .ordered(i, rep, v, -1)
                    .build(">=", -2, "PROP-R2")
                )
                for row in (r1, r2):
                    if row.canonical() not in seen:
                        seen.add(row.canonical())
                        extra.append(row)
        if cast_persists:
            for u, v in itertools.combinations(inter.sorted_chars(), 2):
                extra.append(
                    _Row().ordered(i, u, v, 1).ordered(i - 1, u, v, -1).build("=", 0, "PROP-I")
                )
    return replace(
        base,
        formulation="plo",
        constraints=base.constraints + tuple(extra),
        lop=tuple(lop),
    )


def build_model(inst: StorylineInstance, formulation: str) -> IlpModel:
    """Dispatch on the formulation name ("lin", "qdr" or "plo")."""
    try:
        builder = {"lin": build_lin, "qdr": build_qdr, "plo": build_plo}[formulation]
    except KeyError:
        raise ValueError(f"unknown formulation {formulation!r}; expected one of {FORMULATIONS}")
    return builder(inst)


def fix_layer_order_rows(layer: int, perm: Iterable[int]) -> list[LinConstraint]:
    """Equality rows pinning one layer's ordering variables to a permutation."""
    order = tuple(perm)
    pos = {c: p for p, c in enumerate(order)}
    rows = []
    for u, v in itertools.combinations(sorted(order), 2):
        value = 1 if pos[u] < pos[v] else 0
        rows.append(_Row().ordered(layer, u, v, 1).build("=", value, "FIX"))
    return rows


def add_sbc(inst: StorylineInstance, model: IlpModel) -> IlpModel:
    """Extend a model with the symmetry-breaking equalities.

    Type-1 ties every interaction pair's order between the anchor layer and
    the interaction layer; type-2 ties every cast pair of a matching
    interaction pair to each outsider on the strictly intermediate layers.
    Some optimal drawing satisfies all of them, so optima are preserved.
    """
    if model.inst is not inst and model.inst != inst:
        raise ValueError("model was built from a different instance")
    rows: list[LinConstraint] = []
    seen = {row.canonical() for row in model.constraints if row.sense == "="}
    for inter in inst.interactions:
        i = inter.time
        for k in range(anchor_layer(inst, inter), i):
            for u, v in itertools.combinations(inter.sorted_chars(), 2):
                row = _Row().ordered(k, u, v, 1).ordered(i, u, v, -1).build("=", 0, "SBC-1")
                if row.canonical() not in seen:
                    seen.add(row.canonical())
                    rows.append(row)
    for i1, i2 in qualifying_pairs(inst):
        t1, t2 = inst.interactions[i1].time, inst.interactions[i2].time
        cast = inst.interactions[i1].sorted_chars()
        for k in range(t1 + 1, t2):
            outsiders = sorted(inst.active_chars(k) - inst.interactions[i1].chars)
            for u, v in itertools.combinations(cast, 2):
                for w in outsiders:
                    row = _Row().ordered(k, u, w, 1).ordered(k, v, w, -1).build("=", 0, "SBC-2")
                    if row.canonical() not in seen:
                        seen.add(row.canonical())
                        rows.append(row)
    return replace(model, constraints=model.constraints + tuple(rows), sbc=True)
