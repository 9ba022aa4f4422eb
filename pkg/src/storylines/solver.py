"""Exact optimization driver: separation loop, brute-force oracle, decoding.

The driver builds a formulation, optionally warm-starts it from the slicing
heuristic, then alternates engine solves with separation of violated
total-order (LOP) rows until an integer optimum free of violations is found.
The LOP family is finite, so the loop terminates; each round's optimum is a
valid lower bound because the round model relaxes the full one.

A layered dynamic program over all feasible per-layer permutations serves as
the desk-scale oracle for certifying small instances.
"""

from __future__ import annotations

import itertools
import logging
import time
from dataclasses import dataclass, replace

from .backends import Backend, get_backend
from .core import (
    Drawing,
    DrawingError,
    StorylineError,
    StorylineInstance,
    total_crossings,
    validate,
)
from .models import (
    CROSSING,
    ORDERING,
    IlpModel,
    LinConstraint,
    VarId,
    add_sbc,
    build_model,
    lop_rows_for_triple,
)

log = logging.getLogger("storylines")

DEFAULT_TIME_LIMIT = 3600.0
DEFAULT_LOP_BATCH = 50_000
DEFAULT_VIOLATION_TOL = 1e-6
DEFAULT_BRUTEFORCE_BUDGET = 10**8


class SolverError(StorylineError):
    """The solve failed in a way that is not representable as a report status."""


class IntransitiveAssignmentError(SolverError):
    """An assignment's per-layer order relation contains a cycle."""


class BudgetExceededError(SolverError):
    """The brute-force oracle would explore more states than its budget."""


@dataclass(frozen=True)
class SolveOptions:
    """Knobs of the exact driver; defaults mirror the evaluation protocol."""

    sbc: bool = True
    init: bool = True
    rnd: bool = True
    time_limit: float = DEFAULT_TIME_LIMIT
    node_limit: int | None = None
    seed: int = 0
    backend: str = "auto"
    lop_batch: int = DEFAULT_LOP_BATCH
    violation_tol: float = DEFAULT_VIOLATION_TOL
    slice_window: int = 30
    slice_stride: int = 5


@dataclass(frozen=True)
class SolveReport:
    """Outcome and accounting of one exact solve."""

    status: str  # "optimal" | "feasible-timeout" | "infeasible" | "error"
    best_crossings: int
    bound: float
    separation_rounds: int
    lop_added: int
    wall_time: float
    phase_log: tuple[tuple[str, float], ...]


def _ordered_value(assignment: dict[VarId, float], layer: int, u: int, v: int) -> float:
    """Value of the (possibly projected) ordering variable "u above v"."""
    if u < v:
        return assignment[VarId(ORDERING, layer, u, v)]
    return 1.0 - assignment[VarId(ORDERING, layer, v, u)]


def encode_drawing(
    inst: StorylineInstance, d: Drawing, include_crossings: bool = True
) -> dict[VarId, float]:
    """Variable assignment of a drawing: relative orders plus crossing flags."""
    values: dict[VarId, float] = {}
    pos = [{c: p for p, c in enumerate(perm)} for perm in d.perms]
    for i in range(inst.n_layers):
        for u, v in itertools.combinations(sorted(inst.active_chars(i)), 2):
            values[VarId(ORDERING, i, u, v)] = 1.0 if pos[i][u] < pos[i][v] else 0.0
    if include_crossings:
        for g in range(inst.n_layers - 1):
            for u, v in itertools.combinations(sorted(inst.active_interval(g, g + 1)), 2):
                a = (pos[g][u] < pos[g][v])
                b = (pos[g + 1][u] < pos[g + 1][v])
                values[VarId(CROSSING, g, u, v)] = 1.0 if a != b else 0.0
    return values


def decode_solution(inst: StorylineInstance, assignment: dict[VarId, float]) -> Drawing:
    """Drawing encoded by an integral, per-layer transitive assignment.

    Characters are ordered by descending out-degree of the "above" relation,
    which is the unique topological order of a transitive tournament.
    """
    perms = []
    for i in range(inst.n_layers):
        chars = sorted(inst.active_chars(i))
        outdeg = {c: 0 for c in chars}
        for u, v in itertools.combinations(chars, 2):
            if _ordered_value(assignment, i, u, v) > 0.5:
                outdeg[u] += 1
            else:
                outdeg[v] += 1
        if sorted(outdeg.values()) != list(range(len(chars))):
            raise IntransitiveAssignmentError(
                f"assignment is not a total order at layer {i}"
            )
        perms.append(tuple(sorted(chars, key=lambda c: -outdeg[c])))
    return Drawing(tuple(perms))


def separate_lop(
    inst: StorylineInstance,
    assignment: dict[VarId, float],
    integral: bool,
    tol: float = DEFAULT_VIOLATION_TOL,
    batch: int = DEFAULT_LOP_BATCH,
) -> list[LinConstraint]:
    """Total-order rows violated by the assignment, up to ``batch`` many.

    For integral assignments these are exactly the directed 3-cycles of the
    per-layer "above" tournaments; transitive layers are skipped by the
    out-degree signature before any triple is enumerated.
    """
    violated: list[LinConstraint] = []
    for i in range(inst.n_layers):
        chars = sorted(inst.active_chars(i))
        if len(chars) < 3:
            continue
        if integral:
            outdeg = {c: 0 for c in chars}
            for u, v in itertools.combinations(chars, 2):
                if _ordered_value(assignment, i, u, v) > 0.5:
                    outdeg[u] += 1
                else:
                    outdeg[v] += 1
            if sorted(outdeg.values()) == list(range(len(chars))):
                continue
        for a, b, c in itertools.combinations(chars, 3):
            s = (
                _ordered_value(assignment, i, a, b)
                + _ordered_value(assignment, i, b, c)
                - _ordered_value(assignment, i, a, c)
            )
            upper, lower = lop_rows_for_triple(i, a, b, c)
            if s > 1.0 + tol:
                violated.append(upper)
            elif s < -tol:
                violated.append(lower)
            if len(violated) >= batch:
                return violated
    return violated


# -- brute-force oracle --------------------------------------------------------


def feasible_layer_perms(inst: StorylineInstance, i: int) -> list[tuple[int, ...]]:
    """All permutations of layer ``i`` keeping every interaction contiguous."""
    blocks: list[tuple[int, ...]] = [
        inst.interactions[idx].sorted_chars() for idx in inst.layer_interactions(i)
    ]
    blocks.sort()
    grouped = inst.interaction_chars(i)
    units: list[tuple[int, ...]] = blocks + [
        (c,) for c in sorted(inst.active_chars(i) - grouped)
    ]
    out = []
    for arrangement in itertools.permutations(range(len(units))):
        inner_choices = [
            itertools.permutations(units[k]) if len(units[k]) > 1 else ((units[k]),)
            for k in arrangement
        ]
        for inners in itertools.product(*inner_choices):
            perm: list[int] = []
            for block in inners:
                perm.extend(block)
            out.append(tuple(perm))
    return out


def _layer_perm_count(inst: StorylineInstance, i: int) -> int:
    import math

    sizes = [len(inst.interactions[idx].chars) for idx in inst.layer_interactions(i)]
    free = len(inst.active_chars(i)) - sum(sizes)
    count = math.factorial(len(sizes) + free)
    for s in sizes:
        count *= math.factorial(s)
    return count


def _pair_mask(perm: tuple[int, ...], pairs: list[tuple[int, int]]) -> int:
    pos = {c: p for p, c in enumerate(perm)}
    mask = 0
    for t, (a, b) in enumerate(pairs):
        if pos[a] < pos[b]:
            mask |= 1 << t
    return mask


def solve_bruteforce(
    inst: StorylineInstance, budget: int = DEFAULT_BRUTEFORCE_BUDGET
) -> tuple[Drawing, int]:
    """Exact minimum by dynamic programming over feasible layer permutations.

    The DP state is the permutation chosen for a layer; transition costs are
    crossing counts evaluated as XOR popcounts of pair-order bitmasks.  The
    number of explored layer-permutation pairs is capped by ``budget``.
    """
    counts = [_layer_perm_count(inst, i) for i in range(inst.n_layers)]
    explored = counts[0] if inst.n_layers == 1 else 0
    for g in range(inst.n_layers - 1):
        explored += counts[g] * counts[g + 1]
        if explored > budget:
            raise BudgetExceededError(
                f"oracle would explore {explored}+ layer-permutation pairs (budget {budget})"
            )

    perms_here = feasible_layer_perms(inst, 0)
    costs = [0] * len(perms_here)
    parents: list[list[int]] = []
    layers = [perms_here]
    for g in range(inst.n_layers - 1):
        perms_next = feasible_layer_perms(inst, g + 1)
        common = sorted(inst.active_interval(g, g + 1))
        pairs = list(itertools.combinations(common, 2))
        masks_here = [_pair_mask(p, pairs) for p in perms_here]
        masks_next = [_pair_mask(p, pairs) for p in perms_next]
        next_costs = []
        next_parent = []
        for mn in masks_next:
            best, who = None, -1
            for j, mh in enumerate(masks_here):
                c = costs[j] + (mh ^ mn).bit_count()
                if best is None or c < best:
                    best, who = c, j
            next_costs.append(best)
            next_parent.append(who)
        parents.append(next_parent)
        layers.append(perms_next)
        perms_here, costs = perms_next, next_costs

    best_total = min(costs)
    k = costs.index(best_total)
    chosen = [layers[-1][k]]
    for g in range(inst.n_layers - 2, -1, -1):
        k = parents[g][k]
        chosen.append(layers[g][k])
    chosen.reverse()
    return Drawing(tuple(chosen)), best_total


# -- exact driver ---------------------------------------------------------------


def _objective_cap_row(model: IlpModel, cap: int) -> LinConstraint | None:
    """Valid upper bound row on the linear crossing objective, if one exists."""
    if model.quad_objective:
        return None
    terms = tuple((c, v) for c, v in model.objective)
    if not terms:
        return None
    return LinConstraint(terms=terms, sense="<=", rhs=cap, tag="BOUND")


def _improved(inst: StorylineInstance, drawing: Drawing) -> Drawing:
    from .heuristics import improve

    return improve(inst, drawing)


def _solve_model(
    inst: StorylineInstance,
    model: IlpModel,
    opts: SolveOptions,
    backend: Backend,
    warm: Drawing | None = None,
    phases: list[tuple[str, float]] | None = None,
) -> tuple[Drawing, SolveReport]:
    phases = list(phases or [])
    session = backend.new_session(model, opts.seed)

    best_drawing = None
    best_crossings = None
    if warm is not None and not validate(inst, warm):
        best_drawing = warm
        best_crossings = total_crossings(inst, warm).total
        cap = _objective_cap_row(model, best_crossings)
        if cap is not None:
            session.add_rows([cap])

    t0 = time.perf_counter()
    spent = 0.0
    bound = 0.0
    rounds = 0
    added = 0
    status = "error"

    if opts.rnd:
        t_r = time.perf_counter()
        relaxation = session.solve_relaxation(max(opts.time_limit / 10.0, 1.0))
        if relaxation is not None and relaxation.values is not None:
            from .heuristics import round_fractional

            candidate = _improved(
                inst, round_fractional(inst, relaxation.values, sbc_active=model.sbc)
            )
            cand_crossings = total_crossings(inst, candidate).total
            if best_crossings is None or cand_crossings < best_crossings:
                best_drawing, best_crossings = candidate, cand_crossings
        phases.append(("root-rounding", time.perf_counter() - t_r))

    while True:
        remaining = opts.time_limit - spent
        if remaining <= 0:
            status = "feasible-timeout"
            break
        t_s = time.perf_counter()
        result = session.solve(remaining, node_limit=opts.node_limit)
        dt = time.perf_counter() - t_s
        spent += dt
        phases.append((f"solve-{rounds + 1}", dt))
        if result.status == "infeasible":
            raise SolverError(
                "backend reports an infeasible model; storyline models are always"
                " feasible, so this indicates an internal error"
            )
        if result.bound is not None:
            bound = max(bound, result.bound)
            phases.append((f"bound-{rounds + 1}", bound))
        if result.values is None:
            status = "feasible-timeout" if result.status in ("feasible", "unknown") else "error"
            break
        t_sep = time.perf_counter()
        violated = separate_lop(
            inst, result.values, integral=True, tol=opts.violation_tol, batch=opts.lop_batch
        )
        phases.append((f"separate-{rounds + 1}", time.perf_counter() - t_sep))
        if violated:
            session.add_rows(violated)
            rounds += 1
            added += len(violated)
            if result.status != "optimal":
                # ran out of time while violations remain
                status = "feasible-timeout"
                break
            continue
        drawing = decode_solution(inst, result.values)
        bad = validate(inst, drawing)
        if bad:
            raise DrawingError(bad)
        crossings = total_crossings(inst, drawing).total
        if result.status == "optimal":
            best_drawing, best_crossings = drawing, crossings
            bound = float(crossings)
            status = "optimal"
        else:
            if opts.rnd:
                drawing = _improved(inst, drawing)
                crossings = total_crossings(inst, drawing).total
            if best_crossings is None or crossings < best_crossings:
                best_drawing, best_crossings = drawing, crossings
            status = "feasible-timeout"
        break

    if best_drawing is None:
        from .heuristics import greedy_baseline

        best_drawing = greedy_baseline(inst)
        best_crossings = total_crossings(inst, best_drawing).total
        log.warning("no solver incumbent within the limit; reporting the greedy drawing")

    report = SolveReport(
        status=status,
        best_crossings=best_crossings,
        bound=bound,
        separation_rounds=rounds,
        lop_added=added,
        wall_time=time.perf_counter() - t0,
        phase_log=tuple(phases),
    )
    return best_drawing, report


def solve_exact(
    inst: StorylineInstance,
    formulation: str = "plo",
    opts: SolveOptions | None = None,
) -> tuple[Drawing, SolveReport]:
    """Minimize crossings exactly with the chosen formulation.

    Raises :class:`~storylines.backends.BackendError` when no backend is
    available and :class:`~storylines.backends.CapabilityError` when the
    formulation needs an unsupported objective; a hit time limit returns the
    best feasible drawing with status ``feasible-timeout``.
    """
    opts = opts or SolveOptions()
    if opts.time_limit <= 0:
        raise ValueError("time_limit must be positive")
    backend = get_backend(opts.backend)

    phases: list[tuple[str, float]] = []
    t_b = time.perf_counter()
    model = build_model(inst, formulation)
    if opts.sbc:
        model = add_sbc(inst, model)
    backend.require(model)
    phases.append(("build", time.perf_counter() - t_b))

    warm = None
    if opts.init and inst.n_layers > 1:
        from .heuristics import SliceConfig, initial_slicing

        t_i = time.perf_counter()
        warm = initial_slicing(
            inst,
            SliceConfig(window=opts.slice_window, stride=opts.slice_stride),
            replace(opts, init=False, rnd=False),
        )
        # recorded but excluded from the solve time limit
        phases.append(("init-heuristic", time.perf_counter() - t_i))

    return _solve_model(inst, model, opts, backend, warm=warm, phases=phases)
