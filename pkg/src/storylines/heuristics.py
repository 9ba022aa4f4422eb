"""Layout heuristics: window slicing, fractional rounding, local improvement.

The slicing heuristic pieces a drawing together from exactly solved windows
of consecutive layers.  The rounding heuristic turns fractional relaxation
values into a feasible drawing layer by layer.  Three improvement passes
rewrite a drawing without ever increasing crossings: removing double
crossings of a character pair, pushing crossings one layer forward, and a
neighbor-driven reordering of single-interaction layers accepted only when
it strictly helps.
"""

from __future__ import annotations

import heapq
import itertools
import logging
from dataclasses import dataclass, replace

from .backends import BackendError, get_backend
from .consistency import anchor_layer, qualifying_pairs
from .core import (
    Drawing,
    DrawingError,
    StorylineError,
    StorylineInstance,
    crossings_between,
    validate,
)
from .models import VarId, add_sbc, build_model, fix_layer_order_rows
from .solver import SolveOptions, _ordered_value, _solve_model

log = logging.getLogger("storylines")


@dataclass(frozen=True)
class SliceConfig:
    """Window geometry of the slicing heuristic: solve ``window`` layers, keep ``stride``."""

    window: int = 30
    stride: int = 5

    def __post_init__(self):
        if not 1 <= self.stride < self.window:
            raise ValueError(f"need 1 <= stride < window, got {self.stride}, {self.window}")


def _require_valid(inst: StorylineInstance, d: Drawing) -> None:
    violations = validate(inst, d)
    if violations:
        raise DrawingError(violations)


def initial_slicing(
    inst: StorylineInstance,
    cfg: SliceConfig | None = None,
    opts: SolveOptions | None = None,
) -> Drawing:
    """Drawing assembled from exactly solved overlapping windows.

    Each round solves ``cfg.window`` consecutive layers with the propagated
    formulation, pinning the boundary layer to the last committed
    permutation, and commits the next ``cfg.stride`` layers.  Falls back to
    the greedy baseline with a warning if the backend fails.
    """
    cfg = cfg or SliceConfig()
    opts = replace(opts or SolveOptions(), init=False)
    try:
        backend = get_backend(opts.backend)
        committed: list[tuple[int, ...]] = []
        while len(committed) < inst.n_layers:
            lo = 0 if not committed else len(committed) - 1
            hi = min(lo + cfg.window - 1, inst.n_layers - 1)
            sub, cmap = inst.window(lo, hi)
            model = build_model(sub, "plo")
            if opts.sbc:
                model = add_sbc(sub, model)
            if committed:
                boundary = tuple(cmap[c] for c in committed[-1])
                pins = fix_layer_order_rows(0, boundary)
                model = replace(model, constraints=model.constraints + tuple(pins))
            drawing, report = _solve_model(sub, model, opts, backend)
            if report.status not in ("optimal", "feasible-timeout"):
                raise BackendError(f"window solve ended with status {report.status}")
            back = {v: k for k, v in cmap.items()}
            first_new = 0 if not committed else 1
            if hi == inst.n_layers - 1:
                last_new = hi - lo
            else:
                last_new = first_new + cfg.stride - 1
            for local in range(first_new, last_new + 1):
                committed.append(tuple(back[c] for c in drawing.perms[local]))
        out = Drawing(tuple(committed))
        _require_valid(inst, out)
        return out
    except BackendError as exc:
        log.warning("slicing heuristic failed (%s); using the greedy baseline", exc)
        return greedy_baseline(inst)


# -- rounding --------------------------------------------------------------------


def _tied_pairs(inst: StorylineInstance, i: int) -> set[tuple[int, int]]:
    """Pairs whose relative order at layer ``i`` must equal layer ``i - 1``'s.

    These are the pairs inside an interaction whose propagation window (from
    its anchor layer to its own layer) covers both layers, which is exactly
    what the symmetry-breaking equalities chain together.
    """
    out: set[tuple[int, int]] = set()
    if i == 0:
        return out
    for inter in inst.interactions:
        if inter.time >= i and anchor_layer(inst, inter) <= i - 1:
            out.update(itertools.combinations(inter.sorted_chars(), 2))
    return out


def _contiguity_groups(
    inst: StorylineInstance, i: int, sbc_active: bool
) -> list[frozenset[int]]:
    """Character groups that must be contiguous at layer ``i``.

    Interactions of the layer always qualify; with symmetry breaking active,
    the cast of any matching interaction pair whose span strictly contains
    the layer must travel as a block too.  The groups form a laminar family.
    """
    groups = {inst.interactions[idx].chars for idx in inst.layer_interactions(i)}
    if sbc_active:
        for i1, i2 in qualifying_pairs(inst):
            if inst.interactions[i1].time < i < inst.interactions[i2].time:
                groups.add(inst.interactions[i1].chars)
    return sorted(groups, key=lambda g: (-len(g), sorted(g)))


def _dminus(
    scope: list[int],
    inst_prev_pos: dict[int, int] | None,
    layer: int,
    assignment: dict[VarId, float],
    eps: float,
) -> dict[int, float]:
    """Sort keys for a scope: strong predecessors plus near-tie predecessors.

    For character c the key counts scope members strictly ordered above c in
    the fractional values, plus those tied within ``eps`` of one half that
    preceded c on the previous layer (zero contribution for newcomers).
    """
    out = {}
    for c in scope:
        a = 0
        b = 0
        for other in scope:
            if other == c:
                continue
            val = _ordered_value(assignment, layer, other, c)
            if val > 0.5 + eps:
                a += 1
            elif (
                abs(val - 0.5) <= eps
                and inst_prev_pos is not None
                and c in inst_prev_pos
                and other in inst_prev_pos
                and inst_prev_pos[other] < inst_prev_pos[c]
            ):
                b += 1
        out[c] = float(a + b)
    return out


def _order_units(
    units: list[tuple[float, int, tuple[int, ...]]],
    edges: list[tuple[int, int]],
) -> list[int]:
    """Topological order of unit indices, smallest (key, id) first."""
    indeg = [0] * len(units)
    succs: list[list[int]] = [[] for _ in units]
    for a, b in set(edges):
        succs[a].append(b)
        indeg[b] += 1
    heap = [(units[k][0], units[k][1], k) for k in range(len(units)) if indeg[k] == 0]
    heapq.heapify(heap)
    out = []
    while heap:
        _, _, k = heapq.heappop(heap)
        out.append(k)
        for nxt in succs[k]:
            indeg[nxt] -= 1
            if indeg[nxt] == 0:
                heapq.heappush(heap, (units[nxt][0], units[nxt][1], nxt))
    if len(out) != len(units):
        raise StorylineError("internal: precedence requirements form a cycle")
    return out


def _round_scope(
    scope: tuple[int, ...],
    groups: list[frozenset[int]],
    layer: int,
    assignment: dict[VarId, float],
    prev_pos: dict[int, int] | None,
    tied: set[tuple[int, int]],
    eps: float,
) -> tuple[int, ...]:
    """Order one laminar scope: nested groups become recursively ordered blocks."""
    top = [g for g in groups if g < frozenset(scope) or set(g) == set(scope)]
    maximal: list[frozenset[int]] = []
    for g in sorted(top, key=lambda g: (-len(g), sorted(g))):
        if set(g) != set(scope) and not any(g < m for m in maximal):
            maximal.append(g)
    keys = _dminus(list(scope), prev_pos, layer, assignment, eps)

    blocks: list[tuple[int, ...]] = []
    for g in maximal:
        inner_groups = [h for h in groups if h < g]
        blocks.append(
            _round_scope(tuple(sorted(g)), inner_groups, layer, assignment, prev_pos, tied, eps)
        )
    grouped = {c for g in maximal for c in g}
    units: list[tuple[float, int, tuple[int, ...]]] = []
    for block in blocks:
        units.append((sum(keys[c] for c in block) / len(block), min(block), block))
    for c in sorted(set(scope) - grouped):
        units.append((keys[c], c, (c,)))

    unit_of = {c: k for k, (_, _, block) in enumerate(units) for c in block}
    edges = []
    if prev_pos is not None:
        for u, v in tied:
            if u in unit_of and v in unit_of and unit_of[u] != unit_of[v]:
                if u in prev_pos and v in prev_pos:
                    a, b = (u, v) if prev_pos[u] < prev_pos[v] else (v, u)
                    edges.append((unit_of[a], unit_of[b]))
    order = _order_units(units, edges)
    out: list[int] = []
    for k in order:
        out.extend(units[k][2])
    return tuple(out)


def round_fractional(
    inst: StorylineInstance,
    assignment: dict[VarId, float],
    prev_layers_locked: dict[int, tuple[int, ...]] | None = None,
    sbc_active: bool = False,
    eps: float = 1e-6,
) -> Drawing:
    """Feasible drawing rounded from fractional ordering-variable values.

    Layers are processed front to back.  Every contiguity group becomes a
    block ordered by the scoped sort keys; blocks and free characters are
    merged by the same statistic extended layer-wide, with block keys being
    member means.  With ``sbc_active`` the order additionally respects every
    pair the symmetry-breaking equalities tie to the previous layer, via a
    priority queue over the precedence-feasible candidates.
    """
    locked = prev_layers_locked or {}
    perms: list[tuple[int, ...]] = []
    for i in range(inst.n_layers):
        if i in locked:
            perms.append(tuple(locked[i]))
            continue
        prev_pos = None
        if i > 0:
            prev_pos = {c: p for p, c in enumerate(perms[i - 1])}
        scope = tuple(sorted(inst.active_chars(i)))
        groups = _contiguity_groups(inst, i, sbc_active)
        tied = _tied_pairs(inst, i) if sbc_active else set()
        perms.append(_round_scope(scope, groups, i, assignment, prev_pos, tied, eps))
    drawing = Drawing(tuple(perms))
    _require_valid(inst, drawing)
    return drawing


# -- local improvements ------------------------------------------------------------


def _gap_has_crossing(perms: list[tuple[int, ...]], g: int, c1: int, c2: int) -> bool:
    p, q = perms[g], perms[g + 1]
    if c1 not in p or c2 not in p or c1 not in q or c2 not in q:
        return False
    return (p.index(c1) < p.index(c2)) != (q.index(c1) < q.index(c2))


def _same_interaction_or_free(inst: StorylineInstance, k: int, c1: int, c2: int) -> bool:
    for idx in inst.layer_interactions(k):
        chars = inst.interactions[idx].chars
        if c1 in chars or c2 in chars:
            return c1 in chars and c2 in chars
    return True


def remove_double_crossings(inst: StorylineInstance, d: Drawing, passes_per_pair: int = 5) -> Drawing:
    """Cancel pairs of crossings between two characters; never increases crossings.

    A pair crossing at two gaps, with every layer strictly between either
    containing both characters in one interaction or in none, can swap the
    two characters on all those layers, removing both crossings.
    """
    _require_valid(inst, d)
    perms = list(d.perms)
    chars = sorted({c for perm in perms for c in perm})
    for c1, c2 in itertools.combinations(chars, 2):
        for _ in range(passes_per_pair):
            gaps = [g for g in range(inst.n_layers - 1) if _gap_has_crossing(perms, g, c1, c2)]
            applied = False
            for a, b in itertools.combinations(gaps, 2):
                if all(_same_interaction_or_free(inst, k, c1, c2) for k in range(a + 1, b + 1)):
                    for k in range(a + 1, b + 1):
                        perm = list(perms[k])
                        p1, p2 = perm.index(c1), perm.index(c2)
                        perm[p1], perm[p2] = perm[p2], perm[p1]
                        perms[k] = tuple(perm)
                    applied = True
                    break
            if not applied:
                break
    return Drawing(tuple(perms))


def push_crossings(inst: StorylineInstance, d: Drawing) -> Drawing:
    """Push crossings one layer forward; never increases crossings.

    Sweeping the layers in order, every maximal run of consecutive
    characters that persist from the previous layer and share interaction
    membership is reordered to the previous layer's relative order.
    """
    _require_valid(inst, d)
    perms = list(d.perms)
    for i in range(1, inst.n_layers):
        prev = perms[i - 1]
        prev_pos = {c: p for p, c in enumerate(prev)}
        label = {}
        for c in perms[i]:
            label[c] = None
            if c not in prev_pos:
                label[c] = ("new", c)  # unique label: never groups
        for idx in inst.layer_interactions(i):
            for c in inst.interactions[idx].chars:
                if label[c] is None:
                    label[c] = idx
        perm = list(perms[i])
        start = 0
        while start < len(perm):
            end = start
            while end + 1 < len(perm) and label[perm[end + 1]] == label[perm[start]]:
                end += 1
            if end > start and not isinstance(label[perm[start]], tuple):
                perm[start : end + 1] = sorted(perm[start : end + 1], key=lambda c: prev_pos[c])
            start = end + 1
        perms[i] = tuple(perm)
    return Drawing(tuple(perms))


def _prefers_above(
    inst: StorylineInstance,
    perms: list[tuple[int, ...]],
    i: int,
    c: int,
    cast: frozenset[int],
) -> bool:
    """Whether placing ``c`` above the cast loses no crossings vs below.

    Counts, on the neighbor layers, cast members that would be crossed under
    either placement; ties prefer above.
    """
    above = 0
    below = 0
    for g in (i - 1, i + 1):
        if not 0 <= g < inst.n_layers:
            continue
        perm = perms[g]
        if c not in perm:
            continue
        cp = perm.index(c)
        for u in cast:
            if u in perm:
                if perm.index(u) < cp:
                    above += 1
                else:
                    below += 1
    return above <= below


def _neighbor_order(
    members: list[int],
    current: tuple[int, ...],
    prev: tuple[int, ...] | None,
    nxt: tuple[int, ...] | None,
) -> list[int]:
    """Order ``members`` by repeatedly taking the fewest-incoming-arcs vertex.

    Arcs join comparable pairs: pairs ordered identically on every neighbor
    layer containing both.  Members on no neighbor layer keep their current
    relative slot.
    """
    neighbor_pos = []
    for perm in (prev, nxt):
        if perm is not None:
            neighbor_pos.append({c: p for p, c in enumerate(perm)})
    in_s = [c for c in members if any(c in pos for pos in neighbor_pos)]
    kept_out = [(r, c) for r, c in enumerate(members) if c not in in_s]

    def arc(a: int, b: int) -> bool:
        seen = False
        for pos in neighbor_pos:
            if a in pos and b in pos:
                seen = True
                if pos[a] > pos[b]:
                    return False
        return seen

    remaining = set(in_s)
    order: list[int] = []
    while remaining:
        indeg = {
            c: sum(1 for o in remaining if o != c and arc(o, c)) for c in remaining
        }
        pick = min(remaining, key=lambda c: (indeg[c], c))
        remaining.remove(pick)
        order.append(pick)
    for r, c in kept_out:
        order.insert(min(r, len(order)), c)
    return order


def barycenter_sl(inst: StorylineInstance, d: Drawing, passes: int = 5) -> Drawing:
    """Neighbor-driven reordering of single-interaction layers.

    The cast and the remaining characters are each reordered to agree with
    the neighbor layers where possible; the cast block is then inserted at
    the deepest position whose preceding characters all prefer being above
    it.  A new layer order is kept only if it strictly reduces crossings.
    """
    _require_valid(inst, d)
    perms = list(d.perms)
    for _ in range(passes):
        for i in range(1, inst.n_layers):
            idxs = inst.layer_interactions(i)
            if len(idxs) != 1:
                continue
            cast = inst.interactions[idxs[0]].chars
            prev = perms[i - 1]
            nxt = perms[i + 1] if i + 1 < inst.n_layers else None
            cast_members = [c for c in perms[i] if c in cast]
            free_members = [c for c in perms[i] if c not in cast]
            cast_order = _neighbor_order(cast_members, perms[i], prev, nxt)
            free_order = _neighbor_order(free_members, perms[i], prev, nxt)
            cut = 0
            while cut < len(free_order) and _prefers_above(inst, perms, i, free_order[cut], cast):
                cut += 1
            candidate = tuple(free_order[:cut]) + tuple(cast_order) + tuple(free_order[cut:])

            def local_cost(layer_perm: tuple[int, ...]) -> int:
                cost = crossings_between(perms[i - 1], layer_perm)
                if nxt is not None:
                    cost += crossings_between(layer_perm, nxt)
                return cost

            if local_cost(candidate) < local_cost(perms[i]):
                perms[i] = candidate
    return Drawing(tuple(perms))


def improve(inst: StorylineInstance, d: Drawing) -> Drawing:
    """Run the improvement schedule: five alternating sweeps, then pair fixes."""
    for _ in range(5):
        d = barycenter_sl(inst, d, passes=1)
        d = push_crossings(inst, d)
    return remove_double_crossings(inst, d)


def greedy_baseline(inst: StorylineInstance) -> Drawing:
    """Deterministic left-to-right sweep used as a floor for comparisons.

    The first layer stacks interaction blocks by smallest member, then the
    remaining characters by id.  Every later layer carries the previous
    order, appends newcomers at the bottom, and regroups each interaction at
    the position of its first carried member.
    """
    perms: list[tuple[int, ...]] = []
    for i in range(inst.n_layers):
        if i == 0:
            blocks = sorted(
                (inst.interactions[idx].sorted_chars() for idx in inst.layer_interactions(0)),
            )
            seq: list[int] = [c for block in blocks for c in block]
            seq += sorted(inst.active_chars(0) - set(seq))
        else:
            carried = [c for c in perms[i - 1] if c in inst.active_chars(i)]
            newcomers = sorted(inst.active_chars(i) - set(carried))
            seq = carried + newcomers
            for idx in sorted(inst.layer_interactions(i)):
                members = inst.interactions[idx].chars
                in_seq = [c for c in seq if c in members]
                anchor = seq.index(in_seq[0])
                block = [c for c in in_seq if c in set(carried)] + sorted(
                    set(in_seq) - set(carried)
                )
                rest_before = [c for c in seq[:anchor] if c not in members]
                rest_after = [c for c in seq[anchor:] if c not in members]
                seq = rest_before + block + rest_after
        perms.append(tuple(seq))
    drawing = Drawing(tuple(perms))
    _require_valid(inst, drawing)
    return drawing
