"""Shared independent oracles for the test suite.

These deliberately re-derive results from definitions (pair enumeration,
exhaustive scans, full Cartesian search) so that the library's faster code
paths are checked against a second route.
"""

from __future__ import annotations

import itertools
from dataclasses import replace

from storylines.backends import get_backend
from storylines.core import Drawing, StorylineInstance, validate
from storylines.models import add_sbc, build_model
from storylines.solver import decode_solution


def pair_count_inversions(pi, rho) -> int:
    """O(k^2) inversion count over the common elements, straight from the definition."""
    common = set(pi) & set(rho)
    p = [c for c in pi if c in common]
    r = [c for c in rho if c in common]
    rpos = {c: k for k, c in enumerate(r)}
    count = 0
    for a, b in itertools.combinations(p, 2):
        if rpos[a] > rpos[b]:
            count += 1
    return count


def pair_count_restricted(pi, rho, xs, ys) -> int:
    """Restricted crossings by unordered pair enumeration."""
    xs, ys = set(xs), set(ys)
    ppos = {c: k for k, c in enumerate(pi)}
    rpos = {c: k for k, c in enumerate(rho)}
    count = 0
    for a, b in itertools.combinations(sorted(xs | ys, key=lambda c: ppos[c]), 2):
        if not ((a in xs and b in ys) or (a in ys and b in xs)):
            continue
        if (ppos[a] < ppos[b]) != (rpos[a] < rpos[b]):
            count += 1
    return count


def enumerate_feasible_perms(inst: StorylineInstance, i: int):
    """All feasible permutations of one layer, by filtering every permutation."""
    chars = sorted(inst.active_chars(i))
    blocks = [inst.interactions[idx].chars for idx in inst.layer_interactions(i)]
    for perm in itertools.permutations(chars):
        ok = True
        for block in blocks:
            ps = sorted(perm.index(c) for c in block)
            if ps[-1] - ps[0] + 1 != len(ps):
                ok = False
                break
        if ok:
            yield perm


def exhaustive_minimum(inst: StorylineInstance) -> int:
    """Minimum crossings by trying every sequence of feasible permutations."""
    from storylines.core import total_crossings

    best = None
    layer_perms = [list(enumerate_feasible_perms(inst, i)) for i in range(inst.n_layers)]
    for combo in itertools.product(*layer_perms):
        d = Drawing(tuple(combo))
        total = total_crossings(inst, d).total
        if best is None or total < best:
            best = total
    return best


def anchor_scan(inst: StorylineInstance, interaction) -> int:
    """Anchor layer straight from its definition: earliest valid start layer."""
    chars = interaction.chars
    i = interaction.time

    def clear(k: int) -> bool:
        touched = inst.interaction_chars(k) & chars
        if not touched:
            return True
        return any(chars <= inst.interactions[idx].chars for idx in inst.layer_interactions(k))

    best = i
    for j in range(i, -1, -1):
        if not all(chars <= inst.active_chars(k) for k in range(j, i + 1)):
            break
        if not all(clear(k) for k in range(j + 1, i + 1)):
            break
        best = j
    return best


def solve_materialized(inst: StorylineInstance, formulation: str, sbc: bool = False) -> int:
    """Optimum via a single engine solve with every lazy row materialized.

    No separation runs, so this checks that a formulation's own constraint
    family already forces transitive integral optima.
    """
    from storylines.core import total_crossings

    model = build_model(inst, formulation)
    if sbc:
        model = add_sbc(inst, model)
    model = replace(model, constraints=model.constraints + tuple(model.lop_rows()), lop=())
    session = get_backend("highs").new_session(model, 0)
    result = session.solve(120.0)
    assert result.status == "optimal"
    drawing = decode_solution(inst, result.values)
    assert not validate(inst, drawing)
    return total_crossings(inst, drawing).total
