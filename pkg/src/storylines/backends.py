"""MILP backend adapters behind a narrow session interface.

A backend translates an :class:`~storylines.models.IlpModel` into one engine
session supporting row addition and repeated solves, which is what the outer
separation loop in :mod:`storylines.solver` needs.  Two adapters ship: the
HiGHS branch-and-cut solver bundled with scipy (default) and GLPK from
cvxopt.  Both engines are deterministic single-thread codes, so the seed is
recorded for reporting but does not perturb the search.

Neither engine accepts a quadratic objective natively; both adapters expand
binary products exactly with one bounded auxiliary column and three linking
rows per product, which preserves optima for 0/1 variables of either
coefficient sign.  An adapter that cannot do this must omit the
``quadratic-objective`` capability, and solves of quadratic models against
it fail fast.
"""

from __future__ import annotations

import abc
import os
from dataclasses import dataclass
from typing import Sequence

from .core import StorylineError
from .models import IlpModel, LinConstraint, VarId

ENV_BACKEND = "STORYLINES_BACKEND"

CAP_LINEAR = "linear-objective"
CAP_QUADRATIC = "quadratic-objective"
CAP_INCREMENTAL = "incremental-add"
CAP_LAZY = "callback-lazy"
CAP_FRACTIONAL = "fractional-solutions"


class BackendError(StorylineError):
    """The requested backend is missing or failed to run."""


class CapabilityError(BackendError):
    """The model needs a capability the backend does not declare."""


@dataclass(frozen=True)
class BackendResult:
    """Outcome of one engine solve."""

    status: str  # "optimal" | "feasible" | "infeasible" | "unknown"
    values: dict[VarId, float] | None
    bound: float | None
    objective: float | None


class _Translation:
    """Index space of one model: model variables first, product columns after."""

    def __init__(self, model: IlpModel):
        self.model = model
        self.index = {var: k for k, var in enumerate(model.variables)}
        self.n_model_vars = len(model.variables)
        self.cost = [0.0] * self.n_model_vars
        for coef, var in model.objective:
            self.cost[self.index[var]] += coef
        self.integrality = [1] * self.n_model_vars
        # rows are (cols, coefs, sense, rhs)
        self.rows: list[tuple[list[int], list[float], str, float]] = []
        for row in model.constraints:
            self.rows.append(self._translate(row))
        for coef, a, b in model.quad_objective:
            self._add_product(coef, self.index[a], self.index[b])

    def _translate(self, row: LinConstraint) -> tuple[list[int], list[float], str, float]:
        cols = [self.index[var] for _, var in row.terms]
        coefs = [float(c) for c, _ in row.terms]
        return (cols, coefs, row.sense, float(row.rhs))

    def _add_product(self, coef: int, a: int, b: int) -> None:
        z = len(self.cost)
        self.cost.append(float(coef))
        self.integrality.append(0)
        self.rows.append(([z, a], [1.0, -1.0], "<=", 0.0))
        self.rows.append(([z, b], [1.0, -1.0], "<=", 0.0))
        self.rows.append(([z, a, b], [1.0, -1.0, -1.0], ">=", -1.0))

    def add_row(self, row: LinConstraint) -> None:
        self.rows.append(self._translate(row))

    def values_from(self, x: Sequence[float]) -> dict[VarId, float]:
        return {var: float(x[k]) for var, k in self.index.items()}


class BackendSession(abc.ABC):
    """One solve session over a fixed model plus incrementally added rows."""

    @abc.abstractmethod
    def add_rows(self, rows: Sequence[LinConstraint]) -> None: ...

    @abc.abstractmethod
    def solve(self, time_limit: float, node_limit: int | None = None) -> BackendResult: ...

    def solve_relaxation(self, time_limit: float) -> BackendResult | None:
        """LP relaxation values for rounding heuristics; None if unsupported."""
        return None


class Backend(abc.ABC):
    name: str = ""
    capabilities: frozenset[str] = frozenset()

    @classmethod
    @abc.abstractmethod
    def available(cls) -> bool: ...

    @abc.abstractmethod
    def new_session(self, model: IlpModel, seed: int = 0) -> BackendSession: ...

    def require(self, model: IlpModel) -> None:
        if model.quad_objective and CAP_QUADRATIC not in self.capabilities:
            raise CapabilityError(
                f"backend {self.name!r} cannot optimize a quadratic objective"
            )


class _HighsSession(BackendSession):
    def __init__(self, model: IlpModel, seed: int):
        self.tr = _Translation(model)
        self.seed = seed

    def add_rows(self, rows: Sequence[LinConstraint]) -> None:
        for row in rows:
            self.tr.add_row(row)

    def _solve(self, time_limit: float, relaxed: bool, node_limit: int | None = None) -> BackendResult:
        import numpy as np
        from scipy import sparse
        from scipy.optimize import Bounds, LinearConstraint, milp

        n = len(self.tr.cost)
        if n == 0:
            return BackendResult("optimal", {}, 0.0, 0.0)
        constraints = None
        if self.tr.rows:
            data, ri, ci, lo, hi = [], [], [], [], []
            for r, (cols, coefs, sense, rhs) in enumerate(self.tr.rows):
                for col, coef in zip(cols, coefs):
                    ri.append(r)
                    ci.append(col)
                    data.append(coef)
                if sense == "<=":
                    lo.append(-np.inf)
                    hi.append(rhs)
                elif sense == ">=":
                    lo.append(rhs)
                    hi.append(np.inf)
                else:
                    lo.append(rhs)
                    hi.append(rhs)
            mat = sparse.csr_matrix((data, (ri, ci)), shape=(len(self.tr.rows), n))
            constraints = LinearConstraint(mat, np.array(lo), np.array(hi))
        integrality = np.zeros(n) if relaxed else np.array(self.tr.integrality)
        options = {"time_limit": max(time_limit, 1e-3), "mip_rel_gap": 0.0}
        if node_limit is not None:
            options["node_limit"] = node_limit
        res = milp(
            c=np.array(self.tr.cost),
            constraints=constraints,
            integrality=integrality,
            bounds=Bounds(0.0, 1.0),
            options=options,
        )
        has_x = res.x is not None
        if res.status == 0:
            status = "optimal"
        elif res.status == 2:
            status = "infeasible"
        elif has_x:
            status = "feasible"
        else:
            status = "unknown"
        bound = None
        if not relaxed and res.mip_dual_bound is not None:
            bound = float(res.mip_dual_bound)
        elif res.status == 0 and res.fun is not None:
            bound = float(res.fun)
        return BackendResult(
            status=status,
            values=self.tr.values_from(res.x) if has_x else None,
            bound=bound,
            objective=float(res.fun) if res.fun is not None else None,
        )

    def solve(self, time_limit: float, node_limit: int | None = None) -> BackendResult:
        return self._solve(time_limit, relaxed=False, node_limit=node_limit)

    def solve_relaxation(self, time_limit: float) -> BackendResult | None:
        res = self._solve(time_limit, relaxed=True)
        return res if res.values is not None else None


class HighsBackend(Backend):
    """HiGHS via ``scipy.optimize.milp``."""

    name = "highs"
    capabilities = frozenset({CAP_LINEAR, CAP_QUADRATIC, CAP_INCREMENTAL, CAP_FRACTIONAL})

    @classmethod
    def available(cls) -> bool:
        try:
            from scipy.optimize import milp  # noqa: F401
        except ImportError:
            return False
        return True

    def new_session(self, model: IlpModel, seed: int = 0) -> BackendSession:
        self.require(model)
        return _HighsSession(model, seed)


class _GlpkSession(BackendSession):
    def __init__(self, model: IlpModel, seed: int):
        self.tr = _Translation(model)
        self.seed = seed

    def add_rows(self, rows: Sequence[LinConstraint]) -> None:
        for row in rows:
            self.tr.add_row(row)

    def solve(self, time_limit: float, node_limit: int | None = None) -> BackendResult:
        # node_limit is not supported by this engine and is ignored
        from cvxopt import glpk, matrix, spmatrix

        n = len(self.tr.cost)
        if n == 0:
            return BackendResult("optimal", {}, 0.0, 0.0)
        gv, gi, gj, h = [], [], [], []
        av, ai, aj, b = [], [], [], []
        for cols, coefs, sense, rhs in self.tr.rows:
            if sense == "=":
                r = len(b)
                for col, coef in zip(cols, coefs):
                    av.append(float(coef))
                    ai.append(r)
                    aj.append(col)
                b.append(float(rhs))
            else:
                flip = -1.0 if sense == ">=" else 1.0
                r = len(h)
                for col, coef in zip(cols, coefs):
                    gv.append(flip * float(coef))
                    gi.append(r)
                    gj.append(col)
                h.append(flip * float(rhs))
        # variable bounds as inequality rows (glpk.ilp has no bounds argument)
        for col in range(n):
            gv.extend([1.0, -1.0])
            gi.extend([len(h), len(h) + 1])
            gj.extend([col, col])
            h.extend([1.0, 0.0])
        G = spmatrix(gv, gi, gj, (len(h), n))
        A = spmatrix(av, ai, aj, (len(b), n)) if b else None
        kwargs = {}
        if A is not None:
            kwargs = {"A": A, "b": matrix(b)}
        status, x = glpk.ilp(
            matrix(self.tr.cost),
            G,
            matrix(h),
            B=set(k for k, flag in enumerate(self.tr.integrality) if flag),
            options={"msg_lev": "GLP_MSG_OFF", "tm_lim": max(1, int(time_limit * 1000))},
            **kwargs,
        )
        if status == "optimal":
            obj = sum(c * xv for c, xv in zip(self.tr.cost, x))
            return BackendResult("optimal", self.tr.values_from(x), float(obj), float(obj))
        if "infeasible" in status:
            return BackendResult("infeasible", None, None, None)
        return BackendResult("unknown", None, None, None)


class GlpkBackend(Backend):
    """GLPK via ``cvxopt.glpk``; reports a bound only at optimality."""

    name = "glpk"
    capabilities = frozenset({CAP_LINEAR, CAP_QUADRATIC, CAP_INCREMENTAL})

    @classmethod
    def available(cls) -> bool:
        try:
            from cvxopt import glpk  # noqa: F401
        except ImportError:
            return False
        return True

    def new_session(self, model: IlpModel, seed: int = 0) -> BackendSession:
        self.require(model)
        return _GlpkSession(model, seed)


_REGISTRY: dict[str, type[Backend]] = {
    HighsBackend.name: HighsBackend,
    GlpkBackend.name: GlpkBackend,
}


def backend_names() -> tuple[str, ...]:
    return tuple(_REGISTRY)


def get_backend(name: str = "auto") -> Backend:
    """Resolve a backend by name, honoring the STORYLINES_BACKEND variable."""
    if name == "auto":
        name = os.environ.get(ENV_BACKEND, "auto")
    if name == "auto":
        for cls in _REGISTRY.values():
            if cls.available():
                return cls()
        raise BackendError("no MILP backend available (tried: " + ", ".join(_REGISTRY) + ")")
    try:
        cls = _REGISTRY[name]
    except KeyError:
        raise BackendError(f"unknown backend {name!r}; known: {', '.join(_REGISTRY)}")
    if not cls.available():
        raise BackendError(f"backend {name!r} is not importable in this environment")
    return cls()
