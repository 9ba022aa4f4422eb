"""Estimator-style wrapper so layouts compose with scikit-learn pipelines.

The class follows the scikit-learn parameter protocol (``get_params`` /
``set_params`` over constructor arguments, fitted attributes with trailing
underscores) without importing scikit-learn, so ``sklearn.clone`` and
friends work when that library is present.
"""

from __future__ import annotations

import inspect

from .core import Drawing, StorylineInstance
from .solver import SolveOptions, solve_exact


class CrossingMinimizer:
    """Fit a crossing-minimum (or best-found) layout for a storyline instance.

    Parameters mirror :class:`~storylines.solver.SolveOptions`.  After
    ``fit(instance)`` the layout is available as ``drawing_``, its crossing
    count as ``crossings_``, and the solve accounting as ``report_``.
    """

    def __init__(
        self,
        formulation: str = "plo",
        sbc: bool = True,
        init: bool = True,
        rnd: bool = True,
        time_limit: float = 3600.0,
        seed: int = 0,
        backend: str = "auto",
    ):
        self.formulation = formulation
        self.sbc = sbc
        self.init = init
        self.rnd = rnd
        self.time_limit = time_limit
        self.seed = seed
        self.backend = backend

    @classmethod
    def _param_names(cls) -> list[str]:
        sig = inspect.signature(cls.__init__)
        return [name for name in sig.parameters if name != "self"]

    def get_params(self, deep: bool = True) -> dict:
        return {name: getattr(self, name) for name in self._param_names()}

    def set_params(self, **params) -> "CrossingMinimizer":
        valid = set(self._param_names())
        for key, value in params.items():
            if key not in valid:
                raise ValueError(f"invalid parameter {key!r} for {type(self).__name__}")
            setattr(self, key, value)
        return self

    def _options(self) -> SolveOptions:
        return SolveOptions(
            sbc=self.sbc,
            init=self.init,
            rnd=self.rnd,
            time_limit=self.time_limit,
            seed=self.seed,
            backend=self.backend,
        )

    def fit(self, X: StorylineInstance, y=None) -> "CrossingMinimizer":
        if not isinstance(X, StorylineInstance):
            raise TypeError(f"expected a StorylineInstance, got {type(X).__name__}")
        drawing, report = solve_exact(X, self.formulation, self._options())
        self.instance_ = X
        self.drawing_ = drawing
        self.crossings_ = report.best_crossings
        self.report_ = report
        return self

    def fit_predict(self, X: StorylineInstance, y=None) -> Drawing:
        return self.fit(X).drawing_

    def __repr__(self) -> str:
        args = ", ".join(f"{k}={v!r}" for k, v in self.get_params().items())
        return f"{type(self).__name__}({args})"
