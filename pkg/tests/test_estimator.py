import pytest

from storylines.core import total_crossings, validate
from storylines.estimator import CrossingMinimizer
from storylines.generate import random_corpus
from storylines.solver import SolveOptions, solve_bruteforce, solve_exact


class TestEstimatorApi:
    def test_get_set_params_round_trip(self):
        est = CrossingMinimizer(formulation="lin", time_limit=5.0)
        params = est.get_params()
        assert params["formulation"] == "lin" and params["time_limit"] == 5.0
        est.set_params(formulation="plo", seed=3)
        assert est.formulation == "plo" and est.seed == 3
        with pytest.raises(ValueError):
            est.set_params(solver="x")

    def test_clone_compatible_with_sklearn(self):
        sklearn = pytest.importorskip("sklearn")
        clone = sklearn.base.clone
        est = clone(CrossingMinimizer(formulation="qdr", sbc=False))
        assert est.formulation == "qdr" and est.sbc is False

    def test_fit_sets_attributes(self):
        inst = random_corpus(1, seed=283)[0]
        est = CrossingMinimizer(init=False, rnd=False, time_limit=30.0)
        assert est.fit(inst) is est
        assert validate(inst, est.drawing_) == []
        assert est.crossings_ == total_crossings(inst, est.drawing_).total
        assert est.report_.status == "optimal"
        _, best = solve_bruteforce(inst)
        assert est.crossings_ == best

    def test_fit_predict_matches_solver(self):
        inst = random_corpus(2, seed=293)[1]
        opts = SolveOptions(init=False, rnd=False, time_limit=30.0)
        direct, _ = solve_exact(inst, "plo", opts)
        fitted = CrossingMinimizer(init=False, rnd=False, time_limit=30.0).fit_predict(inst)
        assert fitted.perms == direct.perms

    def test_rejects_non_instance(self):
        with pytest.raises(TypeError):
            CrossingMinimizer().fit([[1, 2], [2, 1]])
