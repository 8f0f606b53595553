import unittest

import numpy as np

from ..chains.mtf import MTFModel, WeightVector, mtf_reverse_step, weight_family
from ..chains.three_state import ThreeStateModel
from ..lib.chain import ChainModel, forward_step, impute_innovation, run_forward
from ..lib.errors import (
    ImputationError,
    InvalidInputError,
    ModelError,
    ResourceBudgetError,
    UnsupportedModelError,
)
from ..lib.kernel import (
    build_kernel,
    cftp_conditional_prob,
    check_monotone,
    exact_coalescence_prob,
    reverse_kernel,
    separation,
)
from ..lib.stats import gof_test

SKEWED = WeightVector(np.array([1 / 2, 1 / 3, 1 / 6]))


class FlipChain(ChainModel):
    name = "flip"

    @property
    def enumerable(self) -> bool:
        return True

    def states(self):
        return [0, 1]

    def innovations(self):
        return [(0, 1.0)]

    def step(self, x, u):
        return 1 - x

    def sample_innovation(self, rng):
        return 0


class TestKernel(unittest.TestCase):
    def test_three_state_matrix(self):
        eps = 0.2
        kernel = build_kernel(ThreeStateModel(eps))
        expected = np.array(
            [
                [eps, (1 - eps) / 2, (1 - eps) / 2],
                [eps, 1 - eps, 0.0],
                [eps, 0.0, 1 - eps],
            ]
        )
        np.testing.assert_allclose(kernel.entries, expected, atol=1e-15)
        np.testing.assert_allclose(
            kernel.stationary, [eps, (1 - eps) / 2, (1 - eps) / 2], atol=1e-12
        )
        self.assertAlmostEqual(kernel.prob(1, 0), eps)
        self.assertRaises(InvalidInputError, kernel.index, 7)

    def test_reversible_chain(self):
        kernel = build_kernel(ThreeStateModel(0.3))
        np.testing.assert_allclose(reverse_kernel(kernel).entries, kernel.entries, atol=1e-12)

    def test_periodic_chain(self):
        self.assertRaises(ModelError, build_kernel, FlipChain())

    def test_separation(self):
        kernel = build_kernel(ThreeStateModel(0.2))
        self.assertEqual(separation(kernel, 0, 0), 1.0)
        # One step from 0 already has law pi.
        self.assertAlmostEqual(separation(kernel, 0, 1), 0.0, places=12)
        self.assertGreater(separation(kernel, 1, 1), 0.0)
        self.assertRaises(InvalidInputError, separation, kernel, 0, -1)

    def test_three_state_coalescence(self):
        eps = 0.2
        model = ThreeStateModel(eps)
        for t in range(1, 7):
            self.assertAlmostEqual(
                exact_coalescence_prob(model, t), 1 - (1 - eps) ** t, places=12
            )
        accept = cftp_conditional_prob(model, 1)
        self.assertAlmostEqual(accept[0], 1.0, places=12)
        self.assertEqual(accept[1], 0.0)
        self.assertAlmostEqual(exact_coalescence_prob(model, 1, target=0), eps)
        # Inside {0, 1} after two steps: last request 0, or 0 then 1.
        self.assertAlmostEqual(
            exact_coalescence_prob(model, 2, target={0, 1}), eps + eps * (1 - eps) / 2
        )
        self.assertRaises(ResourceBudgetError, exact_coalescence_prob, model, 12, budget=1000)

    def test_separation_identity(self):
        model = MTFModel(WeightVector(np.array([1 / 2, 1 / 3, 1 / 6])))
        kernel = build_kernel(model)
        reversed_kernel = reverse_kernel(kernel)
        for t in range(1, 6):
            accept = cftp_conditional_prob(model, t, kernel)
            for z in (model.bottom(), model.top()):
                self.assertAlmostEqual(
                    accept[z], 1.0 - separation(reversed_kernel, z, t), places=9
                )

    def test_check_monotone(self):
        self.assertRaises(UnsupportedModelError, check_monotone, ThreeStateModel(0.2))


class TestChainHelpers(unittest.TestCase):
    def test_forward_and_impute(self):
        model = ThreeStateModel(0.2)
        rng = np.random.default_rng(0)
        self.assertEqual(forward_step(model, 0, 2), 2)
        self.assertRaises(InvalidInputError, forward_step, model, 3, 0)
        self.assertEqual(run_forward(model, 0, [1, 2, 0, 2]), 2)
        for _ in range(20):
            self.assertEqual(impute_innovation(model, 0, 0, rng), 0)
            self.assertIn(impute_innovation(model, 1, 1, rng), (1, 2))
        self.assertRaises(ImputationError, impute_innovation, model, 1, 2, rng)


def kernel_row(kernel, x):
    return {y: kernel.prob(x, y) for y in kernel.states if kernel.prob(x, y) > 0.0}


def innovation_law(model, x, y):
    """Exact law of U given step(x, U) = y, over the enumerated innovations."""
    law = {}
    for u, p in model.innovations():
        if model.step(x, u) == y:
            law[u] = law.get(u, 0.0) + p
    total = sum(law.values())
    return {u: p / total for u, p in law.items()}


class CorruptedMTF(MTFModel):
    # Sends id to rev on every request, which breaks the order.
    def step(self, x, u):
        if x == self.bottom():
            return self.top()
        return super().step(x, u)


class TestKernelLaws(unittest.TestCase):
    def models(self):
        return [ThreeStateModel(0.2), MTFModel(SKEWED), MTFModel(weight_family("zipf", 4))]

    def test_forward_step_matches_kernel_row(self):
        rng = np.random.default_rng(30)
        for model in self.models():
            kernel = build_kernel(model)
            for x in (model.states()[0], model.states()[-1]):
                draws = [model.step(x, model.sample_innovation(rng)) for _ in range(3000)]
                report = gof_test(draws, kernel_row(kernel, x))
                self.assertTrue(report.passed, f"{model.name} from {x}: {report}")

    def test_imputation_follows_conditional_law(self):
        rng = np.random.default_rng(31)
        model = ThreeStateModel(0.2)
        for x in model.states():
            for y in model.states():
                law = innovation_law(model, x, y)
                if not law:
                    continue
                draws = [impute_innovation(model, x, y, rng) for _ in range(2000)]
                report = gof_test(draws, law)
                self.assertTrue(report.passed, f"{x} -> {y}: {report}")
        # u = 1 and u = 2 both keep 1 in place, with equal mass.
        law = innovation_law(model, 1, 1)
        self.assertAlmostEqual(law[1], 0.5)
        self.assertAlmostEqual(law[2], 0.5)

    def test_reverse_step_matches_reverse_kernel(self):
        rng = np.random.default_rng(32)
        for model in self.models():
            reversed_kernel = reverse_kernel(build_kernel(model))
            states = model.states()
            for y in states if len(states) <= 6 else states[::5]:
                draws = [model.reverse_step(y, rng) for _ in range(2000)]
                report = gof_test(draws, kernel_row(reversed_kernel, y))
                self.assertTrue(report.passed, f"{model.name} into {y}: {report}")

    def test_mtf_reverse_step_matches_reverse_kernel(self):
        rng = np.random.default_rng(33)
        w = weight_family("uniform", 4)
        reversed_kernel = reverse_kernel(build_kernel(MTFModel(w)))
        for y in ((1, 2, 3, 4), (4, 3, 2, 1), (2, 4, 1, 3)):
            draws = [mtf_reverse_step(w, y, rng) for _ in range(3000)]
            report = gof_test(draws, kernel_row(reversed_kernel, y))
            self.assertTrue(report.passed, f"into {y}: {report}")

    def test_stationary_is_invariant(self):
        rng = np.random.default_rng(34)
        for model in self.models():
            kernel = build_kernel(model)
            pi = kernel.stationary
            np.testing.assert_allclose(pi @ kernel.entries, pi, atol=1e-12)
            states = kernel.states
            starts = rng.choice(len(states), size=4000, p=pi)
            draws = [
                model.step(states[int(i)], model.sample_innovation(rng)) for i in starts
            ]
            exact = {x: kernel.pi(x) for x in states}
            report = gof_test(draws, exact)
            self.assertTrue(report.passed, f"{model.name}: {report}")

    def test_separation_non_increasing(self):
        for model in self.models():
            kernel = build_kernel(model)
            for x in (kernel.states[0], kernel.states[-1]):
                values = [separation(kernel, x, t) for t in range(12)]
                for earlier, later in zip(values[:-1], values[1:]):
                    self.assertLessEqual(later, earlier + 1e-12)

    def test_check_monotone_mtf(self):
        report = check_monotone(MTFModel(weight_family("zipf", 5)))
        self.assertTrue(report.ok)
        self.assertGreater(report.checked_pairs, 0)

    def test_check_monotone_catches_corrupted_rule(self):
        report = check_monotone(CorruptedMTF(SKEWED), max_violations=5)
        self.assertFalse(report.ok)
        self.assertTrue(report.violations)
        self.assertLessEqual(len(report.violations), 5)
        x, y, _ = report.violations[0]
        self.assertEqual(x, (1, 2, 3))

    def test_mtf_reverse_kernel(self):
        two = build_kernel(MTFModel(WeightVector(np.array([0.7, 0.3]))))
        np.testing.assert_allclose(reverse_kernel(two).entries, two.entries, atol=1e-12)
        three = build_kernel(MTFModel(WeightVector(np.array([0.5, 0.3, 0.2]))))
        gap = np.abs(reverse_kernel(three).entries - three.entries).max()
        self.assertGreater(gap, 1e-3)
        np.testing.assert_allclose(reverse_kernel(three).entries.sum(axis=1), 1.0)


if __name__ == "__main__":
    unittest.main()
