import math
import unittest

import numpy as np

from ..chains.mtf import (
    MTFModel,
    WeightVector,
    all_permutations,
    identity,
    reverse,
    stationary_prob,
    weight_family,
)
from ..lib import analytics
from ..lib.analytics import (
    CACHE_MAX_LENGTH,
    CACHE_SIZE,
    GeomConvolution,
    TruncatedPmf,
    cdf_gap,
    cftp_rate_shape,
    cftp_runtime_law,
    conv_cdf,
    conv_mean,
    conv_pmf,
    conv_pmf_array,
    conv_var,
    fmmr_runtime_law,
    law_record,
    majorizes,
    rate_constant,
    stochastic_leq,
)
from ..lib.errors import InconclusiveError, InvalidInputError, ResourceBudgetError
from ..lib.kernel import build_kernel, cftp_conditional_prob

SKEWED = WeightVector(np.array([1 / 2, 1 / 3, 1 / 6]))


class TestGeomConvolution(unittest.TestCase):
    def test_pmf(self):
        d = GeomConvolution((5 / 6, 1.0))
        self.assertEqual(conv_pmf(d, 0), 0.0)
        self.assertEqual(conv_pmf(d, 1), 0.0)
        self.assertAlmostEqual(conv_pmf(d, 2), 5 / 6, places=14)
        self.assertAlmostEqual(conv_pmf(d, 3), 5 / 36, places=14)
        self.assertAlmostEqual(conv_cdf(d, 3), 35 / 36, places=14)
        self.assertAlmostEqual(conv_mean(d), 2.2)
        self.assertAlmostEqual(conv_var(d), 0.24)

    def test_pmf_array(self):
        d = GeomConvolution((0.5, 0.25, 0.1))
        pmf = conv_pmf_array(d)
        self.assertLess(pmf.tail, 1e-12)
        self.assertAlmostEqual(pmf.pmf.sum(), 1.0, places=11)
        self.assertAlmostEqual(pmf.mean(), conv_mean(d), places=8)
        self.assertTrue(math.isnan(pmf.at(pmf.horizon + 1)))
        self.assertEqual(pmf.at(-1), 0.0)
        self.assertFalse(pmf.pmf.flags.writeable)
        self.assertRaises(
            ResourceBudgetError, conv_pmf_array, GeomConvolution((1e-6,)), max_support=1000
        )

    def test_invalid(self):
        self.assertRaises(InvalidInputError, GeomConvolution, (0.0,))
        self.assertRaises(InvalidInputError, GeomConvolution, (1.5,))
        self.assertRaises(InvalidInputError, conv_pmf, GeomConvolution((0.5,)), -1)
        empty = GeomConvolution(())
        self.assertEqual(conv_mean(empty), 0.0)
        self.assertEqual(conv_pmf(empty, 0), 1.0)


class TestRuntimeLaws(unittest.TestCase):
    def test_fmmr_law_params(self):
        np.testing.assert_allclose(fmmr_runtime_law(SKEWED, (3, 2, 1)).params, (1.0, 5 / 6))
        np.testing.assert_allclose(fmmr_runtime_law(SKEWED, (1, 2, 3)).params, (1.0, 0.5))
        uniform = weight_family("uniform", 3)
        self.assertAlmostEqual(conv_mean(fmmr_runtime_law(uniform, reverse(3))), 2.5)
        self.assertRaises(InvalidInputError, fmmr_runtime_law, SKEWED, (1, 2))

    def test_enumeration_oracle(self):
        model = MTFModel(SKEWED)
        kernel = build_kernel(model)
        for t in range(1, 6):
            accept = cftp_conditional_prob(model, t, kernel)
            for z in all_permutations(3):
                self.assertAlmostEqual(
                    accept[z], conv_cdf(fmmr_runtime_law(SKEWED, z), t), places=9
                )

    def test_cftp_mixture(self):
        law = cftp_runtime_law(SKEWED, 2000)
        self.assertLess(law.tail, 1e-10)
        expected = sum(
            stationary_prob(SKEWED, z) * conv_mean(fmmr_runtime_law(SKEWED, z))
            for z in all_permutations(3)
        )
        self.assertAlmostEqual(law.mean(), expected, places=8)
        self.assertRaises(InvalidInputError, cftp_runtime_law, weight_family("uniform", 7), 10)
        self.assertRaises(InvalidInputError, cftp_runtime_law, SKEWED, -1)

    def test_uniform_rev_sandwich(self):
        n = 100
        law = fmmr_runtime_law(weight_family("uniform", n), reverse(n))
        pmf = conv_pmf_array(law)
        self.assertEqual(float(pmf.pmf[: n - 1].sum()), 0.0)
        self.assertEqual(conv_pmf(law, n - 2), 0.0)
        self.assertGreater(conv_pmf(law, n - 1), 0.0)
        self.assertGreater(conv_cdf(law, math.ceil(n * math.log(n) + 5 * n)), 0.99)

    def test_point_mass_limit(self):
        # Two heavy weights and the rest vanishing: T from rev is n - 1 almost surely.
        for delta in (1e-3, 1e-6, 1e-9):
            w = WeightVector(np.array([0.5, 0.5 - delta, delta]))
            law = fmmr_runtime_law(w, reverse(3))
            tol = 1e-12 + 10 * delta**2
            self.assertAlmostEqual(conv_pmf(law, 2), 1.0 - delta, delta=tol)
            w4 = WeightVector(np.array([0.5, 0.5 - 2 * delta, delta, delta]))
            law4 = fmmr_runtime_law(w4, reverse(4))
            self.assertGreater(conv_pmf(law4, 3), 1.0 - 4 * delta)

    def test_identity_moments(self):
        for family in ("uniform", "zipf", "geometric:0.5", "gzl:2"):
            w = weight_family(family, 6)
            law = fmmr_runtime_law(w, identity(6))
            p = np.asarray(law.params)
            self.assertAlmostEqual(conv_mean(law), float(np.sum(1.0 / p)), places=9)
            self.assertAlmostEqual(
                conv_var(law), float(np.sum((1.0 - p) / p**2)), places=6
            )
            pmf = conv_pmf_array(law)
            k = np.arange(pmf.pmf.size)
            second = float(np.dot(k**2, pmf.pmf))
            self.assertAlmostEqual(pmf.mean(), conv_mean(law), places=6)
            self.assertAlmostEqual(
                second - pmf.mean() ** 2, conv_var(law), delta=1e-6 * conv_var(law)
            )


class TestConvolveCache(unittest.TestCase):
    def test_only_short_supports_are_cached(self):
        cached = analytics._convolve_cached
        self.assertEqual(cached.cache_info().maxsize, CACHE_SIZE)
        cached.cache_clear()
        d = GeomConvolution((0.5, 0.25))
        conv_pmf_array(d)
        first = cached.cache_info()
        self.assertGreaterEqual(first.currsize, 1)
        conv_pmf_array(d)
        again = cached.cache_info()
        self.assertEqual(again.currsize, first.currsize)
        self.assertGreater(again.hits, first.hits)
        long_pmf = conv_pmf_array(d, min_length=CACHE_MAX_LENGTH + 1)
        self.assertEqual(cached.cache_info().currsize, first.currsize)
        np.testing.assert_allclose(long_pmf.pmf[:10], conv_pmf_array(d).pmf[:10])
        for i in range(CACHE_SIZE + 10):
            conv_pmf_array(GeomConvolution((0.5, 1.0 / (i + 2))))
        self.assertLessEqual(cached.cache_info().currsize, CACHE_SIZE)


class TestOrders(unittest.TestCase):
    def test_stochastic_order(self):
        rev = fmmr_runtime_law(SKEWED, reverse(3))
        idl = fmmr_runtime_law(SKEWED, identity(3))
        self.assertTrue(stochastic_leq(rev, idl))
        self.assertFalse(stochastic_leq(idl, rev))
        self.assertTrue(stochastic_leq(rev, rev))
        self.assertGreater(cdf_gap(rev, idl), 0.0)
        self.assertAlmostEqual(cdf_gap(rev, rev), 0.0)

    def test_inconclusive(self):
        heavy = TruncatedPmf(np.array([0.0, 0.5]), 0.5)
        self.assertRaises(
            InconclusiveError, stochastic_leq, heavy, GeomConvolution((0.5,))
        )

    def test_majorization(self):
        zipf = weight_family("zipf", 5)
        uniform = weight_family("uniform", 5)
        self.assertTrue(majorizes(zipf, uniform))
        self.assertFalse(majorizes(uniform, zipf))
        self.assertTrue(majorizes(uniform, uniform))
        self.assertRaises(InvalidInputError, majorizes, zipf, SKEWED)

    def test_schur_concave_example(self):
        zipf = weight_family("zipf", 5)
        uniform = weight_family("uniform", 5)
        self.assertTrue(
            stochastic_leq(
                fmmr_runtime_law(zipf, reverse(5)), fmmr_runtime_law(uniform, reverse(5))
            )
        )


class TestRates(unittest.TestCase):
    def test_rate_constant(self):
        self.assertAlmostEqual(rate_constant("uniform", {}, 100), 100 * math.log(100))
        self.assertEqual(rate_constant("zipf", None, 100), 100.0)
        self.assertEqual(rate_constant("gzl", {"alpha": 0.5}, 100), 200.0)
        self.assertEqual(rate_constant("gzl", {"alpha": 2.0}, 100), 100.0)
        self.assertAlmostEqual(
            rate_constant("power", {"s": 1.0}, 100), 100 * math.log(100) / 2
        )
        self.assertEqual(rate_constant("geometric", {"theta": 0.5}, 100), 100.0)
        self.assertRaises(InvalidInputError, rate_constant, "gzl", {"alpha": 1.0}, 100)
        self.assertRaises(InvalidInputError, rate_constant, "pareto", {}, 100)

    def test_cftp_rate_shape(self):
        self.assertEqual(cftp_rate_shape("zipf"), "n (ln n)^2")
        self.assertEqual(cftp_rate_shape("gzl", {"alpha": 2}), "zeta(alpha) n^alpha ln n")
        self.assertEqual(cftp_rate_shape("gzl", {"alpha": 0.5}), "n ln n / (1 - alpha)")

    def test_law_record(self):
        record = law_record(GeomConvolution((1.0, 0.5)), prefix_len=4)
        self.assertEqual(record["law_params"], [1.0, 0.5])
        self.assertAlmostEqual(record["mean"], 3.0)
        self.assertAlmostEqual(record["var"], 2.0)
        np.testing.assert_allclose(record["pmf_prefix"], [0.0, 0.0, 0.5, 0.25])
        self.assertAlmostEqual(record["truncation_tail"], 0.25)
        mixture = law_record(cftp_runtime_law(SKEWED, 500))
        self.assertEqual(mixture["law_params"], [])
        self.assertEqual(len(mixture["pmf_prefix"]), 64)


if __name__ == "__main__":
    unittest.main()
