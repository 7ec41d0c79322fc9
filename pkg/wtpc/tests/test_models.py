from wtpc.tests import TestCase

import collections
import tempfile
import time
import numpy as np
import scipy.linalg

from pathlib import Path
from wtpc.data import CleanDataset
from wtpc.errors import ConvergenceError, FitError, RankDeficientError
from wtpc.estimation import mse, mse_lower_bound, ols, binned_means
from wtpc.models import ModelSpec, FittedModel, fit, constrain_input
from wtpc.models import BSpline, PiecewiseLinear, Polynomial, Logistic5PL
from wtpc.models import bspline_basis, basis_matrix, reallocate_knots
from wtpc.models.logistic import damped_gauss_newton
from wtpc.models.spline import equidistant_knots
from wtpc.selection import bic, select_order, delta
from wtpc.synthetic import reference_curve, REFERENCE_ALPHA, REFERENCE_KNOTS


def naive_lower_bound(w, p):
	groups = collections.defaultdict(list)
	for x, y in zip(w, p):
		groups[f"{x:.1f}"].append(y)
	total = 0.0
	for x, y in zip(w, p):
		values = groups[f"{x:.1f}"]
		mean = sum(values) / len(values)
		total += (y - mean) ** 2
	return total / len(w)


def quartic(w):
	u = (w - 9.25) / 5.75
	return 1000 + 900 * u + 150 * u ** 2 - 200 * u ** 3 + 120 * u ** 4


class TestSplineBasis(TestCase):
	def test_partition_of_unity(self):
		rng = np.random.default_rng(1)
		x = rng.uniform(3.5, 15.0, 10000)
		for knots in (np.array(REFERENCE_KNOTS), equidistant_knots(ModelSpec('spline', 12))):
			with self.subTest(n_knots=len(knots)):
				B = basis_matrix(x, knots)
				self.assertLess(np.max(np.abs(B.sum(axis=1) - 1)), 1e-12)
				self.assertGreaterEqual(np.min(B), -1e-15)

	def test_recursion_matches(self):
		rng = np.random.default_rng(2)
		knots = list(REFERENCE_KNOTS)
		x = rng.uniform(3.5, 15.0, 100)
		B = basis_matrix(x, knots)
		for j in range(17):
			recursive = [bspline_basis(j + 1, knots, 3, v) for v in x]
			np.testing.assert_allclose(recursive, B[:, j], atol=1e-12)

	def test_invalid_basis(self):
		knots = list(REFERENCE_KNOTS)
		with self.assertRaises(ValueError):
			bspline_basis(0, knots, 3, 5.0)
		with self.assertRaises(ValueError):
			bspline_basis(18, knots, 3, 5.0)
		with self.assertRaises(ValueError):
			bspline_basis(1, [0, 2, 1, 3, 4, 5], 1, 1.5)

	def test_clamped_ends(self):
		curve = reference_curve()
		self.assertAlmostEqual(curve.eval(15.0), REFERENCE_ALPHA[-1], delta=1e-10)
		self.assertAlmostEqual(curve.eval(3.5), REFERENCE_ALPHA[0], delta=1e-10)

	def test_reallocation(self):
		spec = ModelSpec('spline', 10)
		flat = BSpline(spec, np.full(10, 5.0))
		np.testing.assert_array_equal(reallocate_knots(flat), flat.knots)

		knots = reallocate_knots(BSpline(ModelSpec('spline', 17), REFERENCE_ALPHA, knots=REFERENCE_KNOTS))
		self.assertEqual(len(knots), 21)
		np.testing.assert_array_equal(knots[:4], 3.5)
		np.testing.assert_array_equal(knots[-4:], 15.0)
		self.assertTrue(np.all(np.diff(knots[3:-3]) > 0))


class TestLowerBound(TestCase):
	def test_naive_oracle(self):
		rng = np.random.default_rng(3)
		for i in range(100):
			n = int(rng.integers(1, 501))
			w = np.round(rng.uniform(0, 5, n), 1)
			p = np.round(rng.normal(500, 100, n), 1)
			expected = naive_lower_bound(w, p)
			actual = mse_lower_bound(CleanDataset.from_arrays(w, p))
			self.assertLessEqual(abs(actual - expected), 1e-12 * max(abs(expected), 1e-300))

	def test_saturated_piecewise(self):
		rng = np.random.default_rng(4)
		n = 20000
		w = np.round(rng.uniform(3.5, 15.0, n), 1)
		p = np.round(reference_curve().eval(w) + rng.normal(0, 20, n), 1)

		started = time.time()
		model = PiecewiseLinear.fit_saturated(w, p)
		attained = float(np.mean((p - model.curve(w)) ** 2))
		self.assertLess(time.time() - started, 10)

		bound = mse_lower_bound(CleanDataset.from_arrays(w, p))
		self.assertRelativeClose(attained, bound, 1e-6)

	def test_constrained_bound(self):
		w = np.array([2.0, 2.0, 10.0, 10.0, 26.0])
		p = np.array([0.0, 2.0, 500.0, 504.0, 3.0])
		spec = ModelSpec('spline', 8)
		bound = mse_lower_bound(CleanDataset.from_arrays(w, p), spec)
		self.assertAlmostEqual(bound, (1 + 1 + 4 + 4 + 9) / 5)


class TestModels(TestCase):
	def test_constrain_input(self):
		spec = ModelSpec('polynomial', 3)
		self.assertEqual(constrain_input(2.0, spec), (3.5, False))
		self.assertEqual(constrain_input(9.3, spec), (9.3, False))
		self.assertEqual(constrain_input(20.0, spec), (15.0, False))
		self.assertEqual(constrain_input(25.0, spec), (15.0, True))
		with self.assertRaises(ValueError):
			constrain_input(-0.1, spec)

	def test_constrained_eval(self):
		curve = reference_curve()
		self.assertEqual(curve.eval(2.0), curve.eval(3.5))
		self.assertEqual(curve.eval(20.0), curve.eval(15.0))
		self.assertEqual(curve.eval(25.0), 0.0)
		self.assertEqual(curve.eval(31.0), 0.0)
		np.testing.assert_array_equal(
			curve.eval(np.array([1.0, 30.0])), [curve.eval(3.5), 0.0])
		with self.assertRaises(ValueError):
			curve.eval(-1.0)

	def test_unfitted(self):
		with self.assertRaises(FitError):
			Polynomial(ModelSpec('polynomial', 2), None).eval(5.0)

	def test_spec(self):
		self.assertEqual(ModelSpec('5pl').m, 5)
		self.assertEqual(ModelSpec('mstukel').m, 6)
		for args in (('5pl', 4), ('spline', 3), ('polynomial', None), ('unknown', 3)):
			with self.subTest(args=args):
				with self.assertRaises(ValueError):
					ModelSpec(*args)

	def test_polynomial_recovery(self):
		rng = np.random.default_rng(5)
		w = rng.uniform(3.5, 15.0, 2000)
		c = [-500.0, 300.0, -40.0, 5.0, -0.1]
		p = np.polynomial.polynomial.polyval(w, c)
		model = fit(ModelSpec('polynomial', 4), CleanDataset.from_arrays(w, p))
		np.testing.assert_allclose(model.raw_coefficients(), c, rtol=1e-6, atol=1e-6)
		self.assertLess(model.train_mse, 1e-12)

	def test_piecewise_recovery(self):
		rng = np.random.default_rng(6)
		spec = ModelSpec('piecewise', 6)
		truth = PiecewiseLinear(spec, [100.0, 50.0, 80.0, 120.0, 60.0, -40.0, -150.0])
		w = rng.uniform(3.5, 15.0, 2000)
		model = fit(spec, CleanDataset.from_arrays(w, truth.eval(w)))
		np.testing.assert_allclose(model.theta, truth.theta, atol=1e-8)

	def test_spline_recovery(self):
		rng = np.random.default_rng(7)
		spec = ModelSpec('spline', 17)
		w = rng.uniform(3.5, 15.0, 2000)
		model = BSpline.fit_knots(spec, w, reference_curve().curve(w), np.array(REFERENCE_KNOTS))
		np.testing.assert_allclose(model.theta, REFERENCE_ALPHA, atol=1e-6)

	def test_spline_fit(self):
		rng = np.random.default_rng(8)
		w = np.round(rng.uniform(3.5, 15.0, 5000), 1)
		p = np.round(reference_curve().eval(w) + rng.normal(0, 10, 5000), 1)
		model = fit(ModelSpec('spline', 17), CleanDataset.from_arrays(w, p))
		self.assertEqual(model.knots[0], 3.5)
		self.assertEqual(model.knots[-1], 15.0)
		self.assertTrue(np.all(np.diff(model.knots) >= 0))
		self.assertLess(model.train_mse, 4 * 10 ** 2)

	def test_logistic_recovery(self):
		rng = np.random.default_rng(9)
		spec = ModelSpec('5pl')
		truth = Logistic5PL(spec, [10.0, 9.0, 6.0, 1.2, 2000.0])
		w = rng.uniform(3.5, 15.0, 3000)
		model = fit(spec, CleanDataset.from_arrays(w, truth.eval(w)))
		self.assertLess(np.sqrt(model.train_mse), 0.5)

	def test_mstukel_fit(self):
		rng = np.random.default_rng(10)
		w = np.round(rng.uniform(3.5, 15.0, 3000), 1)
		p = reference_curve().eval(w)
		model = fit(ModelSpec('mstukel'), CleanDataset.from_arrays(w, p))
		self.assertEqual(model.n_params, 6)
		self.assertLess(np.sqrt(model.train_mse), 0.1 * np.std(p))

	def test_gauss_newton(self):
		x = np.linspace(0, 2, 50)
		y = np.exp(0.5 * x)
		theta, value = damped_gauss_newton(lambda t: np.exp(t[0] * x) - y, [0.0], 'exp')
		self.assertAlmostEqual(theta[0], 0.5, places=6)
		with self.assertRaises(ConvergenceError):
			damped_gauss_newton(lambda t: np.exp(t[0] * x) - y, [0.0], 'exp', max_iterations=1)

	def test_rank_deficient(self):
		design = np.ones((10, 2))
		with self.assertRaises(RankDeficientError):
			ols(design, np.arange(10.0), 'ones')
		with self.assertRaises(FitError):
			fit(ModelSpec('polynomial', 2), CleanDataset.from_arrays([6.0] * 5, [1.0, 2, 3, 4, 5]))

	def test_train_mse_over_all_records(self):
		rng = np.random.default_rng(11)
		w = np.concatenate([rng.uniform(3.5, 15.0, 500), [26.0, 27.0]])
		p = np.concatenate([reference_curve().eval(w[:500]), [40.0, -40.0]])
		data = CleanDataset.from_arrays(w, p)
		model = fit(ModelSpec('spline', 17), data)
		self.assertAlmostEqual(model.train_mse, float(np.mean((p - model.eval(w)) ** 2)))
		self.assertGreater(model.train_mse, 2 * 40.0 ** 2 / 502 - 1e-6)

	def test_persistence(self):
		rng = np.random.default_rng(12)
		w = np.round(rng.uniform(0, 26, 3000), 1)
		data = CleanDataset.from_arrays(w, np.round(reference_curve().eval(w) + rng.normal(0, 10, 3000), 1))
		grid = np.linspace(0, 30, 301)
		with tempfile.TemporaryDirectory() as base_path:
			for spec in (ModelSpec('spline', 12), ModelSpec('piecewise', 8), ModelSpec('polynomial', 6)):
				with self.subTest(model=spec.label):
					model = fit(spec, data)
					path = model.save(Path(base_path) / spec.model_class.value)
					loaded = FittedModel.load(path)
					self.assertEqual(loaded.spec, model.spec)
					self.assertEqual(loaded.n_params, model.n_params)
					self.assertEqual(loaded.train_mse, model.train_mse)
					np.testing.assert_array_equal(loaded.eval(grid), model.eval(grid))

	def test_least_squares_optimal(self):
		rng = np.random.default_rng(18)
		w = np.round(rng.uniform(3.5, 15.0, 3000), 1)
		noisy = CleanDataset.from_arrays(w, np.round(reference_curve().eval(w) + rng.normal(0, 20, 3000), 1))
		logistic = Logistic5PL(ModelSpec('5pl'), [10.0, 9.0, 6.0, 1.2, 2000.0])
		cases = [
			(ModelSpec('polynomial', 6), noisy),
			(ModelSpec('piecewise', 8), noisy),
			(ModelSpec('spline', 12), noisy),
			(ModelSpec('5pl'), CleanDataset.from_arrays(w, logistic.eval(w) + rng.normal(0, 20, 3000))),
			(ModelSpec('mstukel'), CleanDataset.from_arrays(w, reference_curve().eval(w)))]

		for spec, data in cases:
			model = fit(spec, data)
			with self.subTest(model=spec.label):
				for j in range(len(model.theta)):
					step = 1e-3 * max(abs(model.theta[j]), 1.0)
					for sign in (-1, 1):
						perturbed = mse(model.perturbed(j, sign * step), data)
						self.assertGreaterEqual(perturbed, model.train_mse * (1 - 1e-6))

	def test_polynomial_conditioning(self):
		rng = np.random.default_rng(19)
		w = np.round(rng.uniform(3.5, 15.0, 5000), 1)
		p = np.round(reference_curve().eval(w) + rng.normal(0, 20, 5000), 1)
		model = fit(ModelSpec('polynomial', 14), CleanDataset.from_arrays(w, p))

		u = (w - w.mean()) / w.std()
		V = np.polynomial.polynomial.polyvander(u, 14)
		self.assertTrue(np.isfinite(np.linalg.cond(V)))
		Q, R = np.linalg.qr(V)
		theta = scipy.linalg.solve_triangular(R, Q.T @ p)
		oracle = float(np.mean((p - V @ theta) ** 2))

		self.assertRelativeClose(model.train_mse, oracle, 1e-8)
		self.assertRelativeClose(model.scaling.d_w, w.std(), 1e-12)

	def test_binned_means(self):
		data = CleanDataset.from_arrays([5.0, 5.0, 6.0], [100.0, 110.0, 200.0])
		stats = binned_means(data)
		self.assertEqual(stats.to_dict(), {5.0: (2, 105.0, 50.0), 6.0: (1, 200.0, 0.0)})


class TestSelection(TestCase):
	def test_bic(self):
		self.assertAlmostEqual(
			bic(3, 100, 2.0),
			np.log(100) * 3 + 100 * np.log(2.0) + 100 * np.log(2 * np.pi) + 1)
		with self.assertRaises(FitError):
			bic(3, 100, 0.0)

	def test_polynomial_degree(self):
		# reduced seed count, same pass fraction
		hits = 0
		for seed in range(20):
			rng = np.random.default_rng(100 + seed)
			w = np.round(rng.uniform(3.5, 15.0, 10000), 1)
			p = np.round(quartic(w) + rng.normal(0, 30, 10000), 1)
			result = select_order('polynomial', range(1, 11), CleanDataset.from_arrays(w, p))
			hits += result.chosen_m == 4
		self.assertGreaterEqual(hits, 18)

	def test_sweep(self):
		rng = np.random.default_rng(13)
		w = np.round(rng.uniform(3.5, 15.0, 3000), 1)
		data = CleanDataset.from_arrays(w, np.round(quartic(w) + rng.normal(0, 30, 3000), 1))

		serial = select_order('spline', [2, 4, 6, 8], data)
		parallel = select_order('spline', [2, 4, 6, 8], data, workers=3)

		self.assertEqual([e.m for e in serial.sweep], [4, 6, 8])
		self.assertEqual(list(serial.failures.keys()), [2])
		self.assertEqual(serial.sweep, parallel.sweep)
		self.assertEqual(serial.chosen_m, min(serial.sweep, key=lambda e: e.bic).m)

		with tempfile.TemporaryDirectory() as base_path:
			path = serial.write_csv(Path(base_path) / 'sweep.csv')
			with open(path, 'r') as f:
				lines = f.read().splitlines()
		self.assertEqual(lines[0], 'm,mse,bic')
		self.assertEqual(len(lines), 4)

	def test_fixed_order(self):
		rng = np.random.default_rng(14)
		truth = Logistic5PL(ModelSpec('5pl'), [10.0, 9.0, 6.0, 1.2, 2000.0])
		w = np.round(rng.uniform(3.5, 15.0, 2000), 1)
		data = CleanDataset.from_arrays(w, np.round(truth.eval(w) + rng.normal(0, 20, 2000), 1))
		result = select_order('5pl', [1, 2, 3], data)
		self.assertEqual([e.m for e in result.sweep], [5])

	def test_delta(self):
		rng = np.random.default_rng(15)
		w = np.round(rng.uniform(3.5, 15.0, 2000), 1)
		data = CleanDataset.from_arrays(w, np.round(quartic(w) + rng.normal(0, 30, 2000), 1))
		a = fit(ModelSpec('polynomial', 4), data)
		b = fit(ModelSpec('polynomial', 8), data)
		self.assertEqual(delta(a, a, data), 0.0)
		self.assertGreater(delta(a, b, data), 0.0)
		self.assertLess(delta(a, b, data), 0.01)

	def test_delta_symmetric(self):
		rng = np.random.default_rng(16)
		w = np.round(rng.uniform(3.5, 15.0, 2000), 1)
		data = CleanDataset.from_arrays(w, np.round(quartic(w) + rng.normal(0, 30, 2000), 1))
		a = fit(ModelSpec('polynomial', 3), data)
		b = fit(ModelSpec('spline', 8), data)
		self.assertEqual(delta(a, b, data), delta(b, a, data))

	def test_delta_constant_models(self):
		one = PiecewiseLinear(ModelSpec('piecewise', 1), [1.0, 0.0])
		two = PiecewiseLinear(ModelSpec('piecewise', 1), [2.0, 0.0])
		data = CleanDataset.from_arrays([4.0, 6.5, 9.0, 12.0], [0.0] * 4)
		self.assertAlmostEqual(delta(one, two, data), 1.0)
		self.assertAlmostEqual(delta(two, one, data), 1.0)

	def test_sweep_above_lower_bound(self):
		rng = np.random.default_rng(17)
		w = np.round(rng.uniform(3.5, 15.0, 3000), 1)
		data = CleanDataset.from_arrays(w, np.round(reference_curve().eval(w) + rng.normal(0, 20, 3000), 1))
		bound = mse_lower_bound(data)
		for model_class, grid in (('polynomial', range(1, 9)), ('piecewise', [4, 8, 16]), ('spline', [6, 10, 14])):
			result = select_order(model_class, grid, data)
			with self.subTest(model_class=model_class):
				for entry in result.sweep:
					self.assertGreaterEqual(entry.train_mse, bound * (1 - 1e-12))
				self.assertGreaterEqual(result.chosen_model.train_mse, bound * (1 - 1e-12))
