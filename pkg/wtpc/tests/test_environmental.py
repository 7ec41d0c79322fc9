from wtpc.tests import TestCase

import tempfile
import numpy as np

from pathlib import Path
from wtpc.data import CleanDataset
from wtpc.environmental import EnhancedModel, fit_environmental
from wtpc.errors import ArtifactError, DataError
from wtpc.estimation import mse
from wtpc.io.common import write_json
from wtpc.synthetic import reference_curve


class TestEnvironmental(TestCase):
	def test_recovery(self):
		# reduced seed count, same pass fraction
		hits = 0
		for seed in range(10):
			corpus = self.corpus(seed=200 + seed)
			truth = corpus.truth
			model = fit_environmental(truth.curve, self.train(seed=200 + seed), 'both')
			self.assertLess(model.c_T, 0)
			hits += (
				abs(model.c_phi - truth.c_phi) <= 0.1 * abs(truth.c_phi) and
				abs(model.c_T - truth.c_T) <= 0.1 * abs(truth.c_T))
		self.assertGreaterEqual(hits, 9)

	def test_modes(self):
		corpus = self.corpus(seed=210)
		data = self.train(seed=210)
		base = corpus.truth.curve

		none = fit_environmental(base, data, 'none')
		self.assertEqual((none.c_phi, none.c_T), (0.0, 0.0))
		self.assertAlmostEqual(none.train_mse, mse(base, data))

		angle = fit_environmental(base, data, 'angle')
		self.assertEqual(angle.c_T, 0.0)
		self.assertGreater(angle.c_phi, 0.0)

		temp = fit_environmental(base, data, 'temp_only')
		self.assertEqual(temp.c_phi, 0.0)
		self.assertEqual(temp.mode, 'temp')

		both = fit_environmental(base, data, 'both')
		self.assertLessEqual(both.train_mse, min(none.train_mse, angle.train_mse, temp.train_mse))

		with self.assertRaises(ValueError):
			fit_environmental(base, data, 'wind')

	def test_constant_temperature(self):
		rng = np.random.default_rng(1)
		w = np.round(rng.uniform(4, 14, 500), 1)
		data = CleanDataset.from_arrays(w, reference_curve().eval(w), angle=rng.normal(0, 5, 500))
		with self.assertRaises(DataError):
			fit_environmental(reference_curve(), data, 'both')
		self.assertEqual(fit_environmental(reference_curve(), data, 'angle').c_T, 0.0)

	def test_boundary(self):
		rng = np.random.default_rng(2)
		curve = reference_curve()
		w = rng.uniform(5, 12, 2000)
		phi = rng.uniform(-30, 30, 2000)
		# power rises with the angle, which only a negative exponent explains
		p = curve.eval(w / np.cos(np.radians(phi)))
		data = CleanDataset.from_arrays(w, p, angle=phi)

		model = fit_environmental(curve, data, 'angle')
		self.assertEqual(model.c_phi, 0.0)
		self.assertTrue(model.boundary)

	def test_eval(self):
		model = EnhancedModel(reference_curve(), c_phi=1.0, c_T=-0.005, T_bar=10.0)
		self.assertAlmostEqual(
			model.eval_enhanced(10.0, 60.0, 20.0),
			reference_curve().eval(5.0) * 0.95)
		self.assertEqual(model.eval_enhanced(26.0, 0.0, 10.0), 0.0)
		with self.assertRaises(ValueError):
			EnhancedModel(reference_curve(), c_phi=-1.0)

	def test_persistence(self):
		model = EnhancedModel(reference_curve(), c_phi=0.8, c_T=-0.004, T_bar=9.5, mode='both')
		w = np.linspace(0, 30, 61)
		phi = np.linspace(-20, 20, 61)
		T = np.linspace(-5, 25, 61)

		with tempfile.TemporaryDirectory() as base_path:
			base_file = reference_curve().save(Path(base_path) / 'base.json')
			path = model.save(Path(base_path) / 'enhanced.json', base_path=base_file)

			loaded = EnhancedModel.load(path)
			np.testing.assert_array_equal(loaded.eval_enhanced(w, phi, T), model.eval_enhanced(w, phi, T))
			self.assertEqual(loaded.T_bar, 9.5)

			write_json(base_file, 'model', reference_curve().perturbed(3, 1.0).to_json())
			with self.assertRaises(ArtifactError):
				EnhancedModel.load(path)
