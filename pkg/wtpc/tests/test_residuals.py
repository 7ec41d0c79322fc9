from wtpc.tests import TestCase

import tempfile
import numpy as np
import scipy.stats

from pathlib import Path
from wtpc.data import CleanDataset
from wtpc.environmental import EnhancedModel
from wtpc.errors import BandError, DataError, NoGaussianBandError
from wtpc.models import ModelSpec, PiecewiseLinear
from wtpc.residuals import SigmaProfile, ResidualProfile, rescale, anderson_darling
from wtpc.residuals import band_pvalues, band_threshold, gaussian_band, longest_run, analyze_residuals, histogram_rows


BINARY_BAND = dict(n_samples=50000, outside_shape='binary')


class TestSigmaProfile(TestCase):
	def test_sparse_bins(self):
		winds = np.array([5.0] * 40 + [5.5] * 3 + [6.0] * 40)
		r = np.array([2.0, -2.0] * 20 + [100.0, -100.0, 100.0] + [4.0, -4.0] * 20)
		profile = SigmaProfile.compute(r, winds)

		self.assertEqual(profile.at(5.0), 2.0)
		self.assertAlmostEqual(profile.at(5.5), 3.0)
		self.assertAlmostEqual(profile.at(5.7), 3.4)
		self.assertEqual(profile.at(6.0), 4.0)
		self.assertEqual(list(profile.counts), [40, 3, 40])

	def test_rescale(self):
		profile = SigmaProfile([50, 60], [2.0, 0.0], [40, 40])
		np.testing.assert_allclose(rescale([4.0, -1.0], profile, [5.0, 5.0]), [2.0, -0.5])
		with self.assertRaises(DataError):
			rescale([1.0], profile, [6.0])

	def test_empty(self):
		with self.assertRaises(DataError):
			SigmaProfile.compute([], [])


class TestAndersonDarling(TestCase):
	def test_pvalues_uniform(self):
		rng = np.random.default_rng(1)
		pvalues = [anderson_darling(rng.standard_normal(100))[1] for _ in range(4000)]
		self.assertLess(scipy.stats.kstest(pvalues, 'uniform').statistic, 0.05)

	def test_rejects(self):
		rng = np.random.default_rng(2)
		self.assertLess(anderson_darling(rng.choice([-1.0, 1.0], 1000))[1], 1e-4)
		self.assertLess(anderson_darling(rng.exponential(1.0, 1000) - 1)[1], 1e-4)

	def test_invalid(self):
		with self.assertRaises(ValueError):
			anderson_darling(np.zeros(7))
		with self.assertRaises(ValueError):
			anderson_darling([0.0] * 9 + [np.nan])


class TestGaussianBand(TestCase):
	def test_longest_run(self):
		self.assertEqual(longest_run([1, 2, 3, 4, 5, 6], [True, False, True, True, True, False]), (3, 5))
		self.assertIsNone(longest_run([1, 2], [False, False]))

	def test_detection(self):
		# reduced seed count, same pass fraction
		hits = 0
		for seed in range(10):
			corpus = self.corpus(seed=300 + seed, **BINARY_BAND)
			data = self.train(seed=300 + seed, **BINARY_BAND)
			profile = analyze_residuals(corpus.truth.enhanced_model(), data)
			self.assertEqual(profile.alpha, 0.05)
			self.assertEqual(profile.correction, 'bonferroni')
			g_lo, g_hi = profile.band
			t_lo, t_hi = corpus.truth.band
			hits += abs(g_lo - t_lo) <= 0.3 and abs(g_hi - t_hi) <= 0.3
		self.assertGreaterEqual(hits, 9)

	def test_threshold(self):
		pvalues = dict((k, (100, 0.5)) for k in range(35, 75))
		pvalues[20] = (100, 0.5)
		pvalues[80] = (5, float('nan'))
		self.assertAlmostEqual(band_threshold(pvalues, 0.05), 0.05 / 40)
		self.assertEqual(band_threshold(pvalues, 0.05, correction='none'), 0.05)
		with self.assertRaises(ValueError):
			band_threshold(pvalues, 0.05, correction='holm')

	def test_corrected_band(self):
		# bin 6.0 fails at 0.05 but passes once alpha is split over 40 bins
		pvalues = dict((k, (100, 0.5)) for k in range(40, 80))
		pvalues[60] = (100, 0.01)
		self.assertEqual(gaussian_band(None, None, pvalues=pvalues), (4.0, 7.9))
		self.assertEqual(gaussian_band(None, None, pvalues=pvalues, correction='none'), (4.0, 5.9))

	def test_no_band(self):
		rng = np.random.default_rng(3)
		winds = np.round(rng.uniform(3.5, 15.0, 20000), 1)
		with self.assertRaises(NoGaussianBandError):
			gaussian_band(rng.choice([-1.0, 1.0], 20000), winds)

	def test_single_bin(self):
		rng = np.random.default_rng(4)
		winds = np.round(rng.uniform(3.5, 15.0, 20000), 1)
		r = rng.choice([-1.0, 1.0], 20000)
		at_seven = winds == 7.0
		r[at_seven] = rng.standard_normal(int(np.sum(at_seven)))
		with self.assertRaises(BandError):
			gaussian_band(r, winds, alpha=1e-4)

	def test_small_bins_untested(self):
		pvalues = band_pvalues(np.zeros(5), [6.0] * 5)
		n, p = pvalues[60]
		self.assertEqual(n, 5)
		self.assertTrue(np.isnan(p))


class TestResidualProfile(TestCase):
	def test_analysis(self):
		corpus = self.corpus(seed=320)
		data = self.train(seed=320)
		model = corpus.truth.enhanced_model()
		profile = analyze_residuals(model, data, alpha=0.05, band=(5.0, 14.0))

		self.assertEqual(profile.band, (5.0, 14.0))
		peak = profile.sigma.at(9.5)
		self.assertGreater(peak, 15.0)
		self.assertLess(peak, 28.0)
		self.assertLess(profile.sigma.at(3.0), 4.0)
		self.assertTrue(profile.in_band(np.array([5.0, 9.9, 14.0])).all())
		self.assertFalse(profile.in_band(np.array([4.9, 14.1])).any())

	def test_persistence(self):
		corpus = self.corpus(seed=321)
		data = self.train(seed=321)
		profile = analyze_residuals(corpus.truth.enhanced_model(), data, band=(5.0, 14.0), correction='none')
		loaded = ResidualProfile.from_json(profile.to_json())

		self.assertEqual(loaded.band, profile.band)
		self.assertEqual(loaded.correction, 'none')
		np.testing.assert_array_equal(loaded.sigma.sigma, profile.sigma.sigma)
		np.testing.assert_array_equal(loaded.sigma.winds, profile.sigma.winds)
		self.assertEqual(loaded.residual_std, profile.residual_std)
		self.assertEqual(
			set(k for k, (n, p) in loaded.ad_pvalues.items() if not np.isnan(p)),
			set(k for k, (n, p) in profile.ad_pvalues.items() if not np.isnan(p)))

		with tempfile.TemporaryDirectory() as base_path:
			path = profile.write_csv(Path(base_path) / 'profile.csv')
			with open(path, 'r') as f:
				lines = f.read().splitlines()
		self.assertEqual(lines[0], 'wind,sigma,n,ad_p')
		self.assertEqual(len(lines), len(profile.sigma.winds) + 1)

	def test_histogram(self):
		rows = list(histogram_rows([0.1, 0.2, -3.0], [5.0, 5.0, 6.0], edges=np.array([-4.0, 0.0, 4.0])))
		self.assertEqual(rows, [(5.0, -4.0, 0.0, 0), (5.0, 0.0, 4.0, 2), (6.0, -4.0, 0.0, 1), (6.0, 0.0, 4.0, 0)])

	def test_zero_sigma_bins_named(self):
		model = EnhancedModel(
			PiecewiseLinear(ModelSpec('piecewise', 1), [100.0, 0.0]), c_phi=0.0, c_T=0.0, T_bar=15.0)
		wind = [8.0] * 40 + [26.0] * 40 + [27.5] * 35
		power = [95.0, 105.0] * 20 + [0.0] * 75
		data = CleanDataset.from_arrays(wind, power)

		with self.assertRaises(DataError) as context:
			analyze_residuals(model, data, band=(5.0, 14.0))
		message = str(context.exception)
		self.assertIn('26.0 (40 records)', message)
		self.assertIn('27.5 (35 records)', message)
