from wtpc.tests import TestCase

import tempfile

from click.testing import CliRunner
from pathlib import Path
from wtpc.__main__ import cli
from wtpc.io.common import read_json


class TestCli(TestCase):
	def invoke(self, *args):
		result = CliRunner().invoke(cli, [str(x) for x in args])
		self.assertEqual(result.exit_code, 0, result.output)
		return result

	def pipeline(self, base_path):
		base_path = Path(base_path)
		corpus = base_path / 'corpus'
		train = corpus / 'train.csv'
		validation = corpus / 'validation.csv'

		self.invoke('simulate', '--seed', 3, '--n', 10000, '--out', corpus)

		self.invoke('clean', '--data', train, '--out', base_path / 'clean')
		report = read_json(base_path / 'clean' / 'report.json', 'cleaning')
		self.assertEqual(report['raw'], 10000)
		self.assertGreaterEqual(report['retained'], 9900)

		self.invoke(
			'select', '--data', train, '--class', 'spline', '--grid', '6..10',
			'--out', base_path / 'select')
		self.invoke(
			'enhance', '--data', train, '--model', base_path / 'select' / 'model.json',
			'--out', base_path / 'enhanced.json')
		self.invoke(
			'residuals', '--data', train, '--enhanced', base_path / 'enhanced.json',
			'--out', base_path / 'residuals')
		self.invoke(
			'arma', '--data', train, '--enhanced', base_path / 'enhanced.json',
			'--profile', base_path / 'residuals' / 'profile.json',
			'--out', base_path / 'dynamic.json')
		self.invoke(
			'forecast', '--dynamic', base_path / 'dynamic.json', '--data', train,
			'--exog', validation, '--steps', 20, '--out', base_path / 'forecast.csv')
		self.invoke(
			'evaluate', '--model', base_path / 'select' / 'model.json',
			'--enhanced', base_path / 'enhanced.json', '--dynamic', base_path / 'dynamic.json',
			'--validation', validation, '--horizons', '10,100', '--out', base_path / 'evaluation')

		return base_path

	def test_pipeline(self):
		outputs = [
			Path('select') / 'sweep.csv',
			Path('select') / 'model.json',
			Path('forecast.csv'),
			Path('evaluation') / 'horizons.csv']

		with tempfile.TemporaryDirectory() as a, tempfile.TemporaryDirectory() as b:
			first = self.pipeline(a)
			second = self.pipeline(b)

			for name in ('clean.csv', 'report.json'):
				self.assertTrue((first / 'clean' / name).exists())
			for name in ('profile.json', 'profile.csv', 'histogram.csv'):
				self.assertTrue((first / 'residuals' / name).exists())
			for name in ('coverage.csv', 'binned.csv', 'summary.json'):
				self.assertTrue((first / 'evaluation' / name).exists())

			with open(first / 'forecast.csv', 'r') as f:
				lines = f.read().splitlines()
			self.assertEqual(lines[0], 'timestamp,power,variance,lo,hi')
			self.assertEqual(len(lines), 21)

			with open(first / 'select' / 'sweep.csv', 'r') as f:
				self.assertEqual(len(f.read().splitlines()), 6)

			for p in outputs:
				with open(first / p, 'rb') as f:
					x = f.read()
				with open(second / p, 'rb') as f:
					y = f.read()
				self.assertEqual(x, y, f"{p} differs between runs")

	def test_missing_artifact(self):
		with tempfile.TemporaryDirectory() as base_path:
			result = CliRunner().invoke(cli, [
				'evaluate', '--validation', str(Path(base_path) / 'validation.csv'),
				'--out', base_path])
		self.assertEqual(result.exit_code, 9)
		self.assertIn('ArtifactError', result.output)

	def test_data_error(self):
		with tempfile.TemporaryDirectory() as base_path:
			base_path = Path(base_path)
			self.invoke('simulate', '--seed', 5, '--n', 200, '--out', base_path / 'corpus')
			result = CliRunner().invoke(cli, [
				'clean', '--data', str(base_path / 'corpus' / 'train.csv'), '--iqr-k', '0',
				'--out', str(base_path / 'clean')])
		self.assertEqual(result.exit_code, 3)
		self.assertIn('iqr_k must be positive', result.output)

	def test_usage_errors(self):
		result = CliRunner().invoke(cli, ['fit', '--class', 'polynomial', '--out', 'model.json'])
		self.assertEqual(result.exit_code, 2)
		self.assertIn('--order', result.output)

		result = CliRunner().invoke(cli, ['select', '--grid', '5..2', '--out', 'x'])
		self.assertEqual(result.exit_code, 2)

	def test_help(self):
		result = CliRunner().invoke(cli, ['evaluate', '--help'])
		self.assertEqual(result.exit_code, 0)
		self.assertIn('Exit codes', result.output)
		self.assertIn('missing or mismatching artifact', result.output)
