import unittest
import tempfile
import numpy as np

from pathlib import Path
from wtpc.data import CleanDataset, clean
from wtpc.synthetic import GeneratorConfig, generate, write_corpus, read_corpus


def load_corpus(config):
    """
    Generates a corpus, writes it to disk and reads it back, so that tests
    only see ground truth as stored next to the data.
    """

    with tempfile.TemporaryDirectory() as base_path:
        path = Path(base_path) / 'corpus'
        write_corpus(path, generate(config))
        return read_corpus(path)


def noisy_curve_data(curve, n, sigma, rng, w_max=25.0):
    w = np.round(rng.uniform(0, w_max, n), 1)
    p = np.round(curve(w) + sigma * rng.standard_normal(n), 1)
    return CleanDataset.from_arrays(w, p)


class TestCase(unittest.TestCase):
    corpora = {}

    def corpus(self, **kwargs):
        config = GeneratorConfig(**kwargs)
        if config not in TestCase.corpora:
            TestCase.corpora[config] = load_corpus(config)
        return TestCase.corpora[config]

    def train(self, **kwargs):
        return clean(self.corpus(**kwargs).train)

    def validation(self, **kwargs):
        return clean(self.corpus(**kwargs).validation)

    def assertRelativeClose(self, actual, expected, rtol, msg=None):
        self.assertLessEqual(
            abs(actual - expected), rtol * abs(expected),
            msg or f"{actual} differs from {expected} by more than {rtol} relative")
