# -*- coding: utf-8 -*-
import unittest
import math
from os.path import join

import numpy as np
from scipy.stats import spearmanr

from lissnas.arch import BlockArchitecture
from lissnas.arch import CellArchitecture
from lissnas.benchmark import load_table
from lissnas.benchmark import dump_records
from lissnas.benchmark import synthetic_oracle
from lissnas.exc import ConfigError
from lissnas.exc import DomainError
from lissnas.exc import MissingKey
from lissnas.exc import MissingKeyStorm
from lissnas.exc import SingularSystem
from lissnas.predictor import MISS_CHECK_MINIMUM
from lissnas.predictor import OracleLookupPredictor
from lissnas.predictor import RidgePredictor
from lissnas.predictor import embed
from lissnas.predictor import embedding_length
from lissnas.predictor import fit_ridge
from lissnas.predictor import load_predictor
from lissnas.predictor import predict
from lissnas.predictor import predict_many
from lissnas.predictor import save_predictor
from lissnas.spaces import BlockSpec
from lissnas.spaces import CellSpec
from lissnas.spaces import PRESETS
from lissnas.spaces import enumerate_space
from lissnas.spaces import sample_uniform

from lissnas.testing.utils import mkdtemp
from lissnas.testing.utils import write_json

SMALL = CellSpec(4, 5, ('input', 'a', 'b', 'output'), 0, 3)


class EmbeddingTestCase(unittest.TestCase):

    def test_block(self):
        spec = BlockSpec((2, 3))
        self.assertEqual(embedding_length(spec), 5)
        self.assertEqual(
            embed(BlockArchitecture((1, 2)), spec).tolist(),
            [0.0, 1.0, 0.0, 0.0, 1.0])

    def test_cell_padding(self):
        # three upper triangle slots padded to four nodes
        self.assertEqual(embedding_length(SMALL), 6 + 4 * 5)
        arch = CellArchitecture.from_raw(
            [[0, 1, 0], [0, 0, 1], [0, 0, 0]], (0, 1, 3))
        values = embed(arch, SMALL).tolist()
        # edges 0-1 and 1-3 in the padded layout
        self.assertEqual(values[:6], [1.0, 0.0, 0.0, 0.0, 1.0, 0.0])
        groups = [values[6 + 5 * k:11 + 5 * k] for k in range(4)]
        self.assertEqual(groups[0], [1.0, 0.0, 0.0, 0.0, 0.0])
        self.assertEqual(groups[1], [0.0, 1.0, 0.0, 0.0, 0.0])
        # the unused slot is marked absent
        self.assertEqual(groups[2], [0.0, 0.0, 0.0, 0.0, 1.0])
        self.assertEqual(groups[3], [0.0, 0.0, 0.0, 1.0, 0.0])


class RidgeTestCase(unittest.TestCase):

    def test_fit_recovers_additive(self):
        spec = BlockSpec((2, 2, 2))
        weights = [0.1, -0.05, 0.02]

        def accuracy(arch):
            return 0.5 + sum(w * c for w, c in zip(weights, arch.choices))

        pairs = [(arch, accuracy(arch)) for arch in enumerate_space(spec)]
        predictor = fit_ridge(pairs, spec, lam=1e-9)
        for arch, value in pairs:
            self.assertAlmostEqual(predictor.predict(arch), value, places=5)
        self.assertEqual(predict(predictor, pairs[0][0]), predictor.predict(
            pairs[0][0]))

    def test_clamped(self):
        spec = BlockSpec((2,))
        predictor = RidgePredictor(spec, [0.0, 2.0], 0.0)
        self.assertEqual(predictor.predict(BlockArchitecture((1,))), 1.0)
        self.assertEqual(predictor.raw(BlockArchitecture((1,))), 2.0)
        predictor = RidgePredictor(spec, [-1.0, 0.0], 0.0)
        self.assertEqual(predictor.predict(BlockArchitecture((0,))), 0.0)

    def test_errors(self):
        spec = BlockSpec((2, 2))
        pairs = [(arch, 0.5) for arch in enumerate_space(spec)]
        with self.assertRaises(SingularSystem):
            fit_ridge(pairs, spec, lam=0)
        with self.assertRaises(DomainError):
            fit_ridge([], spec)
        with self.assertRaises(DomainError):
            fit_ridge(pairs, spec, lam=-1)
        with self.assertRaises(DomainError):
            fit_ridge(pairs, spec, sample_weight=[1, 1])
        with self.assertRaises(DomainError):
            fit_ridge(pairs, spec, sample_weight=[0, 0, 0, 0])
        with self.assertRaises(ConfigError):
            RidgePredictor(spec, [0.0] * 3, 0.0)

    def test_sample_weight(self):
        spec = BlockSpec((2,))
        pairs = [
            (BlockArchitecture((0,)), 0.2),
            (BlockArchitecture((0,)), 0.4),
            (BlockArchitecture((1,)), 0.8),
        ]
        plain = fit_ridge(pairs, spec, lam=1e-9)
        self.assertAlmostEqual(
            plain.predict(BlockArchitecture((0,))), 0.3, places=5)
        weighted = fit_ridge(pairs, spec, lam=1e-9, sample_weight=[3, 1, 1])
        self.assertAlmostEqual(
            weighted.predict(BlockArchitecture((0,))), 0.25, places=5)
        self.assertAlmostEqual(
            weighted.predict(BlockArchitecture((1,))), 0.8, places=5)

    def test_ranks_synthetic(self):
        spec = PRESETS['synthetic']
        oracle = synthetic_oracle(spec, locality_strength=0.1, seed=0)
        train = sample_uniform(spec, 600, 1)
        predictor = fit_ridge(
            [(arch, oracle.accuracy(arch)) for arch in train], spec)
        held = sample_uniform(spec, 300, 2)
        rho = spearmanr(
            predict_many(predictor, held, threads=2),
            [oracle.accuracy(arch) for arch in held]).correlation
        self.assertGreater(rho, 0.7)

    def test_ranks_default_synthetic(self):
        # interactions dominate at default settings so ranking is weak
        spec = PRESETS['synthetic']
        for seed in range(5):
            oracle = synthetic_oracle(spec, seed=seed)
            train = sample_uniform(spec, 1000, 100 + seed)
            predictor = fit_ridge(
                [(arch, oracle.accuracy(arch)) for arch in train], spec,
                lam=1e-3)
            held = sample_uniform(spec, 1000, 200 + seed)
            rho = spearmanr(
                predict_many(predictor, held),
                [oracle.accuracy(arch) for arch in held]).correlation
            self.assertGreater(rho, 0.15, seed)

    def test_predict_many_order(self):
        spec = BlockSpec((3, 3))
        predictor = RidgePredictor(spec, [0.1, 0.2, 0.3, 0.0, 0.01, 0.02], 0.1)
        archs = list(enumerate_space(spec))
        self.assertEqual(
            predictor.predict_many(archs, threads=4),
            [predictor.predict(arch) for arch in archs])

    def test_save_load(self):
        spec = SMALL
        oracle = synthetic_oracle(spec, seed=1)
        archs = sample_uniform(spec, 80, 3)
        predictor = fit_ridge(
            [(arch, oracle.accuracy(arch)) for arch in archs], spec, lam=0.01)
        path = join(mkdtemp(self), 'predictor.json')
        save_predictor(predictor, path)
        loaded = load_predictor(path)
        self.assertEqual(loaded.spec, spec)
        self.assertEqual(loaded.lam, 0.01)
        self.assertEqual(
            [loaded.predict(arch) for arch in archs],
            [predictor.predict(arch) for arch in archs])

    def test_load_errors(self):
        root = mkdtemp(self)
        with self.assertRaises(ConfigError):
            load_predictor(join(root, 'missing.json'))
        bad = join(root, 'bad.json')
        with open(bad, 'w') as fd:
            fd.write('{')
        with self.assertRaises(ConfigError):
            load_predictor(bad)
        with self.assertRaises(ConfigError):
            load_predictor(write_json(join(root, 'kind.json'), {'kind': 'x'}))
        with self.assertRaises(ConfigError):
            load_predictor(write_json(
                join(root, 'partial.json'), {'kind': 'ridge'}))
        with self.assertRaises(ConfigError):
            load_predictor(write_json(
                join(root, 'lookup.json'), {'kind': 'oracle_lookup'}))


class OracleLookupTestCase(unittest.TestCase):

    def setUp(self):
        spec = BlockSpec((3, 3))
        oracle = synthetic_oracle(spec, seed=2)
        path = join(mkdtemp(self), 'benchmark.csv')
        # everything but the final architecture
        archs = list(enumerate_space(spec))
        dump_records([(arch, oracle.query(arch)) for arch in archs[:-1]], path)
        self.table = load_table(path, spec)
        self.present = archs[0]
        self.absent = archs[-1]

    def test_exact(self):
        predictor = OracleLookupPredictor(self.table)
        self.assertEqual(
            predictor.predict(self.present),
            self.table.accuracy(self.present))
        with self.assertRaises(MissingKey):
            predictor.predict(self.absent)

    def test_tolerated_miss(self):
        predictor = OracleLookupPredictor(self.table, miss_tolerance=0.01)
        self.assertTrue(math.isnan(predictor.predict(self.absent)))
        self.assertEqual(predictor.misses, 1)
        for _ in range(MISS_CHECK_MINIMUM):
            predictor.predict(self.present)
        # one miss in just over a hundred calls is within one percent
        predictor.check_misses()
        with self.assertRaises(MissingKeyStorm):
            predictor.predict(self.absent)
        self.assertEqual(predictor.misses, 2)

    def test_storm_while_predicting(self):
        predictor = OracleLookupPredictor(self.table, miss_tolerance=0.01)
        with self.assertRaises(MissingKeyStorm):
            for _ in range(MISS_CHECK_MINIMUM):
                predictor.predict(self.absent)
        self.assertTrue(np.isfinite(predictor.predict(self.present)))
