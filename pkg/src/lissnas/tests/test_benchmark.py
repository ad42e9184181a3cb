# -*- coding: utf-8 -*-
import unittest
import logging
from os.path import join

import numpy as np

from lissnas.arch import BlockArchitecture
from lissnas.arch import CellArchitecture
from lissnas.arch import canonical_key
from lissnas.arch import mutate_once
from lissnas.benchmark import BenchmarkRecord
from lissnas.benchmark import MEAN
from lissnas.benchmark import TABLE_HEADER
from lissnas.benchmark import TABULAR
from lissnas.benchmark import TARGET_SPREAD
from lissnas.benchmark import dump_records
from lissnas.benchmark import dump_table
from lissnas.benchmark import load_table
from lissnas.benchmark import query
from lissnas.benchmark import synthetic_oracle
from lissnas.exc import ConfigError
from lissnas.exc import EmptyBenchmark
from lissnas.exc import MissingKey
from lissnas.exc import ParseError
from lissnas.exc import SchemaMismatch
from lissnas.exc import SpecViolation
from lissnas.spaces import BlockSpec
from lissnas.spaces import CellSpec
from lissnas.spaces import PRESETS
from lissnas.spaces import enumerate_space
from lissnas.spaces import sample_uniform
from lissnas.utils import make_rng
from lissnas.utils import pretty_logging
from lissnas.utils import write_csv

from lissnas.testing.mocks import StringIO
from lissnas.testing.utils import mkdtemp

SMALL = CellSpec(4, 5, ('input', 'a', 'b', 'output'), 0, 3)


class SyntheticOracleTestCase(unittest.TestCase):

    def test_deterministic(self):
        spec = PRESETS['synthetic']
        archs = sample_uniform(spec, 20, 1)
        a = synthetic_oracle(spec, seed=3)
        b = synthetic_oracle(spec, seed=3)
        c = synthetic_oracle(spec, seed=4)
        self.assertEqual(
            [a.accuracy(x) for x in archs], [b.accuracy(x) for x in archs])
        self.assertEqual(
            [a.accuracy(x) for x in archs], [a.accuracy(x) for x in archs])
        self.assertNotEqual(
            [a.accuracy(x) for x in archs], [c.accuracy(x) for x in archs])

    def test_range_and_spread(self):
        spec = PRESETS['synthetic']
        oracle = synthetic_oracle(spec, seed=1)
        values = [oracle.accuracy(x) for x in sample_uniform(spec, 500, 2)]
        for value in values:
            self.assertTrue(0.0 <= value <= 1.0)
        mean = sum(values) / len(values)
        self.assertTrue(0.7 < mean < 0.9, mean)
        self.assertGreater(max(values) - min(values), 0.05)

    def test_distribution_stays_inside_unit_range(self):
        spec = PRESETS['synthetic']
        for locality in (0.0, 0.75, 1.0):
            oracle = synthetic_oracle(
                spec, locality_strength=locality, seed=11)
            values = np.array([
                oracle.accuracy(x) for x in sample_uniform(spec, 20000, 12)])
            self.assertLess(values.max(), 1.0)
            self.assertLess(np.percentile(values, 99.9), 0.95)
            self.assertGreater(np.percentile(values, 1), 0.5)
            self.assertAlmostEqual(values.mean(), MEAN, delta=0.01)
            self.assertAlmostEqual(values.std(), TARGET_SPREAD, delta=0.005)

        spec = PRESETS['nasbench101']
        oracle = synthetic_oracle(spec, seed=11)
        values = np.array([
            oracle.accuracy(x) for x in sample_uniform(spec, 2000, 12)])
        self.assertLess(np.percentile(values, 99.9), 1.0)
        self.assertGreater(np.percentile(values, 1), 0.5)

    def test_isomorphic_cells_agree(self):
        oracle = synthetic_oracle(SMALL, seed=2)
        a = CellArchitecture.from_raw(
            [[0, 1, 1, 0], [0, 0, 0, 1], [0, 0, 0, 1], [0, 0, 0, 0]],
            (0, 1, 2, 3))
        b = CellArchitecture.from_raw(
            [[0, 1, 1, 0], [0, 0, 0, 1], [0, 0, 0, 1], [0, 0, 0, 0]],
            (0, 2, 1, 3))
        self.assertEqual(oracle.query(a), oracle.query(b))

    def test_record(self):
        oracle = synthetic_oracle(BlockSpec((4, 4)), seed=0)
        record = query(oracle, BlockArchitecture((1, 2)))
        self.assertEqual(record.key, canonical_key(BlockArchitecture((1, 2))))
        # three units of choices
        self.assertEqual(record.flops, 100e6 + 3 * 10e6)
        self.assertEqual(record.params, 1e6 + 3 * 0.25e6)

    def test_bad_parameters(self):
        spec = PRESETS['synthetic']
        with self.assertRaises(ConfigError):
            synthetic_oracle(spec, locality_strength=1.5)
        with self.assertRaises(ConfigError):
            synthetic_oracle(spec, noise_sigma=-0.1)
        with self.assertRaises(ConfigError):
            synthetic_oracle(spec, interaction_order=0)
        with self.assertRaises(ConfigError):
            synthetic_oracle(PRESETS['fairnas'], interaction_order=18)

    def test_query_count(self):
        spec = PRESETS['synthetic']
        oracle = synthetic_oracle(spec, seed=0)
        for arch in sample_uniform(spec, 7, 0):
            oracle.query(arch)
        self.assertEqual(oracle.query_count, 7)
        oracle.reset_query_count()
        self.assertEqual(oracle.query_count, 0)

    def test_single_change_bound(self):
        for spec in (PRESETS['synthetic'], BlockSpec((3, 5, 2))):
            oracle = synthetic_oracle(spec, noise_sigma=0.0, seed=5)
            bound = oracle.max_single_change()
            rng = make_rng(6)
            for arch in sample_uniform(spec, 50, 7):
                following = mutate_once(arch, spec, rng)
                self.assertLessEqual(
                    abs(oracle.accuracy(arch) - oracle.accuracy(following)),
                    bound + 1e-12)

    def test_params(self):
        oracle = synthetic_oracle(PRESETS['synthetic'], seed=9)
        self.assertEqual(oracle.params(), {
            'kind': 'synthetic',
            'locality_strength': 0.75,
            'noise_sigma': 0.005,
            'interaction_order': 4,
            'seed': 9,
        })


class TableTestCase(unittest.TestCase):

    def test_round_trip(self):
        spec = BlockSpec((2, 2, 2))
        oracle = synthetic_oracle(spec, seed=1)
        path = join(mkdtemp(self), 'benchmark.csv')
        dump_table_items = [
            (arch, oracle.query(arch)) for arch in enumerate_space(spec)]
        dump_records(dump_table_items, path)
        table = load_table(path, spec)
        self.assertEqual(table.kind, TABULAR)
        self.assertEqual(len(table), 8)
        for arch, record in dump_table_items:
            self.assertIn(arch, table)
            self.assertEqual(table.query(arch), record)

        again = join(mkdtemp(self), 'again.csv')
        dump_table(table, again)
        self.assertEqual(load_table(again, spec).items(), table.items())

    def test_duplicates_keep_max(self):
        path = join(mkdtemp(self), 'benchmark.csv')
        write_csv(path, TABLE_HEADER, [
            ('110011|0,1,2,3', '0.5', '1.0', '1.0'),
            ('110011|0,2,1,3', '0.75', '2.0', '2.0'),
            ('110011|0,1,1,3', '0.6', '1.0', '1.0'),
            ('110011|0,1,2,3', '0.25', '1.0', '1.0'),
        ])
        stream = StringIO()
        with pretty_logging(
                logger='lissnas', level=logging.DEBUG, stream=stream):
            table = load_table(path, SMALL)
        self.assertEqual(len(table), 2)
        self.assertEqual(table.archs()[0].ops, (0, 2, 1, 3))
        self.assertEqual(table.items()[0][1].accuracy, 0.75)
        self.assertIn('2 duplicates merged', stream.getvalue())

    def test_missing_key(self):
        spec = BlockSpec((2, 2))
        path = join(mkdtemp(self), 'benchmark.csv')
        write_csv(path, TABLE_HEADER, [('0,1', '0.5', '1.0', '1.0')])
        table = load_table(path, spec)
        with self.assertRaises(MissingKey):
            table.accuracy(BlockArchitecture((1, 1)))
        with self.assertRaises(KeyError):
            table.accuracy(BlockArchitecture((1, 1)))

    def test_errors(self):
        spec = BlockSpec((2, 2))
        root = mkdtemp(self)
        path = join(root, 'benchmark.csv')

        write_csv(path, TABLE_HEADER, [
            ('0,1', '0.5', '1.0', '1.0'), ('1,1', '1.5', '1.0', '1.0')])
        with self.assertRaises(ParseError) as e:
            load_table(path, spec)
        self.assertEqual(e.exception.lineno, 3)

        write_csv(path, TABLE_HEADER, [('0,1', 'high', '1.0', '1.0')])
        with self.assertRaises(ParseError):
            load_table(path, spec)

        write_csv(path, TABLE_HEADER, [('0,1', '0.5', '-1.0', '1.0')])
        with self.assertRaises(ParseError):
            load_table(path, spec)

        write_csv(path, TABLE_HEADER, [('0,2', '0.5', '1.0', '1.0')])
        with self.assertRaises(SpecViolation) as e:
            load_table(path, spec)
        self.assertIn(':2:', str(e.exception))

        with open(path, 'wb') as fd:
            fd.write(
                b'architecture_text,accuracy,flops,params\n'
                b'"0,1",0.5,1.0,1.0\n'
                b'"1,1",0.5,1.0,1.0\xff\n')
        with self.assertRaises(ParseError) as e:
            load_table(path, spec)
        self.assertEqual(e.exception.lineno, 3)
        self.assertEqual(e.exception.path, path)

        write_csv(path, TABLE_HEADER, [])
        with self.assertRaises(EmptyBenchmark):
            load_table(path, spec)

        write_csv(path, ('arch', 'acc'), [])
        with self.assertRaises(SchemaMismatch):
            load_table(path, spec)

        with self.assertRaises(ConfigError):
            load_table(join(root, 'missing.csv'), spec)

    def test_record_type(self):
        record = BenchmarkRecord('k', 0.5, 1.0, 2.0)
        self.assertEqual(record.accuracy, 0.5)
