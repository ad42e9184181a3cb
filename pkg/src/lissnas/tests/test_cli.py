# -*- coding: utf-8 -*-
import unittest
import json
from os.path import basename
from os.path import exists
from os.path import join

from lissnas import cli
from lissnas import shrinkage
from lissnas.benchmark import load_table
from lissnas.cli import PipelineDriver
from lissnas.cli import true_accuracies
from lissnas.config import RunConfig
from lissnas.exc import ConfigError
from lissnas.exc import MissingKeyStorm
from lissnas.exc import RuntimeAbort
from lissnas.export import AadRow
from lissnas.export import HistogramRow
from lissnas.export import KsRow
from lissnas.export import PGoodRow
from lissnas.export import ReportRow
from lissnas.export import RwaRow
from lissnas.export import SpaceRow
from lissnas.export import TraceRow
from lissnas.export import load_rows
from lissnas.predictor import RidgePredictor
from lissnas.predictor import fit_ridge
from lissnas.predictor import save_predictor
from lissnas.spaces import BlockSpec
from lissnas.spaces import load_snapshot
from lissnas.spaces import load_spec
from lissnas.spaces import sample_uniform
from lissnas.utils import pretty_logging

from lissnas.testing.mocks import StringIO
from lissnas.testing.utils import mkdtemp
from lissnas.testing.utils import read_bytes
from lissnas.testing.utils import fake_error
from lissnas.testing.utils import read_text
from lissnas.testing.utils import stub_item_attr_value

BLOCK_SPEC = {'kind': 'block', 'choices': [4] * 6}
CELL_SPEC = {
    'kind': 'cell', 'max_nodes': 4, 'max_edges': 5,
    'ops': ['input', 'a', 'b', 'output'], 'input_op': 0, 'output_op': 3,
}
SHRINK = {
    'initial_sample_size': 200, 'seeds_per_iteration': 10,
    'neighbors_per_seed': 8, 'allow_small_sample': True,
}
METRICS = {'num_walks': 10, 'walk_length': 20, 'num_pairs': 40}


def make_config(out, **kw):
    values = dict(
        seed=1, out=out, spec=BLOCK_SPEC, shrink=SHRINK, metrics=METRICS)
    values.update(kw)
    return RunConfig.create(**values)


class GenSyntheticTestCase(unittest.TestCase):

    def test_enumerated(self):
        out = join(mkdtemp(self), 'bench')
        driver = PipelineDriver()
        paths = driver.gen_synthetic(make_config(out))
        self.assertEqual(
            [basename(path) for path in paths],
            ['spec.json', 'benchmark.csv'])
        spec = load_spec(paths[0])
        self.assertEqual(spec, BlockSpec((4,) * 6))
        table = load_table(paths[1], spec)
        self.assertEqual(len(table), 4096)

    def test_sampled(self):
        out = mkdtemp(self)
        stream = StringIO()
        config = make_config(
            out, spec={'kind': 'block', 'choices': [8] * 7}, sample_size=300)
        with pretty_logging(logger='lissnas', stream=stream):
            paths = PipelineDriver().gen_synthetic(config)
        self.assertIn('over the enumeration limit', stream.getvalue())
        table = load_table(paths[1], load_spec(paths[0]))
        self.assertLessEqual(len(table), 300)
        self.assertGreater(len(table), 290)

    def test_deterministic(self):
        root = mkdtemp(self)
        first = PipelineDriver().gen_synthetic(make_config(join(root, 'a')))
        second = PipelineDriver().gen_synthetic(make_config(join(root, 'b')))
        self.assertEqual(read_bytes(first[1]), read_bytes(second[1]))

    def test_out_is_a_file(self):
        out = join(mkdtemp(self), 'taken')
        with open(out, 'w'):
            pass
        with self.assertRaises(RuntimeAbort):
            PipelineDriver().gen_synthetic(make_config(out))

    def test_requires_synthetic(self):
        out = join(mkdtemp(self), 'bench')
        PipelineDriver().gen_synthetic(make_config(out))
        config = make_config(join(out, 'again'), oracle={
            'kind': 'tabular', 'path': join(out, 'benchmark.csv')})
        with self.assertRaises(ConfigError):
            PipelineDriver().gen_synthetic(config)
        self.assertFalse(exists(join(out, 'again')))


class ShrinkTestCase(unittest.TestCase):

    def test_lissnas(self):
        out = mkdtemp(self)
        paths = PipelineDriver().shrink(make_config(out))
        self.assertEqual([basename(path) for path in paths], [
            'snapshot.csv', 'trace.csv', 'pgood.csv', 'summary.json'])
        with open(paths[3]) as fd:
            summary = json.load(fd)
        snapshot = load_snapshot(paths[0], BlockSpec((4,) * 6))
        self.assertEqual(summary['variant'], 'lissnas')
        self.assertEqual(summary['size'], len(snapshot))
        self.assertEqual(summary['raw_cardinality'], 4096)
        self.assertFalse(summary['cardinality_estimated'])
        self.assertEqual(
            summary['reduction_factor'], 4096.0 / len(snapshot))
        self.assertGreater(summary['mean_acc'], summary['initial_mean_acc'])
        self.assertGreater(summary['shrink_index']['s_i'], 0.0)
        self.assertEqual(summary['shrink_index']['n'], 20)
        self.assertLessEqual(summary['size'], 10 * 9)

        trace = load_rows(paths[1], TraceRow)
        self.assertEqual(len(trace), len(load_rows(paths[2], PGoodRow)))
        self.assertEqual(trace[-1].size, len(snapshot))
        self.assertEqual(trace[-1].queries_cumulative, summary['queries'])
        self.assertGreaterEqual(summary['iterations'], len(trace))

    def test_cardinality_computed_once(self):
        calls = []
        original = cli.raw_cardinality

        def counting(*a, **kw):
            calls.append(a[0])
            return original(*a, **kw)

        stub_item_attr_value(self, cli, 'raw_cardinality', counting)
        stub_item_attr_value(
            self, shrinkage, 'raw_cardinality',
            fake_error(AssertionError('cardinality computed again')))
        paths = PipelineDriver().shrink(make_config(mkdtemp(self)))
        self.assertEqual(calls, [BlockSpec((4,) * 6)])
        with open(paths[3]) as fd:
            summary = json.load(fd)
        self.assertEqual(
            summary['query_all_years'],
            4096 * 86400.0 / shrinkage.SECONDS_PER_YEAR)

    def test_byte_identical(self):
        root = mkdtemp(self)
        first = PipelineDriver().shrink(make_config(join(root, 'a')))
        second = PipelineDriver().shrink(
            make_config(join(root, 'b'), threads=3))
        for a, b in zip(first, second):
            self.assertEqual(read_bytes(a), read_bytes(b))

    def test_variants(self):
        root = mkdtemp(self)
        driver = PipelineDriver()
        summaries = {}
        for variant in ('naive-topx', 'no-neighbor', 'no-locality'):
            out = join(root, variant)
            paths = driver.shrink(make_config(
                out, variant=variant, sample_size=500))
            with open(paths[3]) as fd:
                summaries[variant] = json.load(fd)
        self.assertEqual(summaries['naive-topx']['variant'], 'naive_topx')
        # five percent of the distinct members of 500 draws
        self.assertTrue(20 <= summaries['naive-topx']['size'] <= 25)
        self.assertEqual(summaries['no-neighbor']['size'], 10)
        self.assertEqual(
            summaries['no-neighbor']['exit_reason'], 'single_iteration')
        self.assertEqual(summaries['no-locality']['variant'], 'no_locality')

    def test_tabular_with_ridge(self):
        root = mkdtemp(self)
        bench = join(root, 'bench')
        PipelineDriver().gen_synthetic(make_config(bench))
        config = make_config(
            join(root, 'run'),
            oracle={'kind': 'tabular', 'path': join(bench, 'benchmark.csv')},
            predictor={'kind': 'ridge', 'train_size': 300},
            shrink=dict(SHRINK, refit_each_iteration=True))
        paths = PipelineDriver().shrink(config)
        with open(paths[3]) as fd:
            summary = json.load(fd)
        self.assertGreater(summary['mean_acc'], summary['initial_mean_acc'])

    def test_saved_predictor(self):
        root = mkdtemp(self)
        spec = BlockSpec((4,) * 6)
        predictor = fit_ridge(
            [(arch, sum(arch.choices) / 18.0)
             for arch in sample_uniform(spec, 100, 0)], spec)
        path = join(root, 'predictor.json')
        save_predictor(predictor, path)
        config = make_config(
            join(root, 'run'), predictor={'kind': 'ridge', 'path': path})
        loaded = PipelineDriver().build_predictor(
            config, spec, config.build_oracle(spec), 0)
        self.assertTrue(isinstance(loaded, RidgePredictor))
        self.assertEqual(list(loaded.weights), list(predictor.weights))

    def test_tabular_misses(self):
        root = mkdtemp(self)
        bench = join(root, 'bench')
        # a benchmark covering a fraction of the space
        PipelineDriver().gen_synthetic(make_config(
            bench, spec={'kind': 'block', 'choices': [8] * 7},
            sample_size=300))
        config = make_config(
            join(root, 'run'), spec=join(bench, 'spec.json'),
            oracle={'kind': 'tabular', 'path': join(bench, 'benchmark.csv')})
        with self.assertRaises(MissingKeyStorm):
            PipelineDriver().shrink(config)
        self.assertFalse(exists(join(root, 'run')))

    def test_missing_spec_writes_nothing(self):
        root = mkdtemp(self)
        config = make_config(join(root, 'run'), spec=join(root, 'none.json'))
        with self.assertRaises(ConfigError):
            PipelineDriver().shrink(config)
        self.assertFalse(exists(join(root, 'run')))


class AnalyzeLocalityTestCase(unittest.TestCase):

    def test_block(self):
        out = mkdtemp(self)
        paths = PipelineDriver().analyze_locality(make_config(out))
        self.assertEqual(
            [basename(path) for path in paths], ['rwa.csv', 'aad.csv'])
        curve = load_rows(paths[0], RwaRow)
        # max_lag defaults to the total edit distance
        self.assertEqual([row.lag for row in curve], list(range(7)))
        self.assertEqual(curve[0].autocorrelation, 1.0)
        rows = load_rows(paths[1], AadRow)
        self.assertEqual([row.distance for row in rows], [1, 2, 3, 4])
        self.assertEqual(set(row.change_type for row in rows), {'both'})
        self.assertEqual(set(row.num_pairs for row in rows), {40})

    def test_cell(self):
        out = mkdtemp(self)
        config = make_config(out, spec=CELL_SPEC, metrics=dict(
            METRICS, max_lag=3, max_distance=2))
        paths = PipelineDriver().analyze_locality(config)
        rows = load_rows(paths[1], AadRow)
        self.assertEqual(
            [(row.distance, row.change_type) for row in rows], [
                (1, 'both'), (1, 'operation'), (1, 'edge'),
                (2, 'both'), (2, 'operation'), (2, 'edge'),
            ])

    def test_walk_too_short(self):
        out = join(mkdtemp(self), 'out')
        config = make_config(out, metrics=dict(METRICS, walk_length=6))
        with self.assertRaises(ConfigError):
            PipelineDriver().analyze_locality(config)
        self.assertFalse(exists(out))


class CompareReportTestCase(unittest.TestCase):

    def setUp(self):
        self.root = mkdtemp(self)
        driver = PipelineDriver()
        self.lissnas = driver.shrink(make_config(join(self.root, 'lissnas')))
        self.naive = driver.shrink(make_config(
            join(self.root, 'naive'), variant='naive-topx', sample_size=500))

    def test_compare(self):
        out = join(self.root, 'compare')
        paths = PipelineDriver().compare(
            make_config(out, metrics=dict(METRICS, bins=5)),
            [self.lissnas[0], self.naive[0]])
        self.assertEqual([basename(path) for path in paths], [
            'edf.csv', 'spaces.csv', 'ks.csv', 'histogram_flops.csv',
            'histogram_params.csv'])
        spaces = load_rows(paths[1], SpaceRow)
        self.assertEqual(
            [row.space for row in spaces], [self.lissnas[0], self.naive[0]])
        for row in spaces:
            self.assertAlmostEqual(row.auc, row.mean_acc, places=12)
            self.assertEqual(row.subsampled, 0)
        ks = load_rows(paths[2], KsRow)
        self.assertEqual(len(ks), 1)
        self.assertTrue(0.0 <= ks[0].statistic <= 1.0)
        histogram = load_rows(paths[3], HistogramRow)
        self.assertEqual(len(histogram), 10)
        # both spaces share the bin edges
        self.assertEqual(
            [row.lower for row in histogram[:5]],
            [row.lower for row in histogram[5:]])
        self.assertEqual(
            sum(row.count for row in histogram[:5]), spaces[0].size)

    def test_compare_errors(self):
        with self.assertRaises(ConfigError):
            PipelineDriver().compare(
                make_config(join(self.root, 'c')), [self.lissnas[0]])

    def test_report(self):
        stream = StringIO()
        out = join(self.root, 'report')
        paths = PipelineDriver(stream=stream).report(
            make_config(out), join(self.root, 'lissnas'))
        text = stream.getvalue()
        self.assertIn('variant', text)
        self.assertIn('lissnas', text)
        self.assertIn('reduction factor', text)
        row = load_rows(paths[0], ReportRow)[0]
        with open(self.lissnas[3]) as fd:
            summary = json.load(fd)
        self.assertEqual(row.size, summary['size'])
        self.assertIn(
            'average accuracy'.ljust(21) + '  %.2f\n' % (
                100 * summary['mean_acc']), text)
        self.assertTrue(read_text(paths[0]).startswith('variant,size,'))

    def test_report_missing(self):
        with self.assertRaises(ConfigError):
            PipelineDriver(stream=StringIO()).report(
                make_config(join(self.root, 'r')), join(self.root, 'none'))


class TrueAccuraciesTestCase(unittest.TestCase):

    def test_skips_missing(self):
        root = mkdtemp(self)
        PipelineDriver().gen_synthetic(make_config(
            root, spec={'kind': 'block', 'choices': [8] * 7},
            sample_size=50))
        spec = load_spec(join(root, 'spec.json'))
        table = load_table(join(root, 'benchmark.csv'), spec)
        archs = table.archs()[:3] + sample_uniform(spec, 3, 99)
        kept, values = true_accuracies(table, archs)
        self.assertEqual(kept[:3], archs[:3])
        self.assertEqual(len(kept), len(values))
