# -*- coding: utf-8 -*-
"""
The pipeline driver behind the command line interface.

Each command takes a validated ``RunConfig``, loads and checks every
input it needs, computes its results, and only then creates the output
directory and writes its files.  Commands return the list of paths
written.
"""

from __future__ import absolute_import

import logging
import math
import os
import sys
from itertools import combinations
from os.path import join

from lissnas.arch import BLOCK
from lissnas.arch import EDGE
from lissnas.arch import OP
from lissnas.arch import canonical_key
from lissnas.arch import total_edit_distance
from lissnas.benchmark import SYNTHETIC
from lissnas.benchmark import TABULAR
from lissnas.benchmark import dump_records
from lissnas.config import NAIVE_X
from lissnas.config import OUT
from lissnas.config import PLOTS
from lissnas.config import PREDICTOR
from lissnas.config import SAMPLE_SIZE
from lissnas.config import SEED
from lissnas.config import THREADS
from lissnas.config import VARIANT
from lissnas.exc import ConfigError
from lissnas.exc import MissingKey
from lissnas.exc import RuntimeAbort
from lissnas.export import AadRow
from lissnas.export import CHANGE_TYPE_LABELS
from lissnas.export import EdfRow
from lissnas.export import HistogramRow
from lissnas.export import KsRow
from lissnas.export import PGoodRow
from lissnas.export import ReportRow
from lissnas.export import RwaRow
from lissnas.export import SpaceRow
from lissnas.export import TraceRow
from lissnas.export import dump_rows
from lissnas.export import dump_summary
from lissnas.export import edf_rows
from lissnas.export import histogram_rows
from lissnas.export import load_summary
from lissnas.export import plot_edfs
from lissnas.export import plot_rwa
from lissnas.export import rwa_rows
from lissnas.export import trace_rows
from lissnas.metrics import COSINE_LIMIT
from lissnas.metrics import RESOURCE_AXES
from lissnas.metrics import aad
from lissnas.metrics import accuracy_threshold
from lissnas.metrics import error_edf
from lissnas.metrics import estimate_p_good
from lissnas.metrics import ks_two_sample
from lissnas.metrics import max_cosine_distance
from lissnas.metrics import resource_histogram
from lissnas.metrics import rwa
from lissnas.metrics import shrink_index
from lissnas.predictor import ORACLE_LOOKUP
from lissnas.predictor import OracleLookupPredictor
from lissnas.predictor import fit_ridge
from lissnas.predictor import load_predictor
from lissnas.shrinkage import SINGLE_ITERATION
from lissnas.shrinkage import ShrinkTrace
from lissnas.shrinkage import lissnas
from lissnas.shrinkage import naive_topx
from lissnas.shrinkage import no_neighbor
from lissnas.shrinkage import query_all_cost
from lissnas.shrinkage import refill_without_locality
from lissnas.spaces import dump_snapshot
from lissnas.spaces import dump_spec
from lissnas.spaces import enumerate_space
from lissnas.spaces import load_snapshot
from lissnas.spaces import raw_cardinality
from lissnas.spaces import raw_count
from lissnas.spaces import sample_uniform
from lissnas.utils import make_rng
from lissnas.utils import parallel_map
from lissnas.utils import spawn_rngs

logger = logging.getLogger(__name__)

# spaces with at most this many raw encodings are enumerated in full
ENUMERATION_LIMIT = 10 ** 6
# fraction of missed tabular lookups tolerated during a run
MISS_TOLERANCE = 0.01

SPEC_FILE = 'spec.json'
BENCHMARK_FILE = 'benchmark.csv'
SNAPSHOT_FILE = 'snapshot.csv'
TRACE_FILE = 'trace.csv'
PGOOD_FILE = 'pgood.csv'
SUMMARY_FILE = 'summary.json'
RWA_FILE = 'rwa.csv'
RWA_PLOT = 'rwa.svg'
AAD_FILE = 'aad.csv'
EDF_FILE = 'edf.csv'
EDF_PLOT = 'edf.svg'
SPACES_FILE = 'spaces.csv'
KS_FILE = 'ks.csv'
HISTOGRAM_FILE = 'histogram_%s.csv'
REPORT_FILE = 'report.csv'

REDUCTION_NOTE = (
    'raw encodings of the full space over isomorphism-free members of the '
    'shrunk space')

__all__ = [
    'PipelineDriver',
]


def true_accuracies(oracle, archs):
    """
    Return the (archs, accuracies) the oracle knows about; architectures
    missing from a tabular oracle are left out.
    """

    kept = []
    values = []
    for arch in archs:
        try:
            values.append(oracle.accuracy(arch))
        except MissingKey:
            continue
        kept.append(arch)
    return kept, values


class PipelineDriver(object):
    """
    Implementations of the commands.
    """

    def __init__(self, stream=None):
        self._stream = stream

    @property
    def stream(self):
        return self._stream or sys.stdout

    def load_space(self, config):
        spec = config.resolve_spec()
        oracle = config.build_oracle(spec)
        return spec, oracle

    def build_predictor(self, config, spec, oracle, rng):
        settings = config[PREDICTOR]
        if settings['kind'] == ORACLE_LOOKUP:
            tolerance = MISS_TOLERANCE if oracle.kind == TABULAR else None
            return OracleLookupPredictor(oracle, miss_tolerance=tolerance)
        if settings.get('path'):
            return load_predictor(settings['path'], oracle)
        archs, values = true_accuracies(oracle, sample_uniform(
            spec, settings['train_size'], rng, config[THREADS]))
        if not archs:
            raise ConfigError(
                'no training architecture for the ridge predictor was found '
                'in the benchmark')
        return fit_ridge(zip(archs, values), spec, settings['lambda'])

    def make_out(self, config):
        out = config[OUT]
        try:
            os.makedirs(out, exist_ok=True)
        except OSError as e:
            raise RuntimeAbort(
                "cannot create output directory '%s': %s" % (out, e))
        return out

    # gen-synthetic

    def gen_synthetic(self, config):
        spec, oracle = self.load_space(config)
        if oracle.kind != SYNTHETIC:
            raise ConfigError('gen-synthetic requires a synthetic oracle')
        rng = make_rng(config[SEED])
        raw = raw_count(spec)
        if raw <= ENUMERATION_LIMIT:
            archs = list(enumerate_space(spec))
        else:
            logger.warning(
                'space has %d raw encodings, over the enumeration limit of '
                '%d; writing a sample of %d architectures instead',
                raw, ENUMERATION_LIMIT, config[SAMPLE_SIZE])
            seen = set()
            archs = []
            for arch in sample_uniform(
                    spec, config[SAMPLE_SIZE], rng, config[THREADS]):
                key = canonical_key(arch)
                if key not in seen:
                    seen.add(key)
                    archs.append(arch)
        records = parallel_map(oracle.query, archs, config[THREADS])

        out = self.make_out(config)
        spec_path = join(out, SPEC_FILE)
        table_path = join(out, BENCHMARK_FILE)
        dump_spec(spec, spec_path)
        dump_records(zip(archs, records), table_path)
        logger.info(
            "wrote %d benchmark records to '%s'", len(records), table_path)
        return [spec_path, table_path]

    # shrink

    def run_variant(self, config, spec, predictor, oracle, rng):
        cfg = config.shrink_config()
        variant = config[VARIANT]
        if variant == 'naive-topx':
            budget = cfg.query_budget or config[SAMPLE_SIZE]
            snapshot = naive_topx(
                spec, predictor, budget, config[NAIVE_X], rng, cfg.threads)
            trace = ShrinkTrace('naive_topx')
            trace.retain(snapshot, [])
            trace.iterations_run = 1
            trace.exit_reason = SINGLE_ITERATION
            return snapshot, trace
        if variant == 'no-neighbor':
            return no_neighbor(spec, predictor, cfg, rng)

        refit = None
        if cfg.refit_each_iteration and config[PREDICTOR]['kind'] != \
                ORACLE_LOOKUP:
            lam = config[PREDICTOR]['lambda']

            def refit(snapshot, iteration):
                archs, values = true_accuracies(oracle, snapshot.archs)
                logger.info(
                    'refitting predictor on %d members for iteration %d',
                    len(archs), iteration)
                return fit_ridge(zip(archs, values), spec, lam)

        if variant == 'no-locality':
            return refill_without_locality(spec, predictor, cfg, rng, refit)
        return lissnas(spec, predictor, cfg, rng, refit)

    def shrink(self, config):
        spec, oracle = self.load_space(config)
        run_rng, reference_rng, fit_rng = spawn_rngs(
            make_rng(config[SEED]), 3)
        predictor = self.build_predictor(config, spec, oracle, fit_rng)
        cfg = config.shrink_config()

        snapshot, trace = self.run_variant(
            config, spec, predictor, oracle, run_rng)
        if isinstance(predictor, OracleLookupPredictor):
            predictor.check_misses()

        # a reference sample shared by every variant at the same seed
        # fixes the threshold and the initial probability.
        reference, reference_acc = true_accuracies(oracle, sample_uniform(
            spec, cfg.initial_sample_size, reference_rng, cfg.threads))
        if not reference:
            raise ConfigError(
                'no architecture of the reference sample was found in the '
                'benchmark')
        threshold = accuracy_threshold(
            reference, oracle, config.metric('threshold_percentile'))
        members, member_acc = true_accuracies(oracle, snapshot.archs)
        if not members:
            raise ConfigError(
                'no member of the shrunk space was found in the benchmark')
        report = shrink_index(
            reference, members, oracle, threshold,
            config.metric('n'), config.metric('k'))
        cardinality = raw_cardinality(spec, make_rng(config[SEED]))

        pgood = [
            PGoodRow(
                retained.iteration, len(retained),
                estimate_p_good(
                    true_accuracies(oracle, retained.archs)[0], oracle,
                    threshold),
                threshold)
            for retained in trace.snapshots
        ]
        summary = {
            'variant': trace.variant,
            'seed': config[SEED],
            'size': len(snapshot),
            'raw_cardinality': cardinality.raw,
            'deduplicated_cardinality': cardinality.deduplicated,
            'cardinality_estimated': cardinality.estimated,
            'reduction_factor': cardinality.raw / float(len(snapshot)),
            'reduction_factor_basis': REDUCTION_NOTE,
            'mean_acc': float(sum(member_acc) / len(member_acc)),
            'max_acc': float(max(member_acc)),
            'initial_mean_acc': float(
                sum(reference_acc) / len(reference_acc)),
            'initial_max_acc': float(max(reference_acc)),
            'mean_pred_acc': snapshot.mean_pred_acc,
            'threshold_acc': threshold,
            'shrink_index': report._asdict(),
            'queries': trace.queries,
            'iterations': trace.iterations_run,
            'exit_reason': trace.exit_reason,
            'query_all_years': query_all_cost(
                spec, config.metric('seconds_per_query'),
                cardinality=cardinality),
        }

        out = self.make_out(config)
        paths = [join(out, name) for name in (
            SNAPSHOT_FILE, TRACE_FILE, PGOOD_FILE, SUMMARY_FILE)]
        dump_snapshot(snapshot, paths[0])
        dump_rows(paths[1], trace_rows(trace), TraceRow)
        dump_rows(paths[2], pgood, PGoodRow)
        dump_summary(summary, paths[3])
        logger.info(
            '%s kept %d architectures; reduction factor %.1f; shrink index '
            '%.4f', trace.variant, len(snapshot), summary['reduction_factor'],
            report.s_i)
        return paths

    # analyze-locality

    def analyze_locality(self, config):
        spec, oracle = self.load_space(config)
        total = total_edit_distance(spec)
        max_lag = config.metric('max_lag') or total
        walk_length = config.metric('walk_length')
        if walk_length <= max_lag:
            raise ConfigError(
                'walk_length (%d) must exceed max_lag (%d)' % (
                    walk_length, max_lag))
        max_distance = config.metric('max_distance') or min(
            total, int(math.ceil(total / 3.0)) + 2)
        change_types = [None] if spec.kind == BLOCK else [None, OP, EDGE]

        threads = config[THREADS]
        num_pairs = config.metric('num_pairs')
        rwa_rng, *aad_rngs = spawn_rngs(
            make_rng(config[SEED]), 1 + max_distance * len(change_types))
        curve = rwa(
            spec, oracle, walk_length, config.metric('num_walks'), max_lag,
            rwa_rng, threads)
        jobs = [
            (distance, change_type)
            for distance in range(1, max_distance + 1)
            for change_type in change_types
        ]
        rows = [
            AadRow(
                distance, CHANGE_TYPE_LABELS[change_type],
                aad(spec, oracle, distance, num_pairs, stream, change_type,
                    threads),
                num_pairs)
            for (distance, change_type), stream in zip(jobs, aad_rngs)
        ]

        out = self.make_out(config)
        paths = [join(out, RWA_FILE), join(out, AAD_FILE)]
        dump_rows(paths[0], rwa_rows(curve), RwaRow)
        dump_rows(paths[1], rows, AadRow)
        if config[PLOTS]:
            paths.append(join(out, RWA_PLOT))
            plot_rwa(curve, paths[-1])
        return paths

    # compare

    def compare(self, config, snapshot_paths):
        if len(snapshot_paths) < 2:
            raise ConfigError('compare requires at least two snapshots')
        spec, oracle = self.load_space(config)
        spaces = []
        for path in snapshot_paths:
            archs, values = true_accuracies(
                oracle, load_snapshot(path, spec).archs)
            if not archs:
                raise ConfigError(
                    "no member of snapshot '%s' was found in the benchmark" %
                    path)
            spaces.append((path, archs, values))

        rng = make_rng(config[SEED])
        named_edfs = []
        space_rows = []
        edf_lines = []
        for name, archs, values in spaces:
            edf = error_edf(values)
            named_edfs.append((name, edf))
            edf_lines.extend(edf_rows(name, edf))
            diversity = (
                max_cosine_distance(archs, spec, rng)
                if len(archs) > 1 else 0.0)
            space_rows.append(SpaceRow(
                name, len(archs), edf.auc(), sum(values) / len(values),
                max(values), diversity, int(len(archs) > COSINE_LIMIT)))

        ks = []
        for (a, edf_a), (b, edf_b) in combinations(named_edfs, 2):
            result = ks_two_sample(edf_a, edf_b)
            ks.append(KsRow(a, b, result.statistic, result.p_value))

        bins = config.metric('bins')
        union = [arch for _, archs, _ in spaces for arch in archs]
        histograms = {}
        for axis in RESOURCE_AXES:
            span = resource_histogram(union, oracle, axis, 1).edges
            rows = []
            for name, archs, _ in spaces:
                rows.extend(histogram_rows(name, resource_histogram(
                    archs, oracle, axis, bins, reference=tuple(span))))
            histograms[axis] = rows

        out = self.make_out(config)
        paths = [join(out, name) for name in (EDF_FILE, SPACES_FILE, KS_FILE)]
        dump_rows(paths[0], edf_lines, EdfRow)
        dump_rows(paths[1], space_rows, SpaceRow)
        dump_rows(paths[2], ks, KsRow)
        for axis in RESOURCE_AXES:
            paths.append(join(out, HISTOGRAM_FILE % axis))
            dump_rows(paths[-1], histograms[axis], HistogramRow)
        if config[PLOTS]:
            paths.append(join(out, EDF_PLOT))
            plot_edfs(named_edfs, paths[-1])
        return paths

    # report

    def report(self, config, directory):
        summary = load_summary(join(directory, SUMMARY_FILE))
        try:
            row = ReportRow(
                summary['variant'], summary['size'],
                summary['raw_cardinality'], summary['reduction_factor'],
                summary['mean_acc'], summary['max_acc'],
                summary['shrink_index']['s_i'])
        except (KeyError, TypeError) as e:
            raise ConfigError(
                "summary in '%s' is missing field %s" % (directory, e))

        lines = [
            ('variant', row.variant),
            ('search space size', '%d' % row.size),
            ('full space size (raw)', '%d' % row.raw_cardinality),
            ('reduction factor', '%.1fx' % row.reduction_factor),
            ('average accuracy', '%.2f' % (100 * row.mean_acc)),
            ('maximum accuracy', '%.2f' % (100 * row.max_acc)),
            ('shrink index', '%.4f' % row.shrink_index),
        ]
        width = max(len(label) for label, _ in lines)
        for label, value in lines:
            self.stream.write('%s  %s\n' % (label.ljust(width), value))
        self.stream.write('(reduction factor: %s)\n' % REDUCTION_NOTE)

        out = self.make_out(config)
        path = join(out, REPORT_FILE)
        dump_rows(path, [row], ReportRow)
        return [path]
