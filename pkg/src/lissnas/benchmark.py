# -*- coding: utf-8 -*-
"""
Ground truth accuracy oracles.

Two kinds are provided: a tabular oracle loaded from a CSV export of a
benchmark, and a synthetic oracle whose accuracies are a deterministic
function of the architecture and a seed.

The CSV schema has a required header and one architecture per row::

    architecture_text,accuracy,flops,params
    "0,3,1,2",0.9312,131000000.0,1750000.0

Accuracy is a fraction in [0, 1]; flops (multiply-adds) and params are
non-negative.  Architecture texts are validated against the space spec
and rows are keyed by canonical key; where several rows describe the
same architecture up to isomorphism the highest accuracy is kept.

The synthetic accuracy of a block architecture x with choices x[l] is::

    clamp(MEAN + scale * (s(x) - center) + noise(x), 0, 1)
    s(x) = sum_l w[l][x[l]]
           + locality_strength * sum_l v[l][x[l], ..., x[l + K]]

where the interaction windows span K + 1 consecutive layers wrapping
around (K is the ``interaction_order``; K = 1 gives adjacent pairs).
The additive weights are centered per layer and interaction weights are
drawn ``INTERACTION_SCALE`` times wider.  center and scale are measured
on ``CALIBRATION_SAMPLES`` uniform draws so that the score has a mean
of ``MEAN`` and a standard deviation of ``TARGET_SPREAD`` whatever the
locality strength; clamping then touches almost no architecture.  The
noise term is ``noise_sigma`` times a standard normal quantile derived
from a hash of the seed and the canonical key, so repeated queries
agree.

Cells use isomorphism invariant terms instead of positions: one weight
per intermediate node's op, one per edge keyed by the ops at both ends,
and interactions keyed by the ops along every two-edge path.

Synthetic resource figures are affine in the op codes::

    flops  = FLOPS_BASE + FLOPS_PER_UNIT * units
    params = PARAMS_BASE + PARAMS_PER_UNIT * units

with units the sum of the choices (blocks), or the sum of the
intermediate op codes plus ``EDGE_UNITS`` per edge (cells).
"""

from __future__ import absolute_import

import hashlib
import logging
import threading
from collections import OrderedDict
from collections import namedtuple
from math import prod
from math import sqrt

import numpy as np
from scipy.special import ndtri

from lissnas.arch import BLOCK
from lissnas.arch import canonical_key
from lissnas.arch import format_arch
from lissnas.arch import parse_arch
from lissnas.exc import ConfigError
from lissnas.exc import EmptyBenchmark
from lissnas.exc import MissingKey
from lissnas.exc import ParseError
from lissnas.exc import SpecViolation
from lissnas.spaces import sample_uniform
from lissnas.utils import format_float
from lissnas.utils import read_csv
from lissnas.utils import write_csv

logger = logging.getLogger(__name__)

TABULAR = 'tabular'
SYNTHETIC = 'synthetic'

TABLE_HEADER = ('architecture_text', 'accuracy', 'flops', 'params')

MEAN = 0.8
TARGET_SPREAD = 0.04
INTERACTION_SCALE = 3.0
DEFAULT_LOCALITY_STRENGTH = 0.75
DEFAULT_NOISE_SIGMA = 0.005
DEFAULT_INTERACTION_ORDER = 4
# entries across all interaction tables of a block oracle
MAX_INTERACTION_ENTRIES = 10 ** 7
# uniform draws used to measure the spread of the combined score
CALIBRATION_SAMPLES = 2048

FLOPS_BASE = 100e6
FLOPS_PER_UNIT = 10e6
PARAMS_BASE = 1e6
PARAMS_PER_UNIT = 0.25e6
EDGE_UNITS = 1

BenchmarkRecord = namedtuple('BenchmarkRecord', [
    'key', 'accuracy', 'flops', 'params'])


class BenchmarkOracle(object):
    """
    Base oracle; tracks the number of queries made against it.
    """

    kind = None

    def __init__(self, spec):
        self.spec = spec
        self._lock = threading.Lock()
        self._query_count = 0

    @property
    def query_count(self):
        return self._query_count

    def reset_query_count(self):
        with self._lock:
            self._query_count = 0

    def lookup(self, arch):
        raise NotImplementedError

    def query(self, arch):
        with self._lock:
            self._query_count += 1
        return self.lookup(arch)

    def accuracy(self, arch):
        return self.query(arch).accuracy


class TabularOracle(BenchmarkOracle):

    kind = TABULAR

    def __init__(self, spec, entries):
        """
        entries is an OrderedDict of canonical key to a tuple of
        (architecture, BenchmarkRecord).
        """

        super(TabularOracle, self).__init__(spec)
        self.entries = entries

    def __len__(self):
        return len(self.entries)

    def __contains__(self, arch):
        return canonical_key(arch) in self.entries

    def items(self):
        return list(self.entries.values())

    def archs(self):
        return [arch for arch, _ in self.entries.values()]

    def lookup(self, arch):
        key = canonical_key(arch)
        try:
            return self.entries[key][1]
        except KeyError:
            raise MissingKey(
                "architecture '%s' not found in benchmark table" %
                format_arch(arch))


def _block_units(arch):
    return sum(arch.choices)


def _cell_units(arch):
    return sum(arch.ops[1:-1]) + EDGE_UNITS * arch.num_edges


def synthetic_resources(arch):
    """
    The (flops, params) figures of an architecture.
    """

    units = _block_units(arch) if arch.kind == BLOCK else _cell_units(arch)
    return (
        FLOPS_BASE + FLOPS_PER_UNIT * units,
        PARAMS_BASE + PARAMS_PER_UNIT * units,
    )


def _two_paths(arch):
    n = arch.num_nodes
    matrix = arch.matrix
    for j in range(1, n - 1):
        sources = [i for i in range(j) if matrix[i][j]]
        targets = [k for k in range(j + 1, n) if matrix[j][k]]
        for i in sources:
            for k in targets:
                yield i, j, k


class SyntheticOracle(BenchmarkOracle):
    """
    Synthetic locality preserving benchmark; see module documentation.
    """

    kind = SYNTHETIC

    def __init__(
            self, spec, locality_strength=DEFAULT_LOCALITY_STRENGTH,
            noise_sigma=DEFAULT_NOISE_SIGMA, seed=0,
            interaction_order=DEFAULT_INTERACTION_ORDER):
        if not 0 <= locality_strength <= 1:
            raise ConfigError('locality_strength must be within [0, 1]')
        if noise_sigma < 0:
            raise ConfigError('noise_sigma must not be negative')
        if interaction_order < 1:
            raise ConfigError('interaction_order must be at least 1')
        super(SyntheticOracle, self).__init__(spec)
        self.locality_strength = float(locality_strength)
        self.noise_sigma = float(noise_sigma)
        self.seed = int(seed)
        self.interaction_order = int(interaction_order)
        rng = np.random.default_rng(self.seed)
        if spec.kind == BLOCK:
            self._init_block(rng)
        else:
            self._init_cell(rng)
        self._calibrate(rng)

    def _init_block(self, rng):
        choices = self.spec.choices
        size = len(choices)
        window = min(self.interaction_order + 1, size)
        self.windows = [
            tuple((layer + offset) % size for offset in range(window))
            for layer in range(size)
        ]
        entries = sum(
            prod(choices[p] for p in positions) for positions in self.windows)
        if entries > MAX_INTERACTION_ENTRIES:
            raise ConfigError(
                'interaction tables would hold %d entries; lower the '
                'interaction_order' % entries)
        scale = TARGET_SPREAD / sqrt(size)
        self.weights = []
        for count in choices:
            w = rng.normal(0.0, scale, count)
            self.weights.append(w - w.mean())
        self.interactions = [
            rng.normal(
                0.0, INTERACTION_SCALE * scale,
                tuple(choices[p] for p in positions))
            for positions in self.windows
        ]

    def _init_cell(self, rng):
        spec = self.spec
        vocab = len(spec.ops)
        scale = TARGET_SPREAD / sqrt(spec.max_nodes - 2 + spec.max_edges)
        node = np.zeros(vocab)
        choices = list(spec.op_choices)
        if choices:
            w = rng.normal(0.0, scale, len(choices))
            node[choices] = w - w.mean()
        self.node_weights = node
        self.edge_weights = rng.normal(0.0, scale, (vocab, vocab))
        self.path_weights = rng.normal(
            0.0, INTERACTION_SCALE * scale, (vocab, vocab, vocab))

    def _calibrate(self, rng):
        self._center = 0.0
        self._scale = 1.0
        scores = np.array([
            self._combined(arch)
            for arch in sample_uniform(self.spec, CALIBRATION_SAMPLES, rng)])
        self._center = float(scores.mean())
        spread = float(scores.std())
        if spread > 1e-12:
            self._scale = TARGET_SPREAD / spread
        logger.debug(
            'synthetic score centered at %.6f and scaled by %.6f',
            self._center, self._scale)

    def noise(self, key):
        if not self.noise_sigma:
            return 0.0
        digest = hashlib.sha256(
            ('%d:%s' % (self.seed, key)).encode('utf-8')).digest()
        uniform = (int.from_bytes(digest[:8], 'big') + 0.5) / 2.0 ** 64
        return self.noise_sigma * float(ndtri(uniform))

    def _combined(self, arch):
        if arch.kind == BLOCK:
            choices = arch.choices
            total = sum(
                float(w[c]) for w, c in zip(self.weights, choices))
            inter = sum(
                float(v[tuple(choices[p] for p in positions)])
                for v, positions in zip(self.interactions, self.windows))
        else:
            ops = arch.ops
            total = sum(float(self.node_weights[op]) for op in ops[1:-1])
            total += sum(
                float(self.edge_weights[ops[i], ops[j]])
                for i, j in arch.edges())
            inter = sum(
                float(self.path_weights[ops[i], ops[j], ops[k]])
                for i, j, k in _two_paths(arch))
        return total + self.locality_strength * inter

    def raw_score(self, arch):
        """
        The noiseless, unclamped accuracy.
        """

        return MEAN + self._scale * (self._combined(arch) - self._center)

    def max_single_change(self):
        """
        An upper bound on the accuracy change caused by one atomic
        change when noise_sigma is zero.
        """

        if self.spec.kind == BLOCK:
            bound = 0.0
            for layer, w in enumerate(self.weights):
                inter = sum(
                    float(np.ptp(v)) for v, positions in zip(
                        self.interactions, self.windows)
                    if layer in positions)
                bound = max(
                    bound, float(np.ptp(w)) + self.locality_strength * inter)
            return self._scale * bound
        n = self.spec.max_nodes
        return self._scale * (
            float(np.ptp(self.node_weights)) +
            (n - 1) * float(np.ptp(self.edge_weights)) +
            self.locality_strength * n * n * float(np.ptp(self.path_weights))
        )

    def lookup(self, arch):
        key = canonical_key(arch)
        accuracy = min(1.0, max(0.0, self.raw_score(arch) + self.noise(key)))
        return BenchmarkRecord(key, accuracy, *synthetic_resources(arch))

    def params(self):
        return {
            'kind': SYNTHETIC,
            'locality_strength': self.locality_strength,
            'noise_sigma': self.noise_sigma,
            'interaction_order': self.interaction_order,
            'seed': self.seed,
        }


def synthetic_oracle(
        spec, locality_strength=DEFAULT_LOCALITY_STRENGTH,
        noise_sigma=DEFAULT_NOISE_SIGMA, seed=0,
        interaction_order=DEFAULT_INTERACTION_ORDER):
    return SyntheticOracle(
        spec, locality_strength=locality_strength, noise_sigma=noise_sigma,
        seed=seed, interaction_order=interaction_order)


def query(oracle, arch):
    return oracle.query(arch)


def _parse_row(path, lineno, spec, row):
    text, accuracy, flops, params = row
    try:
        accuracy = float(accuracy)
        flops = float(flops)
        params = float(params)
    except ValueError as e:
        raise ParseError(path, lineno, str(e))
    if not 0.0 <= accuracy <= 1.0:
        raise ParseError(
            path, lineno, 'accuracy %r outside [0, 1]' % accuracy)
    if flops < 0 or params < 0:
        raise ParseError(path, lineno, 'flops and params must not be negative')
    try:
        arch = parse_arch(text, spec)
    except SpecViolation as e:
        raise SpecViolation('%s:%d: %s' % (path, lineno, e))
    return arch, BenchmarkRecord(canonical_key(arch), accuracy, flops, params)


def load_table(path, spec):
    """
    Load a benchmark CSV into a TabularOracle.
    """

    entries = OrderedDict()
    rows = 0
    merged = 0
    try:
        for lineno, row in read_csv(path, TABLE_HEADER):
            rows += 1
            arch, record = _parse_row(path, lineno, spec, row)
            if record.key in entries:
                merged += 1
                kept = entries[record.key][1]
                logger.debug(
                    "line %d duplicates '%s'; keeping accuracy %r",
                    lineno, format_arch(entries[record.key][0]),
                    max(kept.accuracy, record.accuracy))
                if record.accuracy <= kept.accuracy:
                    continue
            entries[record.key] = (arch, record)
    except OSError as e:
        raise ConfigError('cannot read benchmark %s: %s' % (path, e))
    if not entries:
        raise EmptyBenchmark("benchmark '%s' contains no records" % path)
    logger.info(
        "loaded %d records from %d rows in '%s' (%d duplicates merged)",
        len(entries), rows, path, merged)
    return TabularOracle(spec, entries)


def dump_records(items, path):
    """
    Write (architecture, BenchmarkRecord) pairs in the CSV schema.
    """

    write_csv(path, TABLE_HEADER, (
        (format_arch(arch), format_float(record.accuracy),
         format_float(record.flops), format_float(record.params))
        for arch, record in items
    ))


def dump_table(oracle, path):
    dump_records(oracle.items(), path)
