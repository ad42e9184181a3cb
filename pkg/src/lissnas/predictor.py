# -*- coding: utf-8 -*-
"""
Accuracy predictors.

Predictors map architectures to predicted accuracies in [0, 1].  The
default predictor is a ridge regression over a fixed length
embedding of the architecture; an oracle lookup predictor is provided
for controlled experiments where the ground truth is used directly.

The embedding of a block architecture is the concatenation of the
one-hot encoding of each layer's choice.  A cell is embedded at the
size of the spec: the row-major upper triangle of its adjacency matrix
padded to ``max_nodes`` (the output node always takes the last slot),
followed by one one-hot group per node slot over the vocabulary plus a
trailing "absent" entry for unused slots.  Isomorphic cells may embed
differently.

Saved ridge predictors are JSON objects::

    {"kind": "ridge", "lambda": 0.001, "weights": [...], "bias": 0.8,
     "spec": {...}}
"""

from __future__ import absolute_import

import json
import logging
import math
import threading

import numpy as np

from lissnas.arch import BLOCK
from lissnas.exc import ConfigError
from lissnas.exc import DomainError
from lissnas.exc import MissingKey
from lissnas.exc import MissingKeyStorm
from lissnas.exc import SingularSystem
from lissnas.spaces import spec_from_json
from lissnas.utils import json_dump
from lissnas.utils import parallel_map

logger = logging.getLogger(__name__)

RIDGE = 'ridge'
ORACLE_LOOKUP = 'oracle_lookup'

DEFAULT_LAMBDA = 1e-3
# misses are only judged against the tolerance once this many
# predictions have been made.
MISS_CHECK_MINIMUM = 100


def embedding_length(spec):
    if spec.kind == BLOCK:
        return sum(spec.choices)
    n = spec.max_nodes
    return n * (n - 1) // 2 + n * (len(spec.ops) + 1)


def embed(arch, spec):
    """
    Return the embedding of arch as a float vector.
    """

    values = np.zeros(embedding_length(spec))
    if spec.kind == BLOCK:
        offset = 0
        for choice, count in zip(arch.choices, spec.choices):
            values[offset + choice] = 1.0
            offset += count
        return values

    size = spec.max_nodes
    n = arch.num_nodes
    slots = list(range(n - 1)) + [size - 1]
    padded = np.zeros((size, size))
    for i, j in arch.edges():
        padded[slots[i], slots[j]] = 1.0
    rows, cols = np.triu_indices(size, 1)
    values[:len(rows)] = padded[rows, cols]

    group = len(spec.ops) + 1
    offset = len(rows)
    labels = [group - 1] * size
    for node, op in enumerate(arch.ops):
        labels[slots[node]] = op
    for slot, label in enumerate(labels):
        values[offset + slot * group + label] = 1.0
    return values


def embed_many(archs, spec):
    return np.array([embed(arch, spec) for arch in archs]).reshape(
        len(archs), embedding_length(spec))


class Predictor(object):

    kind = None

    def __init__(self, spec):
        self.spec = spec

    def predict(self, arch):
        raise NotImplementedError

    def predict_many(self, archs, threads=1):
        """
        Predict every architecture, returning results in input order.
        """

        return parallel_map(self.predict, archs, threads)


class RidgePredictor(Predictor):

    kind = RIDGE

    def __init__(self, spec, weights, bias, lam=DEFAULT_LAMBDA):
        super(RidgePredictor, self).__init__(spec)
        self.weights = np.asarray(weights, dtype=float)
        self.bias = float(bias)
        self.lam = float(lam)
        if len(self.weights) != embedding_length(spec):
            raise ConfigError(
                'ridge predictor has %d weights; the spec embeds to %d' % (
                    len(self.weights), embedding_length(spec)))

    def raw(self, arch):
        return float(self.weights @ embed(arch, self.spec)) + self.bias

    def predict(self, arch):
        return min(1.0, max(0.0, self.raw(arch)))

    def to_json(self):
        return {
            'kind': RIDGE,
            'lambda': self.lam,
            'weights': [float(w) for w in self.weights],
            'bias': self.bias,
            'spec': self.spec.to_json(),
        }


class OracleLookupPredictor(Predictor):
    """
    Predicts the exact oracle accuracy.

    Without a miss_tolerance, missing architectures raise MissingKey.
    With one, misses are predicted as NaN and counted, and MissingKeyStorm
    is raised once the fraction of misses exceeds the tolerance.
    """

    kind = ORACLE_LOOKUP

    def __init__(self, oracle, miss_tolerance=None):
        super(OracleLookupPredictor, self).__init__(oracle.spec)
        self.oracle = oracle
        self.miss_tolerance = miss_tolerance
        self.calls = 0
        self.misses = 0
        self._lock = threading.Lock()

    def predict(self, arch):
        try:
            accuracy = self.oracle.accuracy(arch)
        except MissingKey:
            if self.miss_tolerance is None:
                raise
            with self._lock:
                self.calls += 1
                self.misses += 1
            if self.calls >= MISS_CHECK_MINIMUM:
                self.check_misses()
            return math.nan
        with self._lock:
            self.calls += 1
        return accuracy

    def check_misses(self):
        if self.miss_tolerance is None or not self.calls:
            return
        if self.misses > self.miss_tolerance * self.calls:
            raise MissingKeyStorm(
                '%d of %d predictions missed the benchmark table '
                '(tolerance %.2f%%)' % (
                    self.misses, self.calls, 100.0 * self.miss_tolerance))

    def to_json(self):
        return {'kind': ORACLE_LOOKUP}


def fit_ridge(pairs, spec, lam=DEFAULT_LAMBDA, sample_weight=None):
    """
    Fit a ridge regression on (architecture, accuracy) pairs in closed
    form; the bias is not regularized.
    """

    pairs = list(pairs)
    if not pairs:
        raise DomainError('at least one training pair is required')
    if lam < 0:
        raise DomainError('lambda must not be negative')
    X = embed_many([arch for arch, _ in pairs], spec)
    y = np.array([float(accuracy) for _, accuracy in pairs])
    if sample_weight is None:
        w = np.ones(len(pairs))
    else:
        w = np.asarray(sample_weight, dtype=float)
        if w.shape != y.shape or (w < 0).any() or not w.sum() > 0:
            raise DomainError(
                'sample_weight must be non-negative, one per pair, and not '
                'all zero')

    total = w.sum()
    x_mean = (w @ X) / total
    y_mean = (w @ y) / total
    Xc = X - x_mean
    yc = y - y_mean
    gram = Xc.T @ (Xc * w[:, None])
    gram[np.diag_indices_from(gram)] += lam
    if lam == 0 and np.linalg.matrix_rank(gram) < gram.shape[0]:
        raise SingularSystem(
            'normal equations are rank deficient; use a positive lambda')
    try:
        coef = np.linalg.solve(gram, Xc.T @ (w * yc))
    except np.linalg.LinAlgError as e:
        raise SingularSystem(str(e))
    bias = y_mean - x_mean @ coef
    logger.debug(
        'fitted ridge predictor on %d pairs with lambda %r', len(pairs), lam)
    return RidgePredictor(spec, coef, bias, lam)


def predict(predictor, arch):
    return predictor.predict(arch)


def predict_many(predictor, archs, threads=1):
    return predictor.predict_many(archs, threads)


def predictor_from_json(obj, oracle=None):
    kind = obj.get('kind') if isinstance(obj, dict) else None
    if kind == RIDGE:
        try:
            return RidgePredictor(
                spec_from_json(obj['spec']), obj['weights'], obj['bias'],
                obj['lambda'])
        except KeyError as e:
            raise ConfigError('saved predictor is missing field %s' % e)
    if kind == ORACLE_LOOKUP:
        if oracle is None:
            raise ConfigError('an oracle_lookup predictor requires an oracle')
        return OracleLookupPredictor(oracle)
    raise ConfigError('unknown predictor kind %r' % (kind,))


def save_predictor(predictor, path):
    with open(path, 'w', encoding='utf-8') as fd:
        json_dump(predictor.to_json(), fd)
        fd.write('\n')


def load_predictor(path, oracle=None):
    try:
        with open(path, encoding='utf-8') as fd:
            obj = json.load(fd)
    except OSError as e:
        raise ConfigError('cannot read predictor %s: %s' % (path, e))
    except ValueError as e:
        raise ConfigError('predictor %s is not valid JSON: %s' % (path, e))
    return predictor_from_json(obj, oracle)
