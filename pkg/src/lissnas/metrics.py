# -*- coding: utf-8 -*-
"""
Locality and search space quality measurements.
"""

from __future__ import absolute_import

import logging
from collections import namedtuple

import numpy as np
from scipy.special import kolmogorov
from scipy.special import logsumexp
from scipy.stats import binom

from lissnas.arch import apply_changes
from lissnas.arch import legal_moves
from lissnas.arch import random_walk
from lissnas.exc import DomainError
from lissnas.exc import EmptyInput
from lissnas.exc import NoLegalMove
from lissnas.exc import TooFew
from lissnas.exc import TooFewObservations
from lissnas.exc import ZeroVariance
from lissnas.predictor import embed_many
from lissnas.spaces import sample_uniform
from lissnas.utils import make_rng
from lissnas.utils import parallel_map
from lissnas.utils import spawn_rngs

logger = logging.getLogger(__name__)

FLOPS = 'flops'
PARAMS = 'params'
RESOURCE_AXES = (FLOPS, PARAMS)

MIN_KS_OBSERVATIONS = 5
COSINE_LIMIT = 10 ** 4
# redraws allowed for a start without any legal change
START_ATTEMPTS = 1000
# rows per block of the all-pairs cosine computation
COSINE_BLOCK = 1024

RwaCurve = namedtuple('RwaCurve', ['lags', 'autocorrelation'])
ShrinkIndexReport = namedtuple('ShrinkIndexReport', [
    'p_init', 'p_shrunk', 'threshold_acc', 's_i', 'n', 'k',
    'prob_at_least_k_init', 'prob_at_least_k_shrunk'])
KsResult = namedtuple('KsResult', ['statistic', 'p_value'])
Histogram = namedtuple('Histogram', ['axis', 'edges', 'counts'])


# locality

def _starts(spec, count, rng, change_type=None, threads=1):
    """
    Draw count uniform architectures, replacing any that admit no
    atomic change of the requested type.
    """

    starts = sample_uniform(spec, count, rng, threads)
    stream = spawn_rngs(rng, 1)[0]
    for index, arch in enumerate(starts):
        for _ in range(START_ATTEMPTS):
            if legal_moves(arch, spec, change_type):
                break
            arch = sample_uniform(spec, 1, stream)[0]
        else:
            raise NoLegalMove(
                'no start with a legal %s change found in %d draws' % (
                    change_type or 'atomic', START_ATTEMPTS))
        starts[index] = arch
    return starts


def _walk_series(spec, oracle, walk_length, start, stream):
    walk = random_walk(start, walk_length - 1, spec, stream)
    return np.array([oracle.accuracy(arch) for arch in walk])


def rwa(spec, oracle, walk_length, num_walks, max_lag, rng, threads=1):
    """
    Random walk autocorrelation of oracle accuracies for lags
    0..max_lag, pooling the lagged pairs of every walk.
    """

    if not walk_length > max_lag >= 1:
        raise DomainError('require walk_length > max_lag >= 1')
    if num_walks < 1:
        raise DomainError('num_walks must be at least 1')
    rng = make_rng(rng)
    starts = _starts(spec, num_walks, rng, threads=threads)
    streams = spawn_rngs(rng, num_walks)
    series = parallel_map(
        lambda job: _walk_series(spec, oracle, walk_length, *job),
        list(zip(starts, streams)), threads)

    if np.ptp(np.concatenate(series)) == 0:
        raise ZeroVariance(
            'accuracy is constant along every walk; autocorrelation is '
            'undefined')

    values = [1.0]
    for lag in range(1, max_lag + 1):
        x = np.concatenate([s[:-lag] for s in series])
        y = np.concatenate([s[lag:] for s in series])
        if np.ptp(x) == 0 or np.ptp(y) == 0:
            raise ZeroVariance(
                'lagged accuracies at lag %d are constant' % lag)
        values.append(float(np.clip(np.corrcoef(x, y)[0, 1], -1.0, 1.0)))
    return RwaCurve(list(range(max_lag + 1)), values)


def _pair_difference(spec, oracle, d, change_type, start, stream):
    neighbor = apply_changes(start, d, spec, stream, change_type)
    return abs(oracle.accuracy(start) - oracle.accuracy(neighbor))


def aad(spec, oracle, d, num_pairs, rng, change_type=None, threads=1):
    """
    Mean absolute accuracy difference between random architectures and
    neighbors d sequential atomic changes away, optionally restricted
    to one change type.
    """

    if d < 1:
        raise DomainError('d must be at least 1')
    if num_pairs < 1:
        raise DomainError('num_pairs must be at least 1')
    rng = make_rng(rng)
    starts = _starts(spec, num_pairs, rng, change_type, threads)
    streams = spawn_rngs(rng, num_pairs)
    differences = parallel_map(
        lambda job: _pair_difference(spec, oracle, d, change_type, *job),
        list(zip(starts, streams)), threads)
    return float(np.mean(differences))


# shrink index

def prob_at_least_k(n, k, p):
    """
    Probability that at least k of n independent draws are good, each
    with probability p.
    """

    if not 0 <= k <= n:
        raise DomainError('require 0 <= k <= n; got k=%r, n=%r' % (k, n))
    if not 0.0 <= p <= 1.0:
        raise DomainError('p must be within [0, 1]; got %r' % (p,))
    if k == 0:
        return 1.0
    if p == 0.0:
        return 0.0
    if p == 1.0:
        return 1.0
    if k == n:
        return p ** n
    terms = binom.logpmf(np.arange(k, n + 1), n, p)
    return float(min(1.0, np.exp(logsumexp(terms))))


def _accuracies(archs, oracle):
    values = [oracle.accuracy(arch) for arch in archs]
    if not values:
        raise EmptyInput('no architectures given')
    return np.array(values)


def estimate_p_good(archs, oracle, threshold_acc):
    """
    Fraction of the architectures with true accuracy at or above the
    threshold.
    """

    return float(np.mean(_accuracies(archs, oracle) >= threshold_acc))


def accuracy_threshold(archs, oracle, percentile):
    return float(np.percentile(_accuracies(archs, oracle), percentile))


def shrink_index(init, shrunk, oracle, threshold_acc, n=20, k=4):
    """
    Gain in the probability of drawing a good architecture, from the
    initial space to the shrunk one, at one fixed threshold.
    """

    p_init = estimate_p_good(init, oracle, threshold_acc)
    p_shrunk = estimate_p_good(shrunk, oracle, threshold_acc)
    return ShrinkIndexReport(
        p_init, p_shrunk, threshold_acc, p_shrunk - p_init, n, k,
        prob_at_least_k(n, k, p_init), prob_at_least_k(n, k, p_shrunk))


# error distributions

class Edf(object):
    """
    Right-continuous empirical distribution function of errors.
    """

    def __init__(self, errors):
        self.errors = np.sort(np.asarray(errors, dtype=float))
        self.points, counts = np.unique(self.errors, return_counts=True)
        self.fractions = np.cumsum(counts) / float(len(self.errors))

    def __len__(self):
        return len(self.errors)

    def evaluate(self, x):
        return np.searchsorted(
            self.errors, x, side='right') / float(len(self.errors))

    def auc(self):
        """
        Area under the curve over errors in [0, 1].
        """

        widths = np.diff(np.append(self.points, 1.0))
        return float(np.sum(self.fractions * widths))


def error_edf(accuracies):
    values = np.asarray(list(accuracies), dtype=float)
    if not len(values):
        raise EmptyInput('no accuracies given')
    if (values < 0).any() or (values > 1).any():
        raise DomainError('accuracies must be within [0, 1]')
    return Edf(1.0 - values)


def ks_two_sample(a, b):
    """
    Two-sample Kolmogorov-Smirnov statistic and its asymptotic p-value.
    """

    m = len(a)
    n = len(b)
    if min(m, n) < MIN_KS_OBSERVATIONS:
        raise TooFewObservations(
            'both samples need at least %d observations; got %d and %d' % (
                MIN_KS_OBSERVATIONS, m, n))
    grid = np.union1d(a.points, b.points)
    statistic = float(np.max(np.abs(a.evaluate(grid) - b.evaluate(grid))))
    en = np.sqrt(m * n / float(m + n))
    p_value = float(np.clip(
        kolmogorov((en + 0.12 + 0.11 / en) * statistic), 0.0, 1.0))
    return KsResult(statistic, p_value)


# diversity

def max_cosine_distance(archs, spec, rng=None, limit=COSINE_LIMIT):
    """
    Largest cosine distance between the embeddings of any two of the
    architectures.  Lists longer than limit are reduced to a seeded
    uniform subsample of limit members first.
    """

    archs = list(archs)
    if len(archs) < 2:
        raise TooFew('at least two architectures are required')
    if len(archs) > limit:
        rng = make_rng(0 if rng is None else rng)
        picked = np.sort(rng.choice(len(archs), limit, replace=False))
        logger.info(
            'cosine distance over a subsample of %d of %d architectures',
            limit, len(archs))
        archs = [archs[i] for i in picked]
    vectors = embed_many(archs, spec)
    units = vectors / np.linalg.norm(vectors, axis=1)[:, None]
    best = 0.0
    for start in range(0, len(units), COSINE_BLOCK):
        block = units[start:start + COSINE_BLOCK]
        best = max(best, float(np.max(1.0 - block @ units.T)))
    return min(1.0, max(0.0, best))


def _resource_values(archs, oracle, axis):
    if axis not in RESOURCE_AXES:
        raise DomainError('unknown resource axis %r' % (axis,))
    return np.array([getattr(oracle.query(arch), axis) for arch in archs])


def resource_range(archs, oracle, axis):
    values = _resource_values(archs, oracle, axis)
    if not len(values):
        raise EmptyInput('no architectures given')
    return float(values.min()), float(values.max())


def resource_histogram(archs, oracle, axis=FLOPS, bins=10, reference=None):
    """
    Histogram of a resource over the architectures.

    Bin edges span reference, which is either a (min, max) pair or the
    architectures of the full space; by default the architectures
    themselves.
    """

    if bins < 1:
        raise DomainError('bins must be at least 1')
    values = _resource_values(archs, oracle, axis)
    if not len(values):
        raise EmptyInput('no architectures given')
    if reference is None:
        span = float(values.min()), float(values.max())
    elif (len(reference) == 2 and
            all(isinstance(v, (int, float, np.number)) for v in reference)):
        span = float(reference[0]), float(reference[1])
    else:
        span = resource_range(reference, oracle, axis)
    counts, edges = np.histogram(values, bins=bins, range=span)
    return Histogram(axis, [float(e) for e in edges], [int(c) for c in counts])


def occupied_bins_fraction(histogram, reference):
    """
    Fraction of the bins occupied in reference that are also occupied
    in histogram.
    """

    occupied = [i for i, count in enumerate(reference.counts) if count]
    if not occupied:
        raise EmptyInput('reference histogram has no occupied bins')
    return sum(1 for i in occupied if histogram.counts[i]) / float(
        len(occupied))
