# -*- coding: utf-8 -*-
"""
Iterative search space shrinkage driven by locality.

Each iteration selects the top predicted architectures of the current
space as seeds, surrounds every seed with neighbors a bounded number
of atomic changes away, and takes the seeds together with their
neighbors as the next space.  Iterations continue while the mean
predicted accuracy of the space keeps improving by more than the
plateau tolerance; the space of the last improving iteration is the
result.

Baselines share the same loop: ``refill_without_locality`` replaces
the neighbors with uniformly drawn architectures, ``no_neighbor``
keeps only the seeds of the initial sample, and ``naive_topx`` keeps
the top fraction of one large sample.
"""

from __future__ import absolute_import

import logging
import math
from collections import namedtuple

from lissnas.arch import canonical_key
from lissnas.arch import generate_neighbor
from lissnas.arch import total_edit_distance
from lissnas.exc import BudgetExhaustedBeforeFirstIteration
from lissnas.exc import ConfigError
from lissnas.exc import DomainError
from lissnas.exc import NoLegalMove
from lissnas.spaces import raw_cardinality
from lissnas.spaces import sample_uniform
from lissnas.spaces import snapshot_from
from lissnas.utils import make_rng
from lissnas.utils import parallel_map
from lissnas.utils import spawn_rngs

logger = logging.getLogger(__name__)

LISSNAS = 'lissnas'
NO_LOCALITY = 'no_locality'
NO_NEIGHBOR = 'no_neighbor'
NAIVE_TOPX = 'naive_topx'

# exit reasons
PLATEAU = 'plateau'
MAX_ITERATIONS = 'max_iterations'
BUDGET = 'budget'
SINGLE_ITERATION = 'single_iteration'

# the smallest initial sample accepted without allow_small_sample
MIN_INITIAL_SAMPLE = 1000
SECONDS_PER_YEAR = 365.25 * 24 * 3600

TraceEntry = namedtuple('TraceEntry', [
    'iteration', 'size', 'mean_pred_acc', 'seed_keys', 'queries_cumulative'])


class ShrinkConfig(namedtuple('ShrinkConfig', [
        'initial_sample_size', 'seeds_per_iteration', 'neighbors_per_seed',
        'edit_threshold_fraction', 'plateau_epsilon', 'max_iterations',
        'query_budget', 'refit_each_iteration', 'allow_small_sample',
        'change_weights', 'threads'])):

    __slots__ = ()

    def __new__(
            cls, initial_sample_size=1000, seeds_per_iteration=50,
            neighbors_per_seed=20, edit_threshold_fraction=1.0 / 3,
            plateau_epsilon=1e-3, max_iterations=20, query_budget=None,
            refit_each_iteration=False, allow_small_sample=False,
            change_weights=None, threads=1):
        return super(ShrinkConfig, cls).__new__(
            cls, initial_sample_size, seeds_per_iteration,
            neighbors_per_seed, edit_threshold_fraction, plateau_epsilon,
            max_iterations, query_budget, refit_each_iteration,
            allow_small_sample, change_weights, threads)

    def validate(self):
        if self.initial_sample_size < 1:
            raise ConfigError('initial_sample_size must be at least 1')
        if (self.initial_sample_size < MIN_INITIAL_SAMPLE and
                not self.allow_small_sample):
            raise ConfigError(
                'initial_sample_size below %d requires allow_small_sample' %
                MIN_INITIAL_SAMPLE)
        if self.seeds_per_iteration < 1:
            raise ConfigError('seeds_per_iteration must be at least 1')
        if self.neighbors_per_seed < 0:
            raise ConfigError('neighbors_per_seed must not be negative')
        if not 0 < self.edit_threshold_fraction <= 1:
            raise ConfigError('edit_threshold_fraction must be within (0, 1]')
        if self.plateau_epsilon < 0:
            raise ConfigError('plateau_epsilon must not be negative')
        if self.max_iterations < 1:
            raise ConfigError('max_iterations must be at least 1')
        if self.query_budget is not None and self.query_budget < 1:
            raise ConfigError('query_budget must be at least 1')
        if self.threads < 1:
            raise ConfigError('threads must be at least 1')
        return self

    def max_distance(self, spec):
        total = total_edit_distance(spec)
        return max(1, min(
            total, int(math.ceil(self.edit_threshold_fraction * total))))


class ShrinkTrace(object):
    """
    The record of a shrinkage run.

    ``entries`` and ``snapshots`` hold the retained iterations in order;
    ``initial`` is the snapshot of the initial sample.
    """

    def __init__(self, variant):
        self.variant = variant
        self.entries = []
        self.snapshots = []
        self.initial = None
        self.iterations_run = 0
        self.exit_reason = None

    def __len__(self):
        return len(self.entries)

    def __repr__(self):
        return '<%s variant=%s retained=%d exit_reason=%s>' % (
            type(self).__name__, self.variant, len(self.entries),
            self.exit_reason)

    @property
    def queries(self):
        return self.entries[-1].queries_cumulative if self.entries else 0

    def retain(self, snapshot, seed_keys):
        self.snapshots.append(snapshot)
        self.entries.append(TraceEntry(
            snapshot.iteration, len(snapshot), snapshot.mean_pred_acc,
            tuple(seed_keys), snapshot.query_count))


class Evaluator(object):
    """
    Predicts architectures at most once each by canonical key, within
    an optional budget of distinct predictions.
    """

    def __init__(self, predictor, budget=None, threads=1):
        self.predictor = predictor
        self.budget = budget
        self.threads = threads
        self.cache = {}
        self.queries = 0
        self.exhausted = False

    def reset(self, predictor):
        self.predictor = predictor
        self.cache = {}

    def evaluate(self, archs):
        """
        Return the (archs, predictions) that could be evaluated, in
        input order.  Architectures beyond the budget and those the
        predictor could not score (NaN) are left out.
        """

        keys = [canonical_key(arch) for arch in archs]
        pending = {}
        for key, arch in zip(keys, archs):
            if key in self.cache or key in pending:
                continue
            if (self.budget is not None and
                    self.queries + len(pending) >= self.budget):
                self.exhausted = True
                continue
            pending[key] = arch
        if pending:
            order = list(pending)
            values = self.predictor.predict_many(
                [pending[key] for key in order], self.threads)
            self.cache.update(zip(order, values))
            self.queries += len(order)

        kept = []
        predictions = []
        for key, arch in zip(keys, archs):
            value = self.cache.get(key)
            if value is None or math.isnan(value):
                continue
            kept.append(arch)
            predictions.append(value)
        return kept, predictions


def select_seeds(snapshot, count):
    """
    The count members with the highest predictions; ties go to the
    lower canonical key.
    """

    ranked = sorted(
        snapshot.items(), key=lambda item: (-item[2], item[0]))
    return [(key, arch) for key, arch, _ in ranked[:count]]


def _check_budget(cfg):
    if (cfg.query_budget is not None and
            cfg.query_budget < cfg.initial_sample_size):
        raise BudgetExhaustedBeforeFirstIteration(
            'query_budget of %d cannot cover the initial sample of %d' % (
                cfg.query_budget, cfg.initial_sample_size))


def _initial(spec, evaluator, cfg, rng, trace):
    archs, predictions = evaluator.evaluate(
        sample_uniform(spec, cfg.initial_sample_size, rng, cfg.threads))
    trace.initial = snapshot_from(
        archs, predictions, iteration=0, query_count=evaluator.queries)
    logger.info(
        'initial sample: %d distinct architectures, mean prediction %.6f',
        len(trace.initial), trace.initial.mean_pred_acc)
    return trace.initial


def _shrink(spec, predictor, cfg, rng, expand, variant, refit=None):
    cfg.validate()
    _check_budget(cfg)
    rng = make_rng(rng)
    trace = ShrinkTrace(variant)
    evaluator = Evaluator(predictor, cfg.query_budget, cfg.threads)
    pool = _initial(spec, evaluator, cfg, rng, trace)
    previous = None
    # mean prediction to beat, under the model of the current iteration
    baseline = None
    iteration = 1

    while True:
        if refit is not None and cfg.refit_each_iteration and iteration > 1:
            evaluator.reset(refit(pool, iteration))
            pool = snapshot_from(
                *evaluator.evaluate(pool.archs), iteration=pool.iteration,
                query_count=evaluator.queries)
            baseline = pool.mean_pred_acc

        seeds = select_seeds(pool, cfg.seeds_per_iteration)
        streams = spawn_rngs(rng, len(seeds))
        groups = parallel_map(
            lambda job: expand(job[0], job[1]),
            [(arch, stream) for (_, arch), stream in zip(seeds, streams)],
            cfg.threads,
        )
        candidates = [arch for _, arch in seeds]
        for group in groups:
            candidates.extend(group)

        archs, predictions = evaluator.evaluate(candidates)
        snapshot = snapshot_from(
            archs, predictions, iteration=iteration,
            query_count=evaluator.queries)
        trace.iterations_run = iteration
        logger.info(
            '%s iteration %d: size %d, mean prediction %.6f, %d queries',
            variant, iteration, len(snapshot), snapshot.mean_pred_acc,
            evaluator.queries)

        improved = (
            baseline is None or
            snapshot.mean_pred_acc > baseline + cfg.plateau_epsilon
        )
        if improved:
            trace.retain(snapshot, [key for key, _ in seeds])
            previous = snapshot
            baseline = snapshot.mean_pred_acc

        if evaluator.exhausted:
            trace.exit_reason = BUDGET
            break
        if not improved:
            trace.exit_reason = PLATEAU
            break
        if iteration >= cfg.max_iterations:
            trace.exit_reason = MAX_ITERATIONS
            break
        pool = snapshot
        iteration += 1

    logger.info(
        '%s finished after %d iterations (%s); %d architectures retained',
        variant, trace.iterations_run, trace.exit_reason, len(previous))
    # retained means increase strictly under one model, so the last one
    # has the best mean
    return previous, trace


def lissnas(spec, predictor, cfg, rng, refit=None):
    """
    Shrink the space of spec; returns the final snapshot and its trace.

    refit, if provided, is called as ``refit(snapshot, iteration)`` for
    a new predictor before every iteration after the first when
    ``cfg.refit_each_iteration`` is set.  The current space is then
    scored again, and its new mean prediction is the one the iteration
    has to beat.
    """

    max_d = cfg.max_distance(spec)

    def expand(seed, stream):
        neighbors = []
        for _ in range(cfg.neighbors_per_seed):
            try:
                neighbors.append(generate_neighbor(
                    seed, max_d, spec, stream, weights=cfg.change_weights))
            except NoLegalMove:
                logger.debug('seed %r has no legal change; skipped', seed)
                break
        return neighbors

    return _shrink(spec, predictor, cfg, rng, expand, LISSNAS, refit)


def refill_without_locality(spec, predictor, cfg, rng, refit=None):
    """
    As lissnas, with every neighbor replaced by a uniform draw.
    """

    def expand(seed, stream):
        if not cfg.neighbors_per_seed:
            return []
        return sample_uniform(spec, cfg.neighbors_per_seed, stream)

    return _shrink(spec, predictor, cfg, rng, expand, NO_LOCALITY, refit)


def no_neighbor(spec, predictor, cfg, rng):
    """
    Keep the top seeds of the initial sample, without any neighbors.
    """

    cfg.validate()
    _check_budget(cfg)
    rng = make_rng(rng)
    trace = ShrinkTrace(NO_NEIGHBOR)
    evaluator = Evaluator(predictor, cfg.query_budget, cfg.threads)
    pool = _initial(spec, evaluator, cfg, rng, trace)
    seeds = select_seeds(pool, cfg.seeds_per_iteration)
    snapshot = snapshot_from(
        [arch for _, arch in seeds],
        [pool.members[key][1] for key, _ in seeds],
        iteration=1, query_count=evaluator.queries)
    trace.retain(snapshot, [key for key, _ in seeds])
    trace.iterations_run = 1
    trace.exit_reason = SINGLE_ITERATION
    return snapshot, trace


def naive_topx(spec, predictor, sample_budget, x, rng, threads=1):
    """
    Sample sample_budget architectures and keep the top x fraction of
    the distinct ones by prediction, in sample order.
    """

    if not 0 < x <= 1:
        raise DomainError('x must be within (0, 1]')
    if sample_budget < 1:
        raise DomainError('sample_budget must be at least 1')
    rng = make_rng(rng)
    evaluator = Evaluator(predictor, threads=threads)
    archs, predictions = evaluator.evaluate(
        sample_uniform(spec, sample_budget, rng, threads))
    sample = snapshot_from(archs, predictions, query_count=evaluator.queries)
    count = max(1, int(math.ceil(x * len(sample))))
    top = set(key for key, _ in select_seeds(sample, count))
    kept = [item for item in sample.items() if item[0] in top]
    logger.info(
        'naive top %.2f%%: kept %d of %d distinct architectures',
        100.0 * x, len(kept), len(sample))
    return snapshot_from(
        [arch for _, arch, _ in kept],
        [prediction for _, _, prediction in kept],
        iteration=1, query_count=evaluator.queries)


def query_all_cost(spec, seconds_per_query, rng=None, cardinality=None):
    """
    Years needed to query every member of the space at the given cost
    per query.  A Cardinality already computed for spec may be passed
    in; otherwise one is computed with rng.
    """

    if seconds_per_query < 0:
        raise DomainError('seconds_per_query must not be negative')
    if cardinality is None:
        cardinality = raw_cardinality(spec, rng)
    members = cardinality.deduplicated
    return members * seconds_per_query / SECONDS_PER_YEAR
