# -*- coding: utf-8 -*-
"""
Run configuration.

A run is configured by a single JSON document whose top level keys are
the constants defined here; command line flags override individual
keys.  A complete document looks like::

    {
        "seed": 1,
        "out": "results",
        "threads": 1,
        "spec": "synthetic",
        "oracle": {"kind": "synthetic", "locality_strength": 0.75,
                   "noise_sigma": 0.005, "interaction_order": 4},
        "predictor": {"kind": "oracle_lookup"},
        "shrink": {"initial_sample_size": 1000, "seeds_per_iteration": 50},
        "variant": "lissnas",
        "x": 0.05,
        "metrics": {"threshold_percentile": 80, "n": 20, "k": 4},
        "plots": false,
        "sample_size": 100000
    }

``spec`` is a preset name, a path to a spec JSON file or an inline
spec object.  The oracle ``seed`` defaults to the master seed.
"""

from __future__ import absolute_import

import json
import logging
from copy import deepcopy

from lissnas.benchmark import DEFAULT_INTERACTION_ORDER
from lissnas.benchmark import DEFAULT_LOCALITY_STRENGTH
from lissnas.benchmark import DEFAULT_NOISE_SIGMA
from lissnas.benchmark import SYNTHETIC
from lissnas.benchmark import TABULAR
from lissnas.benchmark import load_table
from lissnas.benchmark import synthetic_oracle
from lissnas.exc import ConfigError
from lissnas.predictor import ORACLE_LOOKUP
from lissnas.predictor import RIDGE
from lissnas.shrinkage import ShrinkConfig
from lissnas.spaces import PRESETS
from lissnas.spaces import load_spec
from lissnas.spaces import spec_from_json

logger = logging.getLogger(__name__)

# the master seed; mandatory
SEED = 'seed'
# the output directory
OUT = 'out'
THREADS = 'threads'
# preset name, spec file path or inline spec object
SPEC = 'spec'
ORACLE = 'oracle'
PREDICTOR = 'predictor'
# ShrinkConfig fields
SHRINK = 'shrink'
# the shrinkage variant to run
VARIANT = 'variant'
# fraction kept by the naive top-x baseline
NAIVE_X = 'x'
METRICS = 'metrics'
# whether to write SVG plots
PLOTS = 'plots'
# benchmark rows sampled when a space is too large to enumerate
SAMPLE_SIZE = 'sample_size'

VARIANTS = ('lissnas', 'naive-topx', 'no-locality', 'no-neighbor')

DEFAULTS = {
    SEED: None,
    OUT: '.',
    THREADS: 1,
    SPEC: 'synthetic',
    ORACLE: {
        'kind': SYNTHETIC,
        'locality_strength': DEFAULT_LOCALITY_STRENGTH,
        'noise_sigma': DEFAULT_NOISE_SIGMA,
        'interaction_order': DEFAULT_INTERACTION_ORDER,
        'seed': None,
    },
    PREDICTOR: {
        'kind': ORACLE_LOOKUP,
        'lambda': 1e-3,
        'train_size': 1000,
        'path': None,
    },
    SHRINK: {},
    VARIANT: 'lissnas',
    NAIVE_X: 0.05,
    METRICS: {
        'threshold_percentile': 80.0,
        'n': 20,
        'k': 4,
        'walk_length': 100,
        'num_walks': 100,
        'max_lag': None,
        'num_pairs': 1000,
        'max_distance': None,
        'bins': 10,
        'seconds_per_query': 86400.0,
    },
    PLOTS: False,
    SAMPLE_SIZE: 100000,
}

# sections merged key by key rather than replaced
SECTIONS = (ORACLE, PREDICTOR, SHRINK, METRICS)


def _is_int(value):
    return isinstance(value, int) and not isinstance(value, bool)


class RunConfig(dict):
    """
    The configuration of one command invocation.
    """

    @classmethod
    def load(cls, path):
        try:
            with open(path, encoding='utf-8') as fd:
                document = json.load(fd)
        except OSError as e:
            raise ConfigError('cannot read config %s: %s' % (path, e))
        except ValueError as e:
            raise ConfigError('config %s is not valid JSON: %s' % (path, e))
        if not isinstance(document, dict):
            raise ConfigError('config %s must hold a JSON object' % path)
        return document

    @classmethod
    def create(cls, path=None, **overrides):
        """
        Defaults, then the document at path, then every override that
        is not None.
        """

        config = cls(deepcopy(DEFAULTS))
        layers = [cls.load(path)] if path else []
        layers.append({k: v for k, v in overrides.items() if v is not None})
        for layer in layers:
            for key, value in layer.items():
                if key not in DEFAULTS:
                    raise ConfigError('unknown config key %r' % (key,))
                if key in SECTIONS:
                    if not isinstance(value, dict):
                        raise ConfigError(
                            'config key %r must be an object' % key)
                    config[key].update(value)
                else:
                    config[key] = value
        return config.validate()

    def validate(self):
        seed = self[SEED]
        if seed is None:
            raise ConfigError(
                'a master seed is required; set "seed" in the config or '
                'pass --seed')
        if not _is_int(seed) or seed < 0:
            raise ConfigError('seed must be a non-negative integer')
        if not _is_int(self[THREADS]) or self[THREADS] < 1:
            raise ConfigError('threads must be a positive integer')
        if self[VARIANT] not in VARIANTS:
            raise ConfigError(
                'variant must be one of %s' % ', '.join(VARIANTS))
        x = self[NAIVE_X]
        if (isinstance(x, bool) or not isinstance(x, (int, float)) or
                not 0 < x <= 1):
            raise ConfigError('x must be within (0, 1]')
        if not _is_int(self[SAMPLE_SIZE]) or self[SAMPLE_SIZE] < 1:
            raise ConfigError('sample_size must be a positive integer')
        if self[ORACLE].get('kind') not in (SYNTHETIC, TABULAR):
            raise ConfigError(
                "oracle kind must be '%s' or '%s'" % (SYNTHETIC, TABULAR))
        if self[ORACLE]['kind'] == TABULAR and not self[ORACLE].get('path'):
            raise ConfigError('a tabular oracle requires a path')
        if self[PREDICTOR].get('kind') not in (ORACLE_LOOKUP, RIDGE):
            raise ConfigError(
                "predictor kind must be '%s' or '%s'" % (
                    ORACLE_LOOKUP, RIDGE))
        unknown = set(self[METRICS]) - set(DEFAULTS[METRICS])
        if unknown:
            raise ConfigError(
                'unknown metrics settings: %s' % ', '.join(sorted(unknown)))
        self.shrink_config()
        return self

    def shrink_config(self):
        settings = dict(self[SHRINK])
        settings.setdefault('threads', self[THREADS])
        try:
            return ShrinkConfig(**settings).validate()
        except TypeError as e:
            raise ConfigError('invalid shrink settings: %s' % e)

    def metric(self, name):
        return self[METRICS][name]

    def resolve_spec(self):
        value = self[SPEC]
        if isinstance(value, dict):
            return spec_from_json(value)
        if not isinstance(value, str):
            raise ConfigError('spec must be a preset name, path or object')
        if value in PRESETS:
            return PRESETS[value]
        return load_spec(value)

    def build_oracle(self, spec):
        settings = self[ORACLE]
        if settings['kind'] == TABULAR:
            return load_table(settings['path'], spec)
        seed = settings.get('seed')
        return synthetic_oracle(
            spec,
            locality_strength=settings['locality_strength'],
            noise_sigma=settings['noise_sigma'],
            seed=self[SEED] if seed is None else seed,
            interaction_order=settings['interaction_order'],
        )
