# -*- coding: utf-8 -*-
"""
Search space specifications, uniform sampling and the explicit
snapshots that represent shrunk spaces.

A spec serializes to a JSON object.  Block spaces::

    {"kind": "block", "choices": [4, 4, 4]}

Cell spaces carry the operation vocabulary by name; op codes are the
indices into that list, and the input and output sentinels are codes
within it::

    {"kind": "cell", "max_nodes": 7, "max_edges": 9,
     "ops": ["input", "conv3x3-bn-relu", "conv1x1-bn-relu",
             "maxpool3x3", "output"],
     "input_op": 0, "output_op": 4}

Reported sizes of spaces are always counts of isomorphism classes
(deduplicated counts); raw encoding counts are reported alongside.
"""

from __future__ import absolute_import

import json
import logging
from collections import Counter
from collections import OrderedDict
from collections import namedtuple
from itertools import product
from math import comb
from math import prod

import numpy as np

from lissnas.arch import BLOCK
from lissnas.arch import CELL
from lissnas.arch import BlockArchitecture
from lissnas.arch import CellArchitecture
from lissnas.arch import canonical_key
from lissnas.arch import format_arch
from lissnas.arch import parse_arch
from lissnas.arch import prune
from lissnas.exc import ConfigError
from lissnas.exc import DomainError
from lissnas.exc import EmptySnapshot
from lissnas.exc import LengthMismatch
from lissnas.exc import ParseError
from lissnas.exc import RejectionOverflow
from lissnas.exc import SnapshotTooLarge
from lissnas.exc import SpecViolation
from lissnas.exc import TooLarge
from lissnas.utils import chunked
from lissnas.utils import format_float
from lissnas.utils import json_dump
from lissnas.utils import make_rng
from lissnas.utils import parallel_map
from lissnas.utils import read_csv
from lissnas.utils import spawn_rngs
from lissnas.utils import write_csv

logger = logging.getLogger(__name__)

# cells are not supported beyond this size.
MAX_CELL_NODES = 7
# consecutive rejected cell candidates before the spec is deemed broken
MAX_REJECTIONS = 10 ** 6
MAX_SNAPSHOT_SIZE = 10 ** 7
# architectures drawn per random substream; fixed so that the result
# does not depend on the thread count.
SAMPLE_CHUNK = 1024
# raw cell encodings up to this count are enumerated exactly
EXACT_CARDINALITY_LIMIT = 2 * 10 ** 5
DEFAULT_CARDINALITY_SAMPLES = 10 ** 5

SNAPSHOT_HEADER = ('canonical_key', 'architecture_text', 'predicted_acc')

Cardinality = namedtuple('Cardinality', ['raw', 'deduplicated', 'estimated'])


class BlockSpec(namedtuple('BlockSpec', ['choices'])):
    """
    A block space; the number of choices for each layer.
    """

    __slots__ = ()
    kind = BLOCK

    @property
    def num_layers(self):
        return len(self.choices)

    def validate(self):
        if not self.choices:
            raise ConfigError('block spec requires at least one layer')
        for layer, count in enumerate(self.choices):
            if not isinstance(count, int) or count < 1:
                raise ConfigError(
                    'block spec layer %d must have at least one choice' % layer)
        return self

    def check(self, arch):
        if arch.kind != BLOCK:
            raise SpecViolation('expected a block architecture')
        if len(arch.choices) != len(self.choices):
            raise SpecViolation(
                'expected %d layers; got %d' % (
                    len(self.choices), len(arch.choices)))
        for layer, (choice, count) in enumerate(
                zip(arch.choices, self.choices)):
            if not 0 <= choice < count:
                raise SpecViolation(
                    'layer %d choice %d outside 0..%d' % (
                        layer, choice, count - 1))
        return arch

    def to_json(self):
        return {'kind': BLOCK, 'choices': list(self.choices)}


class CellSpec(namedtuple('CellSpec', [
        'max_nodes', 'max_edges', 'ops', 'input_op', 'output_op'])):
    """
    A cell space; ops is the full vocabulary of operation names.
    """

    __slots__ = ()
    kind = CELL

    @property
    def op_choices(self):
        """
        Codes available to intermediate nodes.
        """

        return tuple(
            code for code in range(len(self.ops))
            if code not in (self.input_op, self.output_op))

    def validate(self):
        if not 2 <= self.max_nodes <= MAX_CELL_NODES:
            raise ConfigError(
                'cell spec max_nodes must be within 2..%d' % MAX_CELL_NODES)
        if self.max_edges < 1:
            raise ConfigError('cell spec max_edges must be at least 1')
        for name in ('input_op', 'output_op'):
            if not 0 <= getattr(self, name) < len(self.ops):
                raise ConfigError(
                    'cell spec %s must be a code within the vocabulary' % name)
        if self.input_op == self.output_op:
            raise ConfigError('cell spec sentinels must be distinct codes')
        if self.max_nodes > 2 and not self.op_choices:
            raise ConfigError(
                'cell spec vocabulary has no operation for intermediate nodes')
        return self

    def check(self, arch):
        if arch.kind != CELL:
            raise SpecViolation('expected a cell architecture')
        n = arch.num_nodes
        if not 2 <= n <= self.max_nodes:
            raise SpecViolation(
                'cell has %d nodes; expected 2..%d' % (n, self.max_nodes))
        if arch.ops[0] != self.input_op or arch.ops[-1] != self.output_op:
            raise SpecViolation('cell sentinels do not match the spec')
        allowed = set(self.op_choices)
        for node in range(1, n - 1):
            if arch.ops[node] not in allowed:
                raise SpecViolation(
                    'node %d has op code %d outside the vocabulary' % (
                        node, arch.ops[node]))
        for i in range(n):
            for j in range(i + 1):
                if arch.matrix[i][j]:
                    raise SpecViolation('adjacency matrix is not upper '
                                        'triangular')
        if arch.num_edges > self.max_edges:
            raise SpecViolation(
                'cell has %d edges; at most %d allowed' % (
                    arch.num_edges, self.max_edges))
        pruned = prune(arch.matrix, arch.ops)
        if pruned is None or len(pruned[1]) != n:
            raise SpecViolation('cell has nodes off every input-output path')
        return arch

    def to_json(self):
        return {
            'kind': CELL,
            'max_nodes': self.max_nodes,
            'max_edges': self.max_edges,
            'ops': list(self.ops),
            'input_op': self.input_op,
            'output_op': self.output_op,
        }


PRESETS = {
    'nasbench101': CellSpec(7, 9, (
        'input', 'conv3x3-bn-relu', 'conv1x1-bn-relu', 'maxpool3x3',
        'output'), 0, 4),
    'shufflenetv2': BlockSpec((4,) * 20),
    'fairnas': BlockSpec((6,) * 19),
    'synthetic': BlockSpec((4,) * 12),
}


def spec_from_json(obj):
    if not isinstance(obj, dict):
        raise ConfigError('space spec must be a JSON object')
    kind = obj.get('kind')
    if kind not in (BLOCK, CELL):
        raise ConfigError("unknown space spec kind %r" % (kind,))
    try:
        if kind == BLOCK:
            spec = BlockSpec(tuple(obj['choices']))
        else:
            spec = CellSpec(
                int(obj['max_nodes']), int(obj['max_edges']),
                tuple(str(name) for name in obj['ops']),
                int(obj['input_op']), int(obj['output_op']),
            )
    except KeyError as e:
        raise ConfigError('space spec is missing field %s' % e)
    except (TypeError, ValueError) as e:
        raise ConfigError('malformed space spec: %s' % e)
    return spec.validate()


def spec_to_json(spec):
    return spec.to_json()


def load_spec(path):
    try:
        with open(path, encoding='utf-8') as fd:
            obj = json.load(fd)
    except OSError as e:
        raise ConfigError('cannot read space spec %s: %s' % (path, e))
    except ValueError as e:
        raise ConfigError('space spec %s is not valid JSON: %s' % (path, e))
    return spec_from_json(obj)


def dump_spec(spec, path):
    with open(path, 'w', encoding='utf-8') as fd:
        json_dump(spec_to_json(spec), fd)
        fd.write('\n')


# sampling

def _sample_cell(spec, rng):
    n = spec.max_nodes
    choices = spec.op_choices
    for _ in range(MAX_REJECTIONS):
        matrix = np.triu(rng.integers(0, 2, size=(n, n)), 1)
        inner = [choices[i] for i in rng.integers(len(choices), size=n - 2)]
        pruned = prune(
            matrix.tolist(), [spec.input_op] + inner + [spec.output_op])
        if pruned is None:
            continue
        if sum(sum(row) for row in pruned[0]) > spec.max_edges:
            continue
        return CellArchitecture(*pruned)
    raise RejectionOverflow(
        'gave up after %d consecutive invalid cell candidates' % (
            MAX_REJECTIONS))


def _sample_chunk(spec, size, rng):
    if spec.kind == BLOCK:
        draws = rng.integers(
            0, np.asarray(spec.choices), size=(size, len(spec.choices)))
        return [BlockArchitecture(tuple(int(c) for c in row)) for row in draws]
    return [_sample_cell(spec, rng) for _ in range(size)]


def sample_uniform(spec, n, rng, threads=1):
    """
    Draw n architectures independently.  Work is split into fixed size
    chunks, each drawn from its own substream of rng, so the result is
    identical for every thread count.
    """

    if n < 1:
        raise DomainError('sample size must be at least 1')
    rng = make_rng(rng)
    sizes = [len(part) for part in chunked(range(n), SAMPLE_CHUNK)]
    jobs = list(zip(sizes, spawn_rngs(rng, len(sizes))))
    results = parallel_map(
        lambda job: _sample_chunk(spec, job[0], job[1]), jobs, threads)
    return [arch for chunk in results for arch in chunk]


# cardinality

def _raw_cell_count(spec):
    n = spec.max_nodes
    slots = n * (n - 1) // 2
    graphs = sum(comb(slots, e) for e in range(min(spec.max_edges, slots) + 1))
    return len(spec.op_choices) ** (n - 2) * graphs


def _iter_cell_encodings(spec):
    n = spec.max_nodes
    slots = [(i, j) for i in range(n) for j in range(i + 1, n)]
    for bits in product((0, 1), repeat=len(slots)):
        if sum(bits) > spec.max_edges:
            continue
        matrix = [[0] * n for _ in range(n)]
        for (i, j), bit in zip(slots, bits):
            matrix[i][j] = bit
        for inner in product(spec.op_choices, repeat=n - 2):
            ops = (spec.input_op,) + inner + (spec.output_op,)
            pruned = prune(matrix, ops)
            if pruned is not None:
                yield CellArchitecture(*pruned)


def raw_count(spec):
    """
    Number of raw encodings of a space, before isomorphism removal.
    """

    if spec.kind == BLOCK:
        return prod(spec.choices)
    return _raw_cell_count(spec)


def enumerate_space(spec, limit=None):
    """
    Yield every member of a space exactly once (one representative per
    isomorphism class), in a deterministic order.

    Raises TooLarge if the raw encoding count exceeds limit.
    """

    raw = raw_count(spec)
    if limit is not None and raw > limit:
        raise TooLarge(
            'space has %d raw encodings; enumeration limited to %d' % (
                raw, limit))

    if spec.kind == BLOCK:
        for choices in product(*(range(count) for count in spec.choices)):
            yield BlockArchitecture(choices)
        return

    seen = set()
    for arch in _iter_cell_encodings(spec):
        key = canonical_key(arch)
        if key not in seen:
            seen.add(key)
            yield arch


def chao1(keys):
    """
    Chao1 lower bound estimate of the number of distinct classes from
    a sample of class labels.
    """

    counts = Counter(Counter(keys).values())
    observed = sum(counts.values())
    f1 = counts.get(1, 0)
    f2 = counts.get(2, 0)
    if f2:
        return observed + f1 * f1 / (2.0 * f2)
    return observed + f1 * (f1 - 1) / 2.0


def raw_cardinality(
        spec, rng=None, sample_size=DEFAULT_CARDINALITY_SAMPLES, threads=1):
    """
    Return the raw and deduplicated sizes of a space.

    Block spaces are counted exactly.  Cell spaces with at most
    ``EXACT_CARDINALITY_LIMIT`` raw encodings are enumerated; larger
    ones get a sampled estimate of the deduplicated count.
    """

    if spec.kind == BLOCK:
        raw = prod(spec.choices)
        return Cardinality(raw, raw, False)

    raw = _raw_cell_count(spec)
    if raw <= EXACT_CARDINALITY_LIMIT:
        deduplicated = sum(1 for _ in enumerate_space(spec))
        return Cardinality(raw, deduplicated, False)

    rng = make_rng(0 if rng is None else rng)
    keys = [
        canonical_key(arch)
        for arch in sample_uniform(spec, sample_size, rng, threads)
    ]
    estimate = int(round(chao1(keys)))
    logger.info(
        'estimated %d isomorphism classes from %d sampled cells',
        estimate, sample_size)
    return Cardinality(raw, estimate, True)


# snapshots

class SpaceSnapshot(object):
    """
    An explicit, isomorphism-free set of architectures, each with its
    predicted accuracy, in insertion order.
    """

    def __init__(self, members, iteration=0, query_count=0):
        # members is an OrderedDict of canonical key to (arch, prediction)
        if not members:
            raise EmptySnapshot('a snapshot requires at least one member')
        if len(members) > MAX_SNAPSHOT_SIZE:
            raise SnapshotTooLarge(
                'snapshot of %d members exceeds the cap of %d' % (
                    len(members), MAX_SNAPSHOT_SIZE))
        self.members = members
        self.iteration = iteration
        self.query_count = query_count
        self.mean_pred_acc = float(np.mean(self.predictions))

    def __len__(self):
        return len(self.members)

    def __iter__(self):
        return iter(self.archs)

    def __contains__(self, key):
        return key in self.members

    def __repr__(self):
        return '<%s iteration=%d size=%d mean_pred_acc=%.6f>' % (
            type(self).__name__, self.iteration, len(self),
            self.mean_pred_acc)

    @property
    def keys(self):
        return list(self.members)

    @property
    def archs(self):
        return [arch for arch, _ in self.members.values()]

    @property
    def predictions(self):
        return [prediction for _, prediction in self.members.values()]

    def items(self):
        """
        Yield ``(key, arch, prediction)`` triples in member order.
        """

        for key, (arch, prediction) in self.members.items():
            yield key, arch, prediction


def snapshot_from(archs, predictions, iteration=0, query_count=0):
    """
    Build a snapshot, keeping the first occurrence of every isomorphism
    class.
    """

    archs = list(archs)
    predictions = list(predictions)
    if len(archs) != len(predictions):
        raise LengthMismatch(
            '%d architectures but %d predictions' % (
                len(archs), len(predictions)))
    if not archs:
        raise EmptySnapshot('a snapshot requires at least one member')
    members = OrderedDict()
    for arch, prediction in zip(archs, predictions):
        key = canonical_key(arch)
        if key not in members:
            members[key] = (arch, float(prediction))
    return SpaceSnapshot(members, iteration, query_count)


def dump_snapshot(snapshot, path):
    write_csv(path, SNAPSHOT_HEADER, (
        (key, format_arch(arch), format_float(prediction))
        for key, arch, prediction in snapshot.items()
    ))


def load_snapshot(path, spec):
    archs = []
    predictions = []
    for lineno, (key, text, prediction) in read_csv(path, SNAPSHOT_HEADER):
        try:
            arch = parse_arch(text, spec)
            value = float(prediction)
        except (SpecViolation, ValueError) as e:
            raise ParseError(path, lineno, str(e))
        if canonical_key(arch) != key:
            raise ParseError(path, lineno, (
                "canonical_key '%s' does not match the architecture" % key))
        archs.append(arch)
        predictions.append(value)
    if not archs:
        raise EmptySnapshot('snapshot file %s has no members' % path)
    return snapshot_from(archs, predictions)
