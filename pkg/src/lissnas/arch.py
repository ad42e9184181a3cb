# -*- coding: utf-8 -*-
"""
Architecture representations for the search spaces.

Two kinds of architectures are supported:

cell
    A directed acyclic graph with labeled operation nodes, stored as a
    strictly upper triangular adjacency matrix (a tuple of row tuples
    of 0/1) and a tuple of op codes.  Node 0 is always the input and
    the last node the output; both carry the sentinel codes of the
    owning ``CellSpec``.  Every stored cell is pruned, i.e. each node
    lies on at least one input to output path.

block
    A fixed length vector of per-layer choices.

Op codes are opaque indices into the vocabulary of the owning spec;
any dataset specific numbering is the concern of whoever produced the
benchmark export.

The text form of an architecture, as used in CSV files and on the
command line, is defined as follows:

block
    comma separated integers, e.g. ``0,3,1,2``

cell
    the row-major upper triangle bits of the adjacency matrix, a ``|``
    separator, then the comma separated op codes, e.g. a three node
    cell with edges 0->1, 1->2 is ``101|0,1,4``

Atomic changes, which define the edit distance, are the change of a
single layer's choice in a block, and in a cell one of:

- a relabel of one intermediate node's op;
- the addition of a single edge between any two nodes that keeps the
  graph acyclic, after which the nodes are renumbered in topological
  order, or the removal of a single edge;
- the insertion of a new node on a fresh two-edge path between two
  nodes, or the deletion of a node with exactly one incoming and one
  outgoing edge.

Changes that would leave a node off every input to output path, or
exceed the node or edge budget of the spec, are not legal.  Every
legal change can be undone by another legal change, and every change
produces a cell that is not isomorphic to the one it was applied to.
"""

from __future__ import absolute_import

import hashlib
import heapq
import logging
from collections import namedtuple
from functools import lru_cache
from itertools import permutations
from itertools import product

from lissnas.exc import DomainError
from lissnas.exc import NoLegalMove
from lissnas.exc import SpaceMismatch
from lissnas.exc import SpecViolation
from lissnas.exc import TooLarge

logger = logging.getLogger(__name__)

BLOCK = 'block'
CELL = 'cell'

# change types
OP = 'op'
EDGE = 'edge'
NODE = 'node'
CHANGE_TYPES = (OP, EDGE, NODE)

# exact edit distance for cells searches the graph of atomic changes;
# beyond this many nodes the search is refused.
EDIT_DISTANCE_MAX_NODES = 6

__all__ = [
    'CellArchitecture', 'BlockArchitecture', 'Move',
    'canonical_form', 'canonical_key', 'edit_distance',
    'legal_moves', 'apply_move', 'mutate_once', 'apply_changes',
    'generate_neighbor', 'random_walk', 'total_edit_distance',
    'format_arch', 'parse_arch', 'prune',
]

Move = namedtuple('Move', ['type', 'a', 'b', 'op'], defaults=(None,))
Move.__doc__ = """
An atomic change.  For op changes, ``a`` is the node (or layer) index
and ``b`` the new op code (or choice).  For edge changes ``a`` and ``b``
are the endpoints of the edge to add or remove.  A node change with
``b`` set inserts a node labeled ``op`` with the edges ``a`` to the new
node and the new node to ``b``; with ``b`` of None it deletes node ``a``
and its two edges.
"""

# the bounds a cell search needs from a spec
_CellBounds = namedtuple('_CellBounds', [
    'max_nodes', 'max_edges', 'op_choices'])


def _live_nodes(matrix):
    """
    Return the set of nodes lying on some path from the first node to
    the last node.
    """

    n = len(matrix)
    forward = {0}
    for j in range(1, n):
        if any(matrix[i][j] for i in forward if i < j):
            forward.add(j)
    backward = {n - 1}
    for i in range(n - 2, -1, -1):
        if any(matrix[i][j] for j in backward if j > i):
            backward.add(i)
    return forward & backward


def prune(matrix, ops):
    """
    Remove every node not on an input to output path.

    Returns the pruned ``(matrix, ops)`` pair as tuples, or None if the
    output cannot be reached from the input at all.
    """

    n = len(ops)
    live = _live_nodes(matrix)
    if 0 not in live or (n - 1) not in live:
        return None
    keep = sorted(live)
    if len(keep) == n:
        return (
            tuple(tuple(int(v) for v in row) for row in matrix),
            tuple(int(o) for o in ops),
        )
    return (
        tuple(tuple(int(matrix[i][j]) for j in keep) for i in keep),
        tuple(int(ops[i]) for i in keep),
    )


class CellArchitecture(namedtuple('CellArchitecture', ['matrix', 'ops'])):
    """
    A cell; see the module documentation.
    """

    __slots__ = ()
    kind = CELL

    @classmethod
    def from_raw(cls, matrix, ops):
        """
        Build a cell from any upper triangular matrix and op list,
        pruning nodes that are not on an input to output path.
        """

        if len(matrix) != len(ops):
            raise SpecViolation(
                'adjacency matrix has %d rows for %d ops' % (
                    len(matrix), len(ops)))
        pruned = prune(matrix, ops)
        if pruned is None:
            raise SpecViolation('no path from input to output')
        return cls(*pruned)

    @property
    def num_nodes(self):
        return len(self.ops)

    @property
    def num_edges(self):
        return sum(sum(row) for row in self.matrix)

    def edges(self):
        n = len(self.ops)
        return [
            (i, j) for i in range(n) for j in range(i + 1, n)
            if self.matrix[i][j]
        ]


class BlockArchitecture(namedtuple('BlockArchitecture', ['choices'])):
    """
    A block architecture; one choice per layer.
    """

    __slots__ = ()
    kind = BLOCK

    @classmethod
    def from_raw(cls, choices):
        return cls(tuple(int(c) for c in choices))

    @property
    def num_layers(self):
        return len(self.choices)


# canonicalization

def _cell_signature(matrix, ops, order):
    labels = ','.join(str(ops[k]) for k in order)
    bits = ''.join(
        str(matrix[i][j]) for i in order for j in order)
    return '%d:%s|%s' % (len(order), labels, bits)


@lru_cache(maxsize=1 << 16)
def _canonical_cell(matrix, ops):
    pruned = prune(matrix, ops)
    if pruned is None:
        raise SpecViolation('no path from input to output')
    matrix, ops = pruned
    n = len(ops)
    if n <= 2:
        return _cell_signature(matrix, ops, list(range(n)))

    # only orderings that sort intermediate nodes by isomorphism
    # invariants are searched; ties are permuted exhaustively.
    indegree = [sum(matrix[i][j] for i in range(n)) for j in range(n)]
    outdegree = [sum(row) for row in matrix]
    groups = {}
    for node in range(1, n - 1):
        invariant = (ops[node], indegree[node], outdegree[node])
        groups.setdefault(invariant, []).append(node)
    ordered = [groups[invariant] for invariant in sorted(groups)]

    best = None
    for parts in product(*(permutations(group) for group in ordered)):
        order = [0]
        for part in parts:
            order.extend(part)
        order.append(n - 1)
        signature = _cell_signature(matrix, ops, order)
        if best is None or signature < best:
            best = signature
    return best


def canonical_form(arch):
    """
    Return the canonical serialization of an architecture.  Cells are
    pruned and the lexicographically smallest serialization over all
    relabelings of intermediate nodes is taken; blocks serialize their
    choice vector verbatim.
    """

    if arch.kind == CELL:
        return _canonical_cell(arch.matrix, arch.ops)
    return 'b:' + ','.join(str(c) for c in arch.choices)


def canonical_key(arch):
    """
    A fixed length digest that is equal for two architectures if and
    only if they are isomorphic.
    """

    return hashlib.md5(canonical_form(arch).encode('utf-8')).hexdigest()



def _identity(arch):
    # blocks are their own canonical form
    return arch if arch.kind == BLOCK else canonical_key(arch)


# atomic changes

def _descendants(matrix):
    n = len(matrix)
    below = [set() for _ in range(n)]
    for i in range(n - 2, -1, -1):
        for j in range(i + 1, n):
            if matrix[i][j]:
                below[i].add(j)
                below[i].update(below[j])
    return below


def _without(matrix, node):
    keep = [i for i in range(len(matrix)) if i != node]
    return tuple(tuple(matrix[i][j] for j in keep) for i in keep)


def _sorted_cell(n, edges, ops):
    """
    Build a cell from an edge list over n nodes, numbered in the
    topological order that takes the lowest ready index first; an
    order that is already topological is kept as is.
    """

    indegree = [0] * n
    successors = [[] for _ in range(n)]
    for i, j in edges:
        indegree[j] += 1
        successors[i].append(j)
    ready = [node for node in range(n) if not indegree[node]]
    heapq.heapify(ready)
    order = []
    while ready:
        node = heapq.heappop(ready)
        order.append(node)
        for j in successors[node]:
            indegree[j] -= 1
            if not indegree[j]:
                heapq.heappush(ready, j)
    position = {node: k for k, node in enumerate(order)}
    matrix = [[0] * n for _ in range(n)]
    for i, j in edges:
        matrix[position[i]][position[j]] = 1
    return CellArchitecture(
        tuple(tuple(row) for row in matrix),
        tuple(ops[node] for node in order))


def _open_pairs(arch, below):
    """
    Every ordered pair (u, v) of distinct nodes where a new connection
    from u to v keeps the cell acyclic.
    """

    n = arch.num_nodes
    return [
        (u, v) for u in range(n - 1) for v in range(1, n)
        if u != v and u not in below[v]
    ]


def legal_moves(arch, spec, change_type=None):
    """
    List every atomic change that keeps arch valid under spec,
    optionally restricted to one change type.
    """

    if change_type is not None and change_type not in CHANGE_TYPES:
        raise DomainError('unknown change type %r' % (change_type,))

    moves = []
    if arch.kind == BLOCK:
        if change_type not in (None, OP):
            return moves
        for layer, current in enumerate(arch.choices):
            for choice in range(spec.choices[layer]):
                if choice != current:
                    moves.append(Move(OP, layer, choice))
        return moves

    n = arch.num_nodes
    matrix = arch.matrix
    edges = arch.edges()
    if change_type in (None, OP):
        for node in range(1, n - 1):
            for op in spec.op_choices:
                if op != arch.ops[node]:
                    moves.append(Move(OP, node, op))
    if change_type == OP:
        return moves

    pairs = _open_pairs(arch, _descendants(matrix))
    if change_type in (None, EDGE):
        for i, j in edges:
            if len(_live_nodes(_flip(matrix, i, j))) == n:
                moves.append(Move(EDGE, i, j))
        if len(edges) < spec.max_edges:
            for u, v in pairs:
                if not (u < v and matrix[u][v]):
                    moves.append(Move(EDGE, u, v))
    if change_type in (None, NODE):
        if n < spec.max_nodes and len(edges) + 2 <= spec.max_edges:
            for u, v in pairs:
                for op in spec.op_choices:
                    moves.append(Move(NODE, u, v, op))
        for node in range(1, n - 1):
            indegree = sum(matrix[i][node] for i in range(node))
            if indegree != 1 or sum(matrix[node]) != 1:
                continue
            if len(_live_nodes(_without(matrix, node))) == n - 1:
                moves.append(Move(NODE, node, None))
    return moves


def _flip(matrix, i, j):
    rows = [list(row) for row in matrix]
    rows[i][j] = 1 - rows[i][j]
    return tuple(tuple(row) for row in rows)


def apply_move(arch, move):
    if arch.kind == BLOCK:
        choices = list(arch.choices)
        choices[move.a] = move.b
        return BlockArchitecture(tuple(choices))
    if move.type == OP:
        ops = list(arch.ops)
        ops[move.a] = move.b
        return CellArchitecture(arch.matrix, tuple(ops))

    n = arch.num_nodes
    edges = arch.edges()
    if move.type == EDGE:
        if (move.a, move.b) in edges:
            return CellArchitecture(
                _flip(arch.matrix, move.a, move.b), arch.ops)
        return _sorted_cell(n, edges + [(move.a, move.b)], arch.ops)
    if move.b is None:
        ops = arch.ops[:move.a] + arch.ops[move.a + 1:]
        return CellArchitecture(_without(arch.matrix, move.a), ops)

    # the new node takes index n - 1 and the output moves to n
    def shifted(node):
        return n if node == n - 1 else node

    edges = [(shifted(i), shifted(j)) for i, j in edges]
    edges.append((shifted(move.a), n - 1))
    edges.append((n - 1, shifted(move.b)))
    ops = arch.ops[:-1] + (move.op, arch.ops[-1])
    return _sorted_cell(n + 1, edges, ops)


def _draw(moves, rng, weights):
    if not weights:
        return moves[int(rng.integers(len(moves)))]
    scores = [float(weights.get(move.type, 1.0)) for move in moves]
    total = sum(scores)
    if total <= 0:
        raise DomainError('change weights must not all be zero')
    pick = rng.random() * total
    for move, score in zip(moves, scores):
        pick -= score
        if pick < 0:
            return move
    return moves[-1]


def _step(arch, spec, rng, change_type, weights, visited):
    """
    Draw legal changes until one leads outside visited; None when every
    legal change leads back into it.
    """

    moves = legal_moves(arch, spec, change_type)
    if weights:
        weighted = [
            move for move in moves if weights.get(move.type, 1.0) > 0]
        if moves and not weighted:
            raise DomainError('change weights must not all be zero')
        moves = weighted
    while moves:
        move = _draw(moves, rng, weights)
        following = apply_move(arch, move)
        if not visited or _identity(following) not in visited:
            return following
        moves.remove(move)
    return None


def mutate_once(arch, spec, rng, change_type=None, weights=None, avoid=()):
    """
    Apply one atomic change drawn uniformly over all legal changes (or
    in proportion to per change type weights, if provided).  A result
    isomorphic to an architecture in ``avoid`` is never produced.
    """

    visited = set(_identity(other) for other in avoid)
    following = _step(arch, spec, rng, change_type, weights, visited)
    if following is None:
        raise NoLegalMove(
            'no legal atomic change for %s' % format_arch(arch))
    return following


def apply_changes(arch, d, spec, rng, change_type=None, weights=None):
    """
    Apply d atomic changes in sequence, never returning to any
    architecture already visited on the way, the start included.
    Stops early when every legal change would revisit one.
    """

    visited = set([_identity(arch)])
    current = arch
    for step in range(d):
        following = _step(current, spec, rng, change_type, weights, visited)
        if following is None:
            if step == 0:
                raise NoLegalMove(
                    'no legal atomic change for %s' % format_arch(arch))
            logger.debug(
                'stopping after %d of %d changes; every change revisits '
                'the path', step, d)
            break
        current = following
        visited.add(_identity(current))
    return current


def generate_neighbor(
        arch, max_d, spec, rng, change_type=None, weights=None):
    """
    Draw d uniformly from 1..max_d and apply that many changes.
    """

    total = total_edit_distance(spec)
    if not 1 <= max_d <= total:
        raise DomainError(
            'max_d must be within 1..%d; got %r' % (total, max_d))
    d = int(rng.integers(1, max_d + 1))
    return apply_changes(arch, d, spec, rng, change_type, weights)


def random_walk(arch, steps, spec, rng, weights=None):
    """
    Return the walk of steps + 1 architectures starting at arch.
    """

    if steps < 1:
        raise DomainError('a walk needs at least one step')
    walk = [arch]
    for _ in range(steps):
        walk.append(mutate_once(walk[-1], spec, rng, weights=weights))
    return walk


def total_edit_distance(spec):
    """
    The number of independently changeable positions in a space.
    """

    if spec.kind == BLOCK:
        return len(spec.choices)
    return spec.max_edges + spec.max_nodes - 2


# edit distance

def _check_same_space(a, b, spec=None):
    if a.kind != b.kind:
        raise SpaceMismatch(
            "cannot compare a '%s' architecture with a '%s' one" % (
                a.kind, b.kind))
    if a.kind == BLOCK and len(a.choices) != len(b.choices):
        raise SpaceMismatch(
            'block architectures have %d and %d layers' % (
                len(a.choices), len(b.choices)))
    if a.kind == CELL and (
            a.ops[0] != b.ops[0] or a.ops[-1] != b.ops[-1]):
        raise SpaceMismatch('cells have different input or output codes')
    if spec is None:
        return
    for arch in (a, b):
        try:
            spec.check(arch)
        except SpecViolation as e:
            raise SpaceMismatch(
                "architecture '%s' is not in the given space: %s" % (
                    format_arch(arch), e))


def _spanning_bounds(a, b):
    n = max(a.num_nodes, b.num_nodes)
    return _CellBounds(
        n, n * (n - 1) // 2,
        tuple(sorted(set(a.ops[1:-1]) | set(b.ops[1:-1]))))


@lru_cache(maxsize=1 << 12)
def _cell_distance(a, b, bounds):
    """
    Breadth first search over canonical classes, grown a full level at
    a time from whichever end has the smaller frontier.
    """

    source = canonical_key(a)
    target = canonical_key(b)
    if source == target:
        return 0
    seen = [{source: 0}, {target: 0}]
    frontiers = [[a], [b]]
    while frontiers[0] and frontiers[1]:
        side = 0 if len(frontiers[0]) <= len(frontiers[1]) else 1
        depth = seen[side][_identity(frontiers[side][0])]
        other = seen[1 - side]
        best = None
        following = []
        for arch in frontiers[side]:
            for move in legal_moves(arch, bounds):
                reached = apply_move(arch, move)
                key = canonical_key(reached)
                if key in other:
                    length = depth + 1 + other[key]
                    if best is None or length < best:
                        best = length
                if key not in seen[side]:
                    seen[side][key] = depth + 1
                    following.append(reached)
        if best is not None:
            return best
        frontiers[side] = following
    raise NoLegalMove(
        "no sequence of atomic changes turns '%s' into '%s'" % (
            format_arch(a), format_arch(b)))


def edit_distance(a, b, spec=None):
    """
    The minimum number of atomic changes needed to turn a into b.

    Block architectures use the Hamming distance over their choices.
    Cells are compared by an exact search over the atomic changes the
    spec allows; without a spec, the smallest space holding both cells
    with no edge budget is searched.  Architectures that fail the spec
    raise SpaceMismatch.
    """

    _check_same_space(a, b, spec)
    if a.kind == BLOCK:
        return sum(1 for x, y in zip(a.choices, b.choices) if x != y)

    if spec is None:
        bounds = _spanning_bounds(a, b)
    else:
        bounds = _CellBounds(spec.max_nodes, spec.max_edges, spec.op_choices)
    if bounds.max_nodes > EDIT_DISTANCE_MAX_NODES:
        raise TooLarge(
            'exact cell edit distance supports at most %d nodes; got %d' % (
                EDIT_DISTANCE_MAX_NODES, bounds.max_nodes))
    return _cell_distance(a, b, bounds)




# text form

def format_arch(arch):
    if arch.kind == BLOCK:
        return ','.join(str(c) for c in arch.choices)
    n = arch.num_nodes
    bits = ''.join(
        str(arch.matrix[i][j]) for i in range(n) for j in range(i + 1, n))
    return '%s|%s' % (bits, ','.join(str(o) for o in arch.ops))


def parse_arch(text, spec):
    """
    Parse the text form of an architecture for the given spec; the
    result is checked against the spec.
    """

    text = text.strip()
    try:
        if spec.kind == BLOCK:
            if '|' in text:
                raise ValueError("unexpected '|' in block architecture")
            arch = BlockArchitecture.from_raw(text.split(','))
        else:
            bits, sep, ops = text.partition('|')
            if not sep:
                raise ValueError("missing '|' separator in cell architecture")
            ops = [int(o) for o in ops.split(',')]
            n = len(ops)
            if len(bits) != n * (n - 1) // 2 or set(bits) - set('01'):
                raise ValueError(
                    'expected %d edge bits for %d nodes' % (
                        n * (n - 1) // 2, n))
            matrix = [[0] * n for _ in range(n)]
            pos = 0
            for i in range(n):
                for j in range(i + 1, n):
                    matrix[i][j] = int(bits[pos])
                    pos += 1
            arch = CellArchitecture.from_raw(matrix, ops)
    except ValueError as e:
        raise SpecViolation('invalid architecture %r: %s' % (text, e))
    spec.check(arch)
    return arch
