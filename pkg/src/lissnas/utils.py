# -*- coding: utf-8 -*-
"""
Assortment of utility functions.
"""

from __future__ import absolute_import

import csv
import logging
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
from functools import partial
from json import dump
from json import dumps
from pdb import post_mortem

import numpy as np

from lissnas.exc import ParseError
from lissnas.exc import SchemaMismatch

# upper bound (exclusive) for the integers drawn to seed substreams
_SUBSTREAM_ENTROPY = 2 ** 63

json_dumps = partial(dumps, indent=4, sort_keys=True, separators=(',', ': '))
json_dump = partial(dump, indent=4, sort_keys=True, separators=(',', ': '))


def enable_pretty_logging(logger='lissnas', level=logging.DEBUG, stream=None):
    """
    Shorthand to enable pretty logging
    """

    def cleanup():
        logger.removeHandler(handler)
        logger.level = old_level

    if not isinstance(logger, logging.Logger):
        logger = logging.getLogger(logger)

    old_level = logger.level
    handler = logging.StreamHandler(stream)
    handler.setFormatter(logging.Formatter(
        u'%(asctime)s %(levelname)s %(name)s %(message)s'))
    logger.addHandler(handler)
    logger.setLevel(level)
    return cleanup


@contextmanager
def pretty_logging(logger='lissnas', level=logging.DEBUG, stream=None):
    try:
        cleanup = enable_pretty_logging(logger, level, stream)
        yield stream
    finally:
        cleanup()


def make_rng(seed):
    """
    Return a numpy Generator for seed; an existing Generator is passed
    through untouched so that callers may share one stream.
    """

    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def spawn_rngs(rng, count):
    """
    Derive count independent substreams from rng.

    Exactly one draw is consumed from rng regardless of count, and the
    i-th substream depends only on that draw and i, so work split over
    these substreams produces the same results however it is later
    scheduled.
    """

    root = np.random.SeedSequence(int(rng.integers(_SUBSTREAM_ENTROPY)))
    return [np.random.default_rng(child) for child in root.spawn(count)]


def chunked(items, size):
    """
    Split a sequence into consecutive lists of at most size items.
    """

    return [items[i:i + size] for i in range(0, len(items), size)]


def parallel_map(func, items, threads=1):
    """
    Map func over items, with a thread pool when threads > 1.  Results
    are always returned in input order.
    """

    items = list(items)
    if threads is None or threads <= 1 or len(items) <= 1:
        return [func(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as executor:
        return list(executor.map(func, items))


def pdb_post_mortem(*a, **kw):
    post_mortem(*a, **kw)


def format_float(value):
    """
    Render a float so that reading it back gives the identical value.
    """

    return repr(float(value))


def write_csv(path, header, rows):
    with open(path, 'w', encoding='utf-8', newline='') as fd:
        writer = csv.writer(fd, lineterminator='\n')
        writer.writerow(header)
        writer.writerows(rows)


def _decoded(path, fd):
    for lineno, raw in enumerate(fd, 1):
        try:
            yield raw.decode('utf-8')
        except UnicodeDecodeError as e:
            raise ParseError(path, lineno, 'not valid utf-8: %s' % e.reason)


def read_csv(path, header):
    """
    Yield ``(lineno, row)`` for every data row of a CSV file whose
    first line must be exactly the provided header.

    A file without any line at all produces nothing; rows with the
    wrong number of fields, and lines that are not valid UTF-8, raise
    ParseError.
    """

    header = list(header)
    with open(path, 'rb') as fd:
        reader = csv.reader(_decoded(path, fd))
        try:
            found = next(reader)
        except StopIteration:
            return
        except csv.Error as e:
            raise ParseError(path, reader.line_num, str(e))
        if found != header:
            raise SchemaMismatch(
                "%s: expected header '%s', found '%s'" % (
                    path, ','.join(header), ','.join(found)))
        while True:
            try:
                row = next(reader)
            except StopIteration:
                break
            except csv.Error as e:
                raise ParseError(path, reader.line_num, str(e))
            if not row:
                continue
            if len(row) != len(header):
                raise ParseError(path, reader.line_num, (
                    'expected %d fields, found %d' % (len(header), len(row))))
            yield reader.line_num, row
