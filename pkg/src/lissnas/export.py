# -*- coding: utf-8 -*-
"""
Result files.

Every tabular result is a UTF-8 CSV file whose header is the field
list of one of the row types below; floats are written so that they
read back to the identical value.  Plots are optional and need the
``plots`` extra (matplotlib).

trace.csv
    ``iteration,size,mean_pred_acc,queries_cumulative,variant``
pgood.csv
    ``iteration,size,p_good,threshold_acc``
rwa.csv
    ``lag,autocorrelation``
aad.csv
    ``distance,change_type,aad,num_pairs``; change_type is one of
    ``both``, ``operation`` or ``edge``
edf.csv
    ``space,error,fraction``; one row per jump of each space's EDF
spaces.csv
    ``space,size,auc,mean_acc,max_acc,max_cosine_distance,subsampled``
ks.csv
    ``a,b,statistic,p_value``
histogram_flops.csv, histogram_params.csv
    ``space,axis,bin,lower,upper,count``
report.csv
    ``variant,size,raw_cardinality,reduction_factor,mean_acc,max_acc,
    shrink_index``
"""

from __future__ import absolute_import

import json
import logging
from collections import namedtuple

from lissnas.exc import ConfigError
from lissnas.exc import ParseError
from lissnas.utils import format_float
from lissnas.utils import json_dump
from lissnas.utils import read_csv
from lissnas.utils import write_csv

logger = logging.getLogger(__name__)

BOTH = 'both'
OPERATION = 'operation'
EDGE = 'edge'
# the aad.csv label of each change type filter
CHANGE_TYPE_LABELS = {None: BOTH, 'op': OPERATION, 'edge': EDGE}

SVG_HASHSALT = 'lissnas'


def _row_type(name, fields, types):
    cls = namedtuple(name, fields)
    cls.types = types
    return cls


TraceRow = _row_type('TraceRow', [
    'iteration', 'size', 'mean_pred_acc', 'queries_cumulative', 'variant',
], (int, int, float, int, str))
PGoodRow = _row_type('PGoodRow', [
    'iteration', 'size', 'p_good', 'threshold_acc',
], (int, int, float, float))
RwaRow = _row_type('RwaRow', [
    'lag', 'autocorrelation',
], (int, float))
AadRow = _row_type('AadRow', [
    'distance', 'change_type', 'aad', 'num_pairs',
], (int, str, float, int))
EdfRow = _row_type('EdfRow', [
    'space', 'error', 'fraction',
], (str, float, float))
SpaceRow = _row_type('SpaceRow', [
    'space', 'size', 'auc', 'mean_acc', 'max_acc', 'max_cosine_distance',
    'subsampled',
], (str, int, float, float, float, float, int))
KsRow = _row_type('KsRow', [
    'a', 'b', 'statistic', 'p_value',
], (str, str, float, float))
HistogramRow = _row_type('HistogramRow', [
    'space', 'axis', 'bin', 'lower', 'upper', 'count',
], (str, str, int, float, float, int))
ReportRow = _row_type('ReportRow', [
    'variant', 'size', 'raw_cardinality', 'reduction_factor', 'mean_acc',
    'max_acc', 'shrink_index',
], (str, int, int, float, float, float, float))


def _format(value, kind):
    if kind is float:
        return format_float(value)
    return str(kind(value))


def dump_rows(path, rows, row_type):
    write_csv(path, row_type._fields, (
        [_format(value, kind) for value, kind in zip(row, row_type.types)]
        for row in rows
    ))


def load_rows(path, row_type):
    rows = []
    for lineno, row in read_csv(path, row_type._fields):
        try:
            rows.append(row_type(*(
                kind(value) for value, kind in zip(row, row_type.types))))
        except ValueError as e:
            raise ParseError(path, lineno, str(e))
    return rows


# conversions from result objects

def trace_rows(trace):
    return [
        TraceRow(
            entry.iteration, entry.size, entry.mean_pred_acc,
            entry.queries_cumulative, trace.variant)
        for entry in trace.entries
    ]


def rwa_rows(curve):
    return [
        RwaRow(lag, value)
        for lag, value in zip(curve.lags, curve.autocorrelation)
    ]


def edf_rows(name, edf):
    return [
        EdfRow(name, float(point), float(fraction))
        for point, fraction in zip(edf.points, edf.fractions)
    ]


def histogram_rows(name, histogram):
    return [
        HistogramRow(
            name, histogram.axis, index, histogram.edges[index],
            histogram.edges[index + 1], count)
        for index, count in enumerate(histogram.counts)
    ]


def dump_summary(summary, path):
    with open(path, 'w', encoding='utf-8') as fd:
        json_dump(summary, fd)
        fd.write('\n')


def load_summary(path):
    try:
        with open(path, encoding='utf-8') as fd:
            return json.load(fd)
    except OSError as e:
        raise ConfigError('cannot read summary %s: %s' % (path, e))
    except ValueError as e:
        raise ConfigError('summary %s is not valid JSON: %s' % (path, e))


# plots

def _pyplot_free_figure():
    try:
        from matplotlib.figure import Figure
    except ImportError:
        raise ConfigError(
            "plots require matplotlib; install the 'plots' extra")
    return Figure(figsize=(6, 4))


def _save_svg(figure, path):
    from matplotlib import rc_context
    # fixed salt and no date keep the files byte-identical across runs
    with rc_context({'svg.hashsalt': SVG_HASHSALT}):
        figure.savefig(path, format='svg', metadata={'Date': None})
    logger.debug("wrote plot '%s'", path)


def plot_rwa(curve, path):
    figure = _pyplot_free_figure()
    axes = figure.add_subplot(1, 1, 1)
    axes.plot(curve.lags, curve.autocorrelation, marker='o')
    axes.axhline(0.0, color='grey', linewidth=0.5)
    axes.set_xlabel('lag')
    axes.set_ylabel('autocorrelation')
    _save_svg(figure, path)


def plot_edfs(named_edfs, path):
    figure = _pyplot_free_figure()
    axes = figure.add_subplot(1, 1, 1)
    for name, edf in named_edfs:
        axes.step(
            list(edf.points) + [1.0], list(edf.fractions) + [1.0],
            where='post', label=name)
    axes.set_xlim(0.0, 1.0)
    axes.set_xlabel('error')
    axes.set_ylabel('cumulative fraction')
    axes.legend()
    _save_svg(figure, path)
