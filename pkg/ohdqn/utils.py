#
# This file is part of ohdqn, a DQN with option heads for the game of Catch.
# Copyright (C) 2026 ohdqn developers.
#
# This program is free software: you can redistribute it and/or modify
# it under the terms of the GNU General Public License as published by
# the Free Software Foundation, either version 3 of the License, or
# (at your option) any later version.
#
# This program is distributed in the hope that it will be useful,
# but WITHOUT ANY WARRANTY; without even the implied warranty of
# MERCHANTABILITY or FITNESS FOR A PARTICULAR PURPOSE. See the
# GNU General Public License for more details.
#
# You should have received a copy of the GNU General Public License
# along with this program. If not, see <https://www.gnu.org/licenses/gpl-3.0.html>.
#

"""Utility functions for ohdqn: CSV files, SVG learning curves and PGM frames."""

import csv
import json

import jinja2
import numpy as np
from pkg_resources import resource_filename

_template_loader = jinja2.FileSystemLoader(searchpath=resource_filename(__name__, 'templates/'))

_template_env = jinja2.Environment(loader=_template_loader,
                                   autoescape=jinja2.select_autoescape(['svg']),
                                   keep_trailing_newline=True)

#: list: Stroke colors of successive curves.
CURVE_COLORS = ['#1f77b4', '#d62728', '#2ca02c', '#9467bd', '#ff7f0e', '#8c564b']

#: tuple: Header of a per-run score file.
RUN_COLUMNS = ('epoch', 'avg_score')

#: tuple: Header of an aggregate score file.
AGGREGATE_COLUMNS = ('epoch', 'mean', 'std')


def render_template(template_name, **kwargs):
    """Render a Jinja2 template shipped with the package."""
    template = _template_env.get_template(template_name)
    return template.render(**kwargs)


def write_csv(path, columns, rows):
    """Write a UTF-8 CSV file with a header row.

    Floats are written with their shortest round-trip representation.

    Args:
        path (str): Destination file.
        columns (sequence): Column names.
        rows (iterable): Sequences of values, in column order.
    """
    with open(path, 'wt', encoding='utf-8', newline='') as fp:
        writer = csv.writer(fp, lineterminator='\n')
        writer.writerow(columns)
        for row in rows:
            writer.writerow(['' if value is None else repr(float(value)) if isinstance(value, float) else value
                             for value in row])


def read_csv(path):
    """Read a CSV file written by :func:`write_csv`.

    Returns:
        tuple: The column names and a dict mapping each column to a list of
        values; ``epoch`` values are integers, the others floats (or None).
    """
    with open(path, 'rt', encoding='utf-8', newline='') as fp:
        reader = csv.reader(fp)
        columns = next(reader)
        data = {name: [] for name in columns}
        for row in reader:
            for name, value in zip(columns, row):
                if name == 'epoch':
                    data[name].append(int(value))
                else:
                    data[name].append(float(value) if value != '' else None)
    return columns, data


def write_run_csv(path, records):
    """Write the ``epoch,avg_score`` file of a run."""
    write_csv(path, RUN_COLUMNS, ((r.epoch, r.avg_score) for r in records))


def write_aggregate_csv(path, curve):
    """Write the ``epoch,mean,std`` file of an aggregate curve."""
    write_csv(path, AGGREGATE_COLUMNS, zip(curve.epochs, curve.mean, curve.std))


def _polyline(xs, ys):
    return ' '.join(f'{x:.2f},{y:.2f}' for x, y in zip(xs, ys))


def learning_curves_svg(curves, title='', provenance=None, width=640, height=400,
                        y_range=(-1.0, 1.0)):
    """Render aggregate curves as an SVG document.

    Each curve is drawn as one ``<path>`` for its mean and one ``<polygon>``
    for its mean plus or minus one standard deviation.

    Args:
        curves (sequence): :class:`ohdqn.harness.AggregateCurve` objects.
        title (str): Plot title.
        provenance (dict, optional): Embedded as JSON in ``<metadata>``.
        width (int): Width in pixels.
        height (int): Height in pixels.
        y_range (tuple): Score axis bounds.

    Returns:
        str: The SVG document.
    """
    left, right, top, bottom = 60, 150, 40, 50
    plot_w, plot_h = width - left - right, height - top - bottom

    epochs = [e for curve in curves for e in curve.epochs] or [1]
    x_min, x_max = min(epochs), max(epochs)
    x_span = max(x_max - x_min, 1)
    y_min, y_max = y_range

    def sx(x):
        return left + (x - x_min) / x_span * plot_w

    def sy(y):
        y = min(max(y, y_min), y_max)
        return top + (y_max - y) / (y_max - y_min) * plot_h

    series = []
    for i, curve in enumerate(curves):
        xs = [sx(e) for e in curve.epochs]
        mean = np.asarray(curve.mean, dtype=np.float64)
        std = np.asarray(curve.std, dtype=np.float64)
        path = 'M ' + ' L '.join(f'{x:.2f},{sy(y):.2f}' for x, y in zip(xs, mean))
        band = _polyline(xs + xs[::-1], [sy(y) for y in mean + std] + [sy(y) for y in (mean - std)[::-1]])
        series.append({
            'label': curve.label,
            'color': CURVE_COLORS[i % len(CURVE_COLORS)],
            'path': path,
            'band': band,
            'legend_y': top + 16 * i + 8,
        })

    y_ticks = [{'value': f'{v:g}', 'y': sy(v)} for v in np.linspace(y_min, y_max, 5)]
    x_ticks = [{'value': int(v), 'x': sx(v)}
               for v in sorted(set(np.linspace(x_min, x_max, min(x_span + 1, 6)).round().astype(int)))]

    return render_template('learning-curves.svg', width=width, height=height, title=title,
                           left=left, top=top, plot_w=plot_w, plot_h=plot_h,
                           legend_x=left + plot_w + 12, series=series,
                           x_ticks=x_ticks, y_ticks=y_ticks,
                           metadata=json.dumps(provenance, sort_keys=True) if provenance else '')


def write_svg(path, curves, title='', provenance=None):
    """Write aggregate curves to an SVG file."""
    with open(path, 'wt', encoding='utf-8') as fp:
        fp.write(learning_curves_svg(curves, title=title, provenance=provenance))


def frame_to_pgm(frame, comment='', maxval=255):
    """Encode a frame with intensities in ``[0, 1]`` as an ASCII (P2) PGM image."""
    levels = np.rint(np.clip(frame, 0.0, 1.0) * maxval).astype(int)
    return render_template('frame.pgm', width=levels.shape[1], height=levels.shape[0],
                           maxval=maxval, comment=comment, rows=levels.tolist())


def tile_frames(frames, gap=1, fill=0.25):
    """Place frames side by side, separated by ``gap`` columns of intensity ``fill``."""
    frames = [np.asarray(f, dtype=np.float64) for f in frames]
    height = frames[0].shape[0]
    separator = np.full((height, gap), fill)
    pieces = []
    for i, frame in enumerate(frames):
        if i:
            pieces.append(separator)
        pieces.append(frame)
    return np.concatenate(pieces, axis=1)


def write_pgm(path, frame, comment=''):
    """Write a frame to a PGM file."""
    with open(path, 'wt', encoding='ascii') as fp:
        fp.write(frame_to_pgm(frame, comment=comment))
