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

"""Unit-test configuration for ohdqn."""

import json

import numpy as np
import pkg_resources
import pytest

from ohdqn.nn import Architecture


@pytest.fixture
def TinyRun():
    """Return a short option-heads run configuration."""
    resource_package = __name__
    doc = pkg_resources.resource_string(resource_package,
                                        'json/tiny_run.json')

    return json.loads(doc)


@pytest.fixture
def TinyStandardRun():
    """Return a short standard DQN run configuration."""
    resource_package = __name__
    doc = pkg_resources.resource_string(resource_package,
                                        'json/tiny_standard_run.json')

    return json.loads(doc)


@pytest.fixture
def SmallArchitecture():
    """Return a two-head network small enough for exhaustive gradient checks."""
    return Architecture(in_channels=2, frame_size=16, conv_channels=3,
                        hidden_units=4, head_count=2, n_outputs=3)


@pytest.fixture
def rng():
    """Return a seeded random generator."""
    return np.random.default_rng(20160606)


def _gradient_check(loss, params, grads, names=None, samples=None, rng=None, h=1e-6, kink_tol=1e-5):
    """Compare analytic gradients against central finite differences.

    Entries whose one-sided slopes disagree by more than ``kink_tol`` sit
    on a ReLU kink and are skipped. Raise ``kink_tol`` for losses that
    are curved in the parameters.

    Returns:
        int: Number of entries compared.
    """
    center = loss()
    checked = skipped = 0

    for name in names or params.names:
        tensor = params.tensors[name]
        indices = list(np.ndindex(tensor.shape))
        if samples is not None and len(indices) > samples:
            picks = rng.choice(len(indices), size=samples, replace=False)
            indices = [indices[i] for i in picks]

        for idx in indices:
            original = tensor[idx]
            tensor[idx] = original + h
            up = loss()
            tensor[idx] = original - h
            down = loss()
            tensor[idx] = original

            right, left = (up - center) / h, (center - down) / h
            if abs(right - left) > kink_tol * max(1.0, abs(right) + abs(left)):
                skipped += 1
                continue

            numeric = (up - down) / (2 * h)
            analytic = grads[name][idx]
            assert abs(analytic - numeric) <= 1e-4 * max(abs(analytic), abs(numeric)) + 1e-7, \
                f'{name}{idx}: analytic {analytic} != numeric {numeric}'
            checked += 1

    assert skipped <= 0.1 * (checked + skipped)

    return checked


@pytest.fixture
def GradientCheck():
    """Return the finite-difference gradient checker."""
    return _gradient_check
