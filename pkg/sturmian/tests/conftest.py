# Copyright 2024 The sturmian Developers
# SPDX-License-Identifier: Apache-2.0

import logging

import hypothesis
import numpy as np
import pytest

from sturmian.analysis import Tolerances, bulk_spectrum, find_gaps, label_gaps
from sturmian.operators import OperatorSpec
from sturmian.sequences import FIB_THETA, CutProjectParams, SequenceFamily

__all__ = [
    "slow",
]


# region #### Aliases #################################################################

slow = pytest.mark.slow

# endregion

# region #### Options & Hooks #########################################################

hypothesis.settings.register_profile("fast", max_examples=5, deadline=None)
hypothesis.settings.register_profile("default", deadline=None)
hypothesis.settings.load_profile("default")


def pytest_addoption(parser: pytest.Parser):
    parser.addoption(
        "--run-slow",
        action="store_true",
        default=False,
        help="Also run the full-size (q = 987) checks.",
    )


def pytest_collection_modifyitems(config: pytest.Config, items):
    if config.getoption("--run-slow"):
        return
    skip = pytest.mark.skip(reason="needs --run-slow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip)


# endregion

# region #### Common Fixtures #########################################################


@pytest.fixture(autouse=True)
def quiet_loggers():
    """Undo the levels :func:`sturmian.main.main` sets on the package loggers."""
    yield
    for name in ("sturmian.log", "sturmian.debug"):
        logging.getLogger(name).setLevel(logging.NOTSET)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240229)


@pytest.fixture(scope="session")
def fib_params() -> CutProjectParams:
    return CutProjectParams(FIB_THETA)


@pytest.fixture(scope="session")
def params_89() -> CutProjectParams:
    return CutProjectParams.periodic(FIB_THETA, 89)


@pytest.fixture(scope="session")
def params_233() -> CutProjectParams:
    return CutProjectParams.periodic(FIB_THETA, 233)


@pytest.fixture(scope="session")
def kohmoto_89(params_89):
    family = SequenceFamily(params_89)
    return family, OperatorSpec.kohmoto(params_89)


@pytest.fixture(scope="session")
def smoothed_89(params_89):
    family = SequenceFamily(params_89, "smoothed", epsilon=0.1)
    return family, OperatorSpec.normalized(params_89)


@pytest.fixture(scope="session")
def augmented_89(params_89):
    family = SequenceFamily(params_89, "augmented")
    return family, OperatorSpec.normalized(params_89)


@pytest.fixture(scope="session")
def augmented_89_gaps(augmented_89):
    family, spec = augmented_89
    tolerances = Tolerances()
    bulk = bulk_spectrum(family, spec, 16, tolerances=tolerances)
    gaps = find_gaps(bulk, tolerances.min_width, resolution=tolerances.resolution)
    return bulk, label_gaps(gaps, FIB_THETA, tolerances.label_for(family.q))


@pytest.fixture(scope="session")
def kohmoto_word_89(kohmoto_89):
    family, spec = kohmoto_89
    return family.word(family.base_param()), spec


@pytest.fixture(scope="session")
def kohmoto_89_gaps(kohmoto_89):
    family, spec = kohmoto_89
    tolerances = Tolerances()
    bulk = bulk_spectrum(family, spec, 1, tolerances=tolerances)
    gaps = find_gaps(bulk, tolerances.min_width, resolution=tolerances.resolution)
    return bulk, label_gaps(gaps, FIB_THETA, tolerances.label_for(family.q))


# endregion
