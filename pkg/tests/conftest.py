import sys

import numpy as np
import pytest

from ccwnet import CaseControlSample, Dataset


def make_sample(case_values, control_values) -> CaseControlSample:
    """A univariate sample whose coordinate-0 values are given per stratum."""
    x = np.concatenate([np.asarray(case_values, float), np.asarray(control_values, float)])
    y = np.array([1] * len(case_values) + [0] * len(control_values))
    return CaseControlSample.from_dataset(Dataset(y, x.reshape(-1, 1)))


@pytest.fixture
def report():
    """Print a pass/fail line that bypasses pytest's capture."""

    def _report(line: str) -> None:
        print(line, file=sys.__stdout__, flush=True)

    return _report
