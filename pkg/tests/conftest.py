import numpy as np
import pytest

from auxtrial.data import GroupSummary


def make_summary(group=0, pvalue=0.5, sbar=0.0, aux_pvalue=0.5, error=None):
    z = 0.0
    return GroupSummary(
        group=group, n0=50, n1=50, ybar_diff=0.0, sbar_diff=sbar,
        var_hat=0.004, z=z, pvalue=pvalue, aux_n0=50, aux_n1=50,
        aux_var_hat=0.005, aux_z=0.0, aux_pvalue=aux_pvalue, error=error,
    )


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
