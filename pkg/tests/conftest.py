import numpy as np
import pytest

import isosolve as iso


def make_grid(n=33, m=2, lo=-1.0, hi=1.0):
    return iso.Grid(bounds=((lo, hi),) * m, shape=(n,) * m)


def dg_single(grid, pair_idx, value=1.0, m=2):
    dg = np.zeros(grid.shape + (iso.n_pairs(m),))
    dg[..., pair_idx] = value
    return dg


@pytest.fixture(scope="session")
def f3():
    return iso.parse_map_spec("m=2,q=4; x1; x2; x1^2; x1*x2")


@pytest.fixture(scope="session")
def f2():
    return iso.parse_map_spec("m=2,q=4; x1; x2; x1^2; x2^2")


@pytest.fixture(scope="session")
def f1():
    return iso.parse_map_spec("m=2,q=4; x1; x2; x1*x2; x2^2")


@pytest.fixture(scope="session")
def example1():
    return iso.parse_map_spec("m=2,q=4; x1; exp(x1); x2; exp(x2)")


@pytest.fixture(scope="session")
def free5():
    return iso.parse_map_spec("m=2,q=5; x1; x2; x1^2; x1*x2; x2^2")


@pytest.fixture(scope="session")
def degenerate():
    return iso.parse_map_spec("m=2,q=4; x1; x2; x1^2; x1^2")
