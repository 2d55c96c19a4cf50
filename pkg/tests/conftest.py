import numpy as np
import pytest

from gamdvqr import families as fam
from gamdvqr.margins import MarginModel
from gamdvqr.taulink import Covariates


@pytest.fixture
def interior_grid():
    g = np.linspace(0.1, 0.9, 9)
    u, v = np.meshgrid(g, g, indexing="ij")
    return u.ravel(), v.ravel()


@pytest.fixture
def std_normal_margin():
    return MarginModel(kind="parametric", family="normal", transform="none",
                       a=np.zeros(3), b=np.zeros(3))


def all_rotated_families(taus=None):
    """(family, tau) pairs covering every kind and rotation."""
    cases = []
    for kind in ("gaussian", "frank"):
        cases += [(fam.CopulaFamily(kind), 0.3), (fam.CopulaFamily(kind), -0.4)]
    cases += [(fam.CopulaFamily("studentt", df=5.0), 0.3),
              (fam.CopulaFamily("studentt", df=5.0), -0.4)]
    for kind in ("clayton", "gumbel"):
        cases += [(fam.CopulaFamily(kind, 0), 0.4), (fam.CopulaFamily(kind, 180), 0.4),
                  (fam.CopulaFamily(kind, 90), -0.4), (fam.CopulaFamily(kind, 270), -0.4)]
    return cases


def yearly_covariates(n):
    return Covariates((np.arange(n) % 365) + 1.0)
