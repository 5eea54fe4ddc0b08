"""
Fixtures compartilhadas: modelos pequenos com hiperparâmetros fixos
(sem MLE, para que os testes não dependam do otimizador)
"""
import numpy as np
import pytest

from extrema.kernels_gp import KernelSpec, TrendBasis, build_model
from extrema.sampling import make_generator, maximin_lhs
from extrema.testfns import AnalyticFn2d


@pytest.fixture(scope="session")
def analytic2d():
    return AnalyticFn2d()


@pytest.fixture(scope="session")
def design_2d():
    return maximin_lhs(30, 2, make_generator(7, "fixture"))


@pytest.fixture(scope="session")
def model_2d(analytic2d, design_2d):
    kernel = KernelSpec("matern52", [0.2, 0.2], 1.0)
    return build_model(design_2d, analytic2d.values(design_2d), kernel, TrendBasis.constant())


@pytest.fixture(scope="session")
def model_1d():
    X = np.linspace(0.05, 0.95, 7)[:, None]
    kernel = KernelSpec("matern52", [0.25], 0.5)
    return build_model(X, np.sin(6 * X[:, 0]), kernel, TrendBasis.constant())
