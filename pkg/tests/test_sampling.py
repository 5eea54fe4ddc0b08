"""
Testes dos geradores Philox e dos planos de amostragem
"""
import numpy as np
import pytest

from core.dataset import read_doe_csv
from extrema.sampling import latin_hypercube, make_generator, maximin_lhs, sobol_points, standard_normal, uniform_open
from scripts import make_doe


class TestGenerators:
    """Fluxos reproduzíveis"""

    def test_same_stream_same_numbers(self):
        a = make_generator(42, "pilots").integers(0, 2 ** 32, 5)
        b = make_generator(42, "pilots").integers(0, 2 ** 32, 5)
        assert np.array_equal(a, b)

    def test_streams_are_independent(self):
        a = make_generator(42, "pilots").integers(0, 2 ** 32, 5)
        b = make_generator(42, "profile", 7).integers(0, 2 ** 32, 5)
        c = make_generator(43, "pilots").integers(0, 2 ** 32, 5)
        assert not np.array_equal(a, b)
        assert not np.array_equal(a, c)

    def test_uniform_open_interval(self):
        u = uniform_open(make_generator(0, "u"), 10000)
        assert u.min() > 0.0 and u.max() < 1.0

    def test_standard_normal_moments(self):
        z = standard_normal(make_generator(1, "z"), 20000)
        assert np.all(np.isfinite(z))
        assert abs(z.mean()) < 0.05
        assert z.std() == pytest.approx(1.0, abs=0.03)


class TestDesigns:
    """LHS, maximin e Sobol"""

    def test_latin_hypercube_strata(self):
        X = latin_hypercube(12, 3, make_generator(2, "lhs"))
        bins = np.floor(X * 12).astype(int)
        for j in range(3):
            assert sorted(bins[:, j]) == list(range(12))

    def test_maximin_keeps_strata(self):
        X = maximin_lhs(10, 2, make_generator(3, "lhs"), n_candidates=5)
        assert X.shape == (10, 2)
        assert sorted(np.floor(X[:, 0] * 10).astype(int)) == list(range(10))

    def test_maximin_is_deterministic(self):
        a = maximin_lhs(8, 2, make_generator(4, "lhs"))
        b = maximin_lhs(8, 2, make_generator(4, "lhs"))
        assert np.array_equal(a, b)

    def test_sobol(self):
        P = sobol_points(100, 4, make_generator(5, "sobol"))
        assert P.shape == (100, 4)
        assert np.unique(P, axis=0).shape[0] == 100
        assert P.min() >= 0.0 and P.max() < 1.0


class TestMakeDoe:
    """Script de geração do DoE sintético"""

    def test_writes_csv(self, tmp_path):
        out = tmp_path / "doe.csv"
        assert make_doe.main(["--n", "16", "--seed", "1", "--out", str(out)]) == 0
        doe = read_doe_csv(out)
        assert doe.input_names == ["x1", "x2", "x3", "x4", "x5"]
        assert doe.design.shape == (16, 5)
        assert not doe.normalized
        assert np.all(doe.values >= 0)
