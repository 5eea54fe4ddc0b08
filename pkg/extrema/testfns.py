"""
Funções analíticas de teste com gradientes exatos

analytic2d: sin(a v1.x + b) + cos(c v2.x + d)
analytic3d: o mesmo mais sin(e v3.x + f) - 1.5, com v1, v2, v3 num referencial esférico
synthetic5d: substituto suave de um simulador 5-d (rampa em x1, saturação em
x2, pico em x3, ondulações fracas em x4 e x5)
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np

from core.config import Synthetic5dConfig
from core.errors import InvalidArgumentError


@dataclass(frozen=True)
class AnalyticFn2d:
    a: float = 1.0
    b: float = 0.0
    c: float = 10.0
    d: float = 0.0
    theta: float = math.pi / 6

    dim = 2

    @property
    def v1(self) -> np.ndarray:
        return np.array([math.cos(self.theta), math.sin(self.theta)])

    @property
    def v2(self) -> np.ndarray:
        return np.array([math.cos(self.theta + math.pi / 2), math.sin(self.theta + math.pi / 2)])

    def values(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return np.sin(self.a * X @ self.v1 + self.b) + np.cos(self.c * X @ self.v2 + self.d)

    def eval(self, x) -> float:
        return float(self.values(np.asarray(x, dtype=float)[None, :])[0])

    def grad(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return (self.a * math.cos(self.a * x @ self.v1 + self.b) * self.v1
                - self.c * math.sin(self.c * x @ self.v2 + self.d) * self.v2)


@dataclass(frozen=True)
class AnalyticFn3d:
    a: float = 1.0
    b: float = 0.0
    c: float = 10.0
    d: float = 0.0
    e: float = 1.0
    f: float = 0.0
    theta: float = math.pi / 4
    phi: float = math.pi / 4
    shift: float = -1.5

    dim = 3

    @property
    def frame(self) -> np.ndarray:
        """Matriz 3 x 3 com colunas v1, v2, v3 (ortonormais)"""
        st, ct = math.sin(self.theta), math.cos(self.theta)
        sp, cp = math.sin(self.phi), math.cos(self.phi)
        return np.array([
            [st * cp, ct * cp, -sp],
            [st * sp, ct * sp, cp],
            [ct, -st, 0.0],
        ])

    def values(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        t = X @ self.frame
        return (np.sin(self.a * t[:, 0] + self.b) + np.cos(self.c * t[:, 1] + self.d)
                + np.sin(self.e * t[:, 2] + self.f) + self.shift)

    def eval(self, x) -> float:
        return float(self.values(np.asarray(x, dtype=float)[None, :])[0])

    def grad(self, x) -> np.ndarray:
        V = self.frame
        t = np.asarray(x, dtype=float) @ V
        w = np.array([
            self.a * math.cos(self.a * t[0] + self.b),
            -self.c * math.sin(self.c * t[1] + self.d),
            self.e * math.cos(self.e * t[2] + self.f),
        ])
        return V @ w


@dataclass(frozen=True)
class Synthetic5d:
    """Resposta não-negativa, crescente em x1 e x2, quase indiferente a x4 e x5"""
    coefficients: Synthetic5dConfig = field(default_factory=Synthetic5dConfig)

    dim = 5

    def values(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        k = self.coefficients
        ramp = k.ramp * X[:, 0] ** 2
        sat = k.saturation * (1.0 - np.exp(-k.saturation_rate * X[:, 1]))
        bump = k.bump * np.exp(-0.5 * ((X[:, 2] - k.bump_center) / k.bump_width) ** 2)
        ripple = k.ripple * (np.sin(2 * math.pi * X[:, 3]) + np.sin(2 * math.pi * X[:, 4]))
        return k.scale * (k.offset + ramp + sat + bump + ripple)

    def eval(self, x) -> float:
        return float(self.values(np.asarray(x, dtype=float)[None, :])[0])

    def grad(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        k = self.coefficients
        u = (x[2] - k.bump_center) / k.bump_width
        return k.scale * np.array([
            2.0 * k.ramp * x[0],
            k.saturation * k.saturation_rate * math.exp(-k.saturation_rate * x[1]),
            -k.bump * u / k.bump_width * math.exp(-0.5 * u * u),
            2 * math.pi * k.ripple * math.cos(2 * math.pi * x[3]),
            2 * math.pi * k.ripple * math.cos(2 * math.pi * x[4]),
        ])


BenchmarkFn = Union[AnalyticFn2d, AnalyticFn3d, Synthetic5d]

_REGISTRY: dict[str, Callable[[Optional[Synthetic5dConfig]], BenchmarkFn]] = {
    "analytic2d": lambda _: AnalyticFn2d(),
    "analytic3d": lambda _: AnalyticFn3d(),
    "synthetic5d": lambda cfg: Synthetic5d(cfg or Synthetic5dConfig()),
}


def available_functions() -> list[str]:
    return sorted(_REGISTRY)


def get_test_function(name: str, synthetic: Optional[Synthetic5dConfig] = None) -> BenchmarkFn:
    """Função de teste pelo nome registrado"""
    try:
        return _REGISTRY[name](synthetic)
    except KeyError:
        raise InvalidArgumentError(
            f"Função de teste desconhecida: {name} (disponíveis: {', '.join(available_functions())})"
        ) from None


def excursion_volume(fn: BenchmarkFn, tau: float, n: int = 1000) -> float:
    """Fração de [0,1]^d com f >= tau por varredura nos centros de uma grade n^d"""
    axis = (np.arange(n) + 0.5) / n
    mesh = np.meshgrid(*([axis] * fn.dim), indexing="ij")
    X = np.column_stack([m.ravel() for m in mesh])
    return float(np.mean(fn.values(X) >= tau))
