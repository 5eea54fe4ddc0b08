"""
Geradores determinísticos e planos de amostragem

Todas as sequências aleatórias do profex vêm de Philox (gerador baseado em
contador) chaveado por semente e rótulos de fluxo, o que torna os resultados
independentes da ordem de execução entre threads.
"""
from __future__ import annotations

import math
import zlib
from typing import Union

import numpy as np
from scipy.spatial.distance import pdist
from scipy.special import ndtri
from scipy.stats import qmc

Stream = Union[int, str]

_U53 = 2.0 ** 53


def _stream_key(label: Stream) -> int:
    if isinstance(label, str):
        # crc32 é estável (não depende de PYTHONHASHSEED)
        return zlib.crc32(label.encode("utf-8"))
    return int(label)


def make_generator(seed: int, *stream: Stream) -> np.random.Generator:
    """
    Gerador Philox para (semente, fluxo...)

    Ex.: make_generator(42, "pilots") e make_generator(42, "profile", 7) são
    independentes entre si e reproduzíveis em qualquer plataforma.
    """
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(_stream_key(s) for s in stream))
    return np.random.Generator(np.random.Philox(ss))


def uniform_open(gen: np.random.Generator, size) -> np.ndarray:
    """Uniformes em (0, 1) com 53 bits, nunca 0 nem 1"""
    k = gen.integers(0, 2 ** 53, size=size, dtype=np.int64)
    return (k.astype(float) + 0.5) / _U53


def standard_normal(gen: np.random.Generator, size) -> np.ndarray:
    """Normais padrão por inversa da CDF (sem rejeição)"""
    return ndtri(uniform_open(gen, size))


def latin_hypercube(n: int, d: int, gen: np.random.Generator) -> np.ndarray:
    """n pontos LHS em [0,1]^d"""
    return qmc.LatinHypercube(d=d, rng=gen).random(n)


def maximin_lhs(n: int, d: int, gen: np.random.Generator, n_candidates: int = 50) -> np.ndarray:
    """Melhor de n_candidates planos LHS pelo critério maximin (menor distância)"""
    best, best_score = None, -np.inf
    for _ in range(max(1, n_candidates)):
        X = latin_hypercube(n, d, gen)
        score = pdist(X).min() if n > 1 else 0.0
        if score > best_score:
            best, best_score = X, score
    return best


def sobol_points(n: int, d: int, gen: np.random.Generator) -> np.ndarray:
    """Primeiros n pontos de uma sequência de Sobol embaralhada"""
    m = max(0, math.ceil(math.log2(max(n, 1))))
    return qmc.Sobol(d=d, scramble=True, rng=gen).random_base2(m)[:n]
