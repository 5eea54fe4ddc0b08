"""Utilidades numéricas dos testes"""
import numpy as np


def central_diff(f, x, h=1e-6):
    """Gradiente por diferenças centrais"""
    x = np.asarray(x, dtype=float)
    g = np.empty_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        g[i] = (f(x + e) - f(x - e)) / (2 * h)
    return g


def gaussian_paths(mean, cov, n, rng):
    """n trajetórias conjuntas N(mean, cov) por autodecomposição (cov semidefinida)"""
    w, V = np.linalg.eigh(np.asarray(cov, dtype=float))
    root = V * np.sqrt(np.clip(w, 0.0, None))
    return np.asarray(mean, dtype=float) + rng.standard_normal((n, root.shape[0])) @ root.T
