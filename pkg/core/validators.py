"""
Validadores reutilizáveis do profex
Cada validador devolve (válido, mensagem_erro); ensure() converte em exceção
"""
from typing import Tuple, Optional

import numpy as np

from .errors import InvalidArgumentError

Check = Tuple[bool, Optional[str]]


def ensure(check: Check) -> None:
    """Levanta InvalidArgumentError se a verificação falhou"""
    ok, message = check
    if not ok:
        raise InvalidArgumentError(message)


def validate_finite(values, name: str = "valores") -> Check:
    """Todos os elementos são finitos"""
    arr = np.asarray(values, dtype=float)
    if not np.all(np.isfinite(arr)):
        return False, f"{name} contém valores não finitos"
    return True, None


def validate_box(lower, upper) -> Check:
    """
    Valida um hiper-retângulo

    Args:
        lower: limites inferiores
        upper: limites superiores

    Returns:
        Tupla (válido, mensagem_erro)
    """
    lo = np.asarray(lower, dtype=float)
    hi = np.asarray(upper, dtype=float)
    if lo.ndim != 1 or lo.shape != hi.shape or lo.size == 0:
        return False, f"Limites com formas incompatíveis: {lo.shape} e {hi.shape}"
    if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
        return False, "Limites da caixa devem ser finitos"
    bad = np.flatnonzero(lo >= hi)
    if bad.size:
        i = int(bad[0])
        return False, f"Coordenada {i + 1}: inferior {lo[i]} >= superior {hi[i]}"
    return True, None


def validate_design(design, values=None, unit_box: bool = True, tol: float = 1e-12) -> Check:
    """
    Valida um plano de experimentos (n x d) e, opcionalmente, as respostas

    Args:
        design: matriz n x d
        values: vetor de n respostas
        unit_box: exige entradas em [0, 1]^d
        tol: folga nas bordas do cubo unitário
    """
    X = np.asarray(design, dtype=float)
    if X.ndim != 2 or X.shape[0] == 0:
        return False, f"Plano deve ser uma matriz n x d, recebido {X.shape}"
    ok, msg = validate_finite(X, "plano")
    if not ok:
        return ok, msg
    if unit_box and (X.min() < -tol or X.max() > 1 + tol):
        return False, "Entradas fora de [0,1]^d (normalize antes do ajuste)"
    if values is not None:
        y = np.asarray(values, dtype=float)
        if y.shape != (X.shape[0],):
            return False, f"Respostas com forma {y.shape}, esperado ({X.shape[0]},)"
        ok, msg = validate_finite(y, "respostas")
        if not ok:
            return ok, msg
    _, counts = np.unique(X, axis=0, return_counts=True)
    if np.any(counts > 1):
        return False, "Plano contém pontos repetidos"
    return True, None


def validate_projection(psi, d: int) -> Check:
    """Psi é d x p com p em {1, 2} e p < d"""
    P = np.asarray(psi, dtype=float)
    if P.ndim == 1:
        P = P[:, None]
    if P.ndim != 2 or P.shape[0] != d:
        return False, f"Projeção deve ter {d} linhas, recebido {P.shape}"
    if P.shape[1] not in (1, 2):
        return False, f"Projeção deve ter 1 ou 2 colunas, recebido {P.shape[1]}"
    if P.shape[1] >= d:
        return False, f"Projeção precisa de p < d (p={P.shape[1]}, d={d})"
    return validate_finite(P, "projeção")


def validate_levels(alpha: float, beta: float) -> Check:
    """Níveis dos limites conservadores: alpha > 2 beta > 0"""
    if not 0 < alpha < 1:
        return False, f"alpha deve estar em (0, 1): {alpha}"
    if not beta > 0:
        return False, f"beta deve ser positivo: {beta}"
    if alpha <= 2 * beta:
        return False, f"É preciso alpha > 2*beta (alpha={alpha}, beta={beta})"
    return True, None


def validate_thresholds(thresholds, observed_min: float, observed_max: float, margin: float = 0.25) -> Check:
    """
    Limiares dentro da faixa observada (com extrapolação de margin * amplitude)

    Um limiar fora da faixa é válido, mas devolve mensagem de aviso.
    """
    span = observed_max - observed_min
    lo, hi = observed_min - margin * span, observed_max + margin * span
    outside = [t for t in thresholds if t < lo or t > hi]
    if outside:
        return True, f"Limiares fora da faixa observada [{lo:.4g}, {hi:.4g}]: {outside}"
    return True, None
