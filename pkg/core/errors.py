"""
Hierarquia de exceções do profex
Todas as falhas previstas derivam de ProfexError
"""
from typing import Optional

import numpy as np


class ProfexError(Exception):
    """Erro base do profex"""


class InvalidArgumentError(ProfexError, ValueError):
    """Argumentos violam o contrato (forma, domínio, valores não finitos)"""


class ModelError(ProfexError):
    """Modelo não pode ser construído (ex.: matriz de tendência sem posto completo)"""


class NumericalError(ProfexError, FloatingPointError):
    """Fatoração falhou mesmo após o escalonamento máximo do jitter"""


class OptimizerError(ProfexError):
    """Otimizador encontrou valor não finito"""

    def __init__(self, message: str, last_iterate: Optional[np.ndarray] = None):
        super().__init__(message)
        self.last_iterate = None if last_iterate is None else np.array(last_iterate, dtype=float)


class InfeasibleError(ProfexError):
    """O valor projetado eta não pertence a E_Psi"""


class InsufficientDataError(ProfexError):
    """Pontos insuficientes para a aproximação pedida"""


class UndefinedMetricError(ProfexError):
    """Métrica indefinida (ex.: variância nula dos valores de teste)"""


class DomainError(ProfexError):
    """Argumento fora do domínio onde a fórmula tem sentido"""


class PilotSelectionError(ProfexError):
    """Conjunto candidato esgotado antes de escolher todos os pontos piloto"""


class ModelFileError(ProfexError):
    """Arquivo de modelo inválido ou de versão desconhecida"""


class CsvParseError(ProfexError):
    """CSV de DoE malformado"""

    def __init__(self, message: str, line: int):
        super().__init__(f"linha {line}: {message}")
        self.line = line
