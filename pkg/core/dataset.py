"""
Leitura de planos de experimentos (DoE) em CSV
Normaliza as entradas para [0,1]^d e registra os limites usados
"""
import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import CsvParseError, InvalidArgumentError
from .logging_config import get_logger

logger = get_logger("core.dataset")


@dataclass
class DoeData:
    """DoE lido do disco"""
    input_names: list[str]
    response_name: str
    design: np.ndarray  # n x d, em [0,1]^d
    values: np.ndarray  # n
    lower: np.ndarray  # limites originais por coordenada
    upper: np.ndarray
    normalized: bool  # True se foi preciso reescalar

    def to_report(self) -> dict:
        return {
            "inputs": self.input_names,
            "response": self.response_name,
            "n": int(self.design.shape[0]),
            "d": int(self.design.shape[1]),
            "normalized": self.normalized,
            "lower": self.lower.tolist(),
            "upper": self.upper.tolist(),
        }


def _parse_float(text: str, line: int, column: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise CsvParseError(f"valor não numérico '{text}' na coluna {column}", line) from None
    if not math.isfinite(value):
        raise CsvParseError(f"valor não finito na coluna {column}", line)
    return value


def read_doe_csv(path: Path, response_column: Optional[str] = None) -> DoeData:
    """
    Lê um CSV com cabeçalho: colunas de entrada e uma coluna de resposta

    Entradas já em [0,1] são mantidas; caso contrário cada coluna é reescalada
    min-max e os limites ficam registrados.

    Args:
        path: arquivo CSV
        response_column: nome da resposta (padrão: última coluna)

    Raises:
        CsvParseError: com o número da linha problemática
    """
    path = Path(path)
    with open(path, 'r', encoding='utf-8', newline='') as f:
        reader = csv.reader(f)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise CsvParseError("arquivo vazio", 1) from None
        if len(header) < 2 or any(not h for h in header):
            raise CsvParseError("cabeçalho deve nomear ao menos duas colunas", 1)
        if len(set(header)) != len(header):
            raise CsvParseError("cabeçalho com colunas repetidas", 1)

        response = response_column or header[-1]
        if response not in header:
            raise CsvParseError(f"coluna de resposta '{response}' ausente", 1)
        r_idx = header.index(response)
        inputs = [h for h in header if h != response]

        rows = []
        for row in reader:
            line = reader.line_num
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise CsvParseError(f"esperadas {len(header)} colunas, encontradas {len(row)}", line)
            rows.append([_parse_float(c.strip(), line, header[j]) for j, c in enumerate(row)])

    if len(rows) < 2:
        raise CsvParseError("são necessárias ao menos duas linhas de dados", 2)

    data = np.array(rows, dtype=float)
    values = data[:, r_idx]
    X = np.delete(data, r_idx, axis=1)

    lower, upper = X.min(axis=0), X.max(axis=0)
    if np.any(upper <= lower):
        raise InvalidArgumentError("coluna de entrada constante não pode ser normalizada")

    normalized = bool(lower.min() < 0 or upper.max() > 1)
    if normalized:
        X = (X - lower) / (upper - lower)
        logger.info(f"Entradas reescaladas para [0,1]^{X.shape[1]}")
    else:
        lower, upper = np.zeros(X.shape[1]), np.ones(X.shape[1])

    logger.info(f"DoE {path.name}: n={X.shape[0]}, d={X.shape[1]}, resposta={response}")
    return DoeData(inputs, response, X, values, lower, upper, normalized)
