"""
Escrita de artefatos tabulares e documentos JSON
Formato numérico: ponto decimal, 17 algarismos significativos
"""
import csv
import json
import math
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np

from .logging_config import get_logger

logger = get_logger("core.export")


def format_float(value: float) -> str:
    """Float com 17 algarismos significativos (nan/inf por extenso)"""
    value = float(value)
    if math.isnan(value):
        return "nan"
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return format(value, ".17g")


def _cell(value: Any) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format_float(value)
    return str(value)


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
    """
    Grava um CSV com cabeçalho

    Args:
        path: destino
        header: nomes das colunas (ordem faz parte do contrato)
        rows: linhas com o mesmo número de colunas do cabeçalho

    Returns:
        Caminho gravado
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    count = 0
    with open(path, 'w', encoding='utf-8', newline='') as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            if len(row) != len(header):
                raise ValueError(f"Linha com {len(row)} colunas, cabeçalho tem {len(header)}")
            writer.writerow([_cell(v) for v in row])
            count += 1
    logger.debug(f"{path.name}: {count} linhas")
    return path


def to_jsonable(value: Any) -> Any:
    """Converte arrays e escalares numpy em tipos JSON (nan vira None)"""
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return to_jsonable(value.tolist())
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.floating, float)):
        value = float(value)
        return value if math.isfinite(value) else None
    return value


def write_json(path: Path, data: dict[str, Any]) -> Path:
    """Grava JSON determinístico (chaves ordenadas)"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w', encoding='utf-8', newline='\n') as f:
        json.dump(to_jsonable(data), f, indent=2, sort_keys=True, ensure_ascii=False, allow_nan=False)
        f.write("\n")
    return path
