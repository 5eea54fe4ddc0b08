"""
Formato do arquivo de modelo do profex
JSON versionado, opcionalmente comprimido com gzip (detectado pelos magic bytes)
"""
import gzip
import json
from pathlib import Path
from typing import Any

from .errors import ModelFileError

FORMAT_NAME = "profex-gp"
FORMAT_VERSION = 1
GZIP_MAGIC = b"\x1f\x8b"


def encode_document(data: dict[str, Any], compress: bool = False, compression_level: int = 6) -> bytes:
    """
    Codifica um documento de modelo

    Floats usam repr de ida e volta mínima, o que preserva todos os bits.

    Args:
        data: conteúdo do modelo (sem os campos de formato)
        compress: Se True, comprime com gzip
        compression_level: Nível de compressão (1-9)
    """
    document = {"format": FORMAT_NAME, "version": FORMAT_VERSION, **data}
    json_data = json.dumps(document, indent=1, sort_keys=True, allow_nan=False).encode('utf-8')
    if compress:
        # mtime fixo: bytes idênticos entre execuções
        return gzip.compress(json_data, compresslevel=compression_level, mtime=0)
    return json_data


def decode_document(raw: bytes) -> dict[str, Any]:
    """
    Decodifica um documento de modelo

    Raises:
        ModelFileError: conteúdo ilegível, formato ou versão desconhecidos
    """
    try:
        if raw[:2] == GZIP_MAGIC:
            raw = gzip.decompress(raw)
        document = json.loads(raw.decode('utf-8'))
    except (json.JSONDecodeError, gzip.BadGzipFile, EOFError, OSError, UnicodeDecodeError) as e:
        raise ModelFileError(f"Erro ao decodificar modelo: {e}") from e

    if not isinstance(document, dict) or document.get("format") != FORMAT_NAME:
        raise ModelFileError("Documento não é um modelo profex")
    if document.get("version") != FORMAT_VERSION:
        raise ModelFileError(f"Versão de modelo não suportada: {document.get('version')}")
    return document


def write_document(path: Path, data: dict[str, Any]) -> Path:
    """Grava o documento; comprime quando o nome termina em .gz"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(encode_document(data, compress=path.suffix == ".gz"))
    return path


def read_document(path: Path) -> dict[str, Any]:
    """Lê um documento gravado por write_document"""
    try:
        raw = Path(path).read_bytes()
    except OSError as e:
        raise ModelFileError(f"Não foi possível ler {path}: {e}") from e
    return decode_document(raw)
