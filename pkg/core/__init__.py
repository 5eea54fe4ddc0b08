"""
Core - Infraestrutura do profex (configuração, logs, erros, persistência)
"""
from .config import RunConfig, load_config, save_config, resolve_threads
from .errors import (
    ProfexError,
    InvalidArgumentError,
    ModelError,
    NumericalError,
    OptimizerError,
    InfeasibleError,
    InsufficientDataError,
    UndefinedMetricError,
    DomainError,
    PilotSelectionError,
    ModelFileError,
    CsvParseError,
)
from .protocol import FORMAT_NAME, FORMAT_VERSION, encode_document, decode_document, read_document, write_document
from .validators import ensure, validate_box, validate_design, validate_projection, validate_levels, validate_thresholds
from .logging_config import setup_logger, get_logger, log_exception, LogLevel
from .export import write_csv, write_json
from .dataset import DoeData, read_doe_csv

__all__ = [
    # Config
    "RunConfig",
    "load_config",
    "save_config",
    "resolve_threads",
    # Erros
    "ProfexError",
    "InvalidArgumentError",
    "ModelError",
    "NumericalError",
    "OptimizerError",
    "InfeasibleError",
    "InsufficientDataError",
    "UndefinedMetricError",
    "DomainError",
    "PilotSelectionError",
    "ModelFileError",
    "CsvParseError",
    # Protocolo
    "FORMAT_NAME",
    "FORMAT_VERSION",
    "encode_document",
    "decode_document",
    "read_document",
    "write_document",
    # Validators
    "ensure",
    "validate_box",
    "validate_design",
    "validate_projection",
    "validate_levels",
    "validate_thresholds",
    # Logging
    "setup_logger",
    "get_logger",
    "log_exception",
    "LogLevel",
    # Exportação
    "write_csv",
    "write_json",
    # Dados
    "DoeData",
    "read_doe_csv",
]
