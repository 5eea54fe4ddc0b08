"""
Configuração de logging estruturado para o profex
Nível controlado pela variável de ambiente PROFEX_LOG
"""
import logging
import os
import sys
from datetime import datetime
from pathlib import Path
from typing import Optional
from enum import IntEnum


ROOT_LOGGER = "profex"
ENV_VAR = "PROFEX_LOG"


class LogLevel(IntEnum):
    """Níveis de log aceitos"""
    DEBUG = logging.DEBUG      # 10
    INFO = logging.INFO        # 20
    WARNING = logging.WARNING  # 30
    ERROR = logging.ERROR      # 40
    CRITICAL = logging.CRITICAL  # 50


# Cores ANSI para terminal
COLORS = {
    'DEBUG': '\033[36m',     # Cyan
    'INFO': '\033[32m',      # Green
    'WARNING': '\033[33m',   # Yellow
    'ERROR': '\033[31m',     # Red
    'CRITICAL': '\033[35m',  # Magenta
    'RESET': '\033[0m',
    'DIM': '\033[2m',
}


class ColoredFormatter(logging.Formatter):
    """Formatter com cores para terminal"""

    def __init__(self, use_colors: bool = True):
        super().__init__()
        self.use_colors = use_colors

    def format(self, record: logging.LogRecord) -> str:
        timestamp = datetime.fromtimestamp(record.created).strftime('%H:%M:%S')
        level = record.levelname
        name = record.name
        message = record.getMessage()

        if self.use_colors:
            color = COLORS.get(level, '')
            reset = COLORS['RESET']
            dim = COLORS['DIM']
            return f"{dim}{timestamp}{reset} {color}[{level[:4]}]{reset} {dim}({name}){reset} {message}"
        return f"{timestamp} [{level[:4]}] ({name}) {message}"


class FileFormatter(logging.Formatter):
    """Formatter para arquivo (sem cores, com traceback)"""

    def format(self, record: logging.LogRecord) -> str:
        timestamp = datetime.fromtimestamp(record.created).strftime('%Y-%m-%d %H:%M:%S.%f')[:-3]
        line = f"{timestamp} [{record.levelname}] ({record.name}) {record.getMessage()}"
        if record.exc_info:
            return f"{line}\n{self.formatException(record.exc_info)}"
        return line


_loggers: dict[str, logging.Logger] = {}


def level_from_env(default: LogLevel = LogLevel.INFO) -> LogLevel:
    """
    Lê o nível de log de PROFEX_LOG

    Aceita nomes (DEBUG, info, ...) ou números; valores inválidos caem no padrão.
    """
    raw = os.environ.get(ENV_VAR, "").strip()
    if not raw:
        return default
    if raw.isdigit():
        value = int(raw)
        return LogLevel(value) if value in LogLevel._value2member_map_ else default
    return LogLevel.__members__.get(raw.upper(), default)


def setup_logger(
    name: str = ROOT_LOGGER,
    level: Optional[LogLevel] = None,
    log_file: Optional[Path] = None,
    console_output: bool = True,
    use_colors: Optional[bool] = None
) -> logging.Logger:
    """
    Configura e retorna um logger

    Args:
        name: Nome do logger
        level: Nível mínimo (padrão: PROFEX_LOG ou INFO)
        log_file: Caminho opcional para arquivo de log
        console_output: Se True, escreve em stderr
        use_colors: Cores ANSI (padrão: só quando stderr é um terminal)

    Returns:
        Logger configurado
    """
    if level is None:
        level = level_from_env()
    if use_colors is None:
        use_colors = sys.stderr.isatty()

    logger = logging.getLogger(name)
    logger.setLevel(level)
    logger.handlers.clear()

    if console_output:
        console_handler = logging.StreamHandler(sys.stderr)
        console_handler.setLevel(level)
        console_handler.setFormatter(ColoredFormatter(use_colors))
        logger.addHandler(console_handler)

    if log_file:
        log_file = Path(log_file)
        log_file.parent.mkdir(parents=True, exist_ok=True)
        file_handler = logging.FileHandler(log_file, encoding='utf-8')
        file_handler.setLevel(level)
        file_handler.setFormatter(FileFormatter())
        logger.addHandler(file_handler)

    logger.propagate = False
    _loggers[name] = logger
    return logger


def get_logger(name: str = ROOT_LOGGER) -> logging.Logger:
    """
    Obtém um logger existente ou cria um novo

    Nomes fora da árvore "profex" são pendurados nela (ex.: "extrema.uq" vira
    "profex.extrema.uq"), de modo que um único setup controla toda a saída.
    """
    if name in _loggers:
        return _loggers[name]

    if name != ROOT_LOGGER and not name.startswith(ROOT_LOGGER + "."):
        name = f"{ROOT_LOGGER}.{name}"
        if name in _loggers:
            return _loggers[name]

    if name == ROOT_LOGGER:
        return setup_logger(name)

    root = _loggers.get(ROOT_LOGGER) or setup_logger(ROOT_LOGGER)
    child = root.getChild(name[len(ROOT_LOGGER) + 1:])
    _loggers[name] = child
    return child


def log_exception(logger: logging.Logger, message: str, exc: Exception) -> None:
    """Loga uma exceção com stack trace"""
    logger.error(f"{message}: {type(exc).__name__}: {exc}", exc_info=True)
