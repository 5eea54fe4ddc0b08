"""
Configuração centralizada do profex
Usa dataclasses aninhadas (uma seção por estágio) para type safety e validação
"""
from dataclasses import dataclass, field, asdict, fields, is_dataclass
from pathlib import Path
from typing import Optional, Any
import json
import math

from .logging_config import get_logger

logger = get_logger("core.config")


KERNEL_FAMILIES = ("matern32", "matern52", "gaussian")
KERNEL_STRUCTURES = ("tensor_product", "isotropic")
TREND_KINDS = ("constant", "linear", "quadratic")
RUN_MODES = ("fit", "profile", "uq", "bivariate", "pipeline", "demo")
TRANSFORMS = ("none", "sqrt")


@dataclass
class FitConfig:
    """Ajuste do emulador (máxima verossimilhança concentrada)"""
    family: str = "matern52"
    structure: str = "tensor_product"
    trend: str = "constant"  # constant = krigagem ordinária
    n_starts: int = 10  # multi-start em LHS sobre log(ell)
    lengthscale_min: float = 1e-2
    lengthscale_max: float = 2.0
    fixed_lengthscales: Optional[list[float]] = None  # pula a MLE quando definido
    jitter_start: float = 1e-10  # relativo à variância
    jitter_max: float = 1e-4
    parallel_starts: bool = False
    candidates: list[str] = field(default_factory=list)  # ex.: "matern32/linear"; vazio = sem comparação


@dataclass
class OptimizerConfig:
    """L-BFGS-B, barreira logarítmica e multi-start"""
    memory: int = 5
    max_iter: int = 200
    gtol: float = 1e-8  # relativo a max(1, |f|)
    fd_step: float = 1e-6
    starts_1d: int = 5
    starts_2d: int = 8
    barrier_weights: list[float] = field(default_factory=lambda: [1e-2, 1e-4, 1e-6])
    barrier_tol: float = 1e-6
    barrier_max_iter: int = 100
    tie_tol: float = 1e-10


@dataclass
class ProfileConfig:
    """Grades e aproximações dos perfis"""
    grid_size: int = 100
    lattice_size: int = 30
    approximate: bool = False
    knots: Optional[int] = None  # padrão: ceil(10*sqrt(d))
    refine: bool = True  # bisseção nas travessias do limiar
    refine_steps: int = 20
    block_size: int = 0  # 0 = uma cadeia por curva


@dataclass
class UQConfig:
    """Processo aproximante, simulações e limites conservadores"""
    pilots: int = 80
    sims: int = 150  # 0 desliga os estágios de UQ
    alpha: float = 0.1
    beta: Optional[float] = None  # padrão: alpha / 4
    pool_size: int = 4096
    failure_fraction: float = 0.05
    sigma_starts: int = 5

    @property
    def effective_beta(self) -> float:
        return self.alpha / 4.0 if self.beta is None else self.beta


@dataclass
class OutputConfig:
    """Destino dos artefatos"""
    out_dir: str = "out"
    model_file: str = "model.json"
    compress: bool = False  # grava o modelo como <model_file>.gz
    log_file: Optional[str] = None

    @property
    def model_path(self) -> Path:
        name = self.model_file
        if self.compress and not name.endswith(".gz"):
            name += ".gz"
        return Path(self.out_dir) / name


@dataclass
class Synthetic5dConfig:
    """Coeficientes da função sintética 5-d"""
    scale: float = 1.0
    ramp: float = 3.5
    saturation: float = 2.0
    saturation_rate: float = 4.0
    bump: float = 0.8
    bump_center: float = 0.5
    bump_width: float = 0.15
    ripple: float = 0.01
    offset: float = 0.05


_SECTIONS = {
    "fit": FitConfig,
    "optimizer": OptimizerConfig,
    "profiles": ProfileConfig,
    "uq": UQConfig,
    "output": OutputConfig,
    "synthetic5d": Synthetic5dConfig,
}


def _section_from_dict(cls, data: Optional[dict[str, Any]]):
    if not data:
        return cls()
    valid_fields = {f.name for f in fields(cls)}
    return cls(**{k: v for k, v in data.items() if k in valid_fields})


@dataclass
class RunConfig:
    """Configuração completa de uma execução"""

    mode: str = "demo"
    input_csv: str = ""
    response_column: str = ""  # vazio = última coluna
    transform: str = "none"  # "sqrt" aplica raiz em y e nos limiares
    thresholds: list[float] = field(default_factory=lambda: [0.0])
    projections: list[str] = field(default_factory=lambda: ["coord:1", "coord:2"])
    bivariate: list[str] = field(default_factory=list)  # ex.: "pair:1,2"
    seed: int = 42
    threads: int = 1  # 0 = todos os núcleos
    testfn: str = "analytic2d"
    demo_design_size: int = 0  # >0: gera DoE da função de teste e ajusta GP
    model_path: str = ""  # modelo já ajustado (modos profile/uq/bivariate)

    fit: FitConfig = field(default_factory=FitConfig)
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    profiles: ProfileConfig = field(default_factory=ProfileConfig)
    uq: UQConfig = field(default_factory=UQConfig)
    output: OutputConfig = field(default_factory=OutputConfig)
    synthetic5d: Synthetic5dConfig = field(default_factory=Synthetic5dConfig)

    def to_dict(self) -> dict[str, Any]:
        """Converte para dicionário"""
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "RunConfig":
        """Cria instância a partir de dicionário (chaves desconhecidas são ignoradas)"""
        valid_fields = {f.name for f in fields(cls)}
        flat = {k: v for k, v in data.items() if k in valid_fields and k not in _SECTIONS}
        sections = {name: _section_from_dict(sec, data.get(name)) for name, sec in _SECTIONS.items()}
        return cls(**flat, **sections)

    def apply_overrides(self, overrides: dict[str, Any]) -> "RunConfig":
        """
        Aplica sobrescritas vindas da linha de comando

        Args:
            overrides: chaves simples ("seed") ou pontuadas ("uq.pilots");
                valores None são ignorados

        Returns:
            self, para encadeamento
        """
        for key, value in overrides.items():
            if value is None:
                continue
            target: Any = self
            *path, leaf = key.split(".")
            for part in path:
                target = getattr(target, part)
            if not hasattr(target, leaf) or is_dataclass(getattr(target, leaf)):
                raise KeyError(f"Chave de configuração desconhecida: {key}")
            setattr(target, leaf, value)
        return self

    def validate(self) -> list[str]:
        """Valida a configuração e retorna lista de erros"""
        errors = []

        if self.mode not in RUN_MODES:
            errors.append(f"Modo inválido: {self.mode}")
        if self.transform not in TRANSFORMS:
            errors.append(f"Transformação inválida: {self.transform}")
        if self.transform == "sqrt" and any(t < 0 for t in self.thresholds):
            errors.append("Limiares negativos não admitem transformação sqrt")
        if any(not math.isfinite(t) for t in self.thresholds):
            errors.append("Limiares devem ser finitos")
        if self.threads < 0:
            errors.append(f"Número de threads inválido: {self.threads}")

        if self.fit.family not in KERNEL_FAMILIES:
            errors.append(f"Família de kernel inválida: {self.fit.family}")
        if self.fit.structure not in KERNEL_STRUCTURES:
            errors.append(f"Estrutura de kernel inválida: {self.fit.structure}")
        if self.fit.trend not in TREND_KINDS:
            errors.append(f"Tendência inválida: {self.fit.trend}")
        if self.fit.n_starts < 1:
            errors.append(f"n_starts deve ser >= 1: {self.fit.n_starts}")
        if not 0 < self.fit.lengthscale_min < self.fit.lengthscale_max:
            errors.append("Limites de comprimento de correlação inválidos")
        if not 0 < self.fit.jitter_start <= self.fit.jitter_max:
            errors.append("Faixa de jitter inválida")
        for cand in self.fit.candidates:
            family, _, trend = cand.partition("/")
            if family not in KERNEL_FAMILIES or trend not in TREND_KINDS:
                errors.append(f"Candidato de modelo inválido: {cand}")

        if self.optimizer.memory < 1 or self.optimizer.max_iter < 1:
            errors.append("Parâmetros do L-BFGS-B inválidos")
        if self.optimizer.starts_1d < 1 or self.optimizer.starts_2d < 1:
            errors.append("Número de partidas deve ser >= 1")
        if not self.optimizer.barrier_weights or any(w <= 0 for w in self.optimizer.barrier_weights):
            errors.append("Pesos de barreira devem ser positivos")

        if self.profiles.grid_size < 2:
            errors.append(f"Grade 1-d precisa de >= 2 pontos: {self.profiles.grid_size}")
        if self.profiles.lattice_size < 2:
            errors.append(f"Reticulado 2-d precisa de >= 2 pontos por eixo: {self.profiles.lattice_size}")
        if self.profiles.knots is not None and self.profiles.knots < 4:
            errors.append(f"Aproximação 1-d precisa de >= 4 nós: {self.profiles.knots}")

        uq = self.uq
        if uq.sims < 0 or uq.pilots < 0:
            errors.append("pilots e sims devem ser >= 0")
        if uq.sims > 0 and uq.sims < 20:
            errors.append(f"Envelope exige s >= 20 simulações: {uq.sims}")
        if uq.sims > 0 and uq.pilots < 1:
            errors.append("UQ exige ao menos um ponto piloto")
        beta = uq.effective_beta
        if not 0 < uq.alpha < 1:
            errors.append(f"alpha fora de (0, 1): {uq.alpha}")
        elif not 0 < 2 * beta < uq.alpha:
            errors.append(f"É preciso alpha > 2*beta > 0 (alpha={uq.alpha}, beta={beta})")

        if self.mode in ("fit", "pipeline") and not self.input_csv:
            errors.append("input_csv é obrigatório nos modos fit e pipeline")
        if self.mode in ("profile", "uq", "bivariate") and not (self.model_path or self.input_csv):
            errors.append(f"Modo {self.mode} exige model_path ou input_csv")

        return errors


def get_config_path(config_name: str = "config.json") -> Path:
    """Retorna o caminho padrão do arquivo de configuração (raiz do projeto)"""
    return Path(__file__).parent.parent / config_name


def load_config(config_path: Optional[Path] = None, config_name: str = "config.json") -> RunConfig:
    """
    Carrega configuração do arquivo JSON

    Args:
        config_path: Caminho opcional do arquivo
        config_name: Nome do arquivo de config

    Returns:
        RunConfig com valores carregados ou padrões
    """
    if config_path is None:
        config_path = get_config_path(config_name)
    config_path = Path(config_path)

    if config_path.exists():
        try:
            with open(config_path, 'r', encoding='utf-8') as f:
                data = json.load(f)
            return RunConfig.from_dict(data)
        except (json.JSONDecodeError, IOError, TypeError) as e:
            logger.error(f"Erro ao carregar {config_path}: {e}")
    else:
        logger.debug(f"{config_path} não existe, usando padrões")

    return RunConfig()


def save_config(config: RunConfig, config_path: Optional[Path] = None, config_name: str = "config.json") -> bool:
    """
    Salva configuração em arquivo JSON

    Returns:
        True se salvou com sucesso
    """
    if config_path is None:
        config_path = get_config_path(config_name)

    try:
        with open(config_path, 'w', encoding='utf-8') as f:
            json.dump(config.to_dict(), f, indent=2, ensure_ascii=False)
        return True
    except IOError as e:
        logger.error(f"Erro ao salvar {config_path}: {e}")
        return False


def resolve_threads(threads: int) -> int:
    """0 = todos os núcleos lógicos (psutil); caso contrário o valor pedido"""
    if threads and threads > 0:
        return int(threads)
    import psutil
    return max(1, psutil.cpu_count(logical=True) or 1)
