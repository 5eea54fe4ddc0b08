"""
Quantificação de incerteza dos perfis

Processo aproximante Z~ baseado em pontos piloto G: Z~_x é o preditor de
krigagem universal no plano aumentado A = X_n U G com dados [y_n; Z_G].
Simulações de Z_G a posteriori geram quasi-realizações cujos perfis formam
envelopes de quantis; a desigualdade de Borell-TIS com
(sigma_delta)^2 = sup_T K_delta(x, x) infla esses envelopes em limites
conservadores.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np
from scipy.linalg import cho_solve

from core.config import OptimizerConfig
from core.errors import DomainError, InvalidArgumentError, PilotSelectionError
from core.logging_config import get_logger
from core.validators import ensure, validate_levels

from .kernels_gp import GpModel, build_model, factor_with_jitter
from .optimize import BoxDomain, EqualityFiber, Projection, constrained_maximize, lbfgsb_maximize, make_fiber
from .profiles import (
    ExcursionIntervals,
    Interval,
    ProfileGrid,
    bivariate_profiles,
    node_seed,
    oblique_profiles,
)
from .sampling import make_generator, sobol_points, standard_normal, uniform_open

logger = get_logger("extrema.uq")

PILOT_VARIANCE_FLOOR = 1e-8


# =============================================================================
# Pontos piloto
# =============================================================================

def select_pilot_points(
    model: GpModel,
    ell: int,
    pool: Optional[np.ndarray] = None,
    seed: int = 0,
    pool_size: int = 4096,
) -> np.ndarray:
    """
    Escolha gulosa de ell pontos piloto por máxima variância a posteriori

    g_{j+1} maximiza a variância de Z dado X_n U {g_1..g_j} sobre o conjunto
    candidato (Sobol embaralhado de pool_size pontos por padrão). A
    atualização é de posto 1 a cada escolha. Para quando a melhor variância
    cai abaixo de 1e-8 * sigma^2 (com aviso).

    Raises:
        PilotSelectionError: candidatos insuficientes
    """
    if ell < 1:
        raise InvalidArgumentError(f"ell deve ser >= 1: {ell}")
    if pool is None:
        pool = sobol_points(pool_size, model.d, make_generator(seed, "pilot_pool"))
    P = np.asarray(pool, dtype=float)

    # exclui candidatos coincidentes com o plano
    dist = np.min(np.abs(P[:, None, :] - model.design[None, :, :]).max(axis=-1), axis=1)
    P = P[dist > 1e-12]
    if P.shape[0] < ell:
        raise PilotSelectionError(f"Conjunto candidato com {P.shape[0]} pontos para ell={ell}")

    var = model.predict_variance(P).copy()
    C = np.zeros((P.shape[0], 0))
    chosen: list[int] = []
    floor = PILOT_VARIANCE_FLOOR * model.variance
    for j in range(ell):
        var[chosen] = -np.inf
        k = int(np.argmax(var))
        if not var[k] > floor:
            logger.warning(f"Seleção de pilotos parou em {j} de {ell}: variância residual <= {floor:.3g}")
            break
        g = P[k]
        col = model.predict_cov(P, g[None, :])[:, 0] - C @ C[k]
        col = col / math.sqrt(var[k])
        C = np.column_stack([C, col])
        var = var - col * col
        chosen.append(k)
    if not chosen:
        raise PilotSelectionError("Nenhum ponto piloto com variância positiva")
    return P[chosen]


# =============================================================================
# Processo aproximante
# =============================================================================

@dataclass(frozen=True)
class ApproxProcess:
    """
    Z~_x = Lambda(x)^T [y_n; Z_G]

    augmented é o modelo de krigagem universal no plano A = [X_n; G] (mesmo
    kernel e tendência) com dados [y_n; mu_n(G)]; sua variância a posteriori
    é K_delta(x, x).
    """
    model: GpModel
    pilots: np.ndarray
    augmented: GpModel
    pilot_mean: np.ndarray  # mu_n(G)
    pilot_chol: np.ndarray  # fator de K_n(G, G)

    @property
    def ell(self) -> int:
        return self.pilots.shape[0]

    def coefficients(self, sample: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """(w, c) com Z~_x = r(x, A)^T w + h(x)^T c para Z_G = sample"""
        aug = self.augmented
        v = np.concatenate([self.model.values, np.asarray(sample, dtype=float)])
        c = aug.trend_cov @ (aug.RinvH.T @ v)
        H = aug.trend.matrix(aug.design)
        w = cho_solve((aug.chol, True), v - H @ c, check_finite=False)
        return w, c

    def realization(self, sample: np.ndarray) -> "Realization":
        w, c = self.coefficients(sample)
        return Realization(self, w, c)

    def delta_variance(self, x: np.ndarray) -> float:
        """K_delta(x, x)"""
        return float(self.augmented.predict_variance(np.asarray(x, dtype=float)[None, :])[0])

    def delta_variance_grad(self, x: np.ndarray) -> np.ndarray:
        return self.augmented.variance_grad(np.asarray(x, dtype=float))

    def delta_cov(self, X1: np.ndarray, X2: np.ndarray) -> np.ndarray:
        """K_delta(x, x') entre as linhas de X1 e X2"""
        return self.augmented.predict_cov(X1, X2)


@dataclass(frozen=True)
class Realization:
    """Quasi-realização de Z~ (afim nos valores piloto)"""
    process: ApproxProcess
    w: np.ndarray
    c: np.ndarray

    def __call__(self, x: np.ndarray) -> float:
        return self.value(x)

    def value(self, x: np.ndarray) -> float:
        aug = self.process.augmented
        x = np.asarray(x, dtype=float)
        r = aug.kernel.correlation(x[None, :], aug.design)[0]
        return float(r @ self.w + aug.trend.matrix(x[None, :])[0] @ self.c)

    def values(self, X: np.ndarray) -> np.ndarray:
        aug = self.process.augmented
        X = np.atleast_2d(X)
        return aug.kernel.correlation(X, aug.design) @ self.w + aug.trend.matrix(X) @ self.c

    def grad(self, x: np.ndarray) -> np.ndarray:
        aug = self.process.augmented
        x = np.asarray(x, dtype=float)
        return aug.kernel.correlation_grad_x(x, aug.design).T @ self.w + aug.trend.gradient(x).T @ self.c


def build_approx_process(
    model: GpModel,
    pilots: np.ndarray,
    jitter_start: float = 1e-10,
    jitter_max: float = 1e-4,
) -> ApproxProcess:
    """
    Monta Z~ a partir do modelo e dos pilotos G

    Raises:
        InvalidArgumentError: pilotos repetidos ou coincidentes com o plano
        NumericalError: fatoração impossível
    """
    G = np.atleast_2d(np.asarray(pilots, dtype=float))
    if G.shape[1] != model.d:
        raise InvalidArgumentError(f"Pilotos devem ter dimensão {model.d}")
    pilot_mean = model.predict_mean(G)
    A = np.vstack([model.design, G])
    augmented = build_model(A, np.concatenate([model.values, pilot_mean]), model.kernel, model.trend,
                            jitter_start, jitter_max)
    KG = model.predict_cov(G, G)
    L, _ = factor_with_jitter(KG / model.variance, jitter_start, jitter_max)
    pilot_chol = math.sqrt(model.variance) * L
    logger.debug(f"Processo aproximante: n={model.n}, ell={G.shape[0]}")
    return ApproxProcess(model, G, augmented, pilot_mean, pilot_chol)


def realization_eval(proc: ApproxProcess, sample, x) -> float:
    """Z~_x para Z_G = sample"""
    return proc.realization(sample).value(x)


def realization_grad(proc: ApproxProcess, sample, x) -> np.ndarray:
    """Gradiente de Z~ em x para Z_G = sample"""
    return proc.realization(sample).grad(x)


# =============================================================================
# Simulações
# =============================================================================

@dataclass(frozen=True)
class RealizationSet:
    """s amostras de Z_G a posteriori (s x ell)"""
    samples: np.ndarray
    seed: int
    generator: str = "philox/ndtri"

    @property
    def s(self) -> int:
        return self.samples.shape[0]


def simulate_realizations(proc: ApproxProcess, s: int, seed: int, zero_noise: bool = False) -> RealizationSet:
    """
    Z_G = mu_n(G) + L eps, eps normal padrão via Philox + inversa da CDF

    zero_noise força eps = 0 (todas as amostras iguais à média).
    """
    if s < 1:
        raise InvalidArgumentError(f"s deve ser >= 1: {s}")
    if zero_noise:
        eps = np.zeros((s, proc.ell))
    else:
        eps = standard_normal(make_generator(seed, "realizations"), (s, proc.ell))
    samples = proc.pilot_mean[None, :] + eps @ proc.pilot_chol.T
    samples.setflags(write=False)
    return RealizationSet(samples, int(seed))


# =============================================================================
# Envelopes de quantis
# =============================================================================

@dataclass
class QuantileEnvelope:
    """Quantis beta e 1-beta dos perfis sup e inf das quasi-realizações"""
    projection: Projection
    grid: ProfileGrid
    beta: float
    sup_lo: np.ndarray
    sup_hi: np.ndarray
    inf_lo: np.ndarray
    inf_hi: np.ndarray
    failures: np.ndarray  # falhas por nó
    flagged: np.ndarray  # nós com falhas acima da fração tolerada
    sup_samples: np.ndarray = field(repr=False, default=None)
    inf_samples: np.ndarray = field(repr=False, default=None)


def _realization_profiles(proc, sample, projection, grid, config, seed) -> tuple[np.ndarray, np.ndarray]:
    real = proc.realization(sample)
    box = BoxDomain.unit(proc.model.d)
    if projection.p == 1:
        curve = oblique_profiles(real.value, real.grad, projection, box, grid, config, seed,
                                 tolerate_failures=True)
        return curve.sup, curve.inf
    pmap = bivariate_profiles(real.value, real.grad, projection, box, grid, config, seed,
                              tolerate_failures=True)
    return pmap.sup.filled(np.nan).ravel(), pmap.inf.filled(np.nan).ravel()


def profile_envelope(
    proc: ApproxProcess,
    realizations: RealizationSet,
    projection: Projection,
    grid: ProfileGrid,
    beta: float,
    config: Optional[OptimizerConfig] = None,
    seed: int = 0,
    threads: int = 1,
    failure_fraction: float = 0.05,
) -> QuantileEnvelope:
    """
    Perfis de cada quasi-realização e quantis empíricos por nó

    Quantil por interpolação linear das estatísticas de ordem (posição
    (s-1)q + 1); realizações que falham em um nó são descartadas nesse nó e
    o nó é sinalizado quando as falhas passam de failure_fraction * s.
    """
    if realizations.s < 20:
        raise InvalidArgumentError(f"Envelope exige s >= 20 realizações (s={realizations.s})")
    if not 0 <= beta < 0.5:
        raise InvalidArgumentError(f"beta deve estar em [0, 0.5): {beta}")
    config = config or OptimizerConfig()

    def run(r: int):
        return _realization_profiles(proc, realizations.samples[r], projection, grid, config, node_seed(seed, r))

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(run, range(realizations.s)))
    else:
        results = [run(r) for r in range(realizations.s)]

    sup = np.array([r[0] for r in results])
    inf = np.array([r[1] for r in results])
    feasible = grid.mask
    failures = np.sum(np.isnan(sup) | np.isnan(inf), axis=0) * feasible
    flagged = failures > failure_fraction * realizations.s
    if np.any(flagged):
        logger.warning(f"{int(np.sum(flagged))} nós com mais de {failure_fraction:.0%} de falhas")

    def quantiles(values):
        out = np.full((2, grid.size), np.nan)
        ok = feasible & (np.sum(~np.isnan(values), axis=0) > 0)
        if np.any(ok):
            out[:, ok] = np.nanquantile(values[:, ok], [beta, 1.0 - beta], axis=0, method="linear")
        return out

    sq, iq = quantiles(sup), quantiles(inf)
    return QuantileEnvelope(projection, grid, beta, sq[0], sq[1], iq[0], iq[1], failures, flagged, sup, inf)


# =============================================================================
# Limites conservadores
# =============================================================================

def sigma_delta_sq(
    proc: ApproxProcess,
    region: Union[EqualityFiber, BoxDomain],
    config: Optional[OptimizerConfig] = None,
    n_starts: int = 5,
    seed: int = 0,
) -> float:
    """
    (sigma_delta_T)^2 = sup_{x em T} K_delta(x, x)

    T é uma fibra (otimizador com restrições) ou a caixa inteira (L-BFGS-B
    multi-start).
    """
    config = config or OptimizerConfig()
    box = BoxDomain.unit(proc.model.d)
    f, g = proc.delta_variance, proc.delta_variance_grad
    if isinstance(region, EqualityFiber):
        _, value = constrained_maximize(f, g, region, box, n_starts, config, seed)
    else:
        gen = make_generator(seed, "sigma_starts")
        starts = [0.5 * (region.lower + region.upper)]
        while len(starts) < max(n_starts, 1):
            starts.append(region.lower + region.widths * uniform_open(gen, region.d))
        value = max(lbfgsb_maximize(f, g, region, x0, config)[1] for x0 in starts)
    return max(float(value), 0.0)


def sigma_delta(proc: ApproxProcess, region, config: Optional[OptimizerConfig] = None,
                n_starts: int = 5, seed: int = 0) -> float:
    """sigma_delta_T (raiz de sigma_delta_sq)"""
    return math.sqrt(sigma_delta_sq(proc, region, config, n_starts, seed))


def sigma_delta_profile(
    proc: ApproxProcess,
    projection: Projection,
    grid: ProfileGrid,
    config: Optional[OptimizerConfig] = None,
    n_starts: int = 5,
    seed: int = 0,
    threads: int = 1,
) -> np.ndarray:
    """(sigma_delta)^2 em cada fibra da grade (nan nos nós mascarados)"""
    box = BoxDomain.unit(proc.model.d)

    def run(j: int) -> float:
        if not grid.mask[j]:
            return math.nan
        fiber = make_fiber(projection, grid.etas[j], box)
        return sigma_delta_sq(proc, fiber, config, n_starts, node_seed(seed, j))

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return np.array(list(pool.map(run, range(grid.size))))
    return np.array([run(j) for j in range(grid.size)])


@dataclass
class BoundEnvelope:
    """Quantis, (sigma_delta)^2 e limites conservadores por nó"""
    grid: ProfileGrid
    extremum: str  # "sup" ou "inf"
    q_lo: np.ndarray
    q_hi: np.ndarray
    sigma_delta_sq: np.ndarray
    u_lo: np.ndarray
    u_hi: np.ndarray
    alpha: float
    beta: float
    mu_delta: np.ndarray = None

    def __post_init__(self):
        if self.mu_delta is None:
            self.mu_delta = np.zeros_like(self.q_lo)

    @property
    def sigma_delta(self) -> np.ndarray:
        return np.sqrt(np.maximum(self.sigma_delta_sq, 0.0))

    def header(self) -> list[str]:
        return ["q_lo", "q_hi", "u_lo", "u_hi", "sigma_delta"]

    def rows(self) -> list[list[float]]:
        return [list(r) for r in zip(self.q_lo, self.q_hi, self.u_lo, self.u_hi, self.sigma_delta)]


def bound_envelope(q_lo, q_hi, sigma_delta, alpha: float, beta: float, extremum: str = "sup") -> tuple[np.ndarray, np.ndarray]:
    """
    Limites conservadores u_lo, u_hi a partir dos quantis

    sup: u_hi = q_hi + sqrt(2 s^2 log(2/(alpha-beta))),
         u_lo = q_lo - sqrt(2 s^2 log(2/(alpha-2beta))), com s = sigma_delta.
    inf: os dois termos trocam de lado.

    Raises:
        InvalidArgumentError: alpha <= 2 beta ou sigma_delta negativo
    """
    ensure(validate_levels(alpha, beta))
    s = np.asarray(sigma_delta, dtype=float)
    if np.any(s < 0):
        raise InvalidArgumentError("sigma_delta negativo")
    wide = s * math.sqrt(2.0 * math.log(2.0 / (alpha - 2.0 * beta)))
    narrow = s * math.sqrt(2.0 * math.log(2.0 / (alpha - beta)))
    q_lo, q_hi = np.asarray(q_lo, dtype=float), np.asarray(q_hi, dtype=float)
    if extremum == "sup":
        return q_lo - wide, q_hi + narrow
    if extremum == "inf":
        return q_lo - narrow, q_hi + wide
    raise InvalidArgumentError(f"Extremo desconhecido: {extremum}")


def make_bound_envelopes(envelope: QuantileEnvelope, sigma_sq: np.ndarray, alpha: float) -> dict[str, BoundEnvelope]:
    """BoundEnvelope de sup e de inf a partir do envelope de quantis e de (sigma_delta)^2 por nó"""
    sigma = np.sqrt(np.maximum(np.nan_to_num(sigma_sq, nan=0.0), 0.0))
    out = {}
    for ext, lo, hi in (("sup", envelope.sup_lo, envelope.sup_hi), ("inf", envelope.inf_lo, envelope.inf_hi)):
        u_lo, u_hi = bound_envelope(lo, hi, sigma, alpha, envelope.beta, ext)
        out[ext] = BoundEnvelope(envelope.grid, ext, lo, hi, sigma_sq, u_lo, u_hi, alpha, envelope.beta)
    return out


def borell_tis_tail(u: float, mu_delta: float, sigma_delta: float) -> float:
    """
    2 exp(-(u - mu)^2 / (2 sigma^2)), truncado em [0, 1]

    Raises:
        DomainError: u <= mu ou sigma <= 0
    """
    if not sigma_delta > 0:
        raise DomainError(f"sigma_delta deve ser positivo: {sigma_delta}")
    if not u > mu_delta:
        raise DomainError(f"Limite vazio: u={u} <= mu_delta={mu_delta}")
    return min(1.0, max(0.0, 2.0 * math.exp(-((u - mu_delta) ** 2) / (2.0 * sigma_delta ** 2))))


def integrate_over_grid(values, grid: ProfileGrid) -> float:
    """Regra do trapézio sobre a grade (nós mascarados contam como 0)"""
    v = np.nan_to_num(np.asarray(values, dtype=float), nan=0.0)
    if grid.p == 1:
        return float(np.trapezoid(v, grid.axes[0]))
    V = np.where(grid.mask, v, 0.0).reshape(grid.shape)
    return float(np.trapezoid(np.trapezoid(V, grid.axes[1], axis=1), grid.axes[0]))


def integrated_delta_variance(
    proc: ApproxProcess,
    projection: Projection,
    grid: ProfileGrid,
    config: Optional[OptimizerConfig] = None,
    n_starts: int = 5,
    seed: int = 0,
    threads: int = 1,
) -> float:
    """Integral de (sigma_delta)^2 sobre E_Psi"""
    return integrate_over_grid(sigma_delta_profile(proc, projection, grid, config, n_starts, seed, threads), grid)


# =============================================================================
# Tabelas de extremos
# =============================================================================

def endpoint_intervals(mean: ExcursionIntervals, lower: ExcursionIntervals, upper: ExcursionIntervals) -> list[dict]:
    """
    Para cada intervalo de não-excursão da curva média, o intervalo de
    valores de cada extremo segundo as curvas de quantis

    lower/upper vêm das curvas q_lo e q_hi do sup; cada colchete contém o
    extremo da média.
    """
    def overlapping(iv: Interval, pool: list[Interval]) -> list[Interval]:
        return [o for o in pool if o.upper >= iv.lower and o.lower <= iv.upper]

    table = []
    for iv in mean.non_excursion:
        cands = overlapping(iv, lower.non_excursion) + overlapping(iv, upper.non_excursion)
        lows = [iv.lower] + [o.lower for o in cands]
        highs = [iv.upper] + [o.upper for o in cands]
        table.append({
            "mean": [iv.lower, iv.upper],
            "lower_endpoint": [min(lows), max(lows)],
            "upper_endpoint": [min(highs), max(highs)],
            "robust": bool(overlapping(iv, upper.non_excursion)),
        })
    return table
