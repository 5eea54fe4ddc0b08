"""
Kernels estacionários, ajuste por máxima verossimilhança e krigagem universal

As fatorações trabalham na escala de correlação R = K / sigma^2; a
covariância a posteriori da krigagem universal é sigma^2 vezes a expressão
equivalente em R, então nada se perde e o caso sigma^2 -> 0 fica estável.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
from scipy.linalg import cho_solve, cholesky, solve_triangular, LinAlgError
from scipy.optimize import minimize

from core.config import FitConfig, KERNEL_FAMILIES, KERNEL_STRUCTURES
from core.errors import InvalidArgumentError, ModelError, NumericalError, UndefinedMetricError
from core.logging_config import get_logger
from core.protocol import read_document, write_document
from core.validators import ensure, validate_design, validate_finite

from .sampling import latin_hypercube, make_generator

logger = get_logger("extrema.kernels_gp")

SIGMA2_FLOOR = 1e-300
_LOG_2PI = math.log(2.0 * math.pi)


# =============================================================================
# Kernels
# =============================================================================

def _corr(family: str, r: np.ndarray) -> np.ndarray:
    """Correlação radial c(r), r >= 0"""
    if family == "matern32":
        a = math.sqrt(3.0) * r
        return (1.0 + a) * np.exp(-a)
    if family == "matern52":
        a = math.sqrt(5.0) * r
        return (1.0 + a + a * a / 3.0) * np.exp(-a)
    if family == "gaussian":
        return np.exp(-0.5 * r * r)
    raise InvalidArgumentError(f"Família de kernel desconhecida: {family}")


def _dcorr_over_r(family: str, r: np.ndarray) -> np.ndarray:
    """c'(r) / r, finito em r = 0"""
    if family == "matern32":
        return -3.0 * np.exp(-math.sqrt(3.0) * r)
    if family == "matern52":
        a = math.sqrt(5.0) * r
        return -(5.0 / 3.0) * (1.0 + a) * np.exp(-a)
    if family == "gaussian":
        return -np.exp(-0.5 * r * r)
    raise InvalidArgumentError(f"Família de kernel desconhecida: {family}")


@dataclass(frozen=True)
class KernelSpec:
    """Kernel estacionário (Matérn 3/2, Matérn 5/2 ou gaussiano)"""
    family: str
    lengthscales: np.ndarray
    variance: float = 1.0
    structure: str = "tensor_product"

    def __post_init__(self):
        ls = np.atleast_1d(np.asarray(self.lengthscales, dtype=float))
        object.__setattr__(self, "lengthscales", ls)
        if self.family not in KERNEL_FAMILIES:
            raise InvalidArgumentError(f"Família de kernel desconhecida: {self.family}")
        if self.structure not in KERNEL_STRUCTURES:
            raise InvalidArgumentError(f"Estrutura de kernel desconhecida: {self.structure}")
        if not np.all(np.isfinite(ls)) or np.any(ls <= 0):
            raise InvalidArgumentError(f"Comprimentos de correlação devem ser positivos: {ls}")
        if not (math.isfinite(self.variance) and self.variance > 0):
            raise InvalidArgumentError(f"Variância deve ser positiva: {self.variance}")

    @property
    def d(self) -> int:
        return self.lengthscales.size

    def with_variance(self, variance: float) -> "KernelSpec":
        return KernelSpec(self.family, self.lengthscales, variance, self.structure)

    # ---- correlação (variância 1) ----

    def correlation(self, A: np.ndarray, B: np.ndarray) -> np.ndarray:
        """Matriz de correlação entre as linhas de A (n x d) e B (m x d)"""
        T = (A[:, None, :] - B[None, :, :]) / self.lengthscales
        if self.structure == "isotropic":
            return _corr(self.family, np.sqrt(np.sum(T * T, axis=-1)))
        return np.prod(_corr(self.family, np.abs(T)), axis=-1)

    def correlation_grad_x(self, x: np.ndarray, B: np.ndarray) -> np.ndarray:
        """Gradiente em x de r(x, b_j): matriz m x d"""
        T = (x[None, :] - B) / self.lengthscales
        if self.structure == "isotropic":
            r = np.sqrt(np.sum(T * T, axis=-1))
            return (_dcorr_over_r(self.family, r)[:, None] * T) / self.lengthscales
        absT = np.abs(T)
        C = _corr(self.family, absT)
        dC = T * _dcorr_over_r(self.family, absT)
        G = np.empty_like(T)
        for i in range(T.shape[1]):
            others = np.prod(np.delete(C, i, axis=1), axis=1)
            G[:, i] = dC[:, i] * others / self.lengthscales[i]
        return G

    def correlation_grad_log_ls(self, X: np.ndarray) -> list[np.ndarray]:
        """Derivadas de R(X, X) em relação a log(ell_i), uma matriz por coordenada"""
        T = (X[:, None, :] - X[None, :, :]) / self.lengthscales
        T2 = T * T
        if self.structure == "isotropic":
            g = _dcorr_over_r(self.family, np.sqrt(np.sum(T2, axis=-1)))
            return [-T2[..., i] * g for i in range(T.shape[-1])]
        absT = np.abs(T)
        C = _corr(self.family, absT)
        dC = -T2 * _dcorr_over_r(self.family, absT)
        out = []
        for i in range(T.shape[-1]):
            out.append(dC[..., i] * np.prod(np.delete(C, i, axis=-1), axis=-1))
        return out

    # ---- covariância ----

    def matrix(self, A: np.ndarray, B: np.ndarray) -> np.ndarray:
        return self.variance * self.correlation(A, B)

    def grad_x(self, x: np.ndarray, B: np.ndarray) -> np.ndarray:
        return self.variance * self.correlation_grad_x(x, B)


def _as_point(x, d: int, name: str = "x") -> np.ndarray:
    arr = np.asarray(x, dtype=float).reshape(-1)
    if arr.size != d:
        raise InvalidArgumentError(f"{name} deve ter dimensão {d}, recebido {arr.size}")
    ensure(validate_finite(arr, name))
    return arr


def kernel_eval(kernel: KernelSpec, x, y) -> float:
    """k(x, y)"""
    xa, ya = _as_point(x, kernel.d), _as_point(y, kernel.d, "y")
    return float(kernel.matrix(xa[None, :], ya[None, :])[0, 0])


def kernel_grad_x(kernel: KernelSpec, x, y) -> np.ndarray:
    """Gradiente de k(x, y) em relação a x (zero em x = y)"""
    xa, ya = _as_point(x, kernel.d), _as_point(y, kernel.d, "y")
    return kernel.grad_x(xa, ya[None, :])[0]


# =============================================================================
# Tendência
# =============================================================================

@dataclass(frozen=True)
class TrendBasis:
    """
    Base de monômios h_j(x)

    Termos: ("1", -1) constante, ("x", i) linear, ("x^2", i) quadrado; os
    descritores usam índices a partir de 1: "1", "x2", "x3^2".
    """
    terms: tuple[tuple[str, int], ...]

    def __post_init__(self):
        if not self.terms:
            raise InvalidArgumentError("Base de tendência vazia")

    @property
    def m(self) -> int:
        return len(self.terms)

    @property
    def descriptors(self) -> list[str]:
        out = []
        for kind, i in self.terms:
            out.append("1" if kind == "1" else f"x{i + 1}" + ("^2" if kind == "x^2" else ""))
        return out

    @classmethod
    def constant(cls) -> "TrendBasis":
        return cls((("1", -1),))

    @classmethod
    def linear(cls, d: int) -> "TrendBasis":
        return cls((("1", -1),) + tuple(("x", i) for i in range(d)))

    @classmethod
    def quadratic(cls, d: int) -> "TrendBasis":
        return cls(cls.linear(d).terms + tuple(("x^2", i) for i in range(d)))

    @classmethod
    def from_name(cls, name: str, d: int) -> "TrendBasis":
        if name == "constant":
            return cls.constant()
        if name == "linear":
            return cls.linear(d)
        if name == "quadratic":
            return cls.quadratic(d)
        raise InvalidArgumentError(f"Tendência desconhecida: {name}")

    @classmethod
    def from_descriptors(cls, descriptors: Sequence[str]) -> "TrendBasis":
        terms = []
        for desc in descriptors:
            if desc == "1":
                terms.append(("1", -1))
            elif desc.startswith("x") and desc.endswith("^2"):
                terms.append(("x^2", int(desc[1:-2]) - 1))
            elif desc.startswith("x"):
                terms.append(("x", int(desc[1:]) - 1))
            else:
                raise InvalidArgumentError(f"Descritor de tendência inválido: {desc}")
        return cls(tuple(terms))

    def matrix(self, X: np.ndarray) -> np.ndarray:
        """H = [h_j(x_i)], n x m"""
        X = np.atleast_2d(X)
        cols = []
        for kind, i in self.terms:
            if kind == "1":
                cols.append(np.ones(X.shape[0]))
            elif kind == "x":
                cols.append(X[:, i])
            else:
                cols.append(X[:, i] ** 2)
        return np.column_stack(cols)

    def gradient(self, x: np.ndarray) -> np.ndarray:
        """Jacobiano de h em x: m x d"""
        J = np.zeros((self.m, x.size))
        for j, (kind, i) in enumerate(self.terms):
            if kind == "x":
                J[j, i] = 1.0
            elif kind == "x^2":
                J[j, i] = 2.0 * x[i]
        return J


# =============================================================================
# Fatoração com jitter
# =============================================================================

def factor_with_jitter(R: np.ndarray, jitter_start: float = 1e-10, jitter_max: float = 1e-4) -> tuple[np.ndarray, float]:
    """
    Cholesky inferior de R + j*I com j escalonado x10 a partir de jitter_start

    Returns:
        (L, j) com o jitter efetivamente usado

    Raises:
        NumericalError: falhou mesmo com jitter_max
    """
    n = R.shape[0]
    jitter = jitter_start
    while True:
        try:
            L = cholesky(R + jitter * np.eye(n), lower=True, check_finite=True)
            if jitter > jitter_start:
                logger.debug(f"Cholesky exigiu jitter {jitter:.1e}")
            return L, jitter
        except (LinAlgError, ValueError):
            if jitter >= jitter_max * (1 - 1e-12):
                raise NumericalError(f"Cholesky falhou com jitter máximo {jitter_max:.1e}") from None
            jitter = min(jitter * 10.0, jitter_max)


# =============================================================================
# Modelo
# =============================================================================

@dataclass(frozen=True)
class GpModel:
    """
    Emulador de krigagem universal com fatorações em cache

    Imutável depois de construído; seguro para leitura concorrente.
    """
    design: np.ndarray
    values: np.ndarray
    kernel: KernelSpec
    trend: TrendBasis
    coef: np.ndarray  # c-hat (GLS)
    chol: np.ndarray  # L com L L^T = R + nugget*I
    nugget: float
    alpha: np.ndarray  # R^-1 (y - H c)
    RinvH: np.ndarray  # R^-1 H
    trend_cov: np.ndarray  # (H^T R^-1 H)^-1
    loglik: float = float("nan")
    meta: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.design.shape[0]

    @property
    def d(self) -> int:
        return self.design.shape[1]

    @property
    def variance(self) -> float:
        return self.kernel.variance

    def _solve(self, B: np.ndarray) -> np.ndarray:
        return cho_solve((self.chol, True), B, check_finite=False)

    # ---- média ----

    def predict_mean(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        r = self.kernel.correlation(X, self.design)
        return self.trend.matrix(X) @ self.coef + r @ self.alpha

    def mean(self, x: np.ndarray) -> float:
        return float(self.predict_mean(np.asarray(x, dtype=float)[None, :])[0])

    def mean_grad(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        dr = self.kernel.correlation_grad_x(x, self.design)
        return self.trend.gradient(x).T @ self.coef + dr.T @ self.alpha

    # ---- covariância ----

    def _lambda(self, X: np.ndarray, r: np.ndarray) -> np.ndarray:
        # lambda(x) = h(x) - H^T R^-1 r(X_n, x), uma coluna por ponto
        return self.trend.matrix(X).T - self.RinvH.T @ r.T

    def predict_cov(self, X1: np.ndarray, X2: np.ndarray) -> np.ndarray:
        X1, X2 = np.atleast_2d(X1), np.atleast_2d(X2)
        r1 = self.kernel.correlation(X1, self.design)
        r2 = self.kernel.correlation(X2, self.design)
        V1 = solve_triangular(self.chol, r1.T, lower=True, check_finite=False)
        V2 = solve_triangular(self.chol, r2.T, lower=True, check_finite=False)
        lam1, lam2 = self._lambda(X1, r1), self._lambda(X2, r2)
        C = self.kernel.correlation(X1, X2) - V1.T @ V2 + lam1.T @ self.trend_cov @ lam2
        return self.variance * C

    def predict_variance(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        r = self.kernel.correlation(X, self.design)
        V = solve_triangular(self.chol, r.T, lower=True, check_finite=False)
        lam = self._lambda(X, r)
        var = 1.0 - np.sum(V * V, axis=0) + np.sum(lam * (self.trend_cov @ lam), axis=0)
        return np.maximum(self.variance * var, 0.0)

    def variance_grad(self, x: np.ndarray) -> np.ndarray:
        """Gradiente de K_n(x, x) (sem o truncamento em 0)"""
        x = np.asarray(x, dtype=float)
        r = self.kernel.correlation(x[None, :], self.design)[0]
        dr = self.kernel.correlation_grad_x(x, self.design)
        lam = self._lambda(x[None, :], r[None, :])[:, 0]
        dlam = self.trend.gradient(x) - self.RinvH.T @ dr
        return self.variance * (-2.0 * self._solve(r) @ dr + 2.0 * lam @ self.trend_cov @ dlam)

    def to_dict(self) -> dict:
        return {
            "design": self.design.tolist(),
            "values": self.values.tolist(),
            "kernel": {
                "family": self.kernel.family,
                "structure": self.kernel.structure,
                "lengthscales": self.kernel.lengthscales.tolist(),
                "variance": self.kernel.variance,
            },
            "trend": self.trend.descriptors,
            "coefficients": self.coef.tolist(),
            "nugget": self.nugget,
            "loglik": self.loglik if math.isfinite(self.loglik) else None,
            "meta": self.meta,
        }


def _gls(L: np.ndarray, H: np.ndarray, y: np.ndarray):
    RinvH = cho_solve((L, True), H, check_finite=False)
    Rinvy = cho_solve((L, True), y, check_finite=False)
    A = H.T @ RinvH
    try:
        trend_cov = np.linalg.inv(A)
    except np.linalg.LinAlgError:
        raise ModelError("H^T R^-1 H singular") from None
    coef = trend_cov @ (H.T @ Rinvy)
    resid = y - H @ coef
    alpha = cho_solve((L, True), resid, check_finite=False)
    return coef, resid, alpha, RinvH, trend_cov


def _check_trend(trend: TrendBasis, X: np.ndarray, min_extra: int = 1) -> np.ndarray:
    """min_extra = 1 no ajuste (sigma^2 estimado), 0 com hiperparâmetros fixos"""
    H = trend.matrix(X)
    if X.shape[0] < trend.m + min_extra:
        rel = ">" if min_extra else ">="
        raise ModelError(f"São necessários n {rel} m pontos (n={X.shape[0]}, m={trend.m})")
    if np.linalg.matrix_rank(H) < trend.m:
        raise ModelError(f"Matriz de tendência sem posto completo ({trend.descriptors})")
    return H


def build_model(
    design,
    values,
    kernel: KernelSpec,
    trend: TrendBasis,
    jitter_start: float = 1e-10,
    jitter_max: float = 1e-4,
    unit_box: bool = True,
    loglik: float = float("nan"),
) -> GpModel:
    """
    Monta o modelo com hiperparâmetros fixos

    Raises:
        InvalidArgumentError: plano inválido
        ModelError: tendência sem posto completo
        NumericalError: fatoração impossível
    """
    X = np.array(design, dtype=float)
    y = np.array(values, dtype=float).reshape(-1)
    ensure(validate_design(X, y, unit_box=unit_box))
    if kernel.d != X.shape[1]:
        raise InvalidArgumentError(f"Kernel com {kernel.d} comprimentos para d={X.shape[1]}")
    H = _check_trend(trend, X, min_extra=0)
    L, nugget = factor_with_jitter(kernel.correlation(X, X), jitter_start, jitter_max)
    coef, _, alpha, RinvH, trend_cov = _gls(L, H, y)
    for arr in (X, y, L, coef, alpha, RinvH, trend_cov):
        arr.setflags(write=False)
    return GpModel(X, y, kernel, trend, coef, L, nugget, alpha, RinvH, trend_cov, loglik)


# =============================================================================
# Máxima verossimilhança concentrada
# =============================================================================

def concentrated_loglik(
    design,
    values,
    family: str,
    lengthscales,
    trend: TrendBasis,
    structure: str = "tensor_product",
    jitter_start: float = 1e-10,
    jitter_max: float = 1e-4,
    with_grad: bool = False,
):
    """
    Log-verossimilhança com c e sigma^2 concentrados

    Returns:
        loglik, ou (loglik, gradiente em log(ell), sigma2_hat) se with_grad
    """
    X = np.asarray(design, dtype=float)
    y = np.asarray(values, dtype=float)
    n = X.shape[0]
    kern = KernelSpec(family, np.broadcast_to(np.asarray(lengthscales, float), (X.shape[1],)).copy(), 1.0, structure)
    H = trend.matrix(X)
    L, _ = factor_with_jitter(kern.correlation(X, X), jitter_start, jitter_max)
    coef, resid, alpha, _, _ = _gls(L, H, y)
    sigma2 = max(float(resid @ alpha) / n, SIGMA2_FLOOR)
    logdet = 2.0 * np.sum(np.log(np.diag(L)))
    ll = -0.5 * n * math.log(sigma2) - 0.5 * logdet - 0.5 * n * (1.0 + _LOG_2PI)
    if not with_grad:
        return ll
    Rinv = cho_solve((L, True), np.eye(n), check_finite=False)
    grad = np.array([
        0.5 * float(alpha @ dR @ alpha) / sigma2 - 0.5 * float(np.sum(Rinv * dR))
        for dR in kern.correlation_grad_log_ls(X)
    ])
    return ll, grad, sigma2


@dataclass
class _StartResult:
    index: int
    theta: np.ndarray
    loglik: float


def fit(
    design,
    values,
    kernel_family: str = "matern52",
    trend: Optional[TrendBasis] = None,
    config: Optional[FitConfig] = None,
    seed: int = 0,
) -> GpModel:
    """
    Ajusta o emulador por máxima verossimilhança concentrada

    Otimiza log(ell) com L-BFGS-B a partir de n_starts pontos LHS em
    [log ell_min, log ell_max]; devolve o melhor resultado (empates: menor
    índice de partida). O valor final nunca é pior que o de qualquer partida.

    Args:
        design: n x d em [0,1]^d
        values: n respostas
        kernel_family: matern32, matern52 ou gaussian
        trend: base de tendência (padrão: constante)
        config: FitConfig
        seed: semente das partidas

    Returns:
        GpModel ajustado
    """
    config = config or FitConfig()
    X = np.array(design, dtype=float)
    y = np.array(values, dtype=float).reshape(-1)
    ensure(validate_design(X, y))
    d = X.shape[1]
    trend = trend or TrendBasis.constant()
    _check_trend(trend, X)
    iso = config.structure == "isotropic"
    jit = (config.jitter_start, config.jitter_max)

    def expand(theta: np.ndarray) -> np.ndarray:
        return np.exp(np.full(d, theta[0]) if iso else theta)

    if config.fixed_lengthscales is not None:
        ls = np.broadcast_to(np.asarray(config.fixed_lengthscales, float), (d,)).copy()
        best_theta = np.log(ls[:1] if iso else ls)
        best_ll = concentrated_loglik(X, y, kernel_family, ls, trend, config.structure, *jit)
        logger.debug("Comprimentos de correlação fixos, MLE ignorada")
    else:
        lo, hi = math.log(config.lengthscale_min), math.log(config.lengthscale_max)
        dim = 1 if iso else d
        starts = lo + (hi - lo) * latin_hypercube(config.n_starts, dim, make_generator(seed, "fit"))

        def neg(theta):
            try:
                ll, g, _ = concentrated_loglik(X, y, kernel_family, expand(theta), trend, config.structure, *jit, with_grad=True)
            except NumericalError:
                return 1e300, np.zeros_like(theta)
            g = np.array([g.sum()]) if iso else g
            return -ll, -g

        def run(index: int) -> _StartResult:
            x0 = starts[index]
            f0, _ = neg(x0)
            res = minimize(neg, x0, jac=True, method="L-BFGS-B", bounds=[(lo, hi)] * dim,
                           options={"maxiter": 200})
            if np.isfinite(res.fun) and res.fun <= f0:
                return _StartResult(index, np.asarray(res.x), -float(res.fun))
            return _StartResult(index, x0, -float(f0))

        if config.parallel_starts and config.n_starts > 1:
            with ThreadPoolExecutor() as pool:
                results = list(pool.map(run, range(config.n_starts)))
        else:
            results = [run(i) for i in range(config.n_starts)]

        best = max(results, key=lambda r: (r.loglik, -r.index))
        if best.loglik <= -1e299:
            raise NumericalError("Nenhuma partida da MLE produziu fatoração válida")
        best_theta, best_ll = best.theta, best.loglik

    ls = expand(best_theta)
    _, _, sigma2 = concentrated_loglik(X, y, kernel_family, ls, trend, config.structure, *jit, with_grad=True)
    kernel = KernelSpec(kernel_family, ls, sigma2, config.structure)
    model = build_model(X, y, kernel, trend, *jit, loglik=best_ll)
    logger.info(
        f"Ajuste {kernel_family}/{'+'.join(trend.descriptors)}: loglik={best_ll:.4f}, "
        f"sigma2={sigma2:.4g}, ell={np.array2string(ls, precision=4)}"
    )
    return model


# =============================================================================
# API funcional
# =============================================================================

def posterior_mean(model: GpModel, x) -> float:
    """mu_n(x)"""
    return model.mean(_as_point(x, model.d))


def posterior_mean_grad(model: GpModel, x) -> np.ndarray:
    """Gradiente de mu_n em x"""
    return model.mean_grad(_as_point(x, model.d))


def posterior_cov(model: GpModel, x, x2) -> float:
    """K_n(x, x2); a diagonal é truncada em 0"""
    xa, xb = _as_point(x, model.d), _as_point(x2, model.d, "x2")
    value = float(model.predict_cov(xa[None, :], xb[None, :])[0, 0])
    if np.array_equal(xa, xb):
        value = max(value, 0.0)
    return value


def posterior_variance(model: GpModel, X) -> np.ndarray:
    """K_n(x, x) para cada linha de X"""
    return model.predict_variance(X)


# =============================================================================
# Validação cruzada
# =============================================================================

def q2_score(predictions, observations) -> float:
    """Q2 = 1 - SSE / SST"""
    pred = np.asarray(predictions, dtype=float).reshape(-1)
    obs = np.asarray(observations, dtype=float).reshape(-1)
    if pred.shape != obs.shape:
        raise InvalidArgumentError(f"Formas diferentes: {pred.shape} e {obs.shape}")
    if obs.size < 2:
        raise UndefinedMetricError("Q2 exige ao menos 2 valores de teste")
    sst = float(np.sum((obs - obs.mean()) ** 2))
    if sst == 0.0:
        raise UndefinedMetricError("Valores de teste com variância nula")
    return 1.0 - float(np.sum((pred - obs) ** 2)) / sst


def loo_predictions(model: GpModel) -> np.ndarray:
    """Previsões leave-one-out pela identidade da matriz bordada [[R, H], [H^T, 0]]"""
    n, m = model.n, model.trend.m
    R = model.chol @ model.chol.T
    H = model.trend.matrix(model.design)
    M = np.block([[R, H], [H.T, np.zeros((m, m))]])
    Minv = np.linalg.inv(M)
    rhs = np.concatenate([model.values, np.zeros(m)])
    errors = (Minv @ rhs)[:n] / np.diag(Minv)[:n]
    return model.values - errors


def loo_q2(model: GpModel) -> float:
    """Q2 leave-one-out"""
    return q2_score(loo_predictions(model), model.values)


def q2(model: GpModel, test_design, test_values) -> float:
    """Q2 em um conjunto de teste"""
    return q2_score(model.predict_mean(np.asarray(test_design, dtype=float)), test_values)


def compare_models(
    design,
    values,
    candidates: Sequence[tuple[str, str]],
    config: Optional[FitConfig] = None,
    seed: int = 0,
) -> list[dict]:
    """
    Ajusta cada (família, tendência) e ordena por Q2 LOO (depois loglik)

    Returns:
        lista de dicionários {family, trend, q2_loo, loglik, model}
    """
    X = np.asarray(design, dtype=float)
    rows = []
    for family, trend_name in candidates:
        model = fit(X, values, family, TrendBasis.from_name(trend_name, X.shape[1]), config, seed)
        rows.append({
            "family": family,
            "trend": trend_name,
            "q2_loo": loo_q2(model),
            "loglik": model.loglik,
            "model": model,
        })
    rows.sort(key=lambda r: (-r["q2_loo"], -r["loglik"]))
    return rows


# =============================================================================
# Persistência
# =============================================================================

def model_from_dict(doc: dict) -> GpModel:
    """Reconstrói o modelo a partir do documento salvo (mesmo nugget)"""
    k = doc["kernel"]
    kernel = KernelSpec(k["family"], np.asarray(k["lengthscales"], float), float(k["variance"]), k["structure"])
    trend = TrendBasis.from_descriptors(doc["trend"])
    nugget = float(doc["nugget"])
    loglik = doc.get("loglik")
    model = build_model(doc["design"], doc["values"], kernel, trend, nugget, nugget,
                        loglik=float("nan") if loglik is None else float(loglik))
    model.meta.update(doc.get("meta") or {})
    return model


def save_model(model: GpModel, path: Path) -> Path:
    """Grava o modelo (gzip se o nome terminar em .gz)"""
    return write_document(path, model.to_dict())


def load_model(path: Path) -> GpModel:
    """Lê um modelo gravado por save_model"""
    return model_from_dict(read_document(path))
