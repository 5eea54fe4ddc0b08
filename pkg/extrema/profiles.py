"""
Funções de perfil sup/inf ao longo de projeções lineares

P_sup(eta) = sup {f(x) : Psi^T x = eta, x em D} e P_inf análogo. As varreduras
calculam sup e inf no mesmo passe, com partida quente do ótimo do nó anterior
e sementes derivadas do índice do nó (resultado independente da ordem de
execução).
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.interpolate import CubicHermiteSpline, CubicSpline

from core.config import FitConfig, OptimizerConfig
from core.errors import InfeasibleError, InsufficientDataError, InvalidArgumentError, OptimizerError
from core.logging_config import get_logger

from .kernels_gp import TrendBasis, fit
from .optimize import (
    BoxDomain,
    Objective,
    Gradient,
    Projection,
    constrained_maximize,
    constrained_minimize,
    lbfgsb_maximize,
    make_fiber,
)
from .sampling import latin_hypercube, make_generator, maximin_lhs, uniform_open

logger = get_logger("extrema.profiles")


class Provenance(str, Enum):
    """Origem dos valores de um perfil"""
    EXACT = "exact"
    SPLINE = "spline_approx"
    KRIGING = "kriging_approx"


# =============================================================================
# Grades
# =============================================================================

@dataclass(frozen=True)
class ProfileGrid:
    """
    Nós eta de um perfil

    1-d: etas crescentes (N x 1). 2-d: reticulado linha a linha sobre a caixa
    envolvente de E_Psi, com mask=False nos nós inviáveis.
    """
    etas: np.ndarray  # N x p
    mask: np.ndarray  # N, True = viável
    shape: tuple[int, ...]
    axes: tuple[np.ndarray, ...]

    @property
    def p(self) -> int:
        return self.etas.shape[1]

    @property
    def size(self) -> int:
        return self.etas.shape[0]

    @property
    def span(self) -> tuple[float, float]:
        return float(self.axes[0][0]), float(self.axes[0][-1])

    @classmethod
    def from_values(cls, values: Sequence[float]) -> "ProfileGrid":
        v = np.asarray(values, dtype=float).reshape(-1)
        if v.size < 2 or np.any(np.diff(v) <= 0):
            raise InvalidArgumentError("Grade 1-d deve ter >= 2 valores estritamente crescentes")
        return cls(v[:, None], np.ones(v.size, dtype=bool), (v.size,), (v,))

    def to_dict(self) -> dict:
        return {
            "shape": list(self.shape),
            "axes": [a.tolist() for a in self.axes],
            "masked_nodes": int(np.sum(~self.mask)),
        }


def grid_1d(projection: Projection, box: BoxDomain, n: int = 100) -> ProfileGrid:
    """n pontos equiespaçados sobre E_Psi (p = 1)"""
    if projection.p != 1:
        raise InvalidArgumentError("grid_1d exige projeção com p = 1")
    lo, hi = projection.image_bounds(box)
    return ProfileGrid.from_values(np.linspace(lo[0], hi[0], n))


def lattice_2d(
    projection: Projection,
    box: BoxDomain,
    n: int = 30,
    axes: Optional[tuple[Sequence[float], Sequence[float]]] = None,
) -> ProfileGrid:
    """
    Reticulado n x n sobre a caixa envolvente de E_Psi (p = 2)

    Nós fora de E_Psi são mascarados pela inviabilidade do LP.
    """
    if projection.p != 2:
        raise InvalidArgumentError("lattice_2d exige projeção com p = 2")
    if axes is None:
        lo, hi = projection.image_bounds(box)
        axes = (np.linspace(lo[0], hi[0], n), np.linspace(lo[1], hi[1], n))
    a1, a2 = (np.asarray(a, dtype=float) for a in axes)
    E1, E2 = np.meshgrid(a1, a2, indexing="ij")
    etas = np.column_stack([E1.ravel(), E2.ravel()])
    mask = np.ones(etas.shape[0], dtype=bool)
    if not projection.is_coordinate:
        for j, eta in enumerate(etas):
            try:
                make_fiber(projection, eta, box)
            except InfeasibleError:
                mask[j] = False
    logger.debug(f"Reticulado {a1.size}x{a2.size}: {int(np.sum(~mask))} nós mascarados")
    return ProfileGrid(etas, mask, (a1.size, a2.size), (a1, a2))


# =============================================================================
# Resultados
# =============================================================================

@dataclass
class ProfileCurve:
    """Perfil 1-d com traços dos argumentos ótimos"""
    projection: Projection
    grid: ProfileGrid
    sup: np.ndarray
    inf: np.ndarray
    argmax: np.ndarray  # N x d (nan quando aproximado)
    argmin: np.ndarray
    provenance: Provenance = Provenance.EXACT
    knots: int = 0

    @property
    def etas(self) -> np.ndarray:
        return self.grid.etas[:, 0]

    def header(self) -> list[str]:
        d = self.argmax.shape[1]
        return (["eta", "sup", "inf"] + [f"argmax_{i + 1}" for i in range(d)]
                + [f"argmin_{i + 1}" for i in range(d)])

    def rows(self) -> list[list[float]]:
        return [
            [e, s, i, *am, *an]
            for e, s, i, am, an in zip(self.etas, self.sup, self.inf, self.argmax, self.argmin)
        ]


@dataclass
class ProfileMap:
    """Perfil 2-d; sup/inf são matrizes mascaradas no formato do reticulado"""
    projection: Projection
    grid: ProfileGrid
    sup: np.ma.MaskedArray
    inf: np.ma.MaskedArray
    argmax: np.ndarray  # N x d
    argmin: np.ndarray
    provenance: Provenance = Provenance.EXACT
    knots: int = 0

    def header(self) -> list[str]:
        d = self.argmax.shape[1]
        return (["eta1", "eta2", "sup", "inf"] + [f"argmax_{i + 1}" for i in range(d)]
                + [f"argmin_{i + 1}" for i in range(d)])

    def rows(self) -> list[list[float]]:
        sup, inf = self.sup.ravel().data, self.inf.ravel().data
        out = []
        for j in np.flatnonzero(self.grid.mask):
            out.append([*self.grid.etas[j], sup[j], inf[j], *self.argmax[j], *self.argmin[j]])
        return out

    def row_curve(self, r: int) -> ProfileCurve:
        """Linha r do reticulado (eta1 fixo) como curva em eta2"""
        n2 = self.grid.shape[1]
        idx = np.arange(r * n2, (r + 1) * n2)
        return self._slice_curve(idx, self.grid.axes[1])

    def column_curve(self, c: int) -> ProfileCurve:
        """Coluna c do reticulado (eta2 fixo) como curva em eta1"""
        n1, n2 = self.grid.shape
        idx = np.arange(n1) * n2 + c
        return self._slice_curve(idx, self.grid.axes[0])

    def _slice_curve(self, idx: np.ndarray, axis: np.ndarray) -> ProfileCurve:
        keep = self.grid.mask[idx]
        if np.sum(keep) < 2:
            raise InsufficientDataError("Fatia com menos de 2 nós viáveis")
        idx = idx[keep]
        sup, inf = self.sup.ravel().data[idx], self.inf.ravel().data[idx]
        return ProfileCurve(self.projection, ProfileGrid.from_values(axis[keep]), sup, inf,
                            self.argmax[idx], self.argmin[idx], self.provenance, self.knots)


# =============================================================================
# Varreduras
# =============================================================================

def node_seed(seed: int, *parts: int) -> int:
    """Semente de 63 bits derivada de (seed, parts...)"""
    state = np.random.SeedSequence(int(seed), spawn_key=tuple(int(p) for p in parts)).generate_state(2, np.uint32)
    return int(state[0]) << 31 | int(state[1]) >> 1


@dataclass
class _NodeResult:
    sup: float = math.nan
    inf: float = math.nan
    argmax: Optional[np.ndarray] = None
    argmin: Optional[np.ndarray] = None
    failed: bool = False


def _blocks(indices: Sequence[int], block_size: int) -> list[list[int]]:
    indices = list(indices)
    if block_size <= 0:
        return [indices]
    return [indices[k:k + block_size] for k in range(0, len(indices), block_size)]


def _run_chains(chains: list[list[int]], solve_chain: Callable[[list[int]], dict[int, _NodeResult]],
                threads: int) -> dict[int, _NodeResult]:
    results: dict[int, _NodeResult] = {}
    if threads > 1 and len(chains) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            for part in pool.map(solve_chain, chains):
                results.update(part)
    else:
        for chain in chains:
            results.update(solve_chain(chain))
    return results


def _coordinate_node(objective: Objective, gradient: Gradient, i: int, eta: float, box: BoxDomain,
                     n_starts: int, config: OptimizerConfig, seed: int, warm: Optional[np.ndarray],
                     sense: float) -> tuple[np.ndarray, float]:
    """Fixa x_i = eta e otimiza as d-1 coordenadas restantes"""
    others = [k for k in range(box.d) if k != i]
    sub = box.subbox(others)

    def full(y):
        x = np.empty(box.d)
        x[others] = y
        x[i] = eta
        return x

    f = lambda y: sense * float(objective(full(y)))
    g = None if gradient is None else (lambda y: sense * np.asarray(gradient(full(y)))[others])

    gen = make_generator(seed, "starts")
    starts = [0.5 * (sub.lower + sub.upper)]
    if warm is not None:
        starts.append(sub.clip(np.asarray(warm)[others]))
    while len(starts) < max(n_starts, 1):
        starts.append(sub.lower + sub.widths * uniform_open(gen, len(others)))

    best_y, best_f = None, -math.inf
    for y0 in starts:
        y, val, _ = lbfgsb_maximize(f, g, sub, y0, config)
        if val > best_f + config.tie_tol:
            best_y, best_f = y, val
    return full(best_y), sense * best_f


def _sweep(
    node_solver: Callable[[int, Optional[np.ndarray], Optional[np.ndarray]], _NodeResult],
    order: list[list[int]],
    threads: int,
) -> dict[int, _NodeResult]:
    def solve_chain(chain: list[int]) -> dict[int, _NodeResult]:
        out = {}
        warm_max = warm_min = None
        for j in chain:
            res = node_solver(j, warm_max, warm_min)
            out[j] = res
            if not res.failed:
                warm_max, warm_min = res.argmax, res.argmin
        return out

    return _run_chains(order, solve_chain, threads)


def _collect_curve(projection, grid, results, d, provenance=Provenance.EXACT) -> ProfileCurve:
    N = grid.size
    sup, inf = np.full(N, np.nan), np.full(N, np.nan)
    amax, amin = np.full((N, d), np.nan), np.full((N, d), np.nan)
    for j, r in results.items():
        sup[j], inf[j] = r.sup, r.inf
        if r.argmax is not None:
            amax[j], amin[j] = r.argmax, r.argmin
    return ProfileCurve(projection, grid, sup, inf, amax, amin, provenance)


def _annotated(eta, exc: OptimizerError) -> OptimizerError:
    return OptimizerError(f"eta={np.array2string(np.atleast_1d(eta), precision=6)}: {exc}", exc.last_iterate)


def coordinate_profiles(
    objective: Objective,
    gradient: Gradient,
    i: int,
    box: BoxDomain,
    grid: Optional[ProfileGrid] = None,
    config: Optional[OptimizerConfig] = None,
    seed: int = 0,
    threads: int = 1,
    block_size: int = 0,
    tolerate_failures: bool = False,
) -> ProfileCurve:
    """
    Perfis sup/inf da coordenada i (base 0)

    Cada nó resolve o problema reduzido em d-1 dimensões com L-BFGS-B,
    partindo do centro da caixa, do ótimo do nó anterior e de pontos
    aleatórios. Com block_size > 0 a grade é dividida em cadeias
    independentes (executadas em paralelo com threads > 1).

    Raises:
        OptimizerError: anotado com eta (salvo tolerate_failures)
    """
    config = config or OptimizerConfig()
    projection = Projection.coordinate(i, box.d)
    grid = grid or grid_1d(projection, box)
    etas = grid.etas[:, 0]
    if etas[0] < box.lower[i] - 1e-12 or etas[-1] > box.upper[i] + 1e-12:
        raise InvalidArgumentError(f"Grade fora de [{box.lower[i]}, {box.upper[i]}]")

    def solve(j, warm_max, warm_min) -> _NodeResult:
        eta = float(np.clip(etas[j], box.lower[i], box.upper[i]))
        try:
            xmax, fmax = _coordinate_node(objective, gradient, i, eta, box, config.starts_1d, config,
                                          node_seed(seed, j, 0), warm_max, 1.0)
            xmin, fmin = _coordinate_node(objective, gradient, i, eta, box, config.starts_1d, config,
                                          node_seed(seed, j, 1), warm_min, -1.0)
        except OptimizerError as exc:
            if tolerate_failures:
                return _NodeResult(failed=True)
            raise _annotated(eta, exc) from exc
        return _NodeResult(fmax, fmin, xmax, xmin)

    results = _sweep(solve, _blocks(range(grid.size), block_size), threads)
    return _collect_curve(projection, grid, results, box.d)


def oblique_profiles(
    objective: Objective,
    gradient: Gradient,
    projection: Projection,
    box: BoxDomain,
    grid: Optional[ProfileGrid] = None,
    config: Optional[OptimizerConfig] = None,
    seed: int = 0,
    threads: int = 1,
    block_size: int = 0,
    tolerate_failures: bool = False,
) -> ProfileCurve:
    """
    Perfis sup/inf ao longo de uma direção qualquer (p = 1)

    Projeções coordenadas seguem o caminho dedicado de coordinate_profiles.
    """
    config = config or OptimizerConfig()
    if projection.p != 1:
        raise InvalidArgumentError("oblique_profiles exige p = 1")
    if projection.kind == "coordinate":
        return coordinate_profiles(objective, gradient, projection.coords[0], box, grid, config,
                                   seed, threads, block_size, tolerate_failures)
    grid = grid or grid_1d(projection, box)

    def solve(j, warm_max, warm_min) -> _NodeResult:
        eta = grid.etas[j]
        try:
            fiber = make_fiber(projection, eta, box)
            xmax, fmax = constrained_maximize(objective, gradient, fiber, box, config.starts_1d, config,
                                              node_seed(seed, j, 0), warm_max)
            xmin, fmin = constrained_minimize(objective, gradient, fiber, box, config.starts_1d, config,
                                              node_seed(seed, j, 1), warm_min)
        except (OptimizerError, InfeasibleError) as exc:
            if tolerate_failures:
                return _NodeResult(failed=True)
            if isinstance(exc, InfeasibleError):
                raise
            raise _annotated(eta, exc) from exc
        return _NodeResult(fmax, fmin, xmax, xmin)

    results = _sweep(solve, _blocks(range(grid.size), block_size), threads)
    return _collect_curve(projection, grid, results, box.d)


def bivariate_profiles(
    objective: Objective,
    gradient: Gradient,
    projection: Projection,
    box: BoxDomain,
    lattice: Optional[ProfileGrid] = None,
    config: Optional[OptimizerConfig] = None,
    seed: int = 0,
    threads: int = 1,
    tolerate_failures: bool = False,
) -> ProfileMap:
    """
    Perfis sup/inf sobre um reticulado 2-d (p = 2)

    Cada linha do reticulado é uma cadeia de partidas quentes; linhas são
    independentes e podem rodar em paralelo.
    """
    config = config or OptimizerConfig()
    if projection.p != 2:
        raise InvalidArgumentError("bivariate_profiles exige p = 2")
    if box.d - projection.p < 1:
        raise InvalidArgumentError("bivariate_profiles exige d - p >= 1")
    lattice = lattice or lattice_2d(projection, box)
    n1, n2 = lattice.shape

    def solve(j, warm_max, warm_min) -> _NodeResult:
        eta = lattice.etas[j]
        try:
            fiber = make_fiber(projection, eta, box)
            xmax, fmax = constrained_maximize(objective, gradient, fiber, box, config.starts_2d, config,
                                              node_seed(seed, j, 0), warm_max)
            xmin, fmin = constrained_minimize(objective, gradient, fiber, box, config.starts_2d, config,
                                              node_seed(seed, j, 1), warm_min)
        except (OptimizerError, InfeasibleError) as exc:
            if tolerate_failures:
                return _NodeResult(failed=True)
            if isinstance(exc, InfeasibleError):
                raise
            raise _annotated(eta, exc) from exc
        return _NodeResult(fmax, fmin, xmax, xmin)

    rows = [[r * n2 + c for c in range(n2) if lattice.mask[r * n2 + c]] for r in range(n1)]
    results = _sweep(solve, [row for row in rows if row], threads)
    return _collect_map(projection, lattice, results, box.d)


def _collect_map(projection, lattice, results, d, provenance=Provenance.EXACT, knots=0) -> ProfileMap:
    N = lattice.size
    sup, inf = np.full(N, np.nan), np.full(N, np.nan)
    amax, amin = np.full((N, d), np.nan), np.full((N, d), np.nan)
    for j, r in results.items():
        sup[j], inf[j] = r.sup, r.inf
        if r.argmax is not None:
            amax[j], amin[j] = r.argmax, r.argmin
    invalid = ~lattice.mask | np.isnan(sup)
    shape = lattice.shape
    return ProfileMap(
        projection, lattice,
        np.ma.masked_array(sup.reshape(shape), invalid.reshape(shape)),
        np.ma.masked_array(inf.reshape(shape), invalid.reshape(shape)),
        amax, amin, provenance, knots,
    )


def profile_point(
    objective: Objective,
    gradient: Gradient,
    projection: Projection,
    box: BoxDomain,
    eta,
    sense: str = "sup",
    config: Optional[OptimizerConfig] = None,
    seed: int = 0,
    warm_start: Optional[np.ndarray] = None,
) -> tuple[np.ndarray, float]:
    """Um único valor de perfil (sup ou inf) em eta"""
    config = config or OptimizerConfig()
    n_starts = config.starts_1d if projection.p == 1 else config.starts_2d
    if projection.kind == "coordinate":
        s = 1.0 if sense == "sup" else -1.0
        return _coordinate_node(objective, gradient, projection.coords[0], float(np.atleast_1d(eta)[0]),
                                box, n_starts, config, seed, warm_start, s)
    fiber = make_fiber(projection, eta, box)
    solver = constrained_maximize if sense == "sup" else constrained_minimize
    return solver(objective, gradient, fiber, box, n_starts, config, seed, warm_start)


# =============================================================================
# Aproximações
# =============================================================================

def default_knots(d: int) -> int:
    """k = ceil(10 sqrt(d))"""
    return int(math.ceil(10.0 * math.sqrt(d)))


def spline_knots(projection: Projection, box: BoxDomain, k: int, seed: int = 0) -> ProfileGrid:
    """Extremos de E_Psi mais k-2 pontos de um LHS 1-d"""
    if k < 4:
        raise InsufficientDataError(f"Aproximação 1-d exige k >= 4 nós (k={k})")
    lo, hi = projection.image_bounds(box)
    inner = lo[0] + (hi[0] - lo[0]) * latin_hypercube(k - 2, 1, make_generator(seed, "knots"))[:, 0]
    return ProfileGrid.from_values(np.unique(np.concatenate([[lo[0], hi[0]], inner])))


def spline_approximant(etas, values, slopes=None) -> Callable[[np.ndarray], np.ndarray]:
    """
    Spline cúbica pelos nós (Hermite quando as derivadas são dadas)

    Condição de contorno not-a-knot: reproduz polinômios cúbicos.
    """
    x = np.asarray(etas, dtype=float).reshape(-1)
    y = np.asarray(values, dtype=float).reshape(-1)
    if x.size < 4:
        raise InsufficientDataError(f"Aproximação 1-d exige k >= 4 nós (k={x.size})")
    if x.shape != y.shape:
        raise InvalidArgumentError("Nós e valores com tamanhos diferentes")
    order = np.argsort(x, kind="stable")
    x, y = x[order], y[order]
    if np.any(np.diff(x) <= 0):
        raise InvalidArgumentError("Nós da spline devem ser distintos")
    if slopes is not None:
        return CubicHermiteSpline(x, y, np.asarray(slopes, dtype=float).reshape(-1)[order])
    return CubicSpline(x, y, bc_type="not-a-knot")


def approximate_profile_1d(
    projection: Projection,
    knot_etas,
    sup_values,
    inf_values,
    grid: ProfileGrid,
    sup_slopes=None,
    inf_slopes=None,
) -> ProfileCurve:
    """
    Curva aproximada por spline a partir de k avaliações exatas

    Nos nós a curva reproduz os valores de entrada.
    """
    etas = grid.etas[:, 0]
    sup = spline_approximant(knot_etas, sup_values, sup_slopes)(etas)
    inf = spline_approximant(knot_etas, inf_values, inf_slopes)(etas)
    knots = np.asarray(knot_etas, dtype=float).reshape(-1)
    for kv, sv, iv in zip(knots, np.asarray(sup_values, float), np.asarray(inf_values, float)):
        hit = np.flatnonzero(etas == kv)
        sup[hit], inf[hit] = sv, iv
    # a interpolação pode cruzar; mantém sup >= inf
    sup, inf = np.maximum(sup, inf), np.minimum(sup, inf)
    d = projection.d
    nan = np.full((etas.size, d), np.nan)
    return ProfileCurve(projection, grid, sup, inf, nan, nan.copy(), Provenance.SPLINE, knots.size)


def approximate_curve(
    objective: Objective,
    gradient: Gradient,
    projection: Projection,
    box: BoxDomain,
    grid: ProfileGrid,
    k: Optional[int] = None,
    config: Optional[OptimizerConfig] = None,
    seed: int = 0,
    use_slopes: bool = True,
    threads: int = 1,
) -> ProfileCurve:
    """
    Avalia o perfil exato em k nós e interpola no grid

    Para projeções coordenadas com gradiente disponível, a derivada do perfil
    em cada nó é a derivada parcial do objetivo no argumento ótimo.
    """
    k = k or default_knots(box.d)
    knots = spline_knots(projection, box, k, seed)
    exact = oblique_profiles(objective, gradient, projection, box, knots, config, seed, threads)
    slopes_sup = slopes_inf = None
    if use_slopes and gradient is not None and projection.kind == "coordinate":
        i = projection.coords[0]
        slopes_sup = np.array([gradient(x)[i] for x in exact.argmax])
        slopes_inf = np.array([gradient(x)[i] for x in exact.argmin])
    return approximate_profile_1d(projection, knots.etas[:, 0], exact.sup, exact.inf, grid,
                                  slopes_sup, slopes_inf)


def bivariate_knots(projection: Projection, box: BoxDomain, k: int, seed: int = 0) -> np.ndarray:
    """k nós maximin-LHS viáveis na caixa envolvente de E_Psi"""
    lo, hi = projection.image_bounds(box)
    gen = make_generator(seed, "knots2d")
    nodes: list[np.ndarray] = []
    attempts = 0
    while len(nodes) < k:
        attempts += 1
        if attempts > 50:
            raise InsufficientDataError("Não foi possível obter nós viáveis suficientes em E_Psi")
        for u in maximin_lhs(2 * k, 2, gen):
            eta = lo + (hi - lo) * u
            if not projection.is_coordinate:
                try:
                    make_fiber(projection, eta, box)
                except InfeasibleError:
                    continue
            nodes.append(eta)
            if len(nodes) == k:
                break
    return np.array(nodes)


def approximate_profile_2d(
    projection: Projection,
    knot_etas,
    sup_values,
    inf_values,
    lattice: ProfileGrid,
    fit_config: Optional[FitConfig] = None,
    seed: int = 0,
) -> ProfileMap:
    """
    Mapa aproximado por krigagem ordinária (Matérn 5/2) sobre eta normalizado

    Raises:
        InsufficientDataError: k < 10
        InvalidArgumentError: nós repetidos
    """
    E = np.asarray(knot_etas, dtype=float)
    if E.ndim != 2 or E.shape[1] != 2:
        raise InvalidArgumentError("Nós 2-d devem formar uma matriz k x 2")
    if E.shape[0] < 10:
        raise InsufficientDataError(f"Aproximação 2-d exige k >= 10 nós (k={E.shape[0]})")
    if np.unique(E, axis=0).shape[0] != E.shape[0]:
        raise InvalidArgumentError("Nós 2-d repetidos")

    lo = np.minimum(E.min(axis=0), [lattice.axes[0][0], lattice.axes[1][0]])
    hi = np.maximum(E.max(axis=0), [lattice.axes[0][-1], lattice.axes[1][-1]])
    to_unit = lambda P: (P - lo) / (hi - lo)
    fit_config = fit_config or FitConfig()
    cfg = replace(fit_config, family="matern52", trend="constant")

    Q = to_unit(lattice.etas)
    maps = []
    for values in (sup_values, inf_values):
        model = fit(to_unit(E), values, "matern52", TrendBasis.constant(), cfg, seed)
        maps.append(model.predict_mean(Q))
    sup, inf = np.maximum(maps[0], maps[1]), np.minimum(maps[0], maps[1])
    results = {j: _NodeResult(sup[j], inf[j]) for j in np.flatnonzero(lattice.mask)}
    return _collect_map(projection, lattice, results, projection.d, Provenance.KRIGING, E.shape[0])


# =============================================================================
# Regiões de excursão
# =============================================================================

@dataclass(frozen=True)
class Interval:
    """Intervalo fechado em eta"""
    lower: float
    upper: float
    low_resolution: bool = False

    @property
    def length(self) -> float:
        return self.upper - self.lower

    def to_list(self) -> list:
        return [self.lower, self.upper]


@dataclass
class ExcursionIntervals:
    """Partição do intervalo da grade por um limiar"""
    threshold: float
    non_excursion: list[Interval] = field(default_factory=list)  # P_sup < tau
    excursion: list[Interval] = field(default_factory=list)  # P_inf >= tau
    undetermined: list[Interval] = field(default_factory=list)

    @property
    def excluded_length(self) -> float:
        return float(sum(iv.length for iv in self.non_excursion))

    def to_dict(self) -> dict:
        def dump(ivs):
            return [{"lower": iv.lower, "upper": iv.upper, "low_resolution": iv.low_resolution} for iv in ivs]
        return {
            "threshold": self.threshold,
            "non_excursion": dump(self.non_excursion),
            "excursion": dump(self.excursion),
            "undetermined": dump(self.undetermined),
            "excluded_length": self.excluded_length,
        }


def _crossing(e0, e1, v0, v1, tau, inside, refine, steps) -> float:
    """Ponto de troca de pertinência em [e0, e1]"""
    if v1 == v0:
        c = 0.5 * (e0 + e1)
    else:
        c = e0 + (tau - v0) / (v1 - v0) * (e1 - e0)
        c = min(max(c, e0), e1)
    if refine is None:
        return c
    # bisseção sobre a pertinência, a partir do colchete [e0, e1]
    a, b, a_in = e0, e1, inside(v0)
    for _ in range(steps):
        mid = 0.5 * (a + b)
        if inside(refine(mid)) == a_in:
            a = mid
        else:
            b = mid
    return 0.5 * (a + b)


def _level_set(etas, values, tau, inside, refine=None, steps=20) -> list[Interval]:
    cell = float(np.min(np.diff(etas)))
    out: list[Interval] = []
    start = etas[0] if inside(values[0]) else None
    for j in range(len(etas) - 1):
        a, b = inside(values[j]), inside(values[j + 1])
        if a == b:
            continue
        c = _crossing(etas[j], etas[j + 1], values[j], values[j + 1], tau, inside, refine, steps)
        if a:
            out.append(Interval(start, c, c - start < cell))
            start = None
        else:
            start = c
    if start is not None:
        out.append(Interval(start, float(etas[-1]), etas[-1] - start < cell))
    return [Interval(float(iv.lower), float(iv.upper), bool(iv.low_resolution)) for iv in out]


def _complement(span: tuple[float, float], taken: list[Interval], cell: float) -> list[Interval]:
    out, cursor = [], span[0]
    for iv in sorted(taken, key=lambda v: v.lower):
        if iv.lower > cursor:
            out.append(Interval(cursor, iv.lower, iv.lower - cursor < cell))
        cursor = max(cursor, iv.upper)
    if cursor < span[1]:
        out.append(Interval(cursor, span[1], span[1] - cursor < cell))
    return out


def excursion_intervals(
    curve: ProfileCurve,
    tau: float,
    refine_sup: Optional[Callable[[float], float]] = None,
    refine_inf: Optional[Callable[[float], float]] = None,
    refine_steps: int = 20,
) -> ExcursionIntervals:
    """
    Regiões de não-excursão (P_sup < tau), excursão (P_inf >= tau) e indeterminadas

    Extremos por interpolação linear entre nós vizinhos; com refine_* (perfil
    exato em um eta) cada extremo é refinado por bisseção.
    """
    etas = curve.etas
    if etas.size < 2:
        raise InsufficientDataError("excursion_intervals exige >= 2 nós")
    ok = ~(np.isnan(curve.sup) | np.isnan(curve.inf))
    etas, sup, inf = etas[ok], curve.sup[ok], curve.inf[ok]
    cell = float(np.min(np.diff(etas)))
    non_exc = _level_set(etas, sup, tau, lambda v: v < tau, refine_sup, refine_steps)
    exc = _level_set(etas, inf, tau, lambda v: v >= tau, refine_inf, refine_steps)
    span = (float(etas[0]), float(etas[-1]))
    return ExcursionIntervals(float(tau), non_exc, exc, _complement(span, non_exc + exc, cell))


def excluded_volume(intervals: ExcursionIntervals, box: Optional[BoxDomain] = None, i: Optional[int] = None) -> float:
    """
    Volume excluído por um perfil coordenado: comprimento de não-excursão
    vezes o volume das coordenadas restantes (1 na caixa unitária)
    """
    length = intervals.excluded_length
    if box is None or i is None:
        return length
    others = [k for k in range(box.d) if k != i]
    return length * float(np.prod(box.widths[others]))


def _trapezoid_weights(axis: np.ndarray) -> np.ndarray:
    w = np.zeros(axis.size)
    h = np.diff(axis)
    w[:-1] += 0.5 * h
    w[1:] += 0.5 * h
    return w


def excluded_area(profile_map: ProfileMap, tau: float) -> float:
    """Área (pesos do trapézio) onde P_sup < tau no reticulado"""
    a1, a2 = profile_map.grid.axes
    weights = np.outer(_trapezoid_weights(a1), _trapezoid_weights(a2))
    below = (profile_map.sup < tau).filled(False)
    return float(np.sum(weights[below]))
