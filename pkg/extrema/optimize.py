"""
Otimização com restrições de caixa e de igualdade linear

Um ponto da fibra {x : Psi^T x = eta, x em D} é escrito x = xi + N z, com N
base ortonormal do núcleo de Psi^T. O problema reduzido em z é resolvido com
L-BFGS-B quando o politopo em z é uma caixa, e com barreira logarítmica
(BFGS + backtracking) no caso geral.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.optimize import linprog, minimize

from core.config import OptimizerConfig
from core.errors import InfeasibleError, InvalidArgumentError, OptimizerError
from core.logging_config import get_logger
from core.validators import ensure, validate_box, validate_projection

from .sampling import make_generator, standard_normal, uniform_open

logger = get_logger("extrema.optimize")

Objective = Callable[[np.ndarray], float]
Gradient = Optional[Callable[[np.ndarray], np.ndarray]]

RANK_TOL = 1e-10
SLACK_TOL = 1e-10
FRACTION_TO_BOUNDARY = 0.995


# =============================================================================
# Tipos
# =============================================================================

@dataclass(frozen=True)
class BoxDomain:
    """Hiper-retângulo D = [lower, upper]"""
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = np.asarray(self.lower, dtype=float).reshape(-1)
        hi = np.asarray(self.upper, dtype=float).reshape(-1)
        ensure(validate_box(lo, hi))
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @classmethod
    def unit(cls, d: int) -> "BoxDomain":
        return cls(np.zeros(d), np.ones(d))

    @property
    def d(self) -> int:
        return self.lower.size

    @property
    def widths(self) -> np.ndarray:
        return self.upper - self.lower

    def contains(self, x: np.ndarray, tol: float = 1e-9) -> bool:
        return bool(np.all(x >= self.lower - tol) and np.all(x <= self.upper + tol))

    def clip(self, x: np.ndarray) -> np.ndarray:
        return np.clip(x, self.lower, self.upper)

    def bounds(self) -> list[tuple[float, float]]:
        return list(zip(self.lower.tolist(), self.upper.tolist()))

    def subbox(self, keep: Sequence[int]) -> "BoxDomain":
        keep = list(keep)
        return BoxDomain(self.lower[keep], self.upper[keep])


@dataclass(frozen=True)
class Projection:
    """
    Matriz Psi (d x p) de posto coluna completo, p em {1, 2}

    kind: "coordinate" (coluna canônica), "oblique" (p=1 qualquer) ou
    "planar" (p=2); coords guarda os índices (base 0) quando Psi é formada
    por colunas canônicas.
    """
    psi: np.ndarray
    kind: str
    coords: tuple[int, ...] = ()

    def __post_init__(self):
        P = np.asarray(self.psi, dtype=float)
        if P.ndim == 1:
            P = P[:, None]
        ensure(validate_projection(P, P.shape[0]))
        s = np.linalg.svd(P, compute_uv=False)
        if s[-1] <= RANK_TOL * s[0]:
            raise InvalidArgumentError("Projeção sem posto coluna completo")
        P.setflags(write=False)
        object.__setattr__(self, "psi", P)

    @property
    def d(self) -> int:
        return self.psi.shape[0]

    @property
    def p(self) -> int:
        return self.psi.shape[1]

    @property
    def is_coordinate(self) -> bool:
        return self.kind == "coordinate" or (self.kind == "planar" and len(self.coords) == 2)

    @classmethod
    def coordinate(cls, i: int, d: int) -> "Projection":
        if not 0 <= i < d:
            raise InvalidArgumentError(f"Coordenada {i + 1} fora de 1..{d}")
        e = np.zeros((d, 1))
        e[i, 0] = 1.0
        return cls(e, "coordinate", (i,))

    @classmethod
    def oblique(cls, direction) -> "Projection":
        v = np.asarray(direction, dtype=float).reshape(-1)
        norm = np.linalg.norm(v)
        if not norm > 0:
            raise InvalidArgumentError("Direção nula")
        v = v / norm
        nz = np.flatnonzero(np.abs(v) > 1e-15)
        if nz.size == 1:
            return cls.coordinate(int(nz[0]), v.size) if v[nz[0]] > 0 else cls(v[:, None], "oblique")
        return cls(v[:, None], "oblique")

    @classmethod
    def planar(cls, columns) -> "Projection":
        P = np.asarray(columns, dtype=float)
        if P.ndim != 2 or P.shape[1] != 2:
            raise InvalidArgumentError(f"Projeção planar exige matriz d x 2, recebido {P.shape}")
        return cls(P, "planar")

    @classmethod
    def coordinate_pair(cls, i: int, j: int, d: int) -> "Projection":
        if i == j or not (0 <= i < d and 0 <= j < d):
            raise InvalidArgumentError(f"Par de coordenadas inválido: {i + 1}, {j + 1}")
        P = np.zeros((d, 2))
        P[i, 0] = P[j, 1] = 1.0
        return cls(P, "planar", (i, j))

    @classmethod
    def parse(cls, text: str, d: int) -> "Projection":
        """
        Lê a notação de linha de comando

        "coord:2" (base 1), "oblique:a,b,...", "pair:1,3" e
        "planar:a1,...,ad;b1,...,bd" (duas colunas separadas por ';').
        """
        kind, _, body = text.partition(":")
        try:
            if kind == "coord":
                return cls.coordinate(int(body) - 1, d)
            if kind == "oblique":
                return cls._sized(cls.oblique([float(v) for v in body.split(",")]), d, text)
            if kind == "pair":
                i, j = (int(v) - 1 for v in body.split(","))
                return cls.coordinate_pair(i, j, d)
            if kind == "planar":
                cols = [[float(v) for v in col.split(",")] for col in body.split(";")]
                return cls._sized(cls.planar(np.array(cols).T), d, text)
        except ValueError as e:
            if isinstance(e, InvalidArgumentError):
                raise
            raise InvalidArgumentError(f"Projeção malformada '{text}': {e}") from None
        raise InvalidArgumentError(f"Tipo de projeção desconhecido: '{text}'")

    @staticmethod
    def _sized(projection: "Projection", d: int, text: str) -> "Projection":
        if projection.d != d:
            raise InvalidArgumentError(f"Projeção '{text}' tem dimensão {projection.d}, esperado {d}")
        return projection

    @property
    def label(self) -> str:
        if self.kind == "coordinate":
            return f"coord{self.coords[0] + 1}"
        if self.coords:
            return "pair" + "_".join(str(c + 1) for c in self.coords)
        digits = "_".join(f"{v:.4g}" for v in self.psi.ravel(order="F"))
        return f"{self.kind}_{digits}".replace("-", "m").replace(".", "p")

    def image_bounds(self, box: BoxDomain) -> tuple[np.ndarray, np.ndarray]:
        """Caixa envolvente de E_Psi = {Psi^T x : x em D} (exata por coluna)"""
        lo_terms = np.minimum(self.psi * box.lower[:, None], self.psi * box.upper[:, None])
        hi_terms = np.maximum(self.psi * box.lower[:, None], self.psi * box.upper[:, None])
        return lo_terms.sum(axis=0), hi_terms.sum(axis=0)

    def apply(self, X: np.ndarray) -> np.ndarray:
        """Psi^T x para cada linha de X"""
        return np.atleast_2d(X) @ self.psi


@dataclass(frozen=True)
class EqualityFiber:
    """
    Fibra {x : Psi^T x = eta} dentro da caixa, na forma x = xi + N z

    N é ortonormal com Psi^T N = 0; coordenadas presas a uma face da caixa em
    toda a fibra (pinned) são removidas de N.
    """
    projection: Projection
    eta: np.ndarray
    xi: np.ndarray
    nullbasis: np.ndarray
    slack: float
    pinned: tuple[int, ...] = ()

    @property
    def q(self) -> int:
        return self.nullbasis.shape[1]

    @property
    def degenerate(self) -> bool:
        return self.q == 0

    def point(self, z: np.ndarray) -> np.ndarray:
        return self.xi + self.nullbasis @ z

    def coordinates(self, x: np.ndarray) -> np.ndarray:
        """z tal que xi + N z é a projeção ortogonal de x na fibra"""
        return self.nullbasis.T @ (x - self.xi)

    def polytope(self, box: BoxDomain) -> tuple[np.ndarray, np.ndarray]:
        """Restrições A z <= b equivalentes a xi + N z em D (linhas nulas descartadas)"""
        N = self.nullbasis
        keep = np.linalg.norm(N, axis=1) > 1e-14
        A = np.vstack([N[keep], -N[keep]])
        b = np.concatenate([(box.upper - self.xi)[keep], (self.xi - box.lower)[keep]])
        return A, np.maximum(b, 0.0)


@dataclass
class OptimizerStatus:
    """Diagnóstico de uma otimização"""
    converged: bool
    iterations: int
    evaluations: int
    projected_gradient: float
    message: str = ""


# =============================================================================
# Álgebra linear e LP
# =============================================================================

def _complement(P: np.ndarray) -> np.ndarray:
    """
    Base ortonormal do complemento ortogonal de span(P)

    Gram-Schmidt (duas passadas) sobre as colunas do projetor I - Q Q^T, em
    ordem; colunas redundantes de P são toleradas (posto via SVD). Cada
    coluna tem a primeira entrada não nula positiva.
    """
    d = P.shape[0]
    U, s, _ = np.linalg.svd(P, full_matrices=False)
    rank = int(np.sum(s > RANK_TOL * s[0])) if s.size and s[0] > 0 else 0
    Q = U[:, :rank]
    target = d - rank
    proj = np.eye(d) - Q @ Q.T
    basis: list[np.ndarray] = []
    for j in range(d):
        if len(basis) == target:
            break
        v = proj[:, j].copy()
        for _ in range(2):
            for b in basis:
                v -= (b @ v) * b
            v -= Q @ (Q.T @ v)
        norm = np.linalg.norm(v)
        if norm > 1e-8:
            basis.append(v / norm)
    N = np.column_stack(basis) if basis else np.zeros((d, 0))
    for k in range(N.shape[1]):
        first = np.flatnonzero(np.abs(N[:, k]) > 1e-12)[0]
        if N[first, k] < 0:
            N[:, k] = -N[:, k]
    return N


def null_space(projection: Projection) -> np.ndarray:
    """
    Base ortonormal de Null(Psi^T), d x (d - p)

    Determinística para Psi fixa: Psi = e_1 em R^3 dá [e_2 e_3].
    """
    s = np.linalg.svd(projection.psi, compute_uv=False)
    if s[-1] <= RANK_TOL * s[0]:
        raise InvalidArgumentError("Projeção sem posto coluna completo")
    return _complement(projection.psi)


def _chebyshev_lp(P: np.ndarray, eta: np.ndarray, N: np.ndarray, box: BoxDomain) -> tuple[np.ndarray, float]:
    """
    max t  s.a.  P^T x = eta,  x_i - w_i t >= l_i,  x_i + w_i t <= u_i

    w_i = ||N_i.|| faz de t o raio de uma bola em z contida na fibra.
    """
    d = box.d
    w = np.linalg.norm(N, axis=1)
    c = np.zeros(d + 1)
    c[-1] = -1.0
    I = np.eye(d)
    A_ub = np.vstack([np.hstack([-I, w[:, None]]), np.hstack([I, w[:, None]])])
    b_ub = np.concatenate([-box.lower, box.upper])
    A_eq = np.hstack([P.T, np.zeros((P.shape[1], 1))])
    bounds = box.bounds() + [(0.0, float(np.max(box.widths)))]
    res = linprog(c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=eta, bounds=bounds, method="highs")
    if res.status == 2:
        raise InfeasibleError(f"eta={np.array2string(eta, precision=6)} fora de E_Psi")
    if res.status != 0 or res.x is None:
        raise OptimizerError(f"LP falhou: {res.message}")
    x = res.x[:d]
    # correção da igualdade por projeção e volta à caixa
    x = x - np.linalg.pinv(P.T) @ (P.T @ x - eta)
    return box.clip(x), max(float(res.x[-1]), 0.0)


def lp_feasible_point(projection: Projection, eta, box: BoxDomain) -> np.ndarray:
    """
    Ponto xi com Psi^T xi = eta, o mais central possível na caixa

    Raises:
        InfeasibleError: eta fora de E_Psi
    """
    eta = np.atleast_1d(np.asarray(eta, dtype=float))
    if eta.size != projection.p:
        raise InvalidArgumentError(f"eta deve ter dimensão {projection.p}")
    x, _ = _chebyshev_lp(projection.psi, eta, null_space(projection), box)
    return x


def _coordinate_range(P: np.ndarray, eta: np.ndarray, box: BoxDomain, i: int) -> float:
    c = np.zeros(box.d)
    span = []
    for sign in (1.0, -1.0):
        c[i] = sign
        res = linprog(c, A_eq=P.T, b_eq=eta, bounds=box.bounds(), method="highs")
        if res.status != 0:
            return float("inf")
        span.append(sign * res.fun)
    return span[1] - span[0]


def make_fiber(projection: Projection, eta, box: BoxDomain) -> EqualityFiber:
    """
    Constrói a fibra de eta, detectando coordenadas presas quando o
    interior relativo é vazio (eta na fronteira de E_Psi)

    Raises:
        InfeasibleError: eta fora de E_Psi
    """
    eta = np.atleast_1d(np.asarray(eta, dtype=float))
    if eta.size != projection.p:
        raise InvalidArgumentError(f"eta deve ter dimensão {projection.p}")
    N = null_space(projection)
    xi, slack = _chebyshev_lp(projection.psi, eta, N, box)
    if slack > SLACK_TOL:
        return EqualityFiber(projection, eta, xi, N, slack)

    free = np.flatnonzero(np.linalg.norm(N, axis=1) > 1e-14)
    pinned = tuple(int(i) for i in free if _coordinate_range(projection.psi, eta, box, int(i)) <= SLACK_TOL)
    if not pinned:
        return EqualityFiber(projection, eta, xi, N, slack)
    E = np.zeros((box.d, len(pinned)))
    for k, i in enumerate(pinned):
        E[i, k] = 1.0
    P_aug = np.hstack([projection.psi, E])
    N = _complement(P_aug)
    if N.shape[1] == 0:
        return EqualityFiber(projection, eta, xi, N, 0.0, pinned)
    eta_aug = np.concatenate([eta, xi[list(pinned)]])
    xi, slack = _chebyshev_lp(P_aug, eta_aug, N, box)
    return EqualityFiber(projection, eta, xi, N, slack, pinned)


# =============================================================================
# L-BFGS-B
# =============================================================================

def numeric_gradient(f: Objective, x: np.ndarray, step: float = 1e-6,
                     lower: Optional[np.ndarray] = None, upper: Optional[np.ndarray] = None) -> np.ndarray:
    """Diferenças centrais com passo step*max(1, |x_i|), unilaterais na borda"""
    g = np.empty_like(x)
    for i in range(x.size):
        h = step * max(1.0, abs(x[i]))
        xp, xm = x.copy(), x.copy()
        xp[i] += h
        xm[i] -= h
        if upper is not None and xp[i] > upper[i]:
            xp[i] = x[i]
        if lower is not None and xm[i] < lower[i]:
            xm[i] = x[i]
        g[i] = (f(xp) - f(xm)) / (xp[i] - xm[i])
    return g


def _projected_gradient(x: np.ndarray, g: np.ndarray, box: BoxDomain) -> float:
    return float(np.max(np.abs(box.clip(x + g) - x))) if x.size else 0.0


def lbfgsb_maximize(
    objective: Objective,
    gradient: Gradient,
    box: BoxDomain,
    start,
    config: Optional[OptimizerConfig] = None,
) -> tuple[np.ndarray, float, OptimizerStatus]:
    """
    Maximiza objective na caixa com L-BFGS-B

    Nunca devolve valor pior que o do ponto inicial.

    Raises:
        OptimizerError: valor não finito (carrega o último iterado válido)
    """
    config = config or OptimizerConfig()
    x0 = box.clip(np.asarray(start, dtype=float).reshape(-1))
    last = {"x": x0.copy()}
    counter = {"n": 0}

    def value(x):
        counter["n"] += 1
        f = float(objective(x))
        if not math.isfinite(f):
            raise OptimizerError(f"Objetivo não finito em x={np.array2string(x, precision=6)}", last["x"])
        last["x"] = x.copy()
        return f

    def grad(x):
        if gradient is None:
            return numeric_gradient(value, x, config.fd_step, box.lower, box.upper)
        g = np.asarray(gradient(x), dtype=float)
        if not np.all(np.isfinite(g)):
            raise OptimizerError("Gradiente não finito", last["x"])
        return g

    f0 = value(x0)
    gtol = config.gtol * max(1.0, abs(f0))
    res = minimize(
        lambda x: (-value(x), -grad(x)),
        x0,
        jac=True,
        method="L-BFGS-B",
        bounds=box.bounds(),
        options={"maxcor": config.memory, "maxiter": config.max_iter, "gtol": gtol, "ftol": 1e-15},
    )
    x, f = box.clip(np.asarray(res.x, dtype=float)), -float(res.fun)
    if not f >= f0:
        x, f = x0, f0
    pg = _projected_gradient(x, grad(x), box)
    status = OptimizerStatus(bool(pg <= gtol), int(res.nit), counter["n"], pg, str(res.message))
    return x, f, status


# =============================================================================
# Barreira logarítmica
# =============================================================================

def _max_step(A: np.ndarray, slack: np.ndarray, p: np.ndarray) -> float:
    rate = A @ p
    pos = rate > 1e-300
    if not np.any(pos):
        return math.inf
    return float(np.min(slack[pos] / rate[pos]))


def _barrier_solve(g: Objective, dg: Callable[[np.ndarray], np.ndarray], A: np.ndarray, b: np.ndarray,
                   z0: np.ndarray, config: OptimizerConfig) -> np.ndarray:
    """Maximiza g(z) em {A z <= b} por barreira com pesos decrescentes"""
    scale = max(1.0, abs(g(z0)))
    z = z0.copy()

    for mu in config.barrier_weights:
        def phi(v):
            s = b - A @ v
            if np.any(s <= 0):
                return math.inf
            return -g(v) / scale - mu * float(np.sum(np.log(s)))

        def dphi(v):
            return -dg(v) / scale + mu * (A.T @ (1.0 / (b - A @ v)))

        Hinv = np.eye(z.size)
        f, gr = phi(z), dphi(z)
        for _ in range(config.barrier_max_iter):
            if np.max(np.abs(gr)) <= config.barrier_tol:
                break
            p = -Hinv @ gr
            slope = float(p @ gr)
            if slope >= 0:
                Hinv = np.eye(z.size)
                p, slope = -gr, -float(gr @ gr)
            step = min(1.0, FRACTION_TO_BOUNDARY * _max_step(A, b - A @ z, p))
            while step > 1e-16:
                f_new = phi(z + step * p)
                if f_new <= f + 1e-4 * step * slope:
                    break
                step *= 0.5
            else:
                break
            z_new = z + step * p
            gr_new = dphi(z_new)
            s_vec, y_vec = z_new - z, gr_new - gr
            sy = float(s_vec @ y_vec)
            if sy > 1e-12:
                rho = 1.0 / sy
                V = np.eye(z.size) - rho * np.outer(s_vec, y_vec)
                Hinv = V @ Hinv @ V.T + rho * np.outer(s_vec, s_vec)
            z, f, gr = z_new, f_new, gr_new
    return z


def _polish(g: Objective, dg: Callable[[np.ndarray], np.ndarray], A: np.ndarray, b: np.ndarray,
            z0: np.ndarray) -> np.ndarray:
    """Refino com SLSQP a partir da solução da barreira (faces ativas exatas)"""
    res = minimize(
        lambda v: -g(v), z0, jac=lambda v: -dg(v), method="SLSQP",
        constraints=[{"type": "ineq", "fun": lambda v: b - A @ v, "jac": lambda v: -A}],
        options={"maxiter": 100, "ftol": 1e-14},
    )
    z = np.asarray(res.x, dtype=float)
    if np.all(A @ z <= b + 1e-10) and g(z) >= g(z0):
        return z
    return z0


def _interior_fraction(A: np.ndarray, b: np.ndarray, z: np.ndarray) -> np.ndarray:
    """Encolhe z em direção a 0 (centro) até ficar estritamente interior"""
    if np.all(A @ z < b) or not np.any(z):
        return z
    t = _max_step(A, b, z)
    return FRACTION_TO_BOUNDARY * min(1.0, t) * z


def _is_box(A: np.ndarray) -> bool:
    return bool(np.all(np.sum(np.abs(A) > 1e-14, axis=1) == 1))


def constrained_maximize(
    objective: Objective,
    gradient: Gradient,
    fiber: EqualityFiber,
    box: BoxDomain,
    n_starts: int = 5,
    config: Optional[OptimizerConfig] = None,
    seed: int = 0,
    warm_start: Optional[np.ndarray] = None,
) -> tuple[np.ndarray, float]:
    """
    Maximiza objective em {x : Psi^T x = eta, x em D}

    Partidas: centro de Chebyshev (z = 0), partida quente projetada na fibra
    e pontos interiores aleatórios (gerador da semente seed). Entre partidas
    com valores a menos de tie_tol do melhor vence a de menor índice.

    Returns:
        (xstar, fstar)
    """
    config = config or OptimizerConfig()
    if fiber.degenerate:
        return fiber.xi.copy(), float(objective(fiber.xi))

    N = fiber.nullbasis

    def g(z):
        f = float(objective(fiber.point(z)))
        if not math.isfinite(f):
            raise OptimizerError("Objetivo não finito na fibra", fiber.point(z))
        return f

    def dg(z):
        if gradient is None:
            return N.T @ numeric_gradient(objective, fiber.point(z), config.fd_step)
        return N.T @ np.asarray(gradient(fiber.point(z)), dtype=float)

    A, b = fiber.polytope(box)
    gen = make_generator(seed, "starts")
    box_case = fiber.q == 1 or _is_box(A)
    zbox = None
    if box_case:
        zlo, zhi = _z_box(A, b, fiber.q)
        if np.all(zhi - zlo > 0):
            zbox = BoxDomain(zlo, zhi)

    starts = [np.zeros(fiber.q)]
    if warm_start is not None:
        zw = fiber.coordinates(np.asarray(warm_start, float))
        starts.append(zbox.clip(zw) if zbox is not None else _interior_fraction(A, b, zw))
    while len(starts) < max(n_starts, 1):
        if box_case:
            starts.append(zlo + (zhi - zlo) * uniform_open(gen, fiber.q))
        else:
            direction = standard_normal(gen, fiber.q)
            direction /= np.linalg.norm(direction)
            reach = _max_step(A, b, direction)
            starts.append(FRACTION_TO_BOUNDARY * min(reach, 1e6) * uniform_open(gen, 1)[0] * direction)

    best_z, best_f = None, -math.inf
    for z0 in starts:
        if box_case:
            if zbox is None:
                z, f = z0, g(z0)
            else:
                z, f, _ = lbfgsb_maximize(g, dg, zbox, z0, config)
        else:
            if fiber.slack > SLACK_TOL:
                z0 = _barrier_solve(g, dg, A, b, z0, config)
            z = _polish(g, dg, A, b, z0)
            f = g(z)
        if f > best_f + config.tie_tol:
            best_z, best_f = z, f

    x = fiber.point(best_z)
    if box.contains(x, 1e-9):
        x = box.clip(x)
    return x, best_f


def _z_box(A: np.ndarray, b: np.ndarray, q: int) -> tuple[np.ndarray, np.ndarray]:
    """Limites de z quando cada linha de A envolve uma única coordenada"""
    lo, hi = np.full(q, -math.inf), np.full(q, math.inf)
    for row, rhs in zip(A, b):
        k = int(np.flatnonzero(np.abs(row) > 1e-14)[0])
        if row[k] > 0:
            hi[k] = min(hi[k], rhs / row[k])
        else:
            lo[k] = max(lo[k], rhs / row[k])
    return lo, hi


def constrained_minimize(
    objective: Objective,
    gradient: Gradient,
    fiber: EqualityFiber,
    box: BoxDomain,
    n_starts: int = 5,
    config: Optional[OptimizerConfig] = None,
    seed: int = 0,
    warm_start: Optional[np.ndarray] = None,
) -> tuple[np.ndarray, float]:
    """Minimização como maximização de -objective"""
    neg_grad = None if gradient is None else (lambda x: -np.asarray(gradient(x)))
    x, f = constrained_maximize(lambda x: -objective(x), neg_grad, fiber, box, n_starts, config, seed, warm_start)
    return x, -f
