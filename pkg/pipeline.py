"""
profex - Orquestração do fluxo de análise

ajuste do emulador -> perfis univariados (+ UQ) -> perfis bivariados (+ UQ)

Os arquivos de dados (CSV, summary.json) dependem só da configuração e da
semente; carimbo de hora, threads e informações da máquina ficam em
run_report.json.
"""
from __future__ import annotations

import math
import platform
import sys
import time
from dataclasses import dataclass
from datetime import datetime
from pathlib import Path
from typing import Callable, Optional

import numpy as np
import psutil
import scipy

from core.config import RunConfig, resolve_threads
from core.dataset import DoeData, read_doe_csv
from core.errors import InvalidArgumentError
from core.export import write_csv, write_json
from core.logging_config import get_logger
from core.validators import validate_thresholds
from extrema.kernels_gp import GpModel, TrendBasis, compare_models, fit, load_model, loo_q2, save_model
from extrema.optimize import BoxDomain, Projection
from extrema.profiles import (
    ProfileCurve,
    ProfileGrid,
    ProfileMap,
    Provenance,
    approximate_curve,
    approximate_profile_2d,
    bivariate_knots,
    bivariate_profiles,
    default_knots,
    excluded_area,
    excluded_volume,
    excursion_intervals,
    grid_1d,
    lattice_2d,
    node_seed,
    oblique_profiles,
    profile_point,
)
from extrema.sampling import make_generator, maximin_lhs
from extrema.testfns import get_test_function
from extrema.uq import (
    BoundEnvelope,
    build_approx_process,
    endpoint_intervals,
    integrate_over_grid,
    make_bound_envelopes,
    profile_envelope,
    select_pilot_points,
    sigma_delta,
    sigma_delta_profile,
    simulate_realizations,
)

__version__ = "1.0.0"

logger = get_logger("pipeline")

# fluxos de semente por estágio
_SEED_FIT, _SEED_PILOTS, _SEED_SIMS, _SEED_UNIVARIATE, _SEED_BIVARIATE, _SEED_BOX = range(1, 7)


@dataclass
class Surface:
    """Objetivo perfilado: média a posteriori de um modelo ou função analítica"""
    objective: Callable[[np.ndarray], float]
    gradient: Callable[[np.ndarray], np.ndarray]
    d: int
    model: Optional[GpModel] = None
    name: str = "posterior_mean"


def _nan_trace(n: int, d: int) -> np.ndarray:
    return np.full((n, d), np.nan)


def _curve(projection: Projection, grid: ProfileGrid, sup, inf) -> ProfileCurve:
    return ProfileCurve(projection, grid, np.asarray(sup), np.asarray(inf),
                        _nan_trace(grid.size, projection.d), _nan_trace(grid.size, projection.d))


def _map(projection: Projection, lattice: ProfileGrid, sup, inf) -> ProfileMap:
    invalid = (~lattice.mask | np.isnan(sup)).reshape(lattice.shape)
    return ProfileMap(
        projection, lattice,
        np.ma.masked_array(np.asarray(sup).reshape(lattice.shape), invalid),
        np.ma.masked_array(np.asarray(inf).reshape(lattice.shape), invalid),
        _nan_trace(lattice.size, projection.d), _nan_trace(lattice.size, projection.d),
    )


class PipelineRunner:
    """Executa um modo (fit, profile, uq, bivariate, pipeline, demo) e grava os artefatos"""

    def __init__(self, config: RunConfig):
        errors = config.validate()
        if errors:
            raise InvalidArgumentError("Configuração inválida: " + "; ".join(errors))
        self.config = config
        self.out_dir = Path(config.output.out_dir)
        self.threads = resolve_threads(config.threads)
        self.dataset: Optional[DoeData] = None
        self.surface: Optional[Surface] = None
        self.thresholds: list[float] = []
        self.process = None
        self.realizations = None
        self.artifacts: list[str] = []
        self.summary: dict = {
            "format": "profex-summary",
            "version": __version__,
            "mode": config.mode,
            "seed": config.seed,
            "transform": config.transform,
            "univariate": [],
            "bivariate": [],
            "warnings": [],
            "versions": {"numpy": np.__version__, "scipy": scipy.__version__},
        }

    # =========================================================================
    # Execução
    # =========================================================================

    def run(self) -> dict:
        """Executa o modo configurado; devolve o resumo gravado em summary.json"""
        cfg = self.config
        started = time.time()
        logger.info("=" * 50)
        logger.info(f"   PROFEX {__version__} - modo {cfg.mode}")
        logger.info("=" * 50)
        self.out_dir.mkdir(parents=True, exist_ok=True)

        self._prepare_surface()
        self._prepare_thresholds()

        if cfg.mode != "fit":
            uq_modes = ("uq", "bivariate", "pipeline", "demo")
            with_uq = cfg.mode in uq_modes and cfg.uq.sims > 0 and self.surface.model is not None
            if cfg.mode in uq_modes and cfg.uq.sims == 0:
                logger.info("s = 0: estágios de UQ ignorados, apenas perfis da média")
            if with_uq:
                self._prepare_process()
            if cfg.mode in ("profile", "uq", "pipeline", "demo"):
                for k, text in enumerate(cfg.projections):
                    self._univariate(k, text, with_uq)
            if cfg.mode in ("bivariate", "pipeline", "demo"):
                for k, text in enumerate(cfg.bivariate):
                    self._bivariate(k, text, with_uq)

        self._emit("summary.json")
        write_json(self.out_dir / "summary.json", self.summary)
        write_json(self.out_dir / "run_report.json", self._report(time.time() - started))
        logger.info(f"Concluído em {time.time() - started:.1f}s; artefatos em {self.out_dir}")
        return self.summary

    def _emit(self, name: str) -> Path:
        self.artifacts.append(name)
        return self.out_dir / name

    # =========================================================================
    # Superfície e limiares
    # =========================================================================

    def _transform(self, values: np.ndarray) -> np.ndarray:
        if self.config.transform != "sqrt":
            return values
        if np.any(values < 0):
            raise InvalidArgumentError("Transformação sqrt exige respostas não-negativas")
        return np.sqrt(values)

    def _prepare_surface(self) -> None:
        cfg = self.config
        if cfg.mode == "demo":
            fn = get_test_function(cfg.testfn, cfg.synthetic5d)
            if cfg.demo_design_size > 0:
                X = maximin_lhs(cfg.demo_design_size, fn.dim, make_generator(cfg.seed, "demo_doe"))
                self._fit(X, self._transform(fn.values(X)))
                self.summary["objective"] = {"kind": "posterior_mean", "testfn": cfg.testfn,
                                             "design_size": cfg.demo_design_size}
            else:
                if cfg.transform != "none":
                    warning = "Função exata no modo demo: transformação ignorada"
                    logger.warning(warning)
                    self.summary["warnings"].append(warning)
                    self.summary["transform"] = "none"
                self.surface = Surface(fn.eval, fn.grad, fn.dim, None, cfg.testfn)
                self.summary["objective"] = {"kind": "exact", "testfn": cfg.testfn}
            return

        if cfg.model_path and cfg.mode in ("profile", "uq", "bivariate"):
            model = load_model(Path(cfg.model_path))
            stored = model.meta.get("transform")
            if stored is not None and stored != cfg.transform:
                warning = f"Modelo ajustado com transformação '{stored}', configuração usa '{cfg.transform}'"
                logger.warning(warning)
                self.summary["warnings"].append(warning)
            logger.info(f"Modelo carregado de {cfg.model_path}")
            self._use_model(model)
            return

        self.dataset = read_doe_csv(Path(cfg.input_csv), cfg.response_column or None)
        self.summary["dataset"] = self.dataset.to_report()
        self._fit(self.dataset.design, self._transform(self.dataset.values))

    def _fit(self, X: np.ndarray, y: np.ndarray) -> None:
        cfg = self.config
        seed = node_seed(cfg.seed, _SEED_FIT)
        if cfg.fit.candidates:
            ranking = compare_models(X, y, [tuple(c.split("/")) for c in cfg.fit.candidates], cfg.fit, seed)
            model = ranking[0]["model"]
            self.summary["model_comparison"] = [
                {"family": r["family"], "trend": r["trend"], "q2_loo": r["q2_loo"], "loglik": r["loglik"]}
                for r in ranking
            ]
            logger.info(f"Modelo escolhido: {ranking[0]['family']}/{ranking[0]['trend']}")
        else:
            trend = TrendBasis.from_name(cfg.fit.trend, X.shape[1])
            model = fit(X, y, cfg.fit.family, trend, cfg.fit, seed)
        model.meta.update({"transform": cfg.transform, "seed": cfg.seed})
        if self.dataset is not None:
            model.meta["dataset"] = self.dataset.to_report()
        path = self._emit(cfg.output.model_path.name)
        save_model(model, path)
        logger.info(f"Modelo gravado em {path}")
        self._use_model(model)

    def _use_model(self, model: GpModel) -> None:
        self.surface = Surface(model.mean, model.mean_grad, model.d, model)
        q2 = loo_q2(model)
        self.summary["model"] = {
            "n": model.n,
            "d": model.d,
            "family": model.kernel.family,
            "structure": model.kernel.structure,
            "lengthscales": model.kernel.lengthscales.tolist(),
            "variance": model.variance,
            "trend": model.trend.descriptors,
            "nugget": model.nugget,
            "loglik": model.loglik,
            "q2_loo": q2,
        }
        logger.info(f"Q2 leave-one-out: {q2:.4f}")

    def _prepare_thresholds(self) -> None:
        taus = [float(t) for t in self.config.thresholds]
        if self.summary["transform"] == "sqrt":
            taus = [math.sqrt(t) for t in taus]
        self.thresholds = taus
        self.summary["thresholds"] = {"input": list(self.config.thresholds), "effective": taus}
        model = self.surface.model
        if model is not None:
            _, warning = validate_thresholds(taus, float(model.values.min()), float(model.values.max()))
            if warning:
                logger.warning(warning)
                self.summary["warnings"].append(warning)

    # =========================================================================
    # Processo aproximante
    # =========================================================================

    def _prepare_process(self) -> None:
        cfg, uq = self.config, self.config.uq
        model = self.surface.model
        pilots = select_pilot_points(model, uq.pilots, seed=node_seed(cfg.seed, _SEED_PILOTS), pool_size=uq.pool_size)
        self.process = build_approx_process(model, pilots, cfg.fit.jitter_start, cfg.fit.jitter_max)
        self.realizations = simulate_realizations(self.process, uq.sims, node_seed(cfg.seed, _SEED_SIMS))
        box_sigma = sigma_delta(self.process, BoxDomain.unit(model.d), cfg.optimizer, uq.sigma_starts,
                                node_seed(cfg.seed, _SEED_BOX))
        self.summary["uq"] = {
            "pilots": self.process.ell,
            "sims": uq.sims,
            "alpha": uq.alpha,
            "beta": uq.effective_beta,
            "generator": self.realizations.generator,
            "sigma_delta_box": box_sigma,
        }
        logger.info(f"Processo aproximante: ell={self.process.ell}, s={uq.sims}, sigma_delta(D)={box_sigma:.4g}")

    # =========================================================================
    # Perfis univariados
    # =========================================================================

    def _refiner(self, projection: Projection, box: BoxDomain, sense: str, seed: int):
        s = self.surface
        return lambda eta: profile_point(s.objective, s.gradient, projection, box, [eta], sense,
                                         self.config.optimizer, seed)[1]

    def _univariate(self, k: int, text: str, with_uq: bool) -> None:
        cfg, s = self.config, self.surface
        box = BoxDomain.unit(s.d)
        projection = Projection.parse(text, s.d)
        if projection.p != 1:
            raise InvalidArgumentError(f"Projeção univariada esperada: {text}")
        grid = grid_1d(projection, box, cfg.profiles.grid_size)
        seed = node_seed(cfg.seed, _SEED_UNIVARIATE, k)
        logger.info(f"Perfis univariados {projection.label} ({grid.size} nós)")

        if cfg.profiles.approximate:
            curve = approximate_curve(s.objective, s.gradient, projection, box, grid, cfg.profiles.knots,
                                      cfg.optimizer, seed, threads=self.threads)
        else:
            curve = oblique_profiles(s.objective, s.gradient, projection, box, grid, cfg.optimizer, seed,
                                     self.threads, cfg.profiles.block_size)
        write_csv(self._emit(f"profile_{projection.label}.csv"), curve.header(), curve.rows())

        entry = {
            "projection": text,
            "label": projection.label,
            "provenance": curve.provenance.value,
            "knots": curve.knots,
            "thresholds": [],
        }
        for tau in self.thresholds:
            refine_sup = refine_inf = None
            # bissecção só faz sentido sobre o perfil exato
            if cfg.profiles.refine and curve.provenance is Provenance.EXACT:
                refine_sup = self._refiner(projection, box, "sup", seed)
                refine_inf = self._refiner(projection, box, "inf", seed)
            intervals = excursion_intervals(curve, tau, refine_sup, refine_inf, cfg.profiles.refine_steps)
            row = intervals.to_dict()
            if projection.kind == "coordinate":
                row["excluded_volume"] = excluded_volume(intervals, box, projection.coords[0])
            entry["thresholds"].append(row)
        if with_uq:
            entry["uq"] = self._univariate_uq(projection, grid, curve, seed)
        self.summary["univariate"].append(entry)

    def _write_envelopes(self, label: str, bounds: dict[str, BoundEnvelope], etas: np.ndarray,
                         mean: dict[str, np.ndarray], failures: np.ndarray, nodes: np.ndarray) -> None:
        eta_cols = ["eta"] if etas.shape[1] == 1 else ["eta1", "eta2"]
        for ext, env in bounds.items():
            rows = env.rows()
            table = [[*etas[j], mean[ext][j], *rows[j], int(failures[j])] for j in nodes]
            write_csv(self._emit(f"envelope_{label}_{ext}.csv"), eta_cols + [ext] + env.header() + ["failures"], table)

    def _univariate_uq(self, projection: Projection, grid: ProfileGrid, curve: ProfileCurve, seed: int) -> dict:
        cfg, uq = self.config, self.config.uq
        env = profile_envelope(self.process, self.realizations, projection, grid, uq.effective_beta,
                               cfg.optimizer, node_seed(seed, 1), self.threads, uq.failure_fraction)
        s2 = sigma_delta_profile(self.process, projection, grid, cfg.optimizer, uq.sigma_starts,
                                 node_seed(seed, 2), self.threads)
        bounds = make_bound_envelopes(env, s2, uq.alpha)
        self._write_envelopes(projection.label, bounds, grid.etas, {"sup": curve.sup, "inf": curve.inf},
                              env.failures, np.arange(grid.size))

        lower = _curve(projection, grid, env.sup_lo, env.inf_lo)
        upper = _curve(projection, grid, env.sup_hi, env.inf_hi)
        conservative = _curve(projection, grid, bounds["sup"].u_hi, bounds["inf"].u_lo)
        tables = []
        for tau in self.thresholds:
            mean_iv = excursion_intervals(curve, tau)
            lo_iv, hi_iv = excursion_intervals(lower, tau), excursion_intervals(upper, tau)
            tables.append({
                "threshold": tau,
                "endpoints": endpoint_intervals(mean_iv, lo_iv, hi_iv),
                "quantile_lo": lo_iv.to_dict(),
                "quantile_hi": hi_iv.to_dict(),
                "conservative": excursion_intervals(conservative, tau).to_dict(),
            })
        integral = integrate_over_grid(s2, grid)
        logger.info(f"{projection.label}: I(sigma_delta^2) = {integral:.4g}")
        return {
            "integrated_delta_variance": integral,
            "max_sigma_delta": float(np.sqrt(np.nanmax(s2))),
            "flagged_nodes": np.flatnonzero(env.flagged).tolist(),
            "thresholds": tables,
        }

    # =========================================================================
    # Perfis bivariados
    # =========================================================================

    def _bivariate(self, k: int, text: str, with_uq: bool) -> None:
        cfg, s = self.config, self.surface
        box = BoxDomain.unit(s.d)
        projection = Projection.parse(text, s.d)
        if projection.p != 2:
            raise InvalidArgumentError(f"Projeção bivariada esperada: {text}")
        lattice = lattice_2d(projection, box, cfg.profiles.lattice_size)
        seed = node_seed(cfg.seed, _SEED_BIVARIATE, k)
        logger.info(f"Perfis bivariados {projection.label} ({int(lattice.mask.sum())} nós viáveis)")

        if cfg.profiles.approximate:
            knots = bivariate_knots(projection, box, cfg.profiles.knots or default_knots(s.d), seed)
            sup, inf = [], []
            for j, eta in enumerate(knots):
                sup.append(profile_point(s.objective, s.gradient, projection, box, eta, "sup",
                                         cfg.optimizer, node_seed(seed, j, 0))[1])
                inf.append(profile_point(s.objective, s.gradient, projection, box, eta, "inf",
                                         cfg.optimizer, node_seed(seed, j, 1))[1])
            pmap = approximate_profile_2d(projection, knots, sup, inf, lattice, cfg.fit, seed)
        else:
            pmap = bivariate_profiles(s.objective, s.gradient, projection, box, lattice, cfg.optimizer,
                                      seed, self.threads)
        write_csv(self._emit(f"map_{projection.label}.csv"), pmap.header(), pmap.rows())

        entry = {
            "projection": text,
            "label": projection.label,
            "provenance": pmap.provenance.value,
            "knots": pmap.knots,
            "lattice": lattice.to_dict(),
            "thresholds": [{"threshold": tau, "excluded_area": excluded_area(pmap, tau)} for tau in self.thresholds],
        }
        if with_uq:
            entry["uq"] = self._bivariate_uq(projection, lattice, pmap, seed)
        self.summary["bivariate"].append(entry)

    def _bivariate_uq(self, projection: Projection, lattice: ProfileGrid, pmap: ProfileMap, seed: int) -> dict:
        cfg, uq = self.config, self.config.uq
        env = profile_envelope(self.process, self.realizations, projection, lattice, uq.effective_beta,
                               cfg.optimizer, node_seed(seed, 1), self.threads, uq.failure_fraction)
        s2 = sigma_delta_profile(self.process, projection, lattice, cfg.optimizer, uq.sigma_starts,
                                 node_seed(seed, 2), self.threads)
        bounds = make_bound_envelopes(env, s2, uq.alpha)
        mean = {"sup": pmap.sup.ravel().data, "inf": pmap.inf.ravel().data}
        self._write_envelopes(projection.label, bounds, lattice.etas, mean, env.failures,
                              np.flatnonzero(lattice.mask))

        lower = _map(projection, lattice, env.sup_lo, env.inf_lo)
        upper = _map(projection, lattice, env.sup_hi, env.inf_hi)
        conservative = _map(projection, lattice, bounds["sup"].u_hi, bounds["inf"].u_lo)
        tables = [{
            "threshold": tau,
            "excluded_area": excluded_area(pmap, tau),
            "excluded_area_quantile_lo": excluded_area(lower, tau),
            "excluded_area_quantile_hi": excluded_area(upper, tau),
            "excluded_area_conservative": excluded_area(conservative, tau),
        } for tau in self.thresholds]
        integral = integrate_over_grid(s2, lattice)
        logger.info(f"{projection.label}: I(sigma_delta^2) = {integral:.4g}")
        return {
            "integrated_delta_variance": integral,
            "max_sigma_delta": float(np.sqrt(np.nanmax(s2))),
            "flagged_nodes": np.flatnonzero(env.flagged).tolist(),
            "thresholds": tables,
        }

    # =========================================================================
    # Relatório
    # =========================================================================

    def _report(self, elapsed: float) -> dict:
        mem = psutil.virtual_memory()
        report = {
            "metadata": {
                "timestamp": datetime.now().isoformat(timespec="seconds"),
                "elapsed_s": round(elapsed, 3),
                "platform": platform.platform(),
                "python": sys.version.split()[0],
                "cpu_count": psutil.cpu_count(logical=True),
                "memory_total_gb": round(mem.total / (1024 ** 3), 2),
                "threads": self.threads,
                "versions": {"profex": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
                             "psutil": psutil.__version__},
            },
            "config": self.config.to_dict(),
            "artifacts": sorted(self.artifacts + ["run_report.json"]),
        }
        if self.dataset is not None:
            report["dataset"] = self.dataset.to_report()
        return report


def run(config: RunConfig) -> int:
    """Executa a configuração; erros do profex propagam para o launcher"""
    PipelineRunner(config).run()
    return 0
