"""
profex - Launcher de linha de comando

Subcomandos: fit, profile, uq, bivariate, pipeline, demo.
Valores do arquivo de configuração são sobrescritos pelas flags.

Códigos de saída: 0 sucesso, 2 erro do profex (entrada, modelo, numérico),
1 erro inesperado.
"""
import argparse
import os
import sys
from pathlib import Path
from typing import Optional, Sequence

# Adicionar o diretório do projeto ao sys.path para imports
BASE_PATH = os.path.dirname(os.path.abspath(__file__))
if BASE_PATH not in sys.path:
    sys.path.insert(0, BASE_PATH)

from core.config import RUN_MODES, RunConfig, load_config
from core.errors import ProfexError
from core.logging_config import get_logger, level_from_env, log_exception, setup_logger

EXIT_OK = 0
EXIT_UNEXPECTED = 1
EXIT_PROFEX = 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="profex",
        description="Perfis sup/inf de emuladores de krigagem e limites conservadores para conjuntos de excursão.",
    )
    sub = parser.add_subparsers(dest="mode", required=True, metavar="{" + ",".join(RUN_MODES) + "}")
    helps = {
        "fit": "ajusta o emulador a um DoE em CSV",
        "profile": "perfis univariados da média a posteriori",
        "uq": "perfis univariados com envelopes e limites conservadores",
        "bivariate": "mapas de perfis bivariados (com UQ se --sims > 0)",
        "pipeline": "fluxo completo: ajuste, perfis univariados e bivariados com UQ",
        "demo": "roda o fluxo sobre uma função de teste analítica",
    }
    for mode in RUN_MODES:
        p = sub.add_parser(mode, help=helps[mode])
        p.add_argument("input", nargs="?", default=None,
                       help="CSV do DoE (fit/pipeline) ou modelo salvo (profile/uq/bivariate)")
        p.add_argument("--config", type=Path, default=None, help="arquivo JSON de configuração")
        p.add_argument("--seed", type=int, default=None, help="semente global (padrão 42)")
        p.add_argument("--threads", type=int, default=None, help="threads; 0 = todos os núcleos (padrão 1)")
        p.add_argument("--tau", type=float, action="append", default=None,
                       help="limiar na escala original (repetível; padrão 0)")
        p.add_argument("--projection", action="append", default=None,
                       help="coord:i, oblique:a,b,..., pair:i,j ou planar:...;... (repetível)")
        p.add_argument("--grid", type=int, default=None, help="nós da grade 1-d (padrão 100)")
        p.add_argument("--pilots", type=int, default=None, help="pontos piloto ell (padrão 80)")
        p.add_argument("--sims", type=int, default=None, help="quasi-realizações s; 0 desliga a UQ (padrão 150)")
        p.add_argument("--alpha", type=float, default=None, help="nível dos limites conservadores (padrão 0.1)")
        p.add_argument("--out", default=None, help="diretório de saída (padrão out)")
        p.add_argument("--log-file", default=None, help="grava também o log neste arquivo")
        if mode == "demo":
            p.add_argument("--testfn", default=None, help="analytic2d, analytic3d ou synthetic5d")
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    """Carrega o arquivo de configuração e aplica as flags"""
    config = load_config(args.config) if args.config else RunConfig()
    config.mode = args.mode

    projections = args.projection
    univariate = bivariate = None
    if projections:
        univariate = [p for p in projections if not p.startswith(("pair:", "planar:"))]
        bivariate = [p for p in projections if p.startswith(("pair:", "planar:"))]

    overrides = {
        "seed": args.seed,
        "threads": args.threads,
        "thresholds": args.tau,
        "projections": univariate,
        "bivariate": bivariate,
        "profiles.grid_size": args.grid,
        "uq.pilots": args.pilots,
        "uq.sims": args.sims,
        "uq.alpha": args.alpha,
        "output.out_dir": args.out,
        "output.log_file": args.log_file,
        "testfn": getattr(args, "testfn", None),
    }
    if args.input:
        key = "input_csv" if args.mode in ("fit", "pipeline") or args.input.endswith(".csv") else "model_path"
        overrides[key] = args.input
    return config.apply_overrides(overrides)


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Função principal"""
    args = build_parser().parse_args(argv)
    setup_logger(level=level_from_env(), log_file=args.log_file)
    logger = get_logger("cli")

    try:
        config = config_from_args(args)
        if config.output.log_file and not args.log_file:
            setup_logger(level=level_from_env(), log_file=config.output.log_file)
        import pipeline
        return pipeline.run(config)
    except ProfexError as e:
        logger.error(str(e))
        return EXIT_PROFEX
    except KeyboardInterrupt:
        logger.warning("Interrompido pelo usuário")
        return EXIT_UNEXPECTED
    except Exception as e:
        log_exception(logger, "Erro inesperado", e)
        return EXIT_UNEXPECTED


if __name__ == "__main__":
    sys.exit(main())
