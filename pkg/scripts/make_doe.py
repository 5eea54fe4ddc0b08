"""
Gera o DoE sintético 5-d (Sobol embaralhado) usado na execução de fumaça do pipeline

Colunas: x1..x5 em [0,1] e a resposta y da função synthetic5d com os
coeficientes do arquivo de configuração.
"""
import argparse
import os
import sys
from pathlib import Path

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from core.config import load_config
from core.export import write_csv
from core.logging_config import setup_logger
from extrema.sampling import make_generator, sobol_points
from extrema.testfns import Synthetic5d


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description="DoE Sobol da função sintética 5-d")
    parser.add_argument("--n", type=int, default=200, help="número de pontos (padrão 200)")
    parser.add_argument("--seed", type=int, default=42)
    parser.add_argument("--config", type=Path, default=None, help="config com a seção synthetic5d")
    parser.add_argument("--out", type=Path, default=Path("data/doe_synthetic5d.csv"))
    args = parser.parse_args(argv)

    logger = setup_logger()
    config = load_config(args.config) if args.config else load_config()
    fn = Synthetic5d(config.synthetic5d)

    X = sobol_points(args.n, fn.dim, make_generator(args.seed, "doe"))
    y = fn.values(X)
    header = [f"x{i + 1}" for i in range(fn.dim)] + ["y"]
    write_csv(args.out, header, [[*x, v] for x, v in zip(X, y)])
    logger.info(f"{args.out}: {args.n} pontos, y em [{y.min():.3f}, {y.max():.3f}]")
    return 0


if __name__ == "__main__":
    sys.exit(main())
