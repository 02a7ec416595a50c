#!/usr/bin/env python
# -*- coding: utf-8 -*-

import os
import sys
import argparse
from typing import List, Optional

from dotenv import load_dotenv

from src.data_validator import SpecValidationError, VerificationError
from src.experiments import ExperimentRunner, RunConfig, load_config
from src.reference_systems import get_reference, reference_names
from src.utils import ensure_directory_exists, setup_logging
from src.verification_report import VerificationReport
from src.verification_suites import run_suite, suite_names

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_CONFIG = 2
EXIT_VERIFICATION = 3

THREADS_ENV = 'MDIM_THREADS'


def parse_arguments(argv: Optional[List[str]] = None):
    """
    Analisa os argumentos de linha de comando.

    Returns:
        Argumentos analisados
    """
    parser = argparse.ArgumentParser(
        description="Laboratório numérico de dimensão média métrica de sistemas dinâmicos aleatórios",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter
    )
    parser.add_argument("--verbose", "-v", action="store_true", help="Ativa modo detalhado de logs")
    parser.add_argument("--format", "-f", choices=["csv", "json"], default="csv", help="Formato das tabelas de saída")
    parser.add_argument("--progress", action="store_true", help="Mostra barras de progresso")

    subparsers = parser.add_subparsers(dest="command", required=True)

    estimate = subparsers.add_parser("estimate", help="Estima entropia, pressão ou dimensão média")
    source = estimate.add_mutually_exclusive_group(required=True)
    source.add_argument("--config", "-c", help="Ficheiro JSON de configuração")
    source.add_argument("--reference", choices=reference_names(), help="Sistema de referência")
    estimate.add_argument("--out", "-o", required=True, help="Diretório de saída")
    estimate.add_argument("--threads", "-t", type=int, default=None,
                          help=f"Número de trabalhadores (por omissão {THREADS_ENV} ou 1)")
    estimate.add_argument("--seed", "-s", type=int, default=None, help="Semente mestra (substitui a da configuração)")

    verify = subparsers.add_parser("verify", help="Executa uma suite de verificação")
    verify.add_argument("--suite", required=True, choices=suite_names() + ["all"], help="Nome da suite")
    verify.add_argument("--trials", type=int, default=None, help="Número de ensaios")
    verify.add_argument("--seed", "-s", type=int, default=0, help="Semente mestra")
    verify.add_argument("--out", "-o", default=os.path.join("results", "verify"), help="Diretório do relatório")

    mmdim = subparsers.add_parser("mmdim", help="Estima F(μ,d) ou procura a medida maximal")
    mmdim.add_argument("--config", "-c", required=True, help="Ficheiro JSON de configuração")
    mmdim.add_argument("--out", "-o", required=True, help="Diretório de saída")
    mmdim.add_argument("--threads", "-t", type=int, default=None,
                       help=f"Número de trabalhadores (por omissão {THREADS_ENV} ou 1)")
    mmdim.add_argument("--seed", "-s", type=int, default=None, help="Semente mestra (substitui a da configuração)")

    return parser.parse_args(argv)


def resolve_threads(flag: Optional[int]) -> int:
    """Número de trabalhadores: o flag prevalece sobre a variável de ambiente."""
    if flag is not None:
        return flag
    value = os.environ.get(THREADS_ENV, '1')
    try:
        return int(value)
    except ValueError:
        raise SpecValidationError(THREADS_ENV, f"valor inválido '{value}'")


def display_welcome_message():
    """Exibe mensagem de boas-vindas"""
    print("\n" + "=" * 80)
    print("  LABORATÓRIO DE DIMENSÃO MÉDIA MÉTRICA - SISTEMAS DINÂMICOS ALEATÓRIOS")
    print("=" * 80)


def _load(args) -> RunConfig:
    if getattr(args, 'reference', None):
        config = RunConfig.from_dict(get_reference(args.reference).run_config())
    else:
        config = load_config(args.config)
    return config.with_runtime(output_dir=args.out, threads=resolve_threads(args.threads), seed=args.seed)


def run_estimate(args, logger) -> int:
    config = _load(args)
    if config.task == 'f_estimate':
        raise SpecValidationError('task', "a tarefa f_estimate corre com o comando mmdim")
    summary = ExperimentRunner(config, args.format, args.progress, logger).cmd_estimate()
    print(f"\nEstado: {summary['status']}")
    result = summary['result']
    if isinstance(result, dict) and 'value' in result:
        print(f"Valor estimado: {result['value']:.6g}")
    check = summary.get('expected_check')
    if check:
        print(f"Referência: {check['expected']:.6g} ± {check['tolerance']:.3g} "
              f"(desvio {check['deviation']:.3g}) -> {'OK' if check['within_tolerance'] else 'FORA DA TOLERÂNCIA'}")
    print(f"Resultados disponíveis em: {os.path.abspath(config.output_dir)}")
    return EXIT_OK if summary['status'] == 'completed' else EXIT_RUNTIME


def run_mmdim(args, logger) -> int:
    config = _load(args)
    if config.task != 'f_estimate':
        raise SpecValidationError('task', "o comando mmdim exige a tarefa f_estimate")
    report = ExperimentRunner(config, args.format, args.progress, logger).cmd_mmdim()
    value = report.get('value', report.get('max_value'))
    print(f"\nF̂ = {value:.6g}, m̂dim = {report.get('mdim_zero', report.get('mdim')):.6g}")
    print(f"Resultados disponíveis em: {os.path.abspath(config.output_dir)}")
    return EXIT_OK


def run_verify(args, logger) -> int:
    names = suite_names() if args.suite == 'all' else [args.suite]
    report = VerificationReport(logger)
    report.start_timing()
    for name in names:
        report.log_suite(run_suite(name, args.trials, args.seed))
    report.end_timing()

    ensure_directory_exists(args.out)
    report.save_report(os.path.join(args.out, f"verification_{args.suite}.json"))
    report.print_summary()
    return EXIT_OK if report.passed else EXIT_VERIFICATION


COMMANDS = {"estimate": run_estimate, "verify": run_verify, "mmdim": run_mmdim}


def main(argv: Optional[List[str]] = None) -> int:
    """Função principal do programa; devolve o código de saída."""
    load_dotenv()
    args = parse_arguments(argv)
    display_welcome_message()

    logger = setup_logging(verbose=args.verbose)
    logger.info(f"Iniciando comando '{args.command}'")
    try:
        code = COMMANDS[args.command](args, logger)
    except SpecValidationError as e:
        logger.error(f"Configuração inválida: {str(e)}", exc_info=True)
        print(f"\nERRO de configuração: {str(e)}")
        return EXIT_CONFIG
    except VerificationError as e:
        logger.error(f"Verificação falhada: {str(e)}")
        print(f"\nVERIFICAÇÃO FALHADA: {str(e)}")
        return EXIT_VERIFICATION
    except Exception as e:
        logger.error(f"Erro durante a execução: {str(e)}", exc_info=True)
        print(f"\nERRO: {str(e)}")
        return EXIT_RUNTIME
    logger.info(f"Comando '{args.command}' terminado com código {code}")
    return code


if __name__ == "__main__":
    sys.exit(main())
