#!/usr/bin/env python
# -*- coding: utf-8 -*-

import os
import json
from typing import Any, Dict, List

from src.measure_mdim import cesaro_pushforward, product_measure, trig_linear_family
from src.reference_systems import REFERENCE_SYSTEMS, get_reference
from src.utils import atomic_write_text, ensure_directory_exists, setup_logging

CONFIG_DIR = "configs"
RESULTS_DIR = "results"
LOGS_DIR = "logs"


def mmdim_example_config() -> Dict[str, Any]:
    """Configuração de exemplo do comando mmdim: deslocamento no toro com duas medidas candidatas."""
    reference = get_reference('torus_shift_d1')
    initial = product_measure(reference.system, name='uniform')
    return {
        "name": "mmdim_torus_shift_d1",
        "task": "f_estimate",
        "system": reference.system.to_dict(),
        "epsilon_ladder": [0.25, 0.125, 0.0625, 0.03125],
        "n_schedule": [2, 4, 6, 8],
        "m_omega": 4,
        "m_samples": 2000,
        "budget": 20,
        "seed": 0,
        "family": trig_linear_family(coordinates=1, frequencies=(1, 2)).to_dict(),
        "measures": [initial.to_dict(), cesaro_pushforward(initial, 10).to_dict()],
    }


def write_default_configs(config_dir: str = CONFIG_DIR) -> List[str]:
    """
    Escreve uma configuração por sistema de referência e o exemplo do comando mmdim.

    Returns:
        Caminhos escritos
    """
    ensure_directory_exists(config_dir)
    payloads = {name: reference.run_config() for name, reference in REFERENCE_SYSTEMS.items()}
    payloads["mmdim_torus_shift_d1"] = mmdim_example_config()
    paths = []
    for name, payload in sorted(payloads.items()):
        path = os.path.join(config_dir, f"{name}.json")
        atomic_write_text(path, json.dumps(payload, indent=2, ensure_ascii=False, sort_keys=True) + '\n')
        paths.append(path)
    return paths


def initialize_project_structure():
    """
    Inicializa a estrutura de pastas do projeto.

    Cria as seguintes pastas se elas não existirem:
    - configs (uma configuração JSON por sistema de referência)
    - results
    - logs
    """
    logger = setup_logging(verbose=True)
    logger.info("Inicializando estrutura de pastas do projeto")

    folders = [CONFIG_DIR, RESULTS_DIR, LOGS_DIR]
    for folder in folders:
        ensure_directory_exists(folder)
        logger.info(f"Pasta criada/verificada: {folder}")

    configs = write_default_configs(CONFIG_DIR)
    logger.info(f"Estrutura inicializada: {len(folders)} pastas, {len(configs)} configurações")
    return folders, configs


if __name__ == "__main__":
    """
    Executa a inicialização da estrutura de pastas quando o script é executado diretamente.
    Uso: python -m src.initialize
    """
    folders, configs = initialize_project_structure()

    print("\n=== Estrutura de pastas do projeto ===")
    for folder in folders:
        print(f" - {folder}")
    print("\n=== Configurações de referência ===")
    for path in configs:
        print(f" - {path}")

    print("\nO projeto está pronto para uso!")
    print("Execute 'python main.py' para o menu ou 'python -m src.main --help' para a linha de comando.")
