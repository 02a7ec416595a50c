import os
import json
import logging
import hashlib
import numpy as np
from datetime import datetime
from typing import Dict, Any, Optional

LOGGER_NAME = 'mdim_lab'


def setup_logging(log_dir: Optional[str] = None, verbose: bool = False) -> logging.Logger:
    """
    Configura o sistema de logging com formato adequado.

    Args:
        log_dir: Diretório onde os logs serão armazenados (por omissão MDIM_LOG_DIR ou 'logs')
        verbose: Se True, configura o logger para modo detalhado

    Returns:
        Logger configurado
    """
    if log_dir is None:
        log_dir = os.environ.get('MDIM_LOG_DIR', 'logs')
    os.makedirs(log_dir, exist_ok=True)

    timestamp = datetime.now().strftime('%Y%m%d_%H%M%S')
    log_file = os.path.join(log_dir, f'mdim_run_{timestamp}.log')

    logger = logging.getLogger(LOGGER_NAME)
    logger.setLevel(logging.DEBUG)

    # Evita handlers duplicados quando a função é chamada mais de uma vez
    for handler in list(logger.handlers):
        logger.removeHandler(handler)
        handler.close()

    # Handler para ficheiro
    file_handler = logging.FileHandler(log_file, encoding='utf-8')
    file_handler.setFormatter(logging.Formatter('%(asctime)s - %(name)s - %(levelname)s - %(message)s'))
    file_handler.setLevel(logging.DEBUG)

    # Handler para consola
    console_handler = logging.StreamHandler()
    console_handler.setFormatter(logging.Formatter('%(levelname)s: %(message)s'))
    console_handler.setLevel(logging.DEBUG if verbose else logging.INFO)

    logger.addHandler(file_handler)
    logger.addHandler(console_handler)
    logger.propagate = False

    return logger


def get_logger(module: str) -> logging.Logger:
    """Devolve o logger filho 'mdim_lab.<module>'."""
    return logging.getLogger(f'{LOGGER_NAME}.{module}')


def canonical_json(payload: Any) -> str:
    """
    Serializa um objeto em JSON canónico (chaves ordenadas, sem espaços).

    Args:
        payload: Objeto serializável

    Returns:
        String JSON canónica
    """
    from src.data_validator import CustomJSONEncoder
    return json.dumps(payload, sort_keys=True, separators=(',', ':'),
                      ensure_ascii=True, cls=CustomJSONEncoder)


def calculate_config_hash(payload: Dict[str, Any]) -> str:
    """
    Calcula o hash SHA-256 da representação canónica de uma configuração.

    Args:
        payload: Dicionário da configuração

    Returns:
        String contendo o hash SHA-256
    """
    return hashlib.sha256(canonical_json(payload).encode('utf-8')).hexdigest()


def calculate_file_digest(file_path: str) -> str:
    """
    Calcula o hash SHA-256 do conteúdo de um ficheiro.

    Args:
        file_path: Caminho do ficheiro

    Returns:
        String contendo o hash SHA-256
    """
    sha256_hash = hashlib.sha256()
    with open(file_path, 'rb') as f:
        for chunk in iter(lambda: f.read(65536), b''):
            sha256_hash.update(chunk)
    return sha256_hash.hexdigest()


def derive_seed(*keys: int) -> int:
    """
    Deriva uma semente de 63 bits a partir de uma sequência de chaves inteiras.

    A derivação usa numpy.random.SeedSequence, pelo que (semente mestra, chave da tarefa)
    identifica a semente independentemente da ordem de execução.

    Args:
        keys: Inteiros não negativos (semente mestra, índices da tarefa, ...)

    Returns:
        Semente inteira
    """
    sequence = np.random.SeedSequence([int(k) for k in keys])
    return int(sequence.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))


def float_key(value: float) -> str:
    """Representação textual estável de um float para chaves de tarefas e ficheiros."""
    return format(float(value), '.12g')


def ensure_directory_exists(directory_path: str) -> None:
    """
    Garante que o diretório especificado existe.

    Args:
        directory_path: Caminho do diretório
    """
    if not os.path.exists(directory_path):
        os.makedirs(directory_path)


def atomic_write_text(path: str, text: str) -> None:
    """
    Escreve texto num ficheiro temporário e renomeia-o atomicamente para o destino.

    Args:
        path: Caminho final
        text: Conteúdo
    """
    ensure_directory_exists(os.path.dirname(os.path.abspath(path)))
    tmp_path = f'{path}.tmp'
    with open(tmp_path, 'w', encoding='utf-8', newline='\n') as f:
        f.write(text)
    os.replace(tmp_path, path)
