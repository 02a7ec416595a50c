import os
import json
import numpy as np
from typing import Dict, List, Any, Optional, Tuple

from src.utils import calculate_file_digest, get_logger

logger = get_logger('data_validator')


class CustomJSONEncoder(json.JSONEncoder):
    """
    Encoder JSON personalizado para lidar com tipos não serializáveis nativamente.
    """
    def default(self, obj):
        # Tratamento de tipos numéricos NumPy
        if isinstance(obj, np.integer):
            return int(obj)
        elif isinstance(obj, np.floating):
            return float(obj)
        elif isinstance(obj, np.bool_):
            return bool(obj)
        elif isinstance(obj, np.ndarray):
            return obj.tolist()
        # Tratamento para sets e tuplos (convertendo para listas ordenadas)
        elif isinstance(obj, (set, frozenset)):
            return sorted(obj)
        # Objetos do domínio expõem to_dict()
        elif hasattr(obj, 'to_dict'):
            return obj.to_dict()
        return super(CustomJSONEncoder, self).default(obj)


class MdimLabError(Exception):
    """Erro base do laboratório de dimensão média métrica."""


class SpecValidationError(MdimLabError, ValueError):
    """Especificação ou configuração inválida; 'field' identifica o campo."""

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")


class NonFiniteValueError(MdimLabError, ArithmeticError):
    """Avaliação não finita; 'stream_index' permite reproduzir a amostra."""

    def __init__(self, message: str, stream_index: Optional[int] = None):
        self.stream_index = stream_index
        suffix = f" (stream_index={stream_index})" if stream_index is not None else ""
        super().__init__(f"{message}{suffix}")


class PathTooShortError(MdimLabError, ValueError):
    """O caminho de base tem menos estados do que o número de iterações pedido."""


class CloudTooLargeError(MdimLabError, ValueError):
    """A nuvem de candidatos excede o limite configurado."""

    def __init__(self, cardinality: int, cap: int):
        self.cardinality = cardinality
        self.cap = cap
        super().__init__(f"nuvem com {cardinality} pontos excede o limite de {cap}")


class PotentialBoundError(MdimLabError, ArithmeticError):
    """Um potencial excedeu o limite B declarado."""


class OptimizerDivergenceError(MdimLabError, RuntimeError):
    """O objetivo do otimizador deixou de ser finito."""

    def __init__(self, message: str, trace: List[Dict[str, Any]]):
        self.trace = trace
        super().__init__(message)


class VerificationError(MdimLabError, AssertionError):
    """Uma ou mais desigualdades verificadas falharam."""

    def __init__(self, message: str, failures: List[Dict[str, Any]]):
        self.failures = failures
        super().__init__(message)


def require(condition: bool, field: str, message: str) -> None:
    """
    Levanta SpecValidationError quando a condição falha.

    Args:
        condition: Condição a verificar
        field: Nome do campo validado
        message: Descrição do problema
    """
    if not condition:
        raise SpecValidationError(field, message)


def require_finite(values: np.ndarray, message: str, stream_index: Optional[int] = None) -> None:
    """Levanta NonFiniteValueError se algum valor não for finito."""
    if not np.all(np.isfinite(values)):
        raise NonFiniteValueError(message, stream_index)


class ManifestValidator:
    """
    Classe responsável por validar a integridade dos artefactos de uma execução.
    Confirma que cada ficheiro referenciado no manifesto existe e corresponde ao seu digest.
    """

    def __init__(self, logger=None):
        """
        Inicializa o validador.

        Args:
            logger: Logger configurado
        """
        self.logger = logger or get_logger('data_validator')

    def validate_manifest(self, manifest_path: str) -> Tuple[bool, Dict[str, Any]]:
        """
        Valida um manifesto de execução.

        Args:
            manifest_path: Caminho do ficheiro manifest.json

        Returns:
            Tupla com booleano (True se íntegro) e dicionário com detalhes de validação
        """
        if not os.path.exists(manifest_path):
            self.logger.error(f"Manifesto não encontrado: {manifest_path}")
            return False, {"error": "manifesto inexistente"}

        with open(manifest_path, 'r', encoding='utf-8') as f:
            manifest = json.load(f)

        base_dir = os.path.dirname(os.path.abspath(manifest_path))
        details = {"missing": [], "digest_mismatch": [], "checked": 0}

        for entry in manifest.get('outputs', []):
            path = os.path.join(base_dir, entry['path'])
            details["checked"] += 1
            if not os.path.exists(path):
                details["missing"].append(entry['path'])
                continue
            if calculate_file_digest(path) != entry['sha256']:
                details["digest_mismatch"].append(entry['path'])

        is_valid = not details["missing"] and not details["digest_mismatch"]
        if is_valid:
            self.logger.info(f"Manifesto íntegro: {details['checked']} ficheiros verificados")
        else:
            self.logger.error(f"Falha na validação do manifesto {manifest_path}: {details}")
        return is_valid, details
