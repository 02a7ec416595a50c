import numpy as np
from typing import Any, Dict, List, Optional, Tuple

from src.utils import get_logger


class AcceptanceRules:
    """
    Classe com tolerâncias e regras de comparação usadas pelos estimadores e pelas suites
    de verificação. Define a convenção de empates e a folga das desigualdades em log.
    """

    # Tolerâncias configuráveis
    TIE_TOL = 1e-12
    LOG_SLACK = 1e-9
    COCYCLE_TOL = 1e-12
    BIRKHOFF_TOL = 1e-10
    METRIC_TOL = 1e-12
    WEIGHT_SUM_TOL = 1e-12
    SIGMA_FLAG = 3.0

    @staticmethod
    def separated(distance, epsilon: float):
        """Separação estrita: d > ε fora da banda de empate."""
        return np.asarray(distance) > epsilon + AcceptanceRules.TIE_TOL

    @staticmethod
    def inside_open_ball(distance, radius: float):
        """Pertença à bola aberta: d < r fora da banda de empate."""
        return np.asarray(distance) < radius - AcceptanceRules.TIE_TOL

    @staticmethod
    def log_leq(lhs: float, rhs: float, slack: Optional[float] = None) -> bool:
        """Verifica lhs ≤ rhs em domínio logarítmico com folga."""
        slack = AcceptanceRules.LOG_SLACK if slack is None else slack
        return bool(lhs <= rhs + slack)

    @staticmethod
    def log_equal(lhs: float, rhs: float, slack: Optional[float] = None) -> bool:
        """Verifica |lhs − rhs| ≤ folga."""
        slack = AcceptanceRules.LOG_SLACK if slack is None else slack
        return bool(abs(lhs - rhs) <= slack)

    @staticmethod
    def check(item: str, lhs: float, rhs: float, relation: str = 'leq',
              slack: Optional[float] = None, context: Optional[Dict[str, Any]] = None) -> Optional[Dict[str, Any]]:
        """
        Avalia uma relação e devolve um registo de falha, ou None quando é satisfeita.

        Args:
            item: Identificador da propriedade verificada
            lhs: Lado esquerdo
            rhs: Lado direito
            relation: 'leq', 'geq' ou 'eq'
            slack: Folga absoluta
            context: Informação de reprodução (sementes, parâmetros)

        Returns:
            Dicionário de falha ou None
        """
        if relation == 'leq':
            passed = AcceptanceRules.log_leq(lhs, rhs, slack)
        elif relation == 'geq':
            passed = AcceptanceRules.log_leq(rhs, lhs, slack)
        elif relation == 'eq':
            passed = AcceptanceRules.log_equal(lhs, rhs, slack)
        else:
            raise ValueError(f"Relação desconhecida: {relation}")

        if passed and np.isfinite(lhs) and np.isfinite(rhs):
            return None
        return {
            'item': item,
            'relation': relation,
            'lhs': float(lhs),
            'rhs': float(rhs),
            'gap': float(lhs - rhs),
            'context': context or {}
        }

    @staticmethod
    def statistically_consistent(a: float, se_a: float, b: float, se_b: float) -> Tuple[bool, float]:
        """
        Compara duas estimativas com erros-padrão independentes.

        Returns:
            Tupla (dentro de SIGMA_FLAG desvios, número de desvios observado)
        """
        combined = float(np.hypot(se_a, se_b))
        if combined == 0.0:
            close = abs(a - b) <= AcceptanceRules.LOG_SLACK
            return bool(close), 0.0 if close else float('inf')
        z = abs(a - b) / combined
        return bool(z <= AcceptanceRules.SIGMA_FLAG), float(z)

    @staticmethod
    def summarize(failures: List[Dict[str, Any]], checks: int) -> Dict[str, Any]:
        """Resumo de uma bateria de verificações."""
        logger = get_logger('acceptance_rules')
        by_item: Dict[str, int] = {}
        for failure in failures:
            by_item[failure['item']] = by_item.get(failure['item'], 0) + 1
        status = 'PASSOU' if not failures else 'FALHOU'
        logger.info(f"Verificações: {checks}, violações: {len(failures)} -> {status}")
        return {'checks': checks, 'violations': len(failures), 'by_item': by_item, 'passed': not failures}
