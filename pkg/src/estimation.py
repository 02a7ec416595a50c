"""
Curvas de pressão P(T,f,d,ε) médias em ω, entropia topológica da fibra e estimadores por
declive da dimensão média métrica superior/inferior com potencial.
"""

import math
import numpy as np
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

from joblib import Parallel, delayed
from tqdm import tqdm

from src.acceptance_rules import AcceptanceRules
from src.base_system import make_path, sample_omega, summarize_samples
from src.data_validator import NonFiniteValueError, require
from src.fiber_space import FiberSpaceSpec, MetricSpec, truncation_window
from src.packing import CloudSpec, GridPartition, build_cloud, pn_hat, qn_hat
from src.rds_core import PotentialSpec, RandomSystem, zero_potential
from src.utils import get_logger

logger = get_logger('estimation')

ESTIMATORS = ('packing', 'cover')


def validate_schedule(n_schedule: Sequence[int]) -> Tuple[int, ...]:
    schedule = tuple(int(n) for n in n_schedule)
    require(len(schedule) >= 4, 'n_schedule', f"são necessários pelo menos 4 valores de n, recebidos {len(schedule)}")
    require(all(n >= 1 for n in schedule), 'n_schedule', "os valores de n devem ser ≥ 1")
    require(all(b > a for a, b in zip(schedule, schedule[1:])), 'n_schedule', "a sequência de n deve ser crescente")
    return schedule


def validate_ladder(epsilon_ladder: Sequence[float]) -> Tuple[float, ...]:
    """Escada geométrica decrescente com pelo menos 4 degraus em (0,1)."""
    ladder = tuple(float(e) for e in epsilon_ladder)
    require(len(ladder) >= 4, 'epsilon_ladder', f"são necessários pelo menos 4 degraus, recebidos {len(ladder)}")
    require(all(0.0 < e < 1.0 for e in ladder), 'epsilon_ladder', "os degraus devem estar em (0,1)")
    require(all(b < a for a, b in zip(ladder, ladder[1:])), 'epsilon_ladder', "a escada deve ser decrescente")
    ratios = np.array([b / a for a, b in zip(ladder, ladder[1:])])
    require(bool(np.all(np.abs(ratios - ratios[0]) <= 1e-6 * ratios[0])), 'epsilon_ladder', "a escada deve ser geométrica")
    return ladder


def geometric_ladder(first: float, rungs: int, ratio: float = 0.5) -> Tuple[float, ...]:
    """Escada ε_k = first·ratio^k (razão 1/2 por omissão)."""
    return tuple(float(first * ratio ** k) for k in range(rungs))


def system_for(system: RandomSystem, epsilon: float, n_max: int, margin: int = 2) -> RandomSystem:
    """Ajusta a janela da fibra a (ε, n) para as aplicações de deslocamento."""
    if system.uses_window:
        return system.with_window(truncation_window(epsilon, n_max, system.fiber.metric, margin))
    return system


def pressure_task(system: RandomSystem, f: PotentialSpec, epsilon: float, n_schedule: Sequence[int],
                  stream_index: int, cloud_spec: CloudSpec, estimator: str = 'packing') -> List[float]:
    """
    Valores log P_n (ou log Q_n) de um caminho ω para todos os n do calendário.

    Função de módulo (serializável) executada pelos trabalhadores paralelos.
    """
    omega = sample_omega(system.base, stream_index)
    path = make_path(omega, max(n_schedule))
    row = []
    for n in n_schedule:
        cloud = build_cloud(cloud_spec, system, path, n, epsilon)
        if estimator == 'cover':
            value = qn_hat(GridPartition(system.fiber, epsilon), system, path, n, epsilon, f, cloud)
        else:
            value = pn_hat(cloud, system, path, n, epsilon, f)
        if not math.isfinite(value.log_value):
            raise NonFiniteValueError(f"log P_n não finito (n={n}, ε={epsilon})", stream_index)
        row.append(value.log_value)
    return row


def _ols_slope(x: np.ndarray, y: np.ndarray) -> float:
    return float(np.polyfit(x, y, 1)[0])


@dataclass
class PressureRecord:
    """Pressão a uma escala ε: tabela log P_n por (ω, n) e taxas de crescimento derivadas."""
    epsilon: float
    n_schedule: Tuple[int, ...]
    stream_indices: Tuple[int, ...]
    log_table: np.ndarray = field(repr=False)
    estimator: str = 'packing'
    window: int = 1
    per_n_mean: np.ndarray = field(default=None, repr=False)
    per_n_stderr: np.ndarray = field(default=None, repr=False)
    growth_rate: float = 0.0
    growth_stderr: float = 0.0
    limsup_proxy: float = 0.0
    liminf_proxy: float = 0.0
    inside_rate: float = 0.0
    inside_stderr: float = 0.0
    discrepancy_z: float = 0.0
    flagged: bool = False

    @property
    def value(self) -> float:
        return self.growth_rate

    def rows(self) -> List[Dict[str, Any]]:
        """Uma linha por n com média e erro-padrão de (1/n)·log P_n sobre ω."""
        return [{"epsilon": self.epsilon, "n": n, "mean_log_pn_over_n": float(self.per_n_mean[k]),
                 "stderr": float(self.per_n_stderr[k]), "omega_count": len(self.stream_indices),
                 "estimator": self.estimator}
                for k, n in enumerate(self.n_schedule)]

    def to_dict(self) -> Dict[str, Any]:
        return {"epsilon": self.epsilon, "estimator": self.estimator, "window": self.window,
                "growth_rate": self.growth_rate, "growth_stderr": self.growth_stderr,
                "limsup_proxy": self.limsup_proxy, "liminf_proxy": self.liminf_proxy,
                "inside_rate": self.inside_rate, "inside_stderr": self.inside_stderr,
                "discrepancy_z": self.discrepancy_z, "flagged": self.flagged,
                "n_schedule": list(self.n_schedule), "omega_count": len(self.stream_indices)}


def assemble_pressure(epsilon: float, n_schedule: Sequence[int], stream_indices: Sequence[int],
                      table: np.ndarray, estimator: str = 'packing', window: int = 1) -> PressureRecord:
    """
    Reduz a tabela log P_n (linhas ω, colunas n) às taxas de crescimento.

    A forma "integral por fora" ajusta o declive da média em ω sobre a metade superior do
    calendário; a forma "integral por dentro" toma o proxy de limsup de cada ω e faz a média.
    """
    schedule = np.asarray(n_schedule, dtype=float)
    table = np.asarray(table, dtype=float)
    m = table.shape[0]
    require(m >= 2, 'm_omega', "são necessárias pelo menos 2 amostras de ω")

    per_n = table / schedule
    per_n_mean = per_n.mean(axis=0)
    per_n_stderr = per_n.std(axis=0, ddof=1) / math.sqrt(m)

    top = slice(len(schedule) // 2, len(schedule))
    x_top = schedule[top]
    mean_log = table.mean(axis=0)
    growth = _ols_slope(x_top, mean_log[top])
    per_omega_slopes = np.array([_ols_slope(x_top, row[top]) for row in table])
    _, growth_stderr = summarize_samples(per_omega_slopes)

    two_point = np.diff(mean_log[top]) / np.diff(x_top)
    per_omega_two_point = np.diff(table[:, top], axis=1) / np.diff(x_top)
    inside_rate, inside_stderr = summarize_samples(per_omega_two_point.max(axis=1))

    limsup = float(two_point.max())
    consistent, z = AcceptanceRules.statistically_consistent(limsup, growth_stderr, inside_rate, inside_stderr)
    if not consistent:
        logger.warning(f"ε={epsilon:.6g}: formas por fora ({limsup:.6g}) e por dentro ({inside_rate:.6g}) "
                       f"diferem {z:.2f}σ")

    return PressureRecord(epsilon=float(epsilon), n_schedule=tuple(int(n) for n in n_schedule),
                          stream_indices=tuple(int(i) for i in stream_indices), log_table=table,
                          estimator=estimator, window=window, per_n_mean=per_n_mean, per_n_stderr=per_n_stderr,
                          growth_rate=growth, growth_stderr=growth_stderr, limsup_proxy=limsup,
                          liminf_proxy=float(two_point.min()), inside_rate=inside_rate,
                          inside_stderr=inside_stderr, discrepancy_z=z, flagged=not consistent)


def pressure_at(epsilon: float, f: PotentialSpec, system: RandomSystem, n_schedule: Sequence[int], m_omega: int,
                cloud_spec: Optional[CloudSpec] = None, stream_offset: int = 0, estimator: str = 'packing',
                margin: int = 2, n_jobs: int = 1, progress: bool = False) -> PressureRecord:
    """
    Pressão à escala ε a partir de m_omega caminhos ω independentes.

    Args:
        epsilon: Escala ε ∈ (0,1)
        f: Potencial
        system: Sistema
        n_schedule: Calendário crescente de n (≥ 4 valores)
        m_omega: Número de caminhos ω (≥ 2)
        cloud_spec: Receita da nuvem (adaptativa por omissão)
        stream_offset: Primeiro índice de sequência de ω
        estimator: 'packing' (P_n) ou 'cover' (Q_n sobre a partição de lado ε)
        margin: Margem da janela de truncatura
        n_jobs: Trabalhadores paralelos
        progress: Mostra barra de progresso

    Returns:
        Registo de pressão
    """
    require(0.0 < epsilon < 1.0, 'epsilon', f"ε deve estar em (0,1), recebido {epsilon}")
    require(m_omega >= 2, 'm_omega', "são necessárias pelo menos 2 amostras de ω")
    require(estimator in ESTIMATORS, 'estimator', f"estimador desconhecido '{estimator}'")
    schedule = validate_schedule(n_schedule)
    cloud_spec = cloud_spec or CloudSpec()
    sized = system_for(system, epsilon, schedule[-1], margin)
    indices = list(range(stream_offset, stream_offset + m_omega))

    tasks = tqdm(indices, desc=f"ε={epsilon:.4g}", disable=not progress, leave=False)
    if n_jobs == 1:
        rows = [pressure_task(sized, f, epsilon, schedule, i, cloud_spec, estimator) for i in tasks]
    else:
        rows = Parallel(n_jobs=n_jobs)(
            delayed(pressure_task)(sized, f, epsilon, schedule, i, cloud_spec, estimator) for i in tasks)

    record = assemble_pressure(epsilon, schedule, indices, np.asarray(rows), estimator, sized.fiber.window)
    logger.debug(f"Pressão ε={epsilon:.6g}: {record.growth_rate:.6g} ± {record.growth_stderr:.2g}")
    return record


def pressure_curve(f: PotentialSpec, system: RandomSystem, epsilon_ladder: Sequence[float],
                   n_schedule: Sequence[int], m_omega: int, **kwargs) -> List[PressureRecord]:
    """Registos de pressão para todos os degraus da escada."""
    return [pressure_at(eps, f, system, n_schedule, m_omega, **kwargs) for eps in epsilon_ladder]


@dataclass
class MdimEstimate:
    """Regressão da pressão contra log(1/ε) com proxies de limsup/liminf."""
    slope: float
    intercept: float
    upper: float
    lower: float
    epsilons: Tuple[float, ...]
    pressures: Tuple[float, ...]
    stderrs: Tuple[float, ...]
    residuals: Tuple[float, ...]
    weighted: bool
    slope_stderr: float = 0.0
    records: List[PressureRecord] = field(default_factory=list, repr=False)

    @property
    def value(self) -> float:
        return self.slope

    def to_dict(self) -> Dict[str, Any]:
        return {"slope": self.slope, "intercept": self.intercept, "upper": self.upper, "lower": self.lower,
                "epsilons": list(self.epsilons), "pressures": list(self.pressures), "stderrs": list(self.stderrs),
                "residuals": list(self.residuals), "weighted": self.weighted,
                "slope_stderr": self.slope_stderr}


def fit_mdim(records: Sequence[PressureRecord]) -> MdimEstimate:
    """
    Ajusta P(ε) = declive·log(1/ε) + ordenada por mínimos quadrados ponderados (pesos
    inversos da variância quando todos os erros-padrão são positivos).
    """
    epsilons = np.array([r.epsilon for r in records])
    x = np.log(1.0 / epsilons)
    y = np.array([r.growth_rate for r in records])
    se = np.array([r.growth_stderr for r in records])
    validate_ladder(tuple(epsilons))

    weighted = bool(np.all(se > 0))
    slope, intercept = np.polyfit(x, y, 1, w=1.0 / se if weighted else None)
    residuals = y - (slope * x + intercept)

    # Erro-padrão do declive: propagação dos erros quando ponderado, resíduos caso contrário
    if weighted:
        w2 = 1.0 / se ** 2
        x_bar = np.sum(w2 * x) / np.sum(w2)
        slope_stderr = float(1.0 / math.sqrt(np.sum(w2 * (x - x_bar) ** 2)))
    else:
        spread = np.sum((x - x.mean()) ** 2)
        slope_stderr = float(math.sqrt(np.sum(residuals ** 2) / max(len(x) - 2, 1) / spread))

    order = np.argsort(x)
    tail = order[len(order) // 2:]
    two_point = np.diff(y[tail]) / np.diff(x[tail])
    return MdimEstimate(slope=float(slope), intercept=float(intercept), upper=float(two_point.max()),
                        lower=float(two_point.min()), epsilons=tuple(float(e) for e in epsilons),
                        pressures=tuple(float(v) for v in y), stderrs=tuple(float(s) for s in se),
                        residuals=tuple(float(r) for r in residuals), weighted=weighted,
                        slope_stderr=slope_stderr, records=list(records))


def mdim_estimate(f: PotentialSpec, system: RandomSystem, epsilon_ladder: Sequence[float],
                  n_schedule: Sequence[int], m_omega: int, **kwargs) -> MdimEstimate:
    """
    Estimativa da dimensão média métrica com potencial f.

    Args:
        f: Potencial
        system: Sistema
        epsilon_ladder: Escada geométrica decrescente (≥ 4 degraus)
        n_schedule: Calendário de n
        m_omega: Número de caminhos ω
        kwargs: Opções de pressure_at (cloud_spec, estimator, n_jobs, ...)

    Returns:
        Estimativa com declive, proxies e diagnósticos
    """
    ladder = validate_ladder(epsilon_ladder)
    logger.info(f"Dimensão média métrica: {len(ladder)} escalas, {m_omega} caminhos ω")
    estimate = fit_mdim(pressure_curve(f, system, ladder, n_schedule, m_omega, **kwargs))
    logger.info(f"Declive {estimate.slope:.6g} (superior {estimate.upper:.6g}, inferior {estimate.lower:.6g})")
    return estimate


@dataclass
class EntropyEstimate:
    """Entropia topológica da fibra: taxas por ε, envelope monótono e supremo."""
    epsilons: Tuple[float, ...]
    rates: Tuple[float, ...]
    stderrs: Tuple[float, ...]
    envelope: Tuple[float, ...]
    value: float
    stderr: float
    monotonicity_flags: Tuple[int, ...] = ()
    records: List[PressureRecord] = field(default_factory=list, repr=False)

    def to_dict(self) -> Dict[str, Any]:
        return {"value": self.value, "stderr": self.stderr, "epsilons": list(self.epsilons),
                "rates": list(self.rates), "stderrs": list(self.stderrs), "envelope": list(self.envelope),
                "monotonicity_flags": list(self.monotonicity_flags)}


def summarize_entropy(records: Sequence[PressureRecord]) -> EntropyEstimate:
    """Envelope monótono (máximo acumulado à medida que ε diminui) e supremo sobre a escada."""
    ordered = sorted(records, key=lambda r: -r.epsilon)
    rates = np.array([r.growth_rate for r in ordered])
    stderrs = np.array([r.growth_stderr for r in ordered])
    envelope = np.maximum.accumulate(rates)
    best = int(np.argmax(rates))

    # Quedas acima de 2σ na taxa quando ε diminui
    flags = []
    for k in range(1, len(rates)):
        allowance = 2.0 * math.hypot(stderrs[k], stderrs[k - 1])
        if rates[k] < rates[k - 1] - allowance - AcceptanceRules.LOG_SLACK:
            flags.append(k)
    return EntropyEstimate(epsilons=tuple(r.epsilon for r in ordered), rates=tuple(float(v) for v in rates),
                           stderrs=tuple(float(s) for s in stderrs), envelope=tuple(float(v) for v in envelope),
                           value=float(rates[best]), stderr=float(stderrs[best]), monotonicity_flags=tuple(flags),
                           records=list(ordered))


def fiber_entropy(system: RandomSystem, epsilon_ladder: Sequence[float], n_schedule: Sequence[int],
                  m_omega: int, **kwargs) -> EntropyEstimate:
    """
    Entropia topológica da fibra h^{(r)}_top(T, X) como supremo das taxas f = 0 sobre a escada.

    Returns:
        Estimativa de entropia
    """
    ladder = tuple(float(e) for e in epsilon_ladder)
    require(len(ladder) >= 1, 'epsilon_ladder', "escada vazia")
    logger.info(f"Entropia da fibra: {len(ladder)} escalas, {m_omega} caminhos ω")
    estimate = summarize_entropy(pressure_curve(zero_potential(), system, ladder, n_schedule, m_omega, **kwargs))
    logger.info(f"Entropia {estimate.value:.6g} ± {estimate.stderr:.2g}")
    return estimate


def compare_metrics(f: PotentialSpec, system: RandomSystem, epsilon_ladder: Sequence[float],
                    n_schedule: Sequence[int], m_omega: int, **kwargs) -> Dict[str, MdimEstimate]:
    """
    Estima a dimensão média métrica do mesmo sistema com as métricas weighted_sum e weighted_sup.

    Returns:
        Dicionário métrica -> estimativa
    """
    results = {}
    for kind in ('weighted_sum', 'weighted_sup'):
        fiber = system.fiber
        variant = RandomSystem(base=system.base, map=system.map,
                               fiber=FiberSpaceSpec(kind=fiber.kind, D=fiber.D, window=fiber.window,
                                                    metric=MetricSpec(kind=kind)))
        results[kind] = mdim_estimate(f, variant, epsilon_ladder, n_schedule, m_omega, **kwargs)
    gap = results['weighted_sum'].slope - results['weighted_sup'].slope
    logger.info(f"Dependência da métrica: diferença de declives {gap:.6g}")
    return results
