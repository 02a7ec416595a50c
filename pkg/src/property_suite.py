"""
Bateria de propriedades exatas a n finito das funções de partição Σ_{x∈F}(1/ε)^{S_nf(ω,x)}.

Cada ensaio fixa um caminho ω, um n, um ε e um conjunto separado F; todas as funções de
partição do ensaio são avaliadas sobre esse mesmo F, onde as desigualdades valem termo a termo.
"""

import math
import numpy as np
from typing import Any, Dict, List, Optional, Tuple

from scipy.special import logsumexp

from src.acceptance_rules import AcceptanceRules
from src.base_system import make_path, sample_omega
from src.estimation import system_for
from src.fiber_space import random_cloud
from src.packing import greedy_separated
from src.rds_core import (PotentialSpec, RandomSystem, combine, constant, evaluate_potential, orbit,
                          potential_table)
from src.utils import derive_seed, get_logger

logger = get_logger('property_suite')

POTENTIAL_FAMILIES = ('trig', 'coordinate_linear', 'env_modulated', 'constant')
EPSILON_CHOICES = (0.5, 0.25, 0.125)


def random_potential(rng: np.random.Generator, system: RandomSystem, family: Optional[str] = None,
                     scale: float = 1.0) -> PotentialSpec:
    """
    Potencial aleatório de uma das famílias suportadas.

    Args:
        rng: Gerador
        system: Sistema (define as coordenadas disponíveis e o alfabeto)
        family: Família (sorteada quando omitida)
        scale: Escala das amplitudes

    Returns:
        Potencial
    """
    family = family or POTENTIAL_FAMILIES[int(rng.integers(len(POTENTIAL_FAMILIES)))]
    coordinates = min(system.fiber.dim, 4)
    if family == 'trig':
        count = int(rng.integers(1, 4))
        terms = tuple((float(scale * rng.uniform(-1, 1)), int(rng.integers(1, 4)), int(rng.integers(coordinates)))
                      for _ in range(count))
        return PotentialSpec(kind='trig', terms=terms)
    if family == 'coordinate_linear':
        return PotentialSpec(kind='coordinate_linear',
                             coefficients=tuple(scale * rng.uniform(-1, 1, size=min(coordinates, 3))))
    if family == 'env_modulated':
        return PotentialSpec(kind='env_modulated', env_values=tuple(scale * rng.uniform(-1, 1, size=system.base.alphabet)),
                             coordinate=int(rng.integers(coordinates)))
    return constant(float(scale * rng.uniform(-1, 1)))


class PartitionTrial:
    """
    Um ensaio: caminho ω de comprimento n+1, conjunto separado F fixo e a órbita da nuvem
    (para os supremos ‖f(θ^jω)‖_∞ sobre a nuvem).
    """

    def __init__(self, system: RandomSystem, trial: int, seed: int, cloud_size: int = 160):
        self.seed = derive_seed(seed, trial)
        self.rng = np.random.default_rng(self.seed)
        self.trial = trial
        self.n = int(self.rng.integers(1, 5))
        self.epsilon = float(EPSILON_CHOICES[int(self.rng.integers(len(EPSILON_CHOICES)))])
        self.system = system_for(system, self.epsilon, self.n + 1)
        self.t = math.log(1.0 / self.epsilon)

        omega = sample_omega(self.system.base, trial)
        self.path = make_path(omega, self.n + 1)
        self.cloud = random_cloud(self.system.fiber, cloud_size, self.seed)
        self.F = greedy_separated(self.cloud, self.system, self.path, self.n, self.epsilon, method='kdtree')
        self.points = self.F.points
        self.orbit_F = orbit(self.system, self.path, self.n + 1, self.points)
        self.orbit_cloud = orbit(self.system, self.path, self.n + 1, self.cloud.points)

    @property
    def context(self) -> Dict[str, Any]:
        return {"trial": self.trial, "seed": self.seed, "stream_index": self.trial, "n": self.n,
                "epsilon": self.epsilon, "cardinality": self.F.cardinality}

    def table(self, f: PotentialSpec) -> np.ndarray:
        """V[j, i] = f(θ^jω, T^j x_i) para j ≤ n."""
        return potential_table(self.system, f, self.path, self.n + 1, self.points, self.orbit_F)

    def sums(self, f: PotentialSpec) -> np.ndarray:
        return self.table(f)[:self.n].sum(axis=0)

    def log_z(self, sums: np.ndarray) -> float:
        return float(logsumexp(self.t * sums))

    def sup(self, f: PotentialSpec, j: int) -> float:
        """‖f(θ^jω)‖_∞ sobre a nuvem imagem T^j(cloud)."""
        return float(np.max(np.abs(evaluate_potential(f, self.path[j], self.orbit_cloud[j]))))

    def sup_sum(self, f: PotentialSpec) -> float:
        return float(sum(self.sup(f, j) for j in range(self.n)))


def _trial_checks(trial: PartitionTrial, f: PotentialSpec, g: PotentialSpec,
                  rng: np.random.Generator) -> List[Tuple[str, float, float, str]]:
    """Lista de verificações (item, lhs, rhs, relação) de um ensaio."""
    t, n = trial.t, trial.n
    log_count = math.log(trial.F.cardinality)
    S_f, S_g = trial.sums(f), trial.sums(g)
    Z_f, Z_g = trial.log_z(S_f), trial.log_z(S_g)
    checks: List[Tuple[str, float, float, str]] = []

    # monotonia: g' = f + h + B_h ≥ f
    h = g
    dominating = combine([(1.0, f), (1.0, h), (1.0, constant(h.bound))])
    checks.append(('monotonicity', Z_f, trial.log_z(trial.sums(dominating)), 'leq'))

    # translação por constantes
    c = float(rng.uniform(-2, 2))
    checks.append(('constant_shift', trial.log_z(trial.sums(f.plus_constant(c))), Z_f + n * c * t, 'eq'))

    # envelopes pelos supremos ao longo do caminho
    envelope = t * trial.sup_sum(f)
    checks.append(('envelope_lower', log_count - envelope, Z_f, 'leq'))
    checks.append(('envelope_upper', Z_f, log_count + envelope, 'leq'))

    # Lipschitz em ‖f − g‖ e convexidade de Hölder
    difference = f.plus(g, -1.0)
    checks.append(('lipschitz', Z_f, Z_g + t * trial.sup_sum(difference), 'leq'))
    checks.append(('lipschitz', Z_g, Z_f + t * trial.sup_sum(difference), 'leq'))
    p = float(rng.uniform(0, 1))
    convex = combine([(p, f), (1.0 - p, g)])
    checks.append(('convexity', trial.log_z(trial.sums(convex)), p * Z_f + (1.0 - p) * Z_g, 'leq'))

    # submultiplicatividade
    checks.append(('product', trial.log_z(trial.sums(f.plus(g))), Z_f + Z_g, 'leq'))

    # cobordo f + g∘Θ − g pela tabela de n+1 passos
    V_f, V_g = trial.table(f), trial.table(g)
    S_h = (V_f[:n] + V_g[1:n + 1] - V_g[:n]).sum(axis=0)
    telescoped = S_f + V_g[n] - V_g[0]
    gap = float(np.max(np.abs(S_h - telescoped)))
    checks.append(('coboundary_telescoping', gap, 0.0, 'leq'))
    Z_h = trial.log_z(S_h)
    spread = t * (trial.sup(g, n) + trial.sup(g, 0))
    checks.append(('coboundary', Z_f - spread, Z_h, 'leq'))
    checks.append(('coboundary', Z_h, Z_f + spread, 'leq'))

    # potências c ≥ 1, c ∈ [0,1] e c < 0
    for low, high, relation in ((1.0, 3.0, 'leq'), (0.0, 1.0, 'geq'), (-2.0, 0.0, 'geq')):
        power = float(rng.uniform(low, high))
        checks.append(('power', trial.log_z(trial.sums(f.scaled(power))), power * Z_f, relation))

    # cadeia −|f| ≤ f ≤ |f|
    S_abs = np.abs(V_f[:n]).sum(axis=0)
    Z_abs, Z_neg_abs = trial.log_z(S_abs), trial.log_z(-S_abs)
    checks.append(('absolute', Z_neg_abs, Z_f, 'leq'))
    checks.append(('absolute', Z_f, Z_abs, 'leq'))
    checks.append(('absolute', Z_neg_abs, -Z_abs, 'geq'))
    return checks


def pressure_property_suite(system: RandomSystem, trials: int, seed: int, cloud_size: int = 160,
                            families: Optional[Tuple[str, ...]] = None) -> Dict[str, Any]:
    """
    Verifica as propriedades das funções de partição em 'trials' ensaios aleatórios.

    Args:
        system: Sistema
        trials: Número de ensaios
        seed: Semente mestra (cada ensaio deriva a sua)
        cloud_size: Pontos da nuvem aleatória de cada ensaio
        families: Famílias de potenciais sorteadas

    Returns:
        Relatório com contagem de verificações, violações e registos de falha reprodutíveis
    """
    failures: List[Dict[str, Any]] = []
    checks = 0
    logger.info(f"Propriedades das funções de partição: {trials} ensaios (semente {seed})")

    for k in range(trials):
        trial = PartitionTrial(system, k, seed, cloud_size)
        rng = trial.rng
        pick = families or POTENTIAL_FAMILIES
        f = random_potential(rng, trial.system, pick[int(rng.integers(len(pick)))])
        g = random_potential(rng, trial.system, pick[int(rng.integers(len(pick)))])
        context = dict(trial.context, f=f.to_dict(), g=g.to_dict())

        for item, lhs, rhs, relation in _trial_checks(trial, f, g, rng):
            slack = AcceptanceRules.BIRKHOFF_TOL if item == 'coboundary_telescoping' else None
            failure = AcceptanceRules.check(item, lhs, rhs, relation, slack=slack, context=context)
            checks += 1
            if failure is not None:
                failures.append(failure)
                logger.error(f"Violação em '{item}' (ensaio {k}): lhs={lhs:.12g}, rhs={rhs:.12g}")

    summary = AcceptanceRules.summarize(failures, checks)
    return dict(summary, suite='pressure-properties', trials=trials, seed=seed, failures=failures)
