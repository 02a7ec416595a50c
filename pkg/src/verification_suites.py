"""
Suites de verificação executáveis pelo comando verify. Cada suite devolve um relatório com o
número de verificações, as violações e, por violação, as sementes que a reproduzem.
"""

import numpy as np
from typing import Any, Callable, Dict, List, Optional, Tuple

from src.acceptance_rules import AcceptanceRules
from src.base_system import make_path, sample_omega
from src.data_validator import SpecValidationError
from src.estimation import system_for
from src.fiber_space import FiberSpaceSpec, MetricSpec, grid, random_cloud, sample_points
from src.measure_mdim import (MdimSettings, atomic_orbit_measure, cesaro_pushforward, constants_family,
                              f_estimate, invariance_defect, product_measure, trig_linear_family)
from src.packing import (CloudSpec, GridPartition, build_cloud, cover_inequality_terms, exact_separated_product,
                         greedy_separated, image_cloud, linear_circle_oracle, pn_hat, qn_hat, verify_separated_set)
from src.property_suite import EPSILON_CHOICES, pressure_property_suite, random_potential
from src.rds_core import PotentialSpec, RandomMapSpec, RandomSystem, birkhoff_sums, iterate_map
from src.reference_systems import REFERENCE_SYSTEMS, get_reference
from src.utils import derive_seed, get_logger

logger = get_logger('verification_suites')

# Sistemas de referência usados nos ensaios aleatórios (por ordem de rotação)
TRIAL_SYSTEMS = ('identity', 'doubling', 'random_expanding', 'torus_shift_d1', 'torus_shift_d2',
                 'shift_random_rotation')
PACKING_EPSILONS = (0.3, 0.25, 0.1)
CIRCLE_EPSILONS = (0.125, 0.1, 0.0625, 0.03125)
CIRCLE_POINTS = 512


class SuiteCollector:
    """Acumula verificações e falhas de uma suite."""

    def __init__(self, suite: str, trials: int, seed: int):
        self.suite = suite
        self.trials = trials
        self.seed = seed
        self.checks = 0
        self.failures: List[Dict[str, Any]] = []

    def check(self, item: str, lhs: float, rhs: float, relation: str = 'leq', slack: Optional[float] = None,
              context: Optional[Dict[str, Any]] = None) -> bool:
        self.checks += 1
        failure = AcceptanceRules.check(item, lhs, rhs, relation, slack=slack, context=context)
        if failure is None:
            return True
        self.failures.append(failure)
        logger.error(f"[{self.suite}] violação em '{item}': lhs={lhs:.12g}, rhs={rhs:.12g}, contexto={context}")
        return False

    def extend(self, report: Dict[str, Any], extra_context: Dict[str, Any]) -> None:
        self.checks += report['checks']
        for failure in report['failures']:
            failure['context'] = dict(failure['context'], **extra_context)
            self.failures.append(failure)

    def report(self) -> Dict[str, Any]:
        summary = AcceptanceRules.summarize(self.failures, self.checks)
        return dict(summary, suite=self.suite, trials=self.trials, seed=self.seed, failures=self.failures)


def _split(trials: int, parts: int) -> List[int]:
    return [trials // parts + (1 if k < trials % parts else 0) for k in range(parts)]


def _trial_system(k: int) -> Tuple[str, RandomSystem]:
    name = TRIAL_SYSTEMS[k % len(TRIAL_SYSTEMS)]
    return name, get_reference(name).system


def suite_pressure_properties(trials: int, seed: int) -> Dict[str, Any]:
    """Propriedades das funções de partição repartidas pelos sistemas de referência."""
    collector = SuiteCollector('pressure-properties', trials, seed)
    names = ('identity', 'random_expanding', 'torus_shift_d1', 'torus_shift_d2', 'shift_random_rotation')
    for index, (name, count) in enumerate(zip(names, _split(trials, len(names)))):
        if count == 0:
            continue
        report = pressure_property_suite(get_reference(name).system, count, derive_seed(seed, index))
        collector.extend(report, {"system": name})
    return collector.report()


def _identity_system(kind: str, D: int, window: int) -> RandomSystem:
    base = get_reference('identity').system.base
    return RandomSystem(base=base, fiber=FiberSpaceSpec(kind=kind, D=D, window=window, metric=MetricSpec()),
                        map=RandomMapSpec(kind='identity'))


def _product_cases() -> List[Tuple[str, int, int, float]]:
    """(fibra, D, janela, passo) com no máximo 4 eixos e grelhas até 10^4 pontos."""
    cases = []
    for kind in ('cube_seq', 'torus_seq'):
        cases.append((kind, 1, 1, 0.01))
        cases.append((kind, 2, 1, 0.02))
        cases.append((kind, 1, 2, 0.02))
        cases.append((kind, 2, 2, 0.125))
    return cases


def suite_packing_oracles(trials: int, seed: int) -> Dict[str, Any]:
    """
    Contagens gulosas contra oráculos exatos:
      - grelhas produto (identidade, métrica sup ponderada) contra o produto das contagens 1-D,
        com reverificação exaustiva por pares;
      - aplicações lineares do círculo contra a contagem fechada da grelha de M pontos;
      - deslocamento com rotação aleatória contra o deslocamento puro em 'trials' caminhos ω.
    """
    collector = SuiteCollector('packing-oracles', trials, seed)

    for kind, D, window, mesh in _product_cases():
        system = _identity_system(kind, D, window)
        cloud = grid(system.fiber, mesh)
        path = make_path(sample_omega(system.base, 0), 1)
        for epsilon in PACKING_EPSILONS:
            context = {"fiber": kind, "D": D, "window": window, "mesh": mesh, "epsilon": epsilon}
            F = greedy_separated(cloud, system, path, 1, epsilon, method='product')
            exact = exact_separated_product(system.fiber, epsilon, mesh=mesh)
            collector.check('product_grid_count', F.cardinality, exact, 'eq', slack=0.0, context=context)
            valid, details = verify_separated_set(F, max_size=10 ** 4)
            collector.check('product_grid_bruteforce', 0.0 if valid else 1.0, 0.0, 'eq', slack=0.0,
                            context=dict(context, **details))
            if D * window == 1:
                generic = greedy_separated(cloud, system, path, 1, epsilon, method='kdtree')
                collector.check('generic_grid_count', generic.cardinality, exact, 'eq', slack=0.0, context=context)

    for name in ('doubling', 'random_expanding'):
        system = get_reference(name).system
        cloud = grid(system.fiber, 1.0 / CIRCLE_POINTS)
        for i in range(min(trials, 8)):
            omega = sample_omega(system.base.with_seed(derive_seed(seed, 1)), i)
            for n in range(1, 5):
                path = make_path(omega, n)
                factors = [system.map.factor(path[j]) for j in range(n - 1)]
                for epsilon in CIRCLE_EPSILONS:
                    if epsilon >= 0.5 / system.map.max_factor:
                        continue
                    F = greedy_separated(cloud, system, path, n, epsilon, method='kdtree')
                    expected = linear_circle_oracle(CIRCLE_POINTS, epsilon, factors)
                    collector.check('circle_grid_count', F.cardinality, expected, 'eq', slack=0.0,
                                    context={"system": name, "stream_index": i, "n": n, "epsilon": epsilon,
                                             "factors": factors})

    shift, rotated = get_reference('torus_shift_d1'), get_reference('shift_random_rotation')
    ladder = shift.settings["epsilon_ladder"]
    schedule = shift.settings["n_schedule"]
    base = shift.system.base.with_seed(derive_seed(seed, 2))
    for i in range(trials):
        for epsilon in ladder:
            for n in schedule:
                counts = []
                for reference in (shift, rotated):
                    system = system_for(RandomSystem(base=base, fiber=reference.system.fiber,
                                                     map=reference.system.map), epsilon, n)
                    path = make_path(sample_omega(system.base, i), n)
                    cloud = build_cloud(CloudSpec(), system, path, n, epsilon)
                    counts.append(greedy_separated(cloud, system, path, n, epsilon).cardinality)
                collector.check('isometry_count', counts[1], counts[0], 'eq', slack=0.0,
                                context={"stream_index": i, "seed": base.seed, "n": n, "epsilon": epsilon})
        logger.debug(f"Isometria: caminho {i} verificado")

    return collector.report()


def _random_setting(k: int, seed: int) -> Dict[str, Any]:
    """Semente, gerador, sistema de referência e ε de um ensaio aleatório."""
    trial_seed = derive_seed(seed, k)
    rng = np.random.default_rng(trial_seed)
    name, system = _trial_system(k)
    epsilon = float(EPSILON_CHOICES[int(rng.integers(len(EPSILON_CHOICES)))])
    return {"name": name, "system": system, "epsilon": epsilon, "rng": rng, "seed": trial_seed}


def suite_cover_inequalities(trials: int, seed: int) -> Dict[str, Any]:
    """
    Desigualdades entre empacotamento e coberturas em nuvens explícitas:
      - P̂_n ≤ Q̂_n na partição em células de lado ≤ ε (cada célula refinada tem d_n^ω-diâmetro < ε);
      - Q_n(𝒱) ≤ (1/ε)^{Σγ_j}·4^{ΣB_j}·P_n(ε/4) na cobertura por bolas de raio ε/4.
    """
    collector = SuiteCollector('cover-inequalities', trials, seed)
    for k in range(trials):
        setting = _random_setting(k, seed)
        rng, epsilon = setting["rng"], setting["epsilon"]
        n = int(rng.integers(1, 4))
        system = system_for(setting["system"], epsilon, n)
        path = make_path(sample_omega(system.base, k), n)
        cloud = random_cloud(system.fiber, int(rng.integers(150, 301)), setting["seed"])
        f = random_potential(rng, system)
        context = {"trial": k, "seed": setting["seed"], "system": setting["name"], "stream_index": k,
                   "n": n, "epsilon": epsilon, "cloud_size": cloud.size, "f": f.to_dict()}

        packing = pn_hat(cloud, system, path, n, epsilon, f, method='kdtree').log_value
        partition = qn_hat(GridPartition(system.fiber, epsilon), system, path, n, epsilon, f, cloud).log_value
        collector.check('packing_below_partition', packing, partition, 'leq', context=context)

        terms = cover_inequality_terms(cloud, system, path, n, epsilon, f)
        collector.check('cover_above_packing', terms["lhs"], terms["rhs"], 'leq', context=context)
    return collector.report()


def suite_kingman(trials: int, seed: int) -> Dict[str, Any]:
    """Subaditividade log Q_{n+m}(ω) ≤ log Q_n(ω) + log Q_m(θ^nω) na partição refinada."""
    collector = SuiteCollector('kingman', trials, seed)
    for k in range(trials):
        setting = _random_setting(k, seed)
        rng, epsilon = setting["rng"], setting["epsilon"]
        n, m = int(rng.integers(1, 4)), int(rng.integers(1, 4))
        system = system_for(setting["system"], epsilon, n + m)
        path = make_path(sample_omega(system.base, k), n + m)
        cloud = random_cloud(system.fiber, 200, setting["seed"])
        f = random_potential(rng, system)
        partition = GridPartition(system.fiber, epsilon)

        joint = qn_hat(partition, system, path, n + m, epsilon, f, cloud).log_value
        head = qn_hat(partition, system, path, n, epsilon, f, cloud).log_value
        tail = qn_hat(partition, system, path.tail(n), m, epsilon, f, image_cloud(system, path, n, cloud)).log_value
        collector.check('subadditivity', joint, head + tail, 'leq',
                        context={"trial": k, "seed": setting["seed"], "system": setting["name"], "stream_index": k,
                                 "n": n, "m": m, "epsilon": epsilon, "f": f.to_dict()})
    return collector.report()


def _fiber_gap(system: RandomSystem, X: np.ndarray, Y: np.ndarray) -> float:
    diff = np.abs(X - Y)
    if system.fiber.periodic:
        diff = np.minimum(diff, 1.0 - diff)
    return float(np.max(diff)) if diff.size else 0.0


def suite_cocycle(trials: int, seed: int) -> Dict[str, Any]:
    """
    Propriedade de cociclo T_ω^{n+m} = T_{θ^nω}^m ∘ T_ω^n e aditividade das somas de Birkhoff
    S_{n+m}f(ω,x) = S_nf(ω,x) + S_mf(Θ^n(ω,x)).
    """
    collector = SuiteCollector('cocycle', trials, seed)
    for k in range(trials):
        setting = _random_setting(k, seed)
        rng = setting["rng"]
        n, m = int(rng.integers(1, 6)), int(rng.integers(1, 6))
        system = system_for(setting["system"], 0.125, n + m)
        path = make_path(sample_omega(system.base, k), n + m)
        X = sample_points(system.fiber, rng, 16)
        context = {"trial": k, "seed": setting["seed"], "system": setting["name"], "stream_index": k,
                   "n": n, "m": m}

        middle = iterate_map(system, path, n, X)
        full = iterate_map(system, path, n + m, X)
        composed = iterate_map(system, path.tail(n), m, middle)
        collector.check('cocycle', _fiber_gap(system, full, composed), 0.0, 'leq',
                        slack=AcceptanceRules.COCYCLE_TOL, context=context)

        f = random_potential(rng, system)
        joint = birkhoff_sums(system, f, path, n + m, X)
        split = birkhoff_sums(system, f, path, n, X) + birkhoff_sums(system, f, path.tail(n), m, middle)
        collector.check('birkhoff_additivity', float(np.max(np.abs(joint - split))), 0.0, 'leq',
                        slack=AcceptanceRules.BIRKHOFF_TOL, context=dict(context, f=f.to_dict()))
    return collector.report()


MEASURE_SETTINGS = {"epsilon_ladder": (0.25, 0.125, 0.0625, 0.03125), "n_schedule": (2, 3, 4, 5), "m_omega": 2,
                    "m_samples": 200}
CESARO_HORIZONS = (10, 100)


def suite_measure_bounds(trials: int, seed: int) -> Dict[str, Any]:
    """
    Cotas estruturais de F̂ em três medidas e dois sistemas: F̂ ≤ m̂dim (λ = 0 pertence à família),
    F̂ = m̂dim para a família das constantes e defeito de invariância das médias de Cesàro
    ≤ 2·max‖g‖_∞/N + 3σ.
    """
    collector = SuiteCollector('measure-bounds', trials, seed)
    family = trig_linear_family(coordinates=1, frequencies=(1,), bound=1.0)
    constants = constants_family(1.0)
    tests = (PotentialSpec(kind='trig', terms=((1.0, 1, 0),)), PotentialSpec(kind='coordinate_linear', coefficients=(1.0,)))

    for k in range(trials):
        trial_seed = derive_seed(seed, k)
        settings = MdimSettings(seed=trial_seed, **MEASURE_SETTINGS)
        for name in ('identity', 'torus_shift_d1'):
            system = REFERENCE_SYSTEMS[name].system
            initial = product_measure(system, name=f"uniform_{name}")
            measures = (initial, cesaro_pushforward(initial, 10),
                        atomic_orbit_measure(initial, 10, 8, trial_seed))
            for mu in measures:
                context = {"trial": k, "seed": trial_seed, "system": name, "measure": mu.label}
                estimate = f_estimate(mu, family, system, 10, settings)
                collector.check('upper_bound', estimate.value, estimate.mdim_zero, 'leq', context=context)
                flat = f_estimate(mu, constants, system, 10, settings)
                collector.check('constants_family', flat.value, flat.mdim_zero, 'eq', context=context)

            for N in CESARO_HORIZONS:
                mu = cesaro_pushforward(initial, N)
                defect, stderr = invariance_defect(mu, tests, 2000, seed=trial_seed)
                sup_norm = max(g.bound for g in tests)
                collector.check('cesaro_invariance', defect,
                                2.0 * sup_norm / N + AcceptanceRules.SIGMA_FLAG * stderr, 'leq',
                                context={"trial": k, "seed": trial_seed, "system": name, "N": N})
    return collector.report()


SUITES: Dict[str, Tuple[Callable[[int, int], Dict[str, Any]], int]] = {
    'pressure-properties': (suite_pressure_properties, 200),
    'packing-oracles': (suite_packing_oracles, 32),
    'cover-inequalities': (suite_cover_inequalities, 100),
    'kingman': (suite_kingman, 100),
    'cocycle': (suite_cocycle, 100),
    'measure-bounds': (suite_measure_bounds, 1),
}


def suite_names() -> List[str]:
    return list(SUITES)


def run_suite(name: str, trials: Optional[int] = None, seed: int = 0) -> Dict[str, Any]:
    """
    Executa uma suite pelo nome.

    Args:
        name: Nome da suite
        trials: Número de ensaios (por omissão o número de referência da suite)
        seed: Semente mestra

    Returns:
        Relatório com 'passed', contagens e falhas reprodutíveis

    Raises:
        SpecValidationError: Suite desconhecida ou número de ensaios inválido
    """
    if name not in SUITES:
        raise SpecValidationError('suite', f"suite desconhecida '{name}' (disponíveis: {', '.join(SUITES)})")
    func, default_trials = SUITES[name]
    trials = default_trials if trials is None else int(trials)
    if trials < 1:
        raise SpecValidationError('trials', "o número de ensaios deve ser ≥ 1")
    logger.info(f"Suite '{name}': {trials} ensaios, semente {seed}")
    return func(trials, seed)
