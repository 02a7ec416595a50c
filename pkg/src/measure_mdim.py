"""
Medidas de probabilidade em Ω×X com marginal ℙ (representadas por amostradores), integração
de Monte Carlo, push-forward de Cesàro e a dimensão média métrica de medida F(μ,d) como
problema de otimização sobre uma família finita de potenciais.
"""

import math
import numpy as np
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

from joblib import Parallel, delayed
from scipy.optimize import minimize

from src.acceptance_rules import AcceptanceRules
from src.base_system import BaseState, advance, expectation, make_path, sample_omega, summarize_samples
from src.data_validator import NonFiniteValueError, OptimizerDivergenceError, VerificationError, require
from src.estimation import mdim_estimate
from src.fiber_space import axis_values, sample_points, validate_points
from src.packing import CloudSpec
from src.rds_core import (PotentialSpec, RandomSystem, apply_map, combine, evaluate_potential, iterate_map,
                          zero_potential)
from src.utils import derive_seed, get_logger

logger = get_logger('measure_mdim')

MEASURE_KINDS = ('product', 'cesaro_empirical', 'atomic_orbit', 'mixture')
FIBER_LAWS = ('uniform', 'grid', 'atomic')


@dataclass
class MeasureSample:
    """Amostra (ω_i, x_i), i < m, de uma medida em Ω×X."""
    omegas: List[BaseState]
    points: np.ndarray

    def __len__(self) -> int:
        return len(self.omegas)


def _reads_omega(f: PotentialSpec) -> bool:
    if f.kind == 'env_modulated':
        return True
    return any(_reads_omega(p) for _, p in f.components)


def evaluate_on_sample(f: PotentialSpec, sample: MeasureSample) -> np.ndarray:
    """f(ω_i, x_i) para todos os pares da amostra (em lote quando f não depende de ω)."""
    if not _reads_omega(f):
        return evaluate_potential(f, sample.omegas[0], sample.points)
    return np.array([evaluate_potential(f, omega, x.reshape(1, -1))[0]
                     for omega, x in zip(sample.omegas, sample.points)])


def skew_image(system: RandomSystem, sample: MeasureSample, steps: Sequence[int]) -> MeasureSample:
    """Θ^{j_i}(ω_i, x_i) para cada par da amostra."""
    omegas, points = [], np.empty_like(sample.points)
    for i, (omega, j) in enumerate(zip(sample.omegas, steps)):
        j = int(j)
        if j == 0:
            omegas.append(omega)
            points[i] = sample.points[i]
            continue
        path = make_path(omega, j + 1)
        points[i] = iterate_map(system, path, j, sample.points[i:i + 1])[0]
        omegas.append(path[j])
    return MeasureSample(omegas=omegas, points=points)


@dataclass(frozen=True)
class MeasureRep:
    """
    Medida μ em Ω×X com desintegração dμ = dμ_ω dℙ, dada por um amostrador.

    Tipos:
        product: μ_ω = lei da fibra independente de ω (uniforme, grelha ou atómica)
        cesaro_empirical: μ_N = (1/N)Σ_{j<N}(Θ^j)_*μ₀ a partir de uma medida inicial
        atomic_orbit: massas pontuais uniformes ao longo de órbitas amostradas de μ₀
        mixture: t·μ₁ + (1−t)·μ₂ por sorteio de Bernoulli(t)
    """
    kind: str
    system: RandomSystem
    fiber_law: str = 'uniform'
    mesh: Optional[float] = None
    atoms: Tuple[Tuple[float, ...], ...] = ()
    atom_weights: Tuple[float, ...] = ()
    initial: Optional['MeasureRep'] = None
    horizon: int = 1
    orbit_count: int = 1
    components: Tuple['MeasureRep', ...] = ()
    mixture_weight: float = 0.5
    seed: int = 0
    name: str = ''

    def __post_init__(self):
        object.__setattr__(self, 'atoms', tuple(tuple(float(c) for c in a) for a in self.atoms))
        object.__setattr__(self, 'atom_weights', tuple(float(w) for w in self.atom_weights))
        object.__setattr__(self, 'components', tuple(self.components))
        self.validate()

    def validate(self) -> None:
        require(self.kind in MEASURE_KINDS, 'measure.kind', f"tipo de medida desconhecido '{self.kind}'")
        if self.kind == 'product':
            require(self.fiber_law in FIBER_LAWS, 'measure.fiber_law', f"lei da fibra desconhecida '{self.fiber_law}'")
            if self.fiber_law == 'grid':
                require(self.mesh is not None and self.mesh > 0, 'measure.mesh', "a lei de grelha exige passo positivo")
            if self.fiber_law == 'atomic':
                require(len(self.atoms) >= 1, 'measure.atoms', "a lei atómica exige pelo menos um átomo")
                validate_points(self.system.fiber, np.asarray(self.atoms, dtype=float))
                if self.atom_weights:
                    require(len(self.atom_weights) == len(self.atoms), 'measure.atom_weights',
                            "um peso por átomo")
                    require(all(w >= 0 for w in self.atom_weights), 'measure.atom_weights', "pesos negativos")
                    require(abs(sum(self.atom_weights) - 1.0) <= AcceptanceRules.WEIGHT_SUM_TOL, 'measure.atom_weights',
                            "os pesos devem somar 1")
        elif self.kind in ('cesaro_empirical', 'atomic_orbit'):
            require(self.initial is not None, 'measure.initial', "é necessária uma medida inicial")
            require(self.horizon >= 1, 'measure.horizon', "N deve ser ≥ 1")
            require(self.orbit_count >= 1, 'measure.orbit_count', "é necessária pelo menos uma órbita")
        else:
            require(len(self.components) == 2, 'measure.components', "a mistura exige duas componentes")
            require(0.0 <= self.mixture_weight <= 1.0, 'measure.mixture_weight', "t deve estar em [0,1]")

    @property
    def label(self) -> str:
        return self.name or self.kind

    def sample(self, m: int, seed: int) -> MeasureSample:
        """
        Amostra m pares (ω, x) ~ μ; função determinística de (medida, m, seed).

        Args:
            m: Número de pares
            seed: Semente

        Returns:
            Amostra
        """
        require(m >= 1, 'm', "são necessárias amostras")
        if self.kind == 'product':
            return self._sample_product(m, seed)
        if self.kind == 'cesaro_empirical':
            start = self.initial.sample(m, derive_seed(seed, 0))
            steps = np.random.default_rng(derive_seed(seed, 1)).integers(0, self.horizon, size=m)
            return skew_image(self.system, start, steps)
        if self.kind == 'atomic_orbit':
            rng = np.random.default_rng(derive_seed(seed, 1))
            picks = rng.integers(0, len(self._orbit_atoms.omegas), size=m)
            return MeasureSample(omegas=[self._orbit_atoms.omegas[k] for k in picks],
                                 points=self._orbit_atoms.points[picks])
        first = self.components[0].sample(m, derive_seed(seed, 0))
        second = self.components[1].sample(m, derive_seed(seed, 1))
        mask = np.random.default_rng(derive_seed(seed, 2)).random(m) < self.mixture_weight
        return MeasureSample(omegas=[a if pick else b for a, b, pick in zip(first.omegas, second.omegas, mask)],
                             points=np.where(mask[:, None], first.points, second.points))

    def _sample_product(self, m: int, seed: int) -> MeasureSample:
        omegas = [sample_omega(self.system.base, derive_seed(seed, 0, i)) for i in range(m)]
        rng = np.random.default_rng(derive_seed(seed, 1))
        fiber = self.system.fiber
        if self.fiber_law == 'uniform':
            points = sample_points(fiber, rng, m)
        elif self.fiber_law == 'grid':
            values = axis_values(fiber.kind, self.mesh)
            points = values[rng.integers(0, len(values), size=(m, fiber.dim))]
        else:
            atoms = np.asarray(self.atoms, dtype=float)
            weights = np.asarray(self.atom_weights) if self.atom_weights else None
            points = atoms[rng.choice(len(atoms), size=m, p=weights)]
        return MeasureSample(omegas=omegas, points=points)

    @cached_property
    def _orbit_atoms(self) -> MeasureSample:
        """Os K·N átomos Θ^j(ω_k, x_k), k < K, j < N."""
        start = self.initial.sample(self.orbit_count, derive_seed(self.seed, 0))
        omegas, points = [], []
        for omega, x in zip(start.omegas, start.points):
            path = make_path(omega, self.horizon)
            trajectory = iterate_orbit(self.system, path, self.horizon, x)
            omegas.extend(path.states)
            points.append(trajectory)
        return MeasureSample(omegas=omegas, points=np.concatenate(points))

    def to_dict(self) -> Dict[str, Any]:
        payload: Dict[str, Any] = {"kind": self.kind, "system": self.system.to_dict(), "name": self.name}
        if self.kind == 'product':
            payload["fiber_law"] = self.fiber_law
            if self.mesh is not None:
                payload["mesh"] = self.mesh
            if self.atoms:
                payload["atoms"] = [list(a) for a in self.atoms]
                payload["atom_weights"] = list(self.atom_weights)
        elif self.kind in ('cesaro_empirical', 'atomic_orbit'):
            payload.update(initial=self.initial.to_dict(), horizon=self.horizon, orbit_count=self.orbit_count,
                           seed=self.seed)
        else:
            payload.update(components=[c.to_dict() for c in self.components], mixture_weight=self.mixture_weight)
        return payload

    @classmethod
    def from_dict(cls, payload: Dict[str, Any]) -> 'MeasureRep':
        require('kind' in payload, 'measure.kind', "campo obrigatório em falta")
        require('system' in payload, 'measure.system', "campo obrigatório em falta")
        initial = payload.get('initial')
        return cls(kind=payload['kind'], system=RandomSystem.from_dict(payload['system']),
                   fiber_law=payload.get('fiber_law', 'uniform'), mesh=payload.get('mesh'),
                   atoms=tuple(tuple(a) for a in payload.get('atoms', ())),
                   atom_weights=tuple(payload.get('atom_weights', ())),
                   initial=cls.from_dict(initial) if initial else None,
                   horizon=int(payload.get('horizon', 1)), orbit_count=int(payload.get('orbit_count', 1)),
                   components=tuple(cls.from_dict(c) for c in payload.get('components', ())),
                   mixture_weight=float(payload.get('mixture_weight', 0.5)), seed=int(payload.get('seed', 0)),
                   name=payload.get('name', ''))


def iterate_orbit(system: RandomSystem, path, length: int, x: np.ndarray) -> np.ndarray:
    """Órbita [x, T_ω x, …, T_ω^{length−1} x] de um único ponto (length×dim)."""
    out = np.empty((length, system.fiber.dim))
    out[0] = x
    for j in range(1, length):
        out[j] = apply_map(system, path[j - 1], out[j - 1:j])[0]
    return out


def product_measure(system: RandomSystem, fiber_law: str = 'uniform', **kwargs) -> MeasureRep:
    return MeasureRep(kind='product', system=system, fiber_law=fiber_law, **kwargs)


def mixture(first: MeasureRep, second: MeasureRep, t: float, name: str = '') -> MeasureRep:
    return MeasureRep(kind='mixture', system=first.system, components=(first, second), mixture_weight=t, name=name)


def integrate(f: PotentialSpec, mu: MeasureRep, m_samples: int, seed: int) -> Tuple[float, float]:
    """
    ∫f dμ por Monte Carlo: ω ~ ℙ, x ~ μ_ω.

    Args:
        f: Potencial
        mu: Medida
        m_samples: Número de amostras (≥ 2)
        seed: Semente

    Returns:
        Tupla (estimativa, erro-padrão); |estimativa| ≤ B
    """
    require(m_samples >= 2, 'm_samples', "são necessárias pelo menos 2 amostras")
    values = evaluate_on_sample(f, mu.sample(m_samples, seed))
    if not np.all(np.isfinite(values)):
        raise NonFiniteValueError("integrando não finito")
    estimate, stderr = summarize_samples(values)
    logger.debug(f"∫f dμ ({mu.label}) ≈ {estimate:.6g} ± {stderr:.2g}")
    return estimate, stderr


def cesaro_pushforward(mu0: MeasureRep, N: int, system: Optional[RandomSystem] = None) -> MeasureRep:
    """
    μ_N = (1/N)Σ_{j<N}(Θ^j)_*μ₀: sorteia j uniforme em {0..N−1}, (ω,x) ~ μ₀ e devolve Θ^j(ω,x).

    Args:
        mu0: Medida inicial
        N: Horizonte (≥ 1)
        system: Sistema (por omissão o de μ₀)

    Returns:
        Medida de Cesàro
    """
    require(N >= 1, 'N', "N deve ser ≥ 1")
    system = system or mu0.system
    return MeasureRep(kind='cesaro_empirical', system=system, initial=mu0, horizon=int(N),
                      name=f"cesaro_{N}({mu0.label})")


def atomic_orbit_measure(mu0: MeasureRep, N: int, orbit_count: int, seed: int,
                         system: Optional[RandomSystem] = None) -> MeasureRep:
    """Massas pontuais uniformes sobre 'orbit_count' órbitas de comprimento N amostradas de μ₀."""
    return MeasureRep(kind='atomic_orbit', system=system or mu0.system, initial=mu0, horizon=int(N),
                      orbit_count=int(orbit_count), seed=int(seed), name=f"orbits_{orbit_count}x{N}({mu0.label})")


def invariance_defect(mu: MeasureRep, tests: Sequence[PotentialSpec], m: int, system: Optional[RandomSystem] = None,
                      seed: int = 0) -> Tuple[float, float]:
    """
    max_g |∫g dμ − ∫g∘Θ dμ| com números aleatórios comuns (mesmos pares para g e g∘Θ).

    Args:
        mu: Medida
        tests: Funções de teste limitadas
        m: Número de amostras (≥ 2)
        system: Sistema (por omissão o da medida)
        seed: Semente

    Returns:
        Tupla (defeito, erro-padrão da função de teste que realiza o máximo)
    """
    require(len(tests) >= 1, 'tests', "são necessárias funções de teste")
    require(m >= 2, 'm', "são necessárias pelo menos 2 amostras")
    system = system or mu.system
    sample = mu.sample(m, seed)
    image = MeasureSample(omegas=[advance(omega) for omega in sample.omegas],
                          points=np.stack([apply_map(system, omega, x.reshape(1, -1))[0]
                                           for omega, x in zip(sample.omegas, sample.points)]))
    defect, stderr = 0.0, 0.0
    for g in tests:
        difference = evaluate_on_sample(g, image) - evaluate_on_sample(g, sample)
        value, error = summarize_samples(difference)
        if abs(value) >= defect:
            defect, stderr = abs(value), error
    logger.debug(f"Defeito de invariância ({mu.label}): {defect:.6g} ± {stderr:.2g}")
    return defect, stderr


def marginal_defect(mu: MeasureRep, g: Callable[[BaseState], float], m: int, seed: int = 0) -> Tuple[float, float]:
    """
    |∫g(ω)dμ − ∫g dℙ| para uma função cilíndrica g de ω.

    Returns:
        Tupla (defeito, erro-padrão combinado)
    """
    sample = mu.sample(m, seed)
    mu_value, mu_error = summarize_samples(np.array([float(g(omega)) for omega in sample.omegas]))
    p_value, p_error = expectation(g, mu.system.base, m)
    return abs(mu_value - p_value), float(math.hypot(mu_error, p_error))


@dataclass(frozen=True)
class PotentialFamily:
    """Família f_λ = Σλᵢφᵢ com λ numa caixa; o membro λ = 0 é o potencial nulo."""
    basis: Tuple[PotentialSpec, ...]
    lower: Tuple[float, ...] = ()
    upper: Tuple[float, ...] = ()
    name: str = ''

    def __post_init__(self):
        K = len(self.basis)
        require(K >= 1, 'family.basis', "a família deve ter pelo menos um potencial")
        object.__setattr__(self, 'lower', tuple(float(v) for v in self.lower) or (-1.0,) * K)
        object.__setattr__(self, 'upper', tuple(float(v) for v in self.upper) or (1.0,) * K)
        require(len(self.lower) == K and len(self.upper) == K, 'family.bounds', "um limite por potencial")
        require(all(lo <= 0.0 <= hi for lo, hi in zip(self.lower, self.upper)), 'family.bounds',
                "a caixa deve conter λ = 0")

    @property
    def size(self) -> int:
        return len(self.basis)

    def clip(self, lam: Sequence[float]) -> np.ndarray:
        return np.clip(np.asarray(lam, dtype=float), self.lower, self.upper)

    def combine(self, lam: Sequence[float]) -> PotentialSpec:
        """
        f_λ, com limite declarado Σ|λᵢ|·Bᵢ.

        Coeficientes nulos são omitidos: λ completado com zeros numa família alargada dá o mesmo
        potencial que na família original.
        """
        lam = np.asarray(lam, dtype=float)
        require(lam.shape == (self.size,), 'lambda', f"esperados {self.size} coeficientes")
        if not np.any(lam):
            return zero_potential()
        return combine([(c, p) for c, p in zip(lam.tolist(), self.basis) if c != 0.0])

    def extended(self, extra: Sequence[PotentialSpec], lower: float = -1.0, upper: float = 1.0) -> 'PotentialFamily':
        """Família alargada com potenciais adicionais (os coeficientes existentes mantêm a posição)."""
        return PotentialFamily(basis=self.basis + tuple(extra), lower=self.lower + (lower,) * len(extra),
                               upper=self.upper + (upper,) * len(extra), name=self.name)

    def to_dict(self) -> Dict[str, Any]:
        return {"name": self.name, "basis": [p.to_dict() for p in self.basis], "lower": list(self.lower),
                "upper": list(self.upper)}

    @classmethod
    def from_dict(cls, payload: Dict[str, Any]) -> 'PotentialFamily':
        require('basis' in payload, 'family.basis', "campo obrigatório em falta")
        return cls(basis=tuple(PotentialSpec.from_dict(p) for p in payload['basis']),
                   lower=tuple(payload.get('lower', ())), upper=tuple(payload.get('upper', ())),
                   name=payload.get('name', ''))


def constants_family(bound: float = 1.0) -> PotentialFamily:
    return PotentialFamily(basis=(PotentialSpec(kind='constant', value=1.0),), lower=(-bound,), upper=(bound,),
                           name='constants')


def trig_linear_family(coordinates: int = 1, frequencies: Sequence[int] = (1,), bound: float = 1.0) -> PotentialFamily:
    """Cossenos cos(2πk·x_c) e coordenadas x_c das primeiras coordenadas."""
    basis: List[PotentialSpec] = []
    for c in range(coordinates):
        basis.extend(PotentialSpec(kind='trig', terms=((1.0, k, c),)) for k in frequencies)
        basis.append(PotentialSpec(kind='coordinate_linear', coefficients=tuple(1.0 if i == c else 0.0
                                                                                 for i in range(c + 1))))
    return PotentialFamily(basis=tuple(basis), lower=(-bound,) * len(basis), upper=(bound,) * len(basis),
                           name='trig_linear')


@dataclass(frozen=True)
class MdimSettings:
    """Parâmetros do estimador de dimensão média usados dentro do objetivo G(λ)."""
    epsilon_ladder: Tuple[float, ...]
    n_schedule: Tuple[int, ...]
    m_omega: int = 8
    m_samples: int = 2000
    seed: int = 0
    cloud: CloudSpec = field(default_factory=CloudSpec)
    estimator: str = 'packing'
    margin: int = 2
    n_jobs: int = 1

    def mdim(self, f: PotentialSpec, system: RandomSystem, n_jobs: Optional[int] = None):
        return mdim_estimate(f, system, self.epsilon_ladder, self.n_schedule, self.m_omega, cloud_spec=self.cloud,
                             estimator=self.estimator, margin=self.margin,
                             n_jobs=self.n_jobs if n_jobs is None else n_jobs)

    def to_dict(self) -> Dict[str, Any]:
        return {"epsilon_ladder": list(self.epsilon_ladder), "n_schedule": list(self.n_schedule),
                "m_omega": self.m_omega, "m_samples": self.m_samples, "seed": self.seed,
                "cloud": self.cloud.to_dict(), "estimator": self.estimator, "margin": self.margin}

    @classmethod
    def from_dict(cls, payload: Dict[str, Any]) -> 'MdimSettings':
        return cls(epsilon_ladder=tuple(float(e) for e in payload['epsilon_ladder']),
                   n_schedule=tuple(int(n) for n in payload['n_schedule']),
                   m_omega=int(payload.get('m_omega', 8)), m_samples=int(payload.get('m_samples', 2000)),
                   seed=int(payload.get('seed', 0)), cloud=CloudSpec.from_dict(payload.get('cloud', {})),
                   estimator=payload.get('estimator', 'packing'), margin=int(payload.get('margin', 2)),
                   n_jobs=int(payload.get('n_jobs', 1)))


@dataclass
class FEstimate:
    """Resultado de F̂(μ,d): melhor valor, λ*, traço completo do otimizador e decomposição."""
    value: float
    lambda_star: Tuple[float, ...]
    mdim_zero: float
    mdim_at_best: float
    integral_at_best: float
    evaluations: int
    method: str
    trace: List[Dict[str, Any]] = field(default_factory=list, repr=False)
    measure: str = ''
    family: str = ''

    @property
    def gap(self) -> float:
        return self.mdim_zero - self.value

    def to_dict(self) -> Dict[str, Any]:
        return {"value": self.value, "lambda_star": list(self.lambda_star), "mdim_zero": self.mdim_zero,
                "mdim_at_best": self.mdim_at_best, "integral_at_best": self.integral_at_best,
                "gap": self.gap, "evaluations": self.evaluations, "method": self.method,
                "measure": self.measure, "family": self.family, "trace": self.trace}


class _BudgetExhausted(Exception):
    pass


def _objective_terms(lam: Tuple[float, ...], mu: MeasureRep, family: PotentialFamily, system: RandomSystem,
                     settings: MdimSettings, n_jobs: int) -> Tuple[float, float]:
    """(m̂dim(f_λ), ∫f_λ dμ) com as sementes fixas das definições (números aleatórios comuns)."""
    f = family.combine(lam)
    integral = 0.0 if f.kind == 'zero' else integrate(f, mu, settings.m_samples, settings.seed)[0]
    return settings.mdim(f, system, n_jobs=n_jobs).value, integral


class _Objective:
    """G(λ) = m̂dim(f_λ) − ∫f_λ dμ com orçamento, cache e traço."""

    def __init__(self, mu: MeasureRep, family: PotentialFamily, system: RandomSystem, settings: MdimSettings,
                 budget: int):
        self.mu, self.family, self.system, self.settings = mu, family, system, settings
        self.budget = budget
        self.cache: Dict[Tuple[float, ...], float] = {}
        self.trace: List[Dict[str, Any]] = []
        self.best: Optional[Dict[str, Any]] = None

    @property
    def remaining(self) -> int:
        return self.budget - len(self.trace)

    def _record(self, key: Tuple[float, ...], mdim: float, integral: float) -> float:
        value = mdim - integral
        entry = {"evaluation": len(self.trace), "lambda": list(key), "objective": value, "mdim": mdim,
                 "integral": integral}
        if not math.isfinite(value):
            self.trace.append(dict(entry, best=self.best["objective"] if self.best else None))
            raise OptimizerDivergenceError(f"objetivo não finito em λ = {list(key)}", self.trace)
        if self.best is None or value < self.best["objective"]:
            self.best = entry
        entry["best"] = self.best["objective"]
        self.trace.append(entry)
        self.cache[key] = value
        logger.debug(f"G({np.round(key, 4).tolist()}) = {value:.6g} (m̂dim {mdim:.6g}, ∫f dμ {integral:.6g})")
        return value

    def __call__(self, lam: Sequence[float]) -> float:
        key = tuple(float(v) for v in self.family.clip(lam))
        if key in self.cache:
            return self.cache[key]
        if self.remaining <= 0:
            raise _BudgetExhausted()
        return self._record(key, *_objective_terms(key, self.mu, self.family, self.system, self.settings,
                                                   self.settings.n_jobs))

    def batch(self, proposals: Sequence[np.ndarray]) -> List[float]:
        """Avalia uma geração de propostas (em paralelo quando n_jobs > 1)."""
        keys: List[Tuple[float, ...]] = []
        for lam in proposals:
            key = tuple(float(v) for v in self.family.clip(lam))
            if key not in self.cache and key not in keys:
                keys.append(key)
        keys = keys[:max(self.remaining, 0)]
        if self.settings.n_jobs == 1 or len(keys) <= 1:
            terms = [_objective_terms(k, self.mu, self.family, self.system, self.settings, 1) for k in keys]
        else:
            terms = Parallel(n_jobs=self.settings.n_jobs)(
                delayed(_objective_terms)(k, self.mu, self.family, self.system, self.settings, 1) for k in keys)
        for key, (mdim, integral) in zip(keys, terms):
            self._record(key, mdim, integral)
        return [self.cache.get(tuple(float(v) for v in self.family.clip(lam)), math.inf) for lam in proposals]


def _compass_search(objective: _Objective, start: np.ndarray, step: np.ndarray, min_step: np.ndarray) -> None:
    """Pesquisa por padrão nas direções ±eᵢ, reduzindo o passo a metade quando nada melhora."""
    center = objective.family.clip(start)
    current = objective(center)
    while objective.remaining > 0 and np.any(step >= min_step):
        poll = []
        for i in range(len(center)):
            for sign in (1.0, -1.0):
                candidate = center.copy()
                candidate[i] += sign * step[i]
                poll.append(candidate)
        values = objective.batch(poll)
        best = int(np.argmin(values))
        if values[best] < current:
            center, current = objective.family.clip(poll[best]), values[best]
        else:
            step = step / 2.0


def f_estimate(mu: MeasureRep, family: PotentialFamily, system: RandomSystem, budget: int,
               settings: MdimSettings, warm_start: Optional[Sequence[float]] = None) -> FEstimate:
    """
    F̂(μ,d) = inf_λ [m̂dim(f_λ) − ∫f_λ dμ] por Nelder-Mead com recurso a pesquisa por compasso.

    λ = 0 é sempre avaliado primeiro, pelo que F̂ ≤ m̂dim(0). Cada G(λ) avaliado é um majorante
    de F̂ e fica registado no traço.

    Args:
        mu: Medida
        family: Família de potenciais
        system: Sistema
        budget: Número máximo de avaliações do objetivo (≥ 10)
        settings: Parâmetros do estimador de dimensão média
        warm_start: λ inicial (completado com zeros quando a família foi alargada)

    Returns:
        Estimativa com traço
    """
    require(budget >= 10, 'budget', f"o orçamento deve ser ≥ 10 avaliações, recebido {budget}")
    K = family.size
    objective = _Objective(mu, family, system, settings, budget)
    logger.info(f"F̂(μ,d) para '{mu.label}' com a família '{family.name}' ({K} potenciais, orçamento {budget})")

    zero = np.zeros(K)
    mdim_zero = objective(zero)
    start = zero
    if warm_start is not None:
        warm = np.zeros(K)
        warm[:len(warm_start)] = np.asarray(warm_start, dtype=float)[:K]
        objective(warm)
        start = family.clip(warm)

    lower, upper = np.asarray(family.lower), np.asarray(family.upper)
    width = np.maximum(upper - lower, 1e-12)
    method = 'nelder-mead'
    try:
        simplex = [start] + [family.clip(start + np.where(np.arange(K) == i, 0.25 * width[i], 0.0))
                             for i in range(K)]
        # Vértices que colapsam na fronteira da caixa passam para o lado oposto
        for i in range(1, K + 1):
            if np.allclose(simplex[i], start):
                simplex[i] = family.clip(start - np.where(np.arange(K) == i - 1, 0.25 * width[i - 1], 0.0))
        reserve = 2 * K + 1
        maxfev = max(objective.remaining - reserve, 0)
        if maxfev > K + 1:
            minimize(objective, x0=start, method='Nelder-Mead', bounds=list(zip(lower, upper)),
                     options={'maxfev': maxfev, 'xatol': 1e-3, 'fatol': 1e-6,
                              'initial_simplex': np.asarray(simplex)})
        if objective.remaining > 0:
            method = 'nelder-mead+compass'
            best_lambda = np.asarray(objective.best["lambda"])
            _compass_search(objective, best_lambda, 0.125 * width, 1e-3 * width)
    except _BudgetExhausted:
        logger.debug("Orçamento de avaliações esgotado")

    best = objective.best
    estimate = FEstimate(value=float(best["objective"]), lambda_star=tuple(best["lambda"]),
                         mdim_zero=float(mdim_zero), mdim_at_best=float(best["mdim"]),
                         integral_at_best=float(best["integral"]), evaluations=len(objective.trace), method=method,
                         trace=objective.trace, measure=mu.label, family=family.name)
    logger.info(f"F̂ = {estimate.value:.6g} (m̂dim {estimate.mdim_zero:.6g}, diferença {estimate.gap:.6g}, "
                f"{estimate.evaluations} avaliações)")
    return estimate


def a_membership(f: PotentialSpec, system: RandomSystem, tol: float, settings: MdimSettings) -> Tuple[bool, Dict[str, Any]]:
    """
    Pertença ao conjunto {f : m̂dim(−f) = 0} dentro de 'tol'.

    Returns:
        Tupla (pertence, diagnósticos com o declive e o intervalo de ±2 erros-padrão)
    """
    estimate = settings.mdim(f.scaled(-1.0), system)
    member = abs(estimate.slope) <= tol
    diagnostics = {"slope": estimate.slope, "slope_stderr": estimate.slope_stderr,
                   "interval": [estimate.slope - 2.0 * estimate.slope_stderr,
                                estimate.slope + 2.0 * estimate.slope_stderr],
                   "upper": estimate.upper, "lower": estimate.lower, "tol": tol, "member": member}
    logger.info(f"m̂dim(−f) = {estimate.slope:.6g} -> {'pertence' if member else 'não pertence'} (tol {tol})")
    return member, diagnostics


def maximal_measure_search(candidates: Sequence[MeasureRep], family: PotentialFamily, system: RandomSystem,
                           budget: int, settings: MdimSettings, tol: float = AcceptanceRules.LOG_SLACK) -> Dict[str, Any]:
    """
    Ordena candidatos por F̂ e compara o máximo com m̂dim.

    Só a direção max F̂ ≤ m̂dim + tol é verificada; a diferença fica registada como resultado.

    Raises:
        VerificationError: Se max F̂ excede m̂dim + tol
    """
    require(len(candidates) >= 2, 'candidates',
            f"a pesquisa exige pelo menos dois candidatos, recebidos {len(candidates)}")
    estimates = [f_estimate(mu, family, system, budget, settings) for mu in candidates]
    order = sorted(range(len(estimates)), key=lambda k: (-estimates[k].value, k))
    ranking = [{"rank": r + 1, "measure": candidates[k].label, "value": estimates[k].value,
                "lambda_star": list(estimates[k].lambda_star), "evaluations": estimates[k].evaluations}
               for r, k in enumerate(order)]
    mdim_zero = estimates[0].mdim_zero
    best = estimates[order[0]].value
    report = {"ranking": ranking, "max_value": best, "mdim": mdim_zero, "gap": mdim_zero - best,
              "family": family.name, "estimates": [e.to_dict() for e in estimates]}
    logger.info(f"Melhor medida '{ranking[0]['measure']}': F̂ = {best:.6g}, m̂dim = {mdim_zero:.6g}")
    if best > mdim_zero + tol:
        failure = AcceptanceRules.check('measure_upper_bound', best, mdim_zero, 'leq', slack=tol,
                                        context={"measure": ranking[0]['measure']})
        raise VerificationError(f"max F̂ = {best:.6g} excede m̂dim = {mdim_zero:.6g}", [failure])
    return report


def concavity_probe(first: MeasureRep, second: MeasureRep, t: float, family: PotentialFamily, system: RandomSystem,
                    budget: int, settings: MdimSettings, slack: float = 0.05) -> Dict[str, Any]:
    """
    Compara F̂(t·μ₁ + (1−t)·μ₂) com t·F̂(μ₁) + (1−t)·F̂(μ₂) − folga.

    Violações são assinaladas como falhas do otimizador, não como falhas da teoria.
    """
    require(0.0 <= t <= 1.0, 't', "t deve estar em [0,1]")
    mixed = mixture(first, second, t, name=f"mixture_{t:g}")
    values = [f_estimate(mu, family, system, budget, settings).value for mu in (first, second, mixed)]
    chord = t * values[0] + (1.0 - t) * values[1]
    flagged = values[2] < chord - slack
    if flagged:
        logger.warning(f"Sonda de concavidade: F̂(μ_t) = {values[2]:.6g} < {chord:.6g} − {slack} "
                       f"(falha do otimizador ou do Monte Carlo)")
    return {"t": t, "first": values[0], "second": values[1], "mixture": values[2], "chord": chord,
            "slack": slack, "flagged": bool(flagged)}
