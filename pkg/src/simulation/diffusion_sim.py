"""
Module diffusion_sim.py

Simulation agent par agent de l'évolution des stratégies sur un graphe selon
les règles de mise à jour IM (imitation), BD (naissance-mort) et DB
(mort-naissance), avec détection de régime stationnaire et agrégation
d'ensembles reproductibles.
"""

import csv
import io
import logging
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Callable, Dict, List, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np

from src.core.errors import PreconditionError, SimulationInvariantError
from src.core.netgraph import Graph
from src.game.game_core import DEFAULT_ALPHA, PayoffMatrix, SelectionParams, Strategy
from src.simulation.random_streams import (
    DYNAMICS_STREAM,
    GRAPH_STREAM,
    INIT_STREAM,
    RUN_STREAM,
    RandomStream,
    derive_seed,
)

logger = logging.getLogger(__name__)

DEFAULT_INITIAL_PF = 0.5
DEFAULT_WINDOW = 50
DEFAULT_STEADY_TOL = 5e-3
DEFAULT_MAX_GENERATIONS = 2000
DEFAULT_REGEN_EVERY = 20
# Période (en événements) des recomptages de contrôle en mode DEBUG
DEBUG_VERIFY_EVERY = 10_000

FORWARD, NOT_FORWARD = 1, 0


class UpdateRule(Enum):
    IM = "im"
    BD = "bd"
    DB = "db"


class Terminal(Enum):
    ABSORBED_ALL_F = "absorbed_all_f"
    ABSORBED_ALL_N = "absorbed_all_n"
    STEADY = "steady"
    MAX_STEPS = "max_steps"


@dataclass(frozen=True)
class SimConfig:
    """
    Configuration d'une simulation.

    Args:
        rule: Règle de mise à jour (IM, BD ou DB)
        payoff: Matrice de gains
        alpha: Intensité de sélection dans [0, 1]
        initial_pf: Probabilité initiale de S_f de chaque utilisateur
        max_steps: Nombre maximal de générations (N événements chacune)
        window: Taille W de la fenêtre de détection du régime stationnaire
        steady_tol: Tolérance de stationnarité
        seed: Graine de base non négative
    """

    rule: UpdateRule
    payoff: PayoffMatrix
    alpha: float = DEFAULT_ALPHA
    initial_pf: float = DEFAULT_INITIAL_PF
    max_steps: int = DEFAULT_MAX_GENERATIONS
    window: int = DEFAULT_WINDOW
    steady_tol: float = DEFAULT_STEADY_TOL
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "rule", UpdateRule(self.rule))
        if not 0.0 <= self.alpha <= 1.0:
            raise PreconditionError(f"alpha={self.alpha} must lie in [0, 1]")
        if not 0.0 <= self.initial_pf <= 1.0:
            raise PreconditionError(f"initial_pf={self.initial_pf} must lie in [0, 1]")
        if self.max_steps < 0:
            raise PreconditionError(f"max_steps={self.max_steps} must be non-negative")
        if self.window < 2:
            raise PreconditionError(f"window={self.window} must be at least 2")
        if self.max_steps > 0 and self.window >= self.max_steps:
            raise PreconditionError(f"window={self.window} must be < max_steps={self.max_steps}")
        if self.steady_tol <= 0:
            raise PreconditionError(f"steady_tol={self.steady_tol} must be positive")
        if self.seed < 0:
            raise PreconditionError(f"seed={self.seed} must be non-negative")

    @property
    def selection(self) -> SelectionParams:
        return SelectionParams(self.alpha)

    def with_seed(self, seed: int) -> "SimConfig":
        return replace(self, seed=seed)

    def to_dict(self):
        return {
            "rule": self.rule.value,
            "payoff": self.payoff.to_dict(),
            "alpha": self.alpha,
            "initial_pf": self.initial_pf,
            "max_steps": self.max_steps,
            "window": self.window,
            "steady_tol": self.steady_tol,
            "seed": self.seed,
        }


class _FitnessKernel:
    """Fitness d'un nœud à partir de sa stratégie, de ses voisins S_f et de son degré."""

    def __init__(self, payoff: PayoffMatrix, alpha: float):
        self.base = 1.0 - alpha
        self.w_ff = alpha * payoff.u_ff
        self.w_fn = alpha * payoff.u_fn
        self.w_nn = alpha * payoff.u_nn

    def __call__(self, strategy, forward_count, degree):
        if strategy == FORWARD:
            return self.base + self.w_ff * forward_count + self.w_fn * (degree - forward_count)
        return self.base + self.w_fn * forward_count + self.w_nn * (degree - forward_count)


class SimState:
    """
    Affectation des stratégies (1 = S_f, 0 = S_n) et compteurs maintenus
    incrémentalement : count_f, count_ff, count_fn, count_nn.

    `forward_neighbors[v]` est le nombre de voisins S_f de v ; un changement de
    stratégie coûte O(degré).
    """

    def __init__(self, graph: Graph, strategies: Sequence[int]):
        if len(strategies) != graph.node_count:
            raise PreconditionError("One strategy per node is required")
        self.graph = graph
        self.degrees = [len(row) for row in graph.adjacency]
        self.strategies = [FORWARD if s else NOT_FORWARD for s in strategies]
        self.step = 0
        self.last_update: Optional[Tuple[int, int]] = None
        self._kernel: Optional[_FitnessKernel] = None
        self.fitness: Optional[np.ndarray] = None
        (self.count_f, self.count_ff, self.count_fn, self.count_nn,
         self.forward_neighbors) = self._count()

    def _count(self):
        strategies = self.strategies
        forward_neighbors = [sum(strategies[u] for u in row) for row in self.graph.adjacency]
        count_ff = count_fn = 0
        for u, v in self.graph.edges():
            pair = strategies[u] + strategies[v]
            if pair == 2:
                count_ff += 1
            elif pair == 1:
                count_fn += 1
        count_nn = self.graph.edge_count - count_ff - count_fn
        return sum(strategies), count_ff, count_fn, count_nn, forward_neighbors

    def recount(self) -> Tuple[int, int, int, int]:
        """Recomptage complet (count_f, count_ff, count_fn, count_nn)."""
        return self._count()[:4]

    def verify(self):
        """
        Raises:
            SimulationInvariantError: compteurs incrémentaux incohérents
        """
        fresh = self._count()
        incremental = (self.count_f, self.count_ff, self.count_fn, self.count_nn)
        if fresh[:4] != incremental or fresh[4] != self.forward_neighbors:
            raise SimulationInvariantError(
                f"Counter drift at event {self.step}: incremental={incremental}, recount={fresh[:4]}")
        if self.fitness is not None:
            expected = np.array([self._kernel(s, f, d) for s, f, d in
                                 zip(self.strategies, self.forward_neighbors, self.degrees)])
            if not np.allclose(self.fitness, expected, rtol=0.0, atol=1e-9):
                raise SimulationInvariantError(f"Fitness drift at event {self.step}")

    def track_fitness(self, payoff: PayoffMatrix, alpha: float):
        """Active le tableau de fitness par nœud (sélection globale de la règle BD)."""
        self._kernel = _FitnessKernel(payoff, alpha)
        self.fitness = np.array([self._kernel(s, f, d) for s, f, d in
                                 zip(self.strategies, self.forward_neighbors, self.degrees)])

    @property
    def node_count(self) -> int:
        return self.graph.node_count

    @property
    def p_f(self) -> float:
        return self.count_f / self.graph.node_count

    def edge_fractions(self) -> Tuple[float, float, float]:
        edges = self.graph.edge_count
        if edges == 0:
            return 0.0, 0.0, 0.0
        return self.count_ff / edges, self.count_fn / edges, self.count_nn / edges

    @property
    def is_absorbed(self) -> bool:
        return self.count_f == 0 or self.count_f == self.graph.node_count

    def strategy_of(self, v: int) -> Strategy:
        return Strategy.FORWARD if self.strategies[v] == FORWARD else Strategy.NOT_FORWARD

    def flip(self, v: int):
        """Inverse la stratégie de v et met à jour les compteurs en O(degré)."""
        forward = self.forward_neighbors[v]
        other = self.degrees[v] - forward
        if self.strategies[v] == NOT_FORWARD:
            self.count_f += 1
            self.count_ff += forward
            self.count_fn += other - forward
            self.count_nn -= other
            delta = 1
        else:
            self.count_f -= 1
            self.count_ff -= forward
            self.count_fn += forward - other
            self.count_nn += other
            delta = -1
        self.strategies[v] ^= 1
        neighbors = self.graph.adjacency[v]
        for u in neighbors:
            self.forward_neighbors[u] += delta
        if self.fitness is not None:
            self._refresh_fitness(v)
            for u in neighbors:
                self._refresh_fitness(u)

    def _refresh_fitness(self, v):
        self.fitness[v] = self._kernel(self.strategies[v], self.forward_neighbors[v], self.degrees[v])

    def adopt(self, v: int, strategy: int):
        """v adopte `strategy` ; enregistre la mise à jour."""
        if self.strategies[v] != strategy:
            self.flip(v)
        self.last_update = (v, strategy)


def init_strategies(g: Graph, initial_pf: float, seed: int) -> SimState:
    """
    Chaque utilisateur choisit S_f indépendamment avec probabilité initial_pf.
    """
    if not 0.0 <= initial_pf <= 1.0:
        raise PreconditionError(f"initial_pf={initial_pf} must lie in [0, 1]")
    draws = np.random.Generator(np.random.PCG64(seed)).random(g.node_count)
    return SimState(g, (draws < initial_pf).astype(int).tolist())


def node_fitness(g: Graph, s: SimState, v: int, cfg: SimConfig) -> float:
    """
    (1-α) + α·Σ_{u∈adj(v)} payoff(stratégie(v), stratégie(u)) ; 1-α pour un nœud isolé.
    """
    if not 0 <= v < g.node_count:
        raise PreconditionError(f"Node {v} out of range")
    kernel = _FitnessKernel(cfg.payoff, cfg.alpha)
    return kernel(s.strategies[v], s.forward_neighbors[v], s.degrees[v])


def _kernel_for(s, cfg):
    kernel = s._kernel
    if kernel is None:
        kernel = _FitnessKernel(cfg.payoff, cfg.alpha)
        s._kernel = kernel
    return kernel


def _neighbor_weights(s, kernel, v):
    """(Σ fitness des voisins S_f, Σ fitness de tous les voisins) de v."""
    forward_weight = total = 0.0
    strategies, counts, degrees = s.strategies, s.forward_neighbors, s.degrees
    for u in s.graph.adjacency[v]:
        weight = kernel(strategies[u], counts[u], degrees[u])
        total += weight
        if strategies[u] == FORWARD:
            forward_weight += weight
    return forward_weight, total


def step_im(g: Graph, s: SimState, cfg: SimConfig, rng: RandomStream) -> SimState:
    """
    Imitation : un nœud choisi uniformément tire un élément de {lui-même} ∪
    voisins proportionnellement à la fitness et copie sa stratégie.
    """
    v = rng.index(g.node_count)
    s.step += 1
    if s.degrees[v] == 0:
        s.last_update = (v, s.strategies[v])
        return s
    kernel = _kernel_for(s, cfg)
    forward_weight, total = _neighbor_weights(s, kernel, v)
    own = kernel(s.strategies[v], s.forward_neighbors[v], s.degrees[v])
    total += own
    if s.strategies[v] == FORWARD:
        forward_weight += own
    s.adopt(v, FORWARD if rng.uniform() * total < forward_weight else NOT_FORWARD)
    return s


def step_db(g: Graph, s: SimState, cfg: SimConfig, rng: RandomStream) -> SimState:
    """
    Mort-naissance : un nœud choisi uniformément adopte la stratégie d'un voisin
    tiré proportionnellement à sa fitness.
    """
    v = rng.index(g.node_count)
    s.step += 1
    if s.degrees[v] == 0:
        s.last_update = (v, s.strategies[v])
        return s
    forward_weight, total = _neighbor_weights(s, _kernel_for(s, cfg), v)
    s.adopt(v, FORWARD if rng.uniform() * total < forward_weight else NOT_FORWARD)
    return s


def step_bd(g: Graph, s: SimState, cfg: SimConfig, rng: RandomStream) -> SimState:
    """
    Naissance-mort : un nœud tiré proportionnellement à sa fitness parmi tous
    les nœuds impose sa stratégie à un voisin choisi uniformément.
    """
    if s.fitness is None:
        s.track_fitness(cfg.payoff, cfg.alpha)
    cumulative = np.cumsum(s.fitness)
    target = rng.uniform() * cumulative[-1]
    parent = min(int(np.searchsorted(cumulative, target, side="right")), g.node_count - 1)
    s.step += 1
    neighbors = g.adjacency[parent]
    if not neighbors:
        s.last_update = (parent, s.strategies[parent])
        return s
    child = neighbors[rng.index(len(neighbors))]
    s.adopt(child, s.strategies[parent])
    return s


STEP_FUNCTIONS: Dict[UpdateRule, Callable] = {
    UpdateRule.IM: step_im,
    UpdateRule.BD: step_bd,
    UpdateRule.DB: step_db,
}


def one_step_distribution(g: Graph, strategies: Sequence[int], cfg: SimConfig) -> Dict[Tuple[int, int], float]:
    """
    Loi exacte du couple (nœud mis à jour, nouvelle stratégie) pour un
    événement, par énumération exhaustive des choix de sélection et de
    remplacement.
    """
    s = SimState(g, strategies)
    kernel = _FitnessKernel(cfg.payoff, cfg.alpha)
    n = g.node_count
    outcomes: Counter = Counter()
    if cfg.rule is UpdateRule.BD:
        weights = [kernel(st, f, d) for st, f, d in zip(s.strategies, s.forward_neighbors, s.degrees)]
        total = sum(weights)
        for parent, weight in enumerate(weights):
            neighbors = g.adjacency[parent]
            if not neighbors:
                outcomes[(parent, s.strategies[parent])] += weight / total
                continue
            for child in neighbors:
                outcomes[(child, s.strategies[parent])] += weight / total / len(neighbors)
        return dict(outcomes)

    for v in range(n):
        if s.degrees[v] == 0:
            outcomes[(v, s.strategies[v])] += 1.0 / n
            continue
        forward_weight, total = _neighbor_weights(s, kernel, v)
        if cfg.rule is UpdateRule.IM:
            own = kernel(s.strategies[v], s.forward_neighbors[v], s.degrees[v])
            total += own
            if s.strategies[v] == FORWARD:
                forward_weight += own
        p_forward = forward_weight / total
        outcomes[(v, FORWARD)] += p_forward / n
        outcomes[(v, NOT_FORWARD)] += (1.0 - p_forward) / n
    return {key: value for key, value in outcomes.items() if value > 0.0}


def sample_one_step(g: Graph, strategies: Sequence[int], cfg: SimConfig,
                    trials: int) -> Dict[Tuple[int, int], float]:
    """
    Loi empirique de (nœud mis à jour, nouvelle stratégie) sur `trials`
    événements indépendants partant tous du même état.
    """
    s = SimState(g, strategies)
    step = STEP_FUNCTIONS[cfg.rule]
    rng = RandomStream(derive_seed(cfg.seed, DYNAMICS_STREAM))
    original = list(s.strategies)
    counts: Counter = Counter()
    for _ in range(trials):
        step(g, s, cfg, rng)
        node, strategy = s.last_update
        counts[(node, strategy)] += 1
        if s.strategies[node] != original[node]:
            s.flip(node)
    return {key: value / trials for key, value in counts.items()}


def total_variation(p: Dict, q: Dict) -> float:
    keys = set(p) | set(q)
    return 0.5 * sum(abs(p.get(key, 0.0) - q.get(key, 0.0)) for key in keys)


def detect_steady(window_pf: Sequence[float], tol: float) -> bool:
    """
    Vrai ssi les moyennes de p_f sur les deux moitiés de la fenêtre diffèrent
    de moins de tol.
    """
    values = np.asarray(window_pf, dtype=float)
    if values.size < 2:
        raise PreconditionError("detect_steady needs at least two samples")
    half = values.size // 2
    return bool(abs(values[:half].mean() - values[half:].mean()) < tol)


class TrajectorySample(NamedTuple):
    step: int
    p_f: float
    p_ff: float
    p_fn: float
    p_nn: float


@dataclass
class Trajectory:
    """
    Série échantillonnée toutes les N mises à jour (une génération).

    Args:
        samples: (événement, p_f, p_ff, p_fn, p_nn) par génération
        terminal: Cause d'arrêt
        final_pf: Valeur absorbante, sinon moyenne de p_f sur la dernière fenêtre
    """

    samples: List[TrajectorySample]
    terminal: Terminal
    final_pf: float

    @property
    def generations(self) -> int:
        return len(self.samples) - 1

    def to_csv(self) -> str:
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(TrajectorySample._fields)
        for sample in self.samples:
            writer.writerow([sample.step] + [repr(float(x)) for x in sample[1:]])
        return buffer.getvalue()


def _sample(s):
    return TrajectorySample(s.step, s.p_f, *s.edge_fractions())


def run(g: Graph, cfg: SimConfig) -> Trajectory:
    """
    Applique la règle configurée jusqu'à l'absorption, la stationnarité ou
    max_steps générations ; échantillonne l'état toutes les N mises à jour.

    Returns:
        Trajectory déterministe pour (graphe, configuration)
    """
    s = init_strategies(g, cfg.initial_pf, derive_seed(cfg.seed, INIT_STREAM))
    rng = RandomStream(derive_seed(cfg.seed, DYNAMICS_STREAM))
    step = STEP_FUNCTIONS[cfg.rule]
    if cfg.rule is UpdateRule.BD:
        s.track_fitness(cfg.payoff, cfg.alpha)
    n = g.node_count
    debug = logger.isEnabledFor(logging.DEBUG)

    samples = [_sample(s)]
    terminal = None
    if not s.is_absorbed:
        for _ in range(cfg.max_steps):
            for _ in range(n):
                step(g, s, cfg, rng)
                if debug and s.step % DEBUG_VERIFY_EVERY == 0:
                    s.verify()
                if s.is_absorbed:
                    break
            samples.append(_sample(s))
            if s.is_absorbed:
                break
            if len(samples) >= cfg.window and detect_steady(
                    [sample.p_f for sample in samples[-cfg.window:]], cfg.steady_tol):
                terminal = Terminal.STEADY
                break
    s.verify()

    if s.is_absorbed:
        terminal = Terminal.ABSORBED_ALL_F if s.count_f == n else Terminal.ABSORBED_ALL_N
        final_pf = s.p_f
    else:
        terminal = terminal or Terminal.MAX_STEPS
        final_pf = float(np.mean([sample.p_f for sample in samples[-cfg.window:]]))
    logger.debug(f"Run seed={cfg.seed} ended {terminal.value} after {s.step} events, "
                 f"final p_f={final_pf:.4f}")
    return Trajectory(samples, terminal, final_pf)


@dataclass(frozen=True)
class EnsembleResult:
    """
    Agrégat des valeurs finales de p_f sur un ensemble de répétitions.
    """

    runs: int
    mean_final_pf: float
    std_final_pf: float
    per_run_final: Tuple[float, ...]
    regen_every: int
    terminals: Dict[str, int] = field(default_factory=dict)
    config: Optional[SimConfig] = None

    def to_dict(self):
        return {
            "config": self.config.to_dict() if self.config is not None else None,
            "runs": self.runs,
            "regen_every": self.regen_every,
            "mean_final_pf": self.mean_final_pf,
            "std_final_pf": self.std_final_pf,
            "terminals": dict(sorted(self.terminals.items())),
            "per_run_final": list(self.per_run_final),
        }


GraphSource = Union[Graph, Callable[[int], Graph]]


def _run_final(task):
    graph, cfg = task
    trajectory = run(graph, cfg)
    return trajectory.final_pf, trajectory.terminal.value


def run_ensemble(source: GraphSource, cfg: SimConfig, runs: int,
                 regen_every: int = DEFAULT_REGEN_EVERY, workers: int = 1) -> EnsembleResult:
    """
    Exécute `runs` simulations indépendantes et agrège p_f final.

    Args:
        source: Graphe fixe, ou fabrique seed -> Graph régénérée tous les regen_every runs
        cfg: Configuration ; la graine de chaque run est dérivée de (cfg.seed, indice)
        runs: Nombre de répétitions (≥ 1)
        regen_every: Période de régénération du graphe
        workers: Processus parallèles (1 = séquentiel, résultats identiques)

    Returns:
        EnsembleResult (écart type de population)
    """
    if runs < 1:
        raise PreconditionError(f"runs={runs} must be at least 1")
    if regen_every < 1:
        raise PreconditionError(f"regen_every={regen_every} must be at least 1")
    if workers < 1:
        raise PreconditionError(f"workers={workers} must be at least 1")

    tasks = []
    graph = source if isinstance(source, Graph) else None
    for index in range(runs):
        if not isinstance(source, Graph) and index % regen_every == 0:
            graph = source(derive_seed(cfg.seed, GRAPH_STREAM, index // regen_every))
        tasks.append((graph, cfg.with_seed(derive_seed(cfg.seed, RUN_STREAM, index))))

    if workers == 1:
        outcomes = [_run_final(task) for task in tasks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(_run_final, tasks))

    finals = tuple(final for final, _ in outcomes)
    terminals = dict(Counter(terminal for _, terminal in outcomes))
    result = EnsembleResult(runs, float(np.mean(finals)), float(np.std(finals)), finals,
                            regen_every, terminals, cfg)
    logger.info(f"Ensemble of {runs} {cfg.rule.value.upper()} runs: mean final p_f = "
                f"{result.mean_final_pf:.4f} ± {result.std_final_pf:.4f}")
    return result
