"""
Module game_core.py

Matrice de gains, fonctions de fitness et algèbre de l'état macroscopique du
réseau (état utilisateur p_f, état des arêtes p_ff/p_fn/p_nn, probabilités
conditionnelles et fermeture de paires).
"""

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Tuple

from scipy.stats import binom

from src.core.errors import DegenerateCaseError, PreconditionError

logger = logging.getLogger(__name__)

# Tolérance absolue des identités d'état
STATE_TOL = 1e-12

# Intensité de sélection et taille de population par défaut
DEFAULT_ALPHA = 0.1
DEFAULT_POPULATION = 1000


class Strategy(Enum):
    FORWARD = "f"
    NOT_FORWARD = "n"


class Regime(Enum):
    ALL_FORWARD = "AllForward"
    NONE_FORWARD = "NoneForward"
    ANTI_COORDINATION = "AntiCoordination"
    COORDINATION = "Coordination"
    DEGENERATE = "Degenerate"


@dataclass(frozen=True)
class PayoffMatrix:
    """
    Gains symétriques d'une arête selon les stratégies de ses extrémités.

    Args:
        u_ff: Gain quand les deux utilisateurs transmettent
        u_fn: Gain d'une paire mixte (symétrique)
        u_nn: Gain quand aucun ne transmet
    """

    u_ff: float
    u_fn: float
    u_nn: float

    def __post_init__(self):
        for name in ("u_ff", "u_fn", "u_nn"):
            value = getattr(self, name)
            if not 0.0 < value < 1.0:
                raise PreconditionError(f"{name}={value} must lie in the open interval (0, 1)")

    @classmethod
    def normalized(cls, u_ff: float, u_fn: float, u_nn: float, margin: float = 0.1) -> "PayoffMatrix":
        """
        Ramène trois gains bruts dans (0,1) par une application affine croissante.

        Les formules d'ESS fermées sont des rapports de différences de gains et
        sont donc inchangées par cette normalisation.

        Args:
            margin: Distance minimale aux bornes 0 et 1
        """
        raw = (u_ff, u_fn, u_nn)
        low, high = min(raw), max(raw)
        if high == low:
            return cls(0.5, 0.5, 0.5)
        scale = (1.0 - 2.0 * margin) / (high - low)
        return cls(*(margin + (value - low) * scale for value in raw))

    def payoff(self, own: Strategy, other: Strategy) -> float:
        if own is Strategy.FORWARD and other is Strategy.FORWARD:
            return self.u_ff
        if own is Strategy.NOT_FORWARD and other is Strategy.NOT_FORWARD:
            return self.u_nn
        return self.u_fn

    def as_tuple(self) -> Tuple[float, float, float]:
        return (self.u_ff, self.u_fn, self.u_nn)

    def to_dict(self):
        return {"u_ff": self.u_ff, "u_fn": self.u_fn, "u_nn": self.u_nn}


# Matrices PM1 à PM4 des expériences synthétiques
PAYOFF_PRESETS = {
    1: PayoffMatrix(0.8, 0.6, 0.4),
    2: PayoffMatrix(0.6, 0.8, 0.4),
    3: PayoffMatrix(0.4, 0.8, 0.6),
    4: PayoffMatrix(0.4, 0.6, 0.8),
}


def payoff_preset(index: int) -> PayoffMatrix:
    if index not in PAYOFF_PRESETS:
        raise PreconditionError(f"Payoff preset {index} not supported (choose 1-4)")
    return PAYOFF_PRESETS[index]


@dataclass(frozen=True)
class SelectionParams:
    """
    Intensité de sélection α ; la fitness de base B est fixée à 1.
    """

    alpha: float
    baseline: float = 1.0

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise PreconditionError(f"alpha={self.alpha} must lie in [0, 1]")
        if self.baseline != 1.0:
            raise PreconditionError("baseline fitness is normalized to 1")


def classify_regime(U: PayoffMatrix) -> Regime:
    """
    Classe la matrice de gains selon l'ordre de ses trois entrées.
    """
    u_ff, u_fn, u_nn = U.as_tuple()
    if u_ff == u_fn or u_fn == u_nn or u_ff == u_nn:
        return Regime.DEGENERATE
    if u_ff > u_fn > u_nn:
        return Regime.ALL_FORWARD
    if u_nn > u_fn > u_ff:
        return Regime.NONE_FORWARD
    if u_fn > u_ff and u_fn > u_nn:
        return Regime.ANTI_COORDINATION
    return Regime.COORDINATION


def _check_count(k, count, label):
    if k < 0 or not 0 <= count <= k:
        raise PreconditionError(f"{label}={count} must lie in [0, k={k}]")


def fitness_f(k: int, k_f: int, sel: SelectionParams, U: PayoffMatrix) -> float:
    """
    Fitness d'un utilisateur S_f ayant k voisins dont k_f transmettent.

    Returns:
        (1-α) + α·[k_f·u_ff + (k-k_f)·u_fn]
    """
    _check_count(k, k_f, "k_f")
    return (1.0 - sel.alpha) * sel.baseline + sel.alpha * (k_f * U.u_ff + (k - k_f) * U.u_fn)


def fitness_n(k: int, k_n: int, sel: SelectionParams, U: PayoffMatrix) -> float:
    """
    Fitness d'un utilisateur S_n ayant k voisins dont k_n ne transmettent pas.

    Returns:
        (1-α) + α·[k_n·u_nn + (k-k_n)·u_fn]
    """
    _check_count(k, k_n, "k_n")
    return (1.0 - sel.alpha) * sel.baseline + sel.alpha * (k_n * U.u_nn + (k - k_n) * U.u_fn)


def _config_prob(k, count, p, label):
    _check_count(k, count, label)
    if not 0.0 <= p <= 1.0:
        raise PreconditionError(f"Conditional probability {p} outside [0, 1]")
    return float(binom.pmf(count, k, p))


def config_prob_f(k: int, k_f: int, p_ff_cond: float) -> float:
    """θ_f(k, k_f) : probabilité binomiale de k_f voisins S_f autour d'un S_f."""
    return _config_prob(k, k_f, p_ff_cond, "k_f")


def config_prob_n(k: int, k_n: int, p_nn_cond: float) -> float:
    """θ_n(k, k_n) : probabilité binomiale de k_n voisins S_n autour d'un S_n."""
    return _config_prob(k, k_n, p_nn_cond, "k_n")


@dataclass(frozen=True)
class NetworkState:
    """
    État macroscopique du réseau décrit par (p_f, p_ff).

    Les conditionnelles relatives à une classe vide (p_f = 0 ou p_f = 1) valent
    None : elles sont vacantes plutôt que 0/0. Pour un état issu de la
    fermeture de paires, les valeurs de la formule sont conservées mais la
    classe vide est signalée dans `vacuous_classes`.
    """

    p_f: float
    p_ff: float
    p_n: float
    p_fn: float
    p_nn: float
    p_f_given_f: Optional[float]
    p_n_given_f: Optional[float]
    p_f_given_n: Optional[float]
    p_n_given_n: Optional[float]
    vacuous_classes: Tuple[Strategy, ...] = ()

    @property
    def is_boundary(self) -> bool:
        return bool(self.vacuous_classes)

    @property
    def conditionals(self) -> Tuple[float, float, float, float]:
        """(p_f|f, p_n|f, p_f|n, p_n|n) ; refusé sur un état frontière."""
        if self.is_boundary:
            raise DegenerateCaseError("Conditionals are vacuous on a boundary state")
        return (self.p_f_given_f, self.p_n_given_f, self.p_f_given_n, self.p_n_given_n)

    def to_dict(self):
        return {
            "p_f": self.p_f, "p_ff": self.p_ff, "p_n": self.p_n,
            "p_fn": self.p_fn, "p_nn": self.p_nn,
            "p_f|f": self.p_f_given_f, "p_n|f": self.p_n_given_f,
            "p_f|n": self.p_f_given_n, "p_n|n": self.p_n_given_n,
            "vacuous": [s.value for s in self.vacuous_classes],
        }


def _vacuous_classes(p_f):
    if p_f <= 0.0:
        return (Strategy.FORWARD,)
    if p_f >= 1.0:
        return (Strategy.NOT_FORWARD,)
    return ()


def is_feasible(p_f: float, p_ff: float, tol: float = STATE_TOL) -> bool:
    """p_f ∈ [0,1], p_ff ≥ 0, p_ff ≤ p_f et p_nn = 1 - 2p_f + p_ff ≥ 0."""
    return (-tol <= p_f <= 1.0 + tol and p_ff >= -tol
            and p_ff <= p_f + tol and p_ff >= 2.0 * p_f - 1.0 - tol)


def state_from_pf_pff(p_f: float, p_ff: float) -> NetworkState:
    """
    Assemble l'état complet à partir de (p_f, p_ff).

    Args:
        p_f: Fraction des utilisateurs S_f
        p_ff: Fraction des arêtes (f, f)

    Returns:
        NetworkState ; conditionnelles vacantes (None) sur une classe vide

    Raises:
        PreconditionError: couple non réalisable
    """
    if not -STATE_TOL <= p_f <= 1.0 + STATE_TOL:
        raise PreconditionError(f"p_f={p_f} outside [0, 1]")
    if not is_feasible(p_f, p_ff):
        raise PreconditionError(
            f"Infeasible state (p_f={p_f}, p_ff={p_ff}): need max(0, 2p_f-1) <= p_ff <= p_f")
    p_f = min(max(p_f, 0.0), 1.0)
    p_ff = min(max(p_ff, 0.0, 2.0 * p_f - 1.0), p_f)
    p_n = 1.0 - p_f
    # Arêtes mixtes : p_f·p_n|f + p_n·p_f|n = 2(p_f - p_ff)
    p_fn = 2.0 * (p_f - p_ff)
    p_nn = 1.0 - p_ff - p_fn
    vacuous = _vacuous_classes(p_f)
    if vacuous:
        return NetworkState(p_f, p_ff, p_n, p_fn, p_nn, None, None, None, None, vacuous)
    p_f_given_f = p_ff / p_f
    p_n_given_n = p_nn / p_n
    return NetworkState(p_f, p_ff, p_n, p_fn, p_nn,
                        p_f_given_f, 1.0 - p_f_given_f, 1.0 - p_n_given_n, p_n_given_n)


def closure_state(p_f: float, effective_degree: float) -> NetworkState:
    """
    Fermeture de paires pour un degré effectif réel κ > 2 :
    p_f|f - p_f|n = 1/(κ-1), toutes les grandeurs exprimées par p_f seul.
    """
    if effective_degree <= 2.0:
        raise DegenerateCaseError(f"Pair closure needs an effective degree > 2, got {effective_degree}")
    if not 0.0 <= p_f <= 1.0:
        raise PreconditionError(f"p_f={p_f} outside [0, 1]")
    shrink = (effective_degree - 2.0) / (effective_degree - 1.0)
    p_f_given_f = p_f + (1.0 - p_f) / (effective_degree - 1.0)
    p_f_given_n = shrink * p_f
    p_n_given_f = shrink * (1.0 - p_f)
    p_n_given_n = 1.0 - shrink * p_f
    p_n = 1.0 - p_f
    p_ff = p_f * p_f_given_f
    p_nn = p_n * p_n_given_n
    p_fn = p_f * p_n_given_f + p_n * p_f_given_n
    return NetworkState(p_f, p_ff, p_n, p_fn, p_nn,
                        p_f_given_f, p_n_given_f, p_f_given_n, p_n_given_n,
                        _vacuous_classes(p_f))


def pair_closure(p_f: float, k: int) -> NetworkState:
    """
    Fermeture de paires sur un graphe k-régulier (k ≥ 3).

    Aux frontières p_f ∈ {0, 1}, les valeurs des formules sont rapportées mais
    la classe vide est marquée vacante.
    """
    if int(k) != k or k < 3:
        raise PreconditionError(f"Pair closure requires an integer degree k >= 3, got {k}")
    return closure_state(p_f, float(k))


def _neighbor_fitnesses(state, k, sel, U):
    """
    Fitness moyennes des voisins sous approximation de paires :
    (π_f|f, π_n|f, π_f|n, π_n|n).
    """
    p_ff_c, p_nf_c, p_fn_c, p_nn_c = state.conditionals
    base = 1.0 - sel.alpha
    a = sel.alpha
    pi_f_f = base + a * ((k - 1) * p_nf_c * U.u_fn + ((k - 1) * p_ff_c + 1) * U.u_ff)
    pi_n_f = base + a * ((k - 1) * p_nn_c * U.u_nn + ((k - 1) * p_fn_c + 1) * U.u_fn)
    pi_f_n = base + a * ((k - 1) * p_ff_c * U.u_ff + ((k - 1) * p_nf_c + 1) * U.u_fn)
    pi_n_n = base + a * ((k - 1) * p_fn_c * U.u_fn + ((k - 1) * p_nn_c + 1) * U.u_nn)
    return pi_f_f, pi_n_f, pi_f_n, pi_n_n


def im_switch_probability(k: int, same_count: int, own_fitness: float,
                          same_fitness: float, other_fitness: float) -> float:
    """
    Probabilité IM qu'un utilisateur adopte la stratégie opposée :
    (k - k_s)·π_autre / (k_s·π_même + (k - k_s)·π_autre + π_propre).
    """
    _check_count(k, same_count, "same_count")
    other = (k - same_count) * other_fitness
    return other / (same_count * same_fitness + other + own_fitness)


def transition_probabilities_im(state: NetworkState, k: int, sel: SelectionParams,
                                U: PayoffMatrix) -> Tuple[float, float]:
    """
    Probabilités exactes (tous ordres en α) d'un événement IM sur un graphe
    k-régulier sous approximation de paires.

    Returns:
        (Prob(Δp_f = +1/N), Prob(Δp_f = -1/N)) ; (0, 0) sur un état frontière
    """
    if state.is_boundary:
        return 0.0, 0.0
    pi_f_f, pi_n_f, pi_f_n, pi_n_n = _neighbor_fitnesses(state, k, sel, U)
    p_up = 0.0
    for k_n in range(k + 1):
        own = fitness_n(k, k_n, sel, U)
        p_up += config_prob_n(k, k_n, state.p_n_given_n) * im_switch_probability(
            k, k_n, own, pi_n_n, pi_f_n)
    p_down = 0.0
    for k_f in range(k + 1):
        own = fitness_f(k, k_f, sel, U)
        p_down += config_prob_f(k, k_f, state.p_f_given_f) * im_switch_probability(
            k, k_f, own, pi_f_f, pi_n_f)
    return state.p_n * p_up, state.p_f * p_down
