"""
Module ess_analytics.py

Dynamiques fermées de (p_f, p_ff) sous sélection faible, états stables
évolutionnaires (graphes à degré uniforme, distributions de degré
quelconques, cas Erdős-Rényi et Barabási-Albert), classification de stabilité
par jacobienne numérique et inversion d'un ESS observé en contrainte sur la
matrice de gains.
"""

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Tuple, Union

import numpy as np

from src.core.errors import DegenerateCaseError, NotAFixedPointError, PreconditionError
from src.core.netgraph import DegreeStats
from src.game.game_core import (
    DEFAULT_ALPHA,
    DEFAULT_POPULATION,
    NetworkState,
    PayoffMatrix,
    Regime,
    SelectionParams,
    classify_regime,
    closure_state,
    is_feasible,
    state_from_pf_pff,
)

logger = logging.getLogger(__name__)

DegreeDescriptor = Union[int, DegreeStats]

DENOMINATOR_TOL = 1e-12
FIXED_POINT_TOL = 1e-9
JACOBIAN_STEP = 1e-6
# Distance à un coin (0,0)/(1,1) du point de sonde de la jacobienne
CORNER_OFFSET = 1e-2
# Valeurs de u_nn utilisées pour vérifier une inversion
INVERSION_SAMPLES = (0.25, 0.5, 0.75)


class Stability(Enum):
    STABLE = "stable"
    UNSTABLE = "unstable"
    SADDLE = "saddle"
    INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class DynamicsCoefficients:
    """
    Coefficients γ1, γ2, γ3 de ṗ_f (évalués en un état) et a, b de la
    dynamique réduite (fonctions de k et des gains seuls).
    """

    gamma1: float
    gamma2: float
    gamma3: float
    a: float
    b: float


def reduced_coefficients(k: float, U: PayoffMatrix) -> Tuple[float, float]:
    """
    Returns:
        (a, b) avec a = (k-2)(u_ff - 2u_fn + u_nn), b = (k-1)u_nn - (k-2)u_fn - u_ff
    """
    a = (k - 2) * (U.u_ff - 2.0 * U.u_fn + U.u_nn)
    b = (k - 1) * U.u_nn - (k - 2) * U.u_fn - U.u_ff
    return a, b


def dynamics_coefficients(state: NetworkState, k: int, U: PayoffMatrix) -> DynamicsCoefficients:
    """
    Calcule γ1..γ3 à l'état donné et (a, b) pour le degré k.
    """
    p_ff_c, p_nf_c, p_fn_c, p_nn_c = state.conditionals
    spread = (k - 1) * (p_nn_c + p_ff_c)
    gamma1 = -p_nn_c * (spread + 3.0)
    gamma2 = p_nn_c - p_ff_c + (p_nf_c - p_fn_c) * (spread + 2.0)
    gamma3 = p_ff_c * (spread + 3.0)
    a, b = reduced_coefficients(k, U)
    return DynamicsCoefficients(gamma1, gamma2, gamma3, a, b)


def _require_uniform_degree(k):
    if int(k) != k or k < 3:
        raise PreconditionError(f"Uniform-degree dynamics need an integer k >= 3, got {k}")
    return int(k)


def _require_population(N):
    if N <= 0:
        raise PreconditionError(f"Population size N must be positive, got {N}")


def pf_dot_uniform(state: NetworkState, k: int, sel: SelectionParams, N: int,
                   U: PayoffMatrix) -> float:
    """
    Variation espérée de p_f par unité de temps sous la règle IM (ordre α).

    Args:
        state: État du réseau
        k: Degré uniforme (≥ 3)
        sel: Intensité de sélection
        N: Nombre d'utilisateurs
        U: Matrice de gains

    Returns:
        α·k(k-1)·p_fn / (2N(k+1)²) · (γ1·u_nn + γ2·u_fn + γ3·u_ff) ; 0 sur un état frontière
    """
    k = _require_uniform_degree(k)
    _require_population(N)
    if state.is_boundary or state.p_fn == 0.0:
        return 0.0
    coeffs = dynamics_coefficients(state, k, U)
    prefactor = sel.alpha * k * (k - 1) * state.p_fn / (2.0 * N * (k + 1) ** 2)
    return prefactor * (coeffs.gamma1 * U.u_nn + coeffs.gamma2 * U.u_fn + coeffs.gamma3 * U.u_ff)


def pff_dot_uniform(state: NetworkState, k: int, N: int) -> float:
    """
    Variation espérée de p_ff (ordre 0 en α) :
    p_fn/((k+1)N) · (1 + (k-1)(p_f|n - p_f|f)).
    """
    k = _require_uniform_degree(k)
    _require_population(N)
    if state.is_boundary or state.p_fn == 0.0:
        return 0.0
    return state.p_fn / ((k + 1) * N) * (1.0 + (k - 1) * (state.p_f_given_n - state.p_f_given_f))


def reduced_pf_dot(p_f: float, k: int, sel: SelectionParams, N: int, U: PayoffMatrix) -> float:
    """
    Dynamique de p_f sur la variété de fermeture de paires :
    α·k(k-2)(k+3) / (N(k-1)(k+1)²) · p_f(1-p_f)(a·p_f - b).

    Coïncide avec pf_dot_uniform évalué en pair_closure(p_f, k).
    """
    k = _require_uniform_degree(k)
    _require_population(N)
    a, b = reduced_coefficients(k, U)
    prefactor = sel.alpha * k * (k - 2) * (k + 3) / (N * (k - 1) * (k + 1) ** 2)
    return prefactor * p_f * (1.0 - p_f) * (a * p_f - b)


def interior_ess(U: PayoffMatrix, effective_degree: float) -> float:
    """
    Candidat intérieur brut (non borné) pour un degré effectif κ :
    [(κ-2)(u_fn-u_nn) + (u_ff-u_nn)] / [(κ-2)(2u_fn-u_ff-u_nn)].

    Raises:
        DegenerateCaseError: dénominateur nul
    """
    shift = effective_degree - 2.0
    denominator = shift * (2.0 * U.u_fn - U.u_ff - U.u_nn)
    if abs(denominator) < DENOMINATOR_TOL:
        raise DegenerateCaseError(
            f"Interior ESS undefined: vanishing denominator for {U.as_tuple()} at degree {effective_degree}")
    return (shift * (U.u_fn - U.u_nn) + (U.u_ff - U.u_nn)) / denominator


def ess_approx_large_k(U: PayoffMatrix) -> float:
    """
    Approximation k ≫ 2 : 1 / (1 + (u_fn - u_ff)/(u_fn - u_nn)).
    """
    if U.u_fn == U.u_nn:
        raise DegenerateCaseError("Large-k approximation undefined for u_fn == u_nn")
    denominator = 1.0 + (U.u_fn - U.u_ff) / (U.u_fn - U.u_nn)
    if abs(denominator) < DENOMINATOR_TOL:
        raise DegenerateCaseError("Large-k approximation undefined for 2u_fn == u_ff + u_nn")
    return 1.0 / denominator


def mean_fitness_bar(state: NetworkState, N: int, U: PayoffMatrix) -> float:
    """π̄ = N·(p_ff·u_ff + p_fn·u_fn + p_nn·u_nn)."""
    return N * (state.p_ff * U.u_ff + state.p_fn * U.u_fn + state.p_nn * U.u_nn)


def _require_mean_degree(mean_degree):
    if mean_degree <= 1.0:
        raise PreconditionError(f"Non-uniform dynamics need a mean degree > 1, got {mean_degree}")


def pf_dot_nonuniform(state: NetworkState, mean_degree: float, sel: SelectionParams, N: int,
                      U: PayoffMatrix) -> float:
    """
    Variation espérée de p_f sous la règle BD pour une distribution de degrés
    de moyenne k̄ :
    α(k̄-1)·p_fn / (2π̄N) · [p_f|f(u_ff - u_fn) - p_n|n(u_nn - u_fn)].
    """
    _require_mean_degree(mean_degree)
    _require_population(N)
    if state.is_boundary or state.p_fn == 0.0:
        return 0.0
    bracket = (state.p_f_given_f * (U.u_ff - U.u_fn)
               - state.p_n_given_n * (U.u_nn - U.u_fn))
    return sel.alpha * (mean_degree - 1.0) * state.p_fn / (
        2.0 * mean_fitness_bar(state, N, U) * N) * bracket


def prob_increase_nonuniform(state: NetworkState, mean_degree: float, sel: SelectionParams,
                             N: int, U: PayoffMatrix) -> float:
    """
    Prob(Δp_f = +1/N) sous BD : un S_f choisi proportionnellement à sa fitness
    remplace un voisin S_n. Moments binomiaux exacts, degré moyenné par k̄.
    """
    _require_mean_degree(mean_degree)
    if state.is_boundary:
        return 0.0
    p_ff_c, p_nf_c = state.p_f_given_f, state.p_n_given_f
    payoff = U.u_ff * (mean_degree - 1.0) * p_ff_c + U.u_fn * (p_ff_c + mean_degree * p_nf_c)
    weight = (1.0 - sel.alpha) + sel.alpha * payoff
    return state.p_f * p_nf_c / mean_fitness_bar(state, N, U) * weight


def prob_decrease_nonuniform(state: NetworkState, mean_degree: float, sel: SelectionParams,
                             N: int, U: PayoffMatrix) -> float:
    """
    Prob(Δp_f = -1/N) sous BD : un S_n choisi proportionnellement à sa fitness
    remplace un voisin S_f.
    """
    _require_mean_degree(mean_degree)
    if state.is_boundary:
        return 0.0
    p_nn_c, p_fn_c = state.p_n_given_n, state.p_f_given_n
    payoff = U.u_nn * (mean_degree - 1.0) * p_nn_c + U.u_fn * (p_nn_c + mean_degree * p_fn_c)
    weight = (1.0 - sel.alpha) + sel.alpha * payoff
    return state.p_n * p_fn_c / mean_fitness_bar(state, N, U) * weight


def pff_dot_nonuniform(state: NetworkState, stats: DegreeStats, sel: SelectionParams, N: int,
                       U: PayoffMatrix) -> float:
    """
    Variation espérée de p_ff sous BD. Le voisin remplacé a un degré moyen
    κ = E[k²]/E[k] (biais d'amitié) :
    [((κ-1)p_f|n + 1)·Prob(+) - (κ-1)p_f|f·Prob(-)] / (k̄N/2).
    """
    if stats.mean_degree <= 0:
        raise PreconditionError("pff_dot_nonuniform needs a positive mean degree")
    _require_population(N)
    if state.is_boundary or state.p_fn == 0.0:
        return 0.0
    kappa = stats.moment_ratio
    mean_degree = stats.mean_degree
    up = prob_increase_nonuniform(state, mean_degree, sel, N, U)
    down = prob_decrease_nonuniform(state, mean_degree, sel, N, U)
    scale = mean_degree * N / 2.0
    return (((kappa - 1.0) * state.p_f_given_n + 1.0) * up
            - (kappa - 1.0) * state.p_f_given_f * down) / scale


def erdos_renyi_stats(mean_degree: float) -> DegreeStats:
    """Moments d'une loi de Poisson : E[k²] = k̄(k̄+1)."""
    return DegreeStats.from_moments(mean_degree, mean_degree * (mean_degree + 1.0))


def barabasi_albert_stats(mean_degree: float, n: int, log_base: float = math.e) -> DegreeStats:
    """Règle de moments d'un réseau sans échelle (ξ = 3) : E[k²] ≈ k̄²·log(N)/4."""
    if n < 2:
        raise PreconditionError(f"Barabasi-Albert moment rule needs n >= 2, got {n}")
    kappa = mean_degree * math.log(n, log_base) / 4.0
    return DegreeStats.from_moments(mean_degree, mean_degree * kappa, exponent_hint=3.0)


def effective_degree(descriptor: DegreeDescriptor) -> float:
    """κ : k pour un graphe uniforme, E[k²]/E[k] pour une distribution."""
    if isinstance(descriptor, DegreeStats):
        return descriptor.moment_ratio
    return float(_require_uniform_degree(descriptor))


@dataclass(frozen=True)
class JacobianAnalysis:
    """
    Jacobienne 2×2 de (ṗ_f, ṗ_ff) en un point fixe et son diagnostic.

    Args:
        point: Point fixe (p_f, p_ff)
        evaluated_at: Point où les différences finies ont été prises
        matrix: Jacobienne
        determinant, trace: Invariants de la jacobienne
        label: Étiquette de stabilité
    """

    point: Tuple[float, float]
    evaluated_at: Tuple[float, float]
    matrix: np.ndarray = field(compare=False)
    determinant: float
    trace: float
    label: Stability

    def to_dict(self):
        return {
            "p_f": self.point[0],
            "p_ff": self.point[1],
            "evaluated_at": list(self.evaluated_at),
            "jacobian": self.matrix.tolist(),
            "det": self.determinant,
            "trace": self.trace,
            "label": self.label.value,
        }


def _dynamics_field(descriptor, sel, N, U):
    """Champ de vecteurs (p_f, p_ff) -> (ṗ_f, ṗ_ff) adapté au descripteur."""
    if isinstance(descriptor, DegreeStats):
        stats = descriptor

        def vector(p_f, p_ff):
            state = state_from_pf_pff(p_f, p_ff)
            return np.array([pf_dot_nonuniform(state, stats.mean_degree, sel, N, U),
                             pff_dot_nonuniform(state, stats, sel, N, U)])
    else:
        k = _require_uniform_degree(descriptor)

        def vector(p_f, p_ff):
            state = state_from_pf_pff(p_f, p_ff)
            return np.array([pf_dot_uniform(state, k, sel, N, U), pff_dot_uniform(state, k, N)])
    return vector


def _strictly_interior(p_f, p_ff):
    return 0.0 < p_f < 1.0 and is_feasible(p_f, p_ff, tol=0.0)


def _partial(vector, point, axis, h):
    base = np.array(point, dtype=float)
    step = np.zeros(2)
    step[axis] = h
    forward, backward = base + step, base - step
    forward_ok = _strictly_interior(*forward)
    backward_ok = _strictly_interior(*backward)
    if forward_ok and backward_ok:
        return (vector(*forward) - vector(*backward)) / (2.0 * h)
    if forward_ok:
        return (vector(*forward) - vector(*base)) / h
    if backward_ok:
        return (vector(*base) - vector(*backward)) / h
    raise DegenerateCaseError(f"No feasible finite-difference stencil around {point}")


def classify_jacobian(matrix: np.ndarray) -> Stability:
    """
    stable ssi det > tol et tr < -tol ; instable ssi det > tol et tr > tol ;
    col ssi det < -tol ; sinon non concluant. Tolérance 1e-12 mise à
    l'échelle par la norme de la matrice.
    """
    norm = float(np.linalg.norm(matrix))
    det = float(np.linalg.det(matrix))
    trace = float(np.trace(matrix))
    tol_det = 1e-12 * norm ** 2
    tol_trace = 1e-12 * norm
    if det > tol_det and trace < -tol_trace:
        return Stability.STABLE
    if det > tol_det and trace > tol_trace:
        return Stability.UNSTABLE
    if det < -tol_det:
        return Stability.SADDLE
    return Stability.INCONCLUSIVE


def jacobian_analysis(descriptor: DegreeDescriptor, sel: SelectionParams, N: int,
                      U: PayoffMatrix, fixed_point: Tuple[float, float],
                      h: float = JACOBIAN_STEP) -> JacobianAnalysis:
    """
    Jacobienne par différences finies centrées au point fixe.

    Aux coins (0,0) et (1,1) le champ n'est pas différentiable mais il est
    homogène de degré un : sa jacobienne est évaluée en un point de sonde sur
    le rayon de fermeture de paires, à distance CORNER_OFFSET du coin.

    Raises:
        NotAFixedPointError: |ṗ_f| ou |ṗ_ff| ≥ 1e-9 au point donné
    """
    p_f, p_ff = float(fixed_point[0]), float(fixed_point[1])
    if not is_feasible(p_f, p_ff):
        raise PreconditionError(f"Point ({p_f}, {p_ff}) is not a feasible network state")
    vector = _dynamics_field(descriptor, sel, N, U)
    values = vector(p_f, p_ff)
    if np.any(np.abs(values) >= FIXED_POINT_TOL):
        raise NotAFixedPointError(
            f"({p_f}, {p_ff}) is not a fixed point: p_f_dot={values[0]:.3e}, p_ff_dot={values[1]:.3e}")

    if 0.0 < p_f < 1.0:
        evaluated_at = (p_f, p_ff)
    else:
        kappa = effective_degree(descriptor)
        corner_pf = CORNER_OFFSET if p_f < 0.5 else 1.0 - CORNER_OFFSET
        ray = closure_state(corner_pf, kappa)
        evaluated_at = (ray.p_f, ray.p_ff)

    matrix = np.column_stack([_partial(vector, evaluated_at, 0, h), _partial(vector, evaluated_at, 1, h)])
    label = classify_jacobian(matrix)
    logger.debug(f"Jacobian at {evaluated_at}: det={np.linalg.det(matrix):.3e}, "
                 f"trace={np.trace(matrix):.3e}, label={label.value}")
    return JacobianAnalysis((p_f, p_ff), evaluated_at, matrix, float(np.linalg.det(matrix)),
                            float(np.trace(matrix)), label)


def jacobian_stability(descriptor: DegreeDescriptor, sel: SelectionParams, N: int,
                       U: PayoffMatrix, fixed_point: Tuple[float, float]) -> Stability:
    """
    Étiquette de stabilité d'un point fixe : critère det(J) > 0 et tr(J) < 0.

    Args:
        descriptor: Degré k (graphe uniforme, dynamique IM) ou DegreeStats (dynamique BD)
        fixed_point: (p_f, p_ff)
    """
    return jacobian_analysis(descriptor, sel, N, U, fixed_point).label


@dataclass(frozen=True)
class EssResult:
    """
    Points fixes, ESS sélectionné et étiquettes de stabilité.

    Args:
        fixed_points: Valeurs de p_f des points fixes (0, éventuel intérieur, 1)
        selected_ess: ESS retenu par la disjonction de cas
        regime: Régime de la matrice de gains
        stability: Une étiquette par point fixe, dans le même ordre
        interior_candidate: Candidat intérieur brut (None si non calculé)
        effective_degree: κ utilisé
    """

    fixed_points: Tuple[float, ...]
    selected_ess: float
    regime: Regime
    stability: Tuple[Stability, ...]
    interior_candidate: Optional[float]
    effective_degree: float

    def label_of(self, p_f: float) -> Stability:
        for point, label in zip(self.fixed_points, self.stability):
            if abs(point - p_f) < 1e-12:
                return label
        raise KeyError(p_f)

    def to_dict(self):
        return {
            "fixed_points": list(self.fixed_points),
            "selected_ess": self.selected_ess,
            "regime": self.regime.value,
            "stability": [label.value for label in self.stability],
            "interior_candidate": self.interior_candidate,
            "effective_degree": self.effective_degree,
        }


def boundary_ess(U: PayoffMatrix, effective_degree: float, candidate: float) -> float:
    """
    Bord attracteur quand le candidat intérieur sort de (0,1).

    Sur la variété de fermeture, ṗ_f a le signe de a·(p_f - candidat) avec
    a = (κ-2)(u_ff - 2u_fn + u_nn), pour IM comme pour BD : ce signe est
    constant sur (0,1) et désigne le bord stable.
    """
    a, _ = reduced_coefficients(effective_degree, U)
    rising = a > 0.0 if candidate <= 0.0 else a < 0.0
    return 1.0 if rising else 0.0


def _case_split(U, kappa, descriptor, sel, N):
    if U.u_ff > U.u_fn > U.u_nn:
        selected, interior = 1.0, None
    elif U.u_nn > U.u_fn > U.u_ff:
        selected, interior = 0.0, None
    else:
        interior = interior_ess(U, kappa)
        if 0.0 < interior < 1.0:
            selected = interior
        else:
            selected = boundary_ess(U, kappa, interior)

    points = [0.0, 1.0]
    if interior is not None and 0.0 < interior < 1.0:
        points.insert(1, interior)

    labels = []
    for p_f in points:
        if p_f in (0.0, 1.0):
            p_ff = p_f
        else:
            p_ff = closure_state(p_f, kappa).p_ff
        labels.append(jacobian_stability(descriptor, sel, N, U, (p_f, p_ff)))
    return EssResult(tuple(points), selected, classify_regime(U), tuple(labels), interior, kappa)


def _default_sel(sel):
    return sel if sel is not None else SelectionParams(DEFAULT_ALPHA)


def ess_uniform(U: PayoffMatrix, k: int, sel: Optional[SelectionParams] = None,
                N: int = DEFAULT_POPULATION) -> EssResult:
    """
    ESS d'un graphe à degré uniforme k sous IM.

    u_ff > u_fn > u_nn sélectionne 1, u_nn > u_fn > u_ff sélectionne 0, sinon
    le candidat intérieur b/a s'il tombe dans (0,1), le bord attracteur
    (boundary_ess) sinon. Chaque point fixe reçoit une étiquette de la jacobienne.
    """
    k = _require_uniform_degree(k)
    result = _case_split(U, float(k), k, _default_sel(sel), N)
    logger.info(f"Computed uniform-degree ESS for {U.as_tuple()}, k={k}: {result.selected_ess:.6f}")
    return result


def ess_nonuniform(U: PayoffMatrix, stats: DegreeStats, sel: Optional[SelectionParams] = None,
                   N: int = DEFAULT_POPULATION) -> EssResult:
    """
    ESS pour une distribution de degrés quelconque sous BD, degré effectif
    κ = E[k²]/E[k].

    Raises:
        DegenerateCaseError: κ ≤ 2 ou dénominateur nul
    """
    kappa = stats.moment_ratio
    if kappa <= 2.0:
        raise DegenerateCaseError(f"Non-uniform ESS needs a moment ratio > 2, got {kappa}")
    if stats.mean_degree <= 1.0:
        raise DegenerateCaseError(f"Non-uniform ESS needs a mean degree > 1, got {stats.mean_degree}")
    result = _case_split(U, kappa, stats, _default_sel(sel), N)
    logger.info(f"Computed non-uniform ESS for {U.as_tuple()}, kappa={kappa:.4f}: "
                f"{result.selected_ess:.6f}")
    return result


def ess_er(U: PayoffMatrix, mean_degree: float, sel: Optional[SelectionParams] = None,
           N: int = DEFAULT_POPULATION) -> EssResult:
    """ESS d'un réseau Erdős-Rényi : κ = k̄ + 1."""
    if mean_degree <= 1.0:
        raise DegenerateCaseError(f"Erdos-Renyi ESS needs a mean degree > 1, got {mean_degree}")
    return ess_nonuniform(U, erdos_renyi_stats(mean_degree), sel, N)


def ess_ba(U: PayoffMatrix, mean_degree: float, n: int, sel: Optional[SelectionParams] = None,
           N: Optional[int] = None, log_base: float = math.e) -> EssResult:
    """
    ESS d'un réseau Barabási-Albert : κ = k̄·log(n)/4 (logarithme naturel par défaut).

    Raises:
        DegenerateCaseError: k̄·log(n) ≤ 8
    """
    stats = barabasi_albert_stats(mean_degree, n, log_base)
    if stats.moment_ratio <= 2.0:
        raise DegenerateCaseError(
            f"Barabasi-Albert ESS needs mean_degree*log(n) > 8, got {4.0 * stats.moment_ratio:.4f}")
    return ess_nonuniform(U, stats, sel, N if N is not None else n)


def ess_from_degree(U: PayoffMatrix, descriptor: DegreeDescriptor,
                    sel: Optional[SelectionParams] = None, N: int = DEFAULT_POPULATION) -> EssResult:
    if isinstance(descriptor, DegreeStats):
        return ess_nonuniform(U, descriptor, sel, N)
    return ess_uniform(U, descriptor, sel, N)


class InversionMode(Enum):
    EXACT = "exact"
    LARGE_K = "large_k"


@dataclass(frozen=True)
class PayoffRelation:
    """
    Relation affine u_ff = slope·u_nn + intercept avec u_fn = 1.

    Args:
        p_star: ESS observé inversé
        mode: exact (formule intérieure au degré donné) ou large_k
        ratio: (1 - u_ff)/(1 - u_nn) en mode large_k, None sinon
        effective_degree: κ utilisé en mode exact
    """

    slope: float
    intercept: float
    mode: InversionMode
    p_star: float
    ratio: Optional[float]
    effective_degree: Optional[float]

    def u_ff(self, u_nn: float) -> float:
        return self.slope * u_nn + self.intercept

    def forward(self, U: PayoffMatrix) -> float:
        """Réévalue l'ESS de la matrice avec la formule correspondant au mode."""
        if self.mode is InversionMode.LARGE_K:
            return ess_approx_large_k(U)
        return interior_ess(U, self.effective_degree)

    def verify(self, samples=INVERSION_SAMPLES):
        """
        Échantillonne des matrices sur la relation, les normalise dans (0,1)
        et réévalue l'ESS de chacune.

        Returns:
            list de dict (gains bruts, gains normalisés, ESS recalculé, écart)
        """
        rows = []
        for u_nn in samples:
            raw = (self.u_ff(u_nn), 1.0, u_nn)
            matrix = PayoffMatrix.normalized(*raw)
            recovered = self.forward(matrix)
            rows.append({
                "raw": {"u_ff": raw[0], "u_fn": raw[1], "u_nn": raw[2]},
                "normalized": matrix.to_dict(),
                "recovered_p_star": recovered,
                "error": abs(recovered - self.p_star),
            })
        return rows

    def to_dict(self):
        return {
            "p_star": self.p_star,
            "mode": self.mode.value,
            "u_fn": 1.0,
            "slope": self.slope,
            "intercept": self.intercept,
            "ratio": self.ratio,
            "effective_degree": self.effective_degree,
        }


def invert_payoff_relation(p_star: float, descriptor: Optional[DegreeDescriptor] = None,
                           mode: Union[InversionMode, str] = InversionMode.EXACT) -> PayoffRelation:
    """
    Inverse un ESS observé en relation entre u_ff et u_nn, u_fn étant normalisé à 1.

    Args:
        p_star: ESS observé dans (0, 1)
        descriptor: Degré k ou DegreeStats (requis en mode exact)
        mode: exact ou large_k

    Returns:
        PayoffRelation
    """
    mode = InversionMode(mode)
    if not 0.0 < p_star < 1.0:
        raise PreconditionError(f"p_star={p_star} must lie in (0, 1) for an interior inversion")

    if mode is InversionMode.LARGE_K:
        ratio = 1.0 / p_star - 1.0
        relation = PayoffRelation(ratio, 1.0 - ratio, mode, p_star, ratio, None)
    else:
        if descriptor is None:
            raise PreconditionError("Exact inversion needs a degree descriptor")
        kappa = effective_degree(descriptor)
        if kappa <= 2.0:
            raise DegenerateCaseError(f"Exact inversion needs an effective degree > 2, got {kappa}")
        shift = kappa - 2.0
        denominator = 1.0 + p_star * shift
        slope = (shift * (1.0 - p_star) + 1.0) / denominator
        intercept = shift * (2.0 * p_star - 1.0) / denominator
        relation = PayoffRelation(slope, intercept, mode, p_star, None, kappa)
    logger.info(f"Inverted p*={p_star} ({mode.value}): u_ff = {relation.slope:.6f}*u_nn "
                f"+ {relation.intercept:.6f}")
    return relation
