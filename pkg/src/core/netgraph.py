"""
Module netgraph.py

Construction, chargement et interrogation des graphes non orientés simples
sur lesquels le jeu évolutionnaire est joué : graphes réguliers (modèle de
configuration avec recâblage), Erdős-Rényi, Barabási-Albert et listes
d'arêtes au format SNAP.
"""

import logging
from collections import Counter
from dataclasses import dataclass, field
from typing import Dict, Iterable, Optional, Sequence, Tuple, Union

import networkx as nx
import numpy as np

from src.core.errors import (
    DegenerateCaseError,
    GraphConstructionError,
    GraphParseError,
    PreconditionError,
)

logger = logging.getLogger(__name__)

# Budget du recâblage du modèle de configuration
_MAX_RESTARTS = 20
_FAILURES_PER_EDGE = 50


def _pair_key(u, v):
    return (u, v) if u < v else (v, u)


@dataclass(frozen=True)
class Graph:
    """
    Graphe non orienté simple, immuable après construction.

    Args:
        node_count: Nombre de nœuds N (identifiants denses 0..N-1)
        adjacency: Pour chaque nœud, le tuple trié de ses voisins
        original_ids: Identifiants d'origine (graphes chargés), triés
        dropped_records: Boucles et doublons écartés au chargement
    """

    node_count: int
    adjacency: Tuple[Tuple[int, ...], ...]
    original_ids: Optional[Tuple[int, ...]] = None
    dropped_records: int = 0
    edge_count: int = field(init=False)

    def __post_init__(self):
        if self.node_count <= 0:
            raise PreconditionError(f"Graph needs at least one node, got {self.node_count}")
        if len(self.adjacency) != self.node_count:
            raise PreconditionError(
                f"Adjacency has {len(self.adjacency)} rows for {self.node_count} nodes")
        if self.original_ids is not None and len(self.original_ids) != self.node_count:
            raise PreconditionError("original_ids must map every node")
        degree_sum = sum(len(row) for row in self.adjacency)
        object.__setattr__(self, "edge_count", degree_sum // 2)
        self.validate()

    @classmethod
    def from_edges(cls, node_count: int, edges: Iterable[Tuple[int, int]],
                   original_ids: Optional[Sequence[int]] = None,
                   dropped_records: int = 0) -> "Graph":
        """
        Construit un graphe à partir d'une collection d'arêtes (u, v) déjà simple.
        """
        rows = [[] for _ in range(node_count)]
        for u, v in edges:
            rows[u].append(v)
            rows[v].append(u)
        adjacency = tuple(tuple(sorted(row)) for row in rows)
        ids = tuple(original_ids) if original_ids is not None else None
        return cls(node_count, adjacency, ids, dropped_records)

    @classmethod
    def from_networkx(cls, nx_graph: "nx.Graph") -> "Graph":
        """Convertit un graphe networkx de nœuds 0..N-1."""
        node_count = nx_graph.number_of_nodes()
        if set(nx_graph.nodes) != set(range(node_count)):
            raise PreconditionError("networkx graph nodes must be labelled 0..N-1")
        return cls.from_edges(node_count, nx_graph.edges())

    def validate(self):
        """
        Vérifie par balayage complet : pas de boucle, pas de doublon,
        symétrie u∈adj(v) ⇔ v∈adj(u), et cohérence du nombre d'arêtes.

        Raises:
            PreconditionError: si un invariant est violé
        """
        neighbor_sets = []
        degree_sum = 0
        for v, row in enumerate(self.adjacency):
            row_set = set(row)
            if len(row_set) != len(row):
                raise PreconditionError(f"Duplicate edge at node {v}")
            if v in row_set:
                raise PreconditionError(f"Self-loop at node {v}")
            for u in row:
                if not 0 <= u < self.node_count:
                    raise PreconditionError(f"Neighbor {u} of node {v} out of range")
            neighbor_sets.append(row_set)
            degree_sum += len(row)
        for v, row in enumerate(self.adjacency):
            for u in row:
                if v not in neighbor_sets[u]:
                    raise PreconditionError(f"Asymmetric adjacency between {v} and {u}")
        if degree_sum != 2 * self.edge_count:
            raise PreconditionError("edge_count inconsistent with degree sum")

    def degree(self, v: int) -> int:
        return len(self.adjacency[v])

    def degrees(self) -> np.ndarray:
        return np.fromiter((len(row) for row in self.adjacency), dtype=np.int64,
                           count=self.node_count)

    def edges(self):
        """Itère sur les arêtes (u, v) avec u < v, dans l'ordre lexicographique."""
        for u, row in enumerate(self.adjacency):
            for v in row:
                if u < v:
                    yield u, v

    def label(self, v: int) -> int:
        """Identifiant d'origine d'un nœud (lui-même pour un graphe généré)."""
        return self.original_ids[v] if self.original_ids is not None else v

    def to_edge_list(self) -> str:
        """
        Exporte le graphe au format liste d'arêtes : une paire triée par ligne,
        identifiants d'origine, sans en-tête.
        """
        lines = [f"{self.label(u)} {self.label(v)}" for u, v in self.edges()]
        return "\n".join(lines) + ("\n" if lines else "")

    def write_edge_list(self, path):
        with open(path, "w") as handle:
            handle.write(self.to_edge_list())
        logger.info(f"Wrote {self.edge_count} edges to {path}")


@dataclass(frozen=True)
class DegreeStats:
    """
    Statistiques de degré : moyenne k̄, second moment E[k²] et histogramme.

    Args:
        mean_degree: Degré moyen k̄
        second_moment: Second moment E[k²]
        degree_histogram: degré -> nombre de nœuds (vide pour des moments analytiques)
        exponent_hint: Exposant ξ de la loi de puissance (graphes sans échelle)
    """

    mean_degree: float
    second_moment: float
    degree_histogram: Dict[int, int] = field(default_factory=dict)
    exponent_hint: Optional[float] = None

    def __post_init__(self):
        if self.mean_degree < 0:
            raise PreconditionError(f"mean_degree must be non-negative, got {self.mean_degree}")
        # E[k²] ≥ E[k]² à l'arrondi près
        slack = 1e-9 * max(1.0, self.mean_degree ** 2)
        if self.second_moment < self.mean_degree ** 2 - slack:
            raise PreconditionError(
                f"second_moment {self.second_moment} below mean_degree² {self.mean_degree ** 2}")

    @classmethod
    def from_moments(cls, mean_degree: float, second_moment: float,
                     exponent_hint: Optional[float] = None) -> "DegreeStats":
        return cls(float(mean_degree), float(second_moment), {}, exponent_hint)

    @property
    def moment_ratio(self) -> float:
        """κ = E[k²] / E[k], degré effectif des voisins remplacés."""
        if self.mean_degree <= 0:
            raise DegenerateCaseError("Moment ratio undefined for a graph without edges")
        return self.second_moment / self.mean_degree

    @property
    def node_count(self) -> int:
        return sum(self.degree_histogram.values())

    def to_dict(self):
        return {
            "mean_degree": self.mean_degree,
            "second_moment": self.second_moment,
            "moment_ratio": self.moment_ratio if self.mean_degree > 0 else None,
            "degree_histogram": {str(k): c for k, c in sorted(self.degree_histogram.items())},
            "exponent_hint": self.exponent_hint,
        }


def _require_int(name, value, minimum):
    if int(value) != value or value < minimum:
        raise PreconditionError(f"{name} must be an integer >= {minimum}, got {value}")
    return int(value)


def complete_graph(n: int) -> Graph:
    n = _require_int("n", n, 1)
    return Graph.from_edges(n, ((u, v) for u in range(n) for v in range(u + 1, n)))


def _rewire_until_simple(edges, rng, max_failures):
    """
    Élimine boucles et arêtes multiples par échanges aléatoires de paires
    (u,v),(x,y) -> (u,x),(v,y). Modifie `edges` en place.

    Returns:
        True si le multigraphe est devenu simple dans le budget d'échecs
    """
    counts = Counter(_pair_key(u, v) for u, v in edges)

    def is_bad(i):
        u, v = edges[i]
        return u == v or counts[_pair_key(u, v)] > 1

    pending = [i for i in range(len(edges)) if is_bad(i)]
    failures = 0
    while pending:
        i = pending.pop()
        if not is_bad(i):
            continue
        u, v = edges[i]
        j = int(rng.integers(len(edges)))
        x, y = edges[j]
        if rng.random() < 0.5:
            x, y = y, x
        first, second = _pair_key(u, x), _pair_key(v, y)
        if (j == i or u == x or v == y or first == second
                or counts[first] > 0 or counts[second] > 0):
            failures += 1
            if failures > max_failures:
                return False
            pending.append(i)
            continue
        counts[_pair_key(u, v)] -= 1
        counts[_pair_key(x, y)] -= 1
        counts[first] += 1
        counts[second] += 1
        edges[i] = (u, x)
        edges[j] = (v, y)
    return True


def build_regular(n: int, k: int, seed: int) -> Graph:
    """
    Graphe k-régulier simple par modèle de configuration puis recâblage.

    Args:
        n: Nombre de nœuds
        k: Degré commun, 3 ≤ k < n, n·k pair
        seed: Graine du générateur

    Returns:
        Graph dont tous les nœuds ont le degré k
    """
    n = _require_int("n", n, 1)
    k = _require_int("k", k, 3)
    if k >= n:
        raise PreconditionError(f"Regular graph infeasible: k={k} must be < n={n}")
    if (n * k) % 2:
        raise PreconditionError(f"Regular graph infeasible: n*k={n * k} is odd")

    if k == n - 1:
        graph = complete_graph(n)
        logger.info(f"Generated complete graph K{n} as the {k}-regular graph")
        return graph

    rng = np.random.default_rng(seed)
    edge_total = n * k // 2
    for attempt in range(_MAX_RESTARTS):
        stubs = np.repeat(np.arange(n), k)
        rng.shuffle(stubs)
        edges = [tuple(pair) for pair in stubs.reshape(-1, 2).tolist()]
        if _rewire_until_simple(edges, rng, _FAILURES_PER_EDGE * edge_total):
            graph = Graph.from_edges(n, edges)
            logger.info(f"Generated {k}-regular graph: {n} nodes, {graph.edge_count} edges "
                        f"(attempt {attempt + 1})")
            return graph
        logger.debug(f"Rewiring budget exhausted, restarting (attempt {attempt + 1})")
    raise GraphConstructionError(f"Could not build a simple {k}-regular graph on {n} nodes")


def build_erdos_renyi(n: int, mean_degree: float, seed: int) -> Graph:
    """
    Graphe G(n, p) avec p = k̄/(n-1), chaque paire tirée indépendamment.

    Args:
        n: Nombre de nœuds (≥ 2)
        mean_degree: Degré moyen visé, 0 < k̄ ≤ n-1
        seed: Graine du générateur

    Returns:
        Graph (les nœuds isolés sont conservés)
    """
    n = _require_int("n", n, 2)
    if not 0 < mean_degree <= n - 1:
        raise PreconditionError(f"mean_degree must lie in (0, {n - 1}], got {mean_degree}")
    p = mean_degree / (n - 1)
    graph = Graph.from_networkx(nx.gnp_random_graph(n, p, seed=seed))
    logger.info(f"Generated Erdos-Renyi graph: {n} nodes, {graph.edge_count} edges, "
                f"observed mean degree {2 * graph.edge_count / n:.3f}")
    return graph


def build_barabasi_albert(n: int, m: int, seed: int) -> Graph:
    """
    Croissance par attachement préférentiel à partir de la clique K_m.

    Chaque nouveau nœud se lie à m nœuds distincts tirés proportionnellement
    à leur degré courant (networkx, graphe initial K_m).

    Args:
        n: Nombre final de nœuds
        m: Arêtes par nouveau nœud, 2 ≤ m < n
        seed: Graine du générateur
    """
    m = _require_int("m", m, 2)
    n = _require_int("n", n, 1)
    if m >= n:
        raise PreconditionError(f"Barabasi-Albert requires m < n, got m={m}, n={n}")

    grown = nx.barabasi_albert_graph(n, m, seed=seed, initial_graph=nx.complete_graph(m))
    graph = Graph.from_networkx(grown)
    logger.info(f"Generated Barabasi-Albert graph: {n} nodes, {graph.edge_count} edges (m={m})")
    return graph


def load_edge_list(text: Union[str, Iterable[str]]) -> Graph:
    """
    Charge une liste d'arêtes (format SNAP) : deux entiers non négatifs par
    ligne, lignes vides et commentaires '#' ignorés.

    Les identifiants sont renumérotés en 0..N-1 dans l'ordre trié ; boucles et
    doublons sont écartés et comptés dans `dropped_records`.

    Args:
        text: Contenu complet ou itérable de lignes (fichier ouvert)

    Returns:
        Graph avec original_ids

    Raises:
        GraphParseError: ligne mal formée, avec son numéro
    """
    lines = text.splitlines() if isinstance(text, str) else text
    seen_ids = set()
    edge_keys = set()
    dropped = 0
    for line_number, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        # ASCII digits only: int() would also accept "+3" or "1_000"
        if len(parts) != 2 or not all(part.isascii() and part.isdigit() for part in parts):
            raise GraphParseError(line_number, raw.rstrip("\n"))
        u, v = int(parts[0]), int(parts[1])
        seen_ids.add(u)
        seen_ids.add(v)
        key = _pair_key(u, v)
        if u == v or key in edge_keys:
            dropped += 1
            continue
        edge_keys.add(key)

    if not edge_keys:
        raise PreconditionError("Edge list contains no usable edge")
    original_ids = sorted(seen_ids)
    index = {node_id: i for i, node_id in enumerate(original_ids)}
    edges = ((index[u], index[v]) for u, v in sorted(edge_keys))
    graph = Graph.from_edges(len(original_ids), edges, original_ids, dropped)
    logger.info(f"Loaded edge list: {graph.node_count} nodes, {graph.edge_count} edges, "
                f"{dropped} dropped records")
    return graph


def read_edge_list(path) -> Graph:
    with open(path) as handle:
        return load_edge_list(handle)


def degree_stats(g: Graph, exponent_hint: Optional[float] = None) -> DegreeStats:
    """
    Moyenne et second moment exacts de la distribution empirique des degrés.
    """
    degrees = g.degrees()
    values, counts = np.unique(degrees, return_counts=True)
    histogram = {int(d): int(c) for d, c in zip(values, counts)}
    mean = int(degrees.sum()) / g.node_count
    second = int((degrees * degrees).sum()) / g.node_count
    return DegreeStats(mean, second, histogram, exponent_hint)
