"""
Module cli.py

Interface en ligne de commande : génération de graphes, simulation
d'ensembles, prédiction d'ESS, balayages de paramètres, analyse de stabilité
et inversion d'un ESS observé. Les sorties sont des enregistrements JSON
(`--format record`) ou des tables CSV (`--format table`).

Codes de sortie : 0 succès, 2 erreur d'analyse, 3 précondition violée,
4 erreur d'exécution.
"""

import argparse
import csv
import io
import json
import logging
import math
import sys
from dataclasses import dataclass, field, replace
from typing import List, Optional, Sequence

from src.core.errors import (
    DegenerateCaseError,
    GraphConstructionError,
    GraphParseError,
    PreconditionError,
    SimulationInvariantError,
)
from src.core.netgraph import (
    Graph,
    build_barabasi_albert,
    build_erdos_renyi,
    build_regular,
    degree_stats,
    read_edge_list,
)
from src.game.ess_analytics import (
    EssResult,
    InversionMode,
    barabasi_albert_stats,
    erdos_renyi_stats,
    ess_ba,
    ess_er,
    ess_nonuniform,
    ess_uniform,
    invert_payoff_relation,
    jacobian_analysis,
)
from src.game.game_core import (
    DEFAULT_ALPHA,
    DEFAULT_POPULATION,
    PayoffMatrix,
    SelectionParams,
    closure_state,
    payoff_preset,
)
from src.simulation.diffusion_sim import (
    DEFAULT_INITIAL_PF,
    DEFAULT_MAX_GENERATIONS,
    DEFAULT_REGEN_EVERY,
    DEFAULT_STEADY_TOL,
    DEFAULT_WINDOW,
    EnsembleResult,
    SimConfig,
    UpdateRule,
    run,
    run_ensemble,
)
from src.simulation.random_streams import GRAPH_STREAM, RUN_STREAM, derive_seed

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_PARSE_ERROR = 2
EXIT_PRECONDITION = 3
EXIT_RUNTIME = 4

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'
SWEEP_AXES = ("degree", "alpha", "payoff-preset")
# Degré du graphe complet des 500 sites d'actualité
DEFAULT_INVERSION_DEGREE = 499


@dataclass(frozen=True)
class GraphSpec:
    """
    Source de graphe : une famille génératrice ou une liste d'arêtes.
    """

    family: Optional[str] = None
    n: int = DEFAULT_POPULATION
    k: Optional[int] = None
    m: Optional[int] = None
    kavg: Optional[float] = None
    edges: Optional[str] = None
    log_base: float = math.e

    def __post_init__(self):
        if (self.family is None) == (self.edges is None):
            raise PreconditionError("Exactly one graph source is required: --family or --edges")
        if self.family == "regular" and self.k is None:
            raise PreconditionError("--family regular requires --k")
        if self.family == "er" and self.kavg is None:
            raise PreconditionError("--family er requires --kavg")
        if self.family == "ba" and self.m is None:
            raise PreconditionError("--family ba requires --m")

    @property
    def default_rule(self) -> UpdateRule:
        return UpdateRule.IM if self.family == "regular" else UpdateRule.BD

    @property
    def mean_degree(self) -> float:
        if self.family == "regular":
            return float(self.k)
        if self.family == "er":
            return float(self.kavg)
        return 2.0 * self.m

    def build(self, seed: int) -> Graph:
        if self.family == "regular":
            return build_regular(self.n, self.k, seed)
        if self.family == "er":
            return build_erdos_renyi(self.n, self.kavg, seed)
        if self.family == "ba":
            return build_barabasi_albert(self.n, self.m, seed)
        return read_edge_list(self.edges)

    def with_degree(self, value: float) -> "GraphSpec":
        """Copie avec un autre paramètre de degré (balayage sur l'axe degree)."""
        if self.family == "regular":
            return replace(self, k=_as_int(value, "degree"))
        if self.family == "er":
            return replace(self, kavg=float(value))
        if self.family == "ba":
            m = _as_int(value, "degree") // 2
            if 2 * m != value:
                raise PreconditionError(f"Barabasi-Albert mean degree {value} must be even (2m)")
            return replace(self, m=m)
        raise PreconditionError("Degree sweeps need a generator family, not an edge list")

    def theory(self, U: PayoffMatrix, sel: SelectionParams, graph: Optional[Graph] = None) -> EssResult:
        """ESS théorique selon la famille, ou d'après les moments mesurés d'un graphe chargé."""
        if self.family == "regular":
            return ess_uniform(U, self.k, sel, self.n)
        if self.family == "er":
            return ess_er(U, self.kavg, sel, self.n)
        if self.family == "ba":
            return ess_ba(U, self.mean_degree, self.n, sel, log_base=self.log_base)
        graph = graph if graph is not None else self.build(0)
        return ess_nonuniform(U, degree_stats(graph), sel, graph.node_count)

    def to_dict(self):
        if self.edges is not None:
            return {"edges": self.edges}
        record = {"family": self.family, "n": self.n}
        for name in ("k", "m", "kavg"):
            if getattr(self, name) is not None:
                record[name] = getattr(self, name)
        if self.family == "ba" and self.log_base != math.e:
            record["log_base"] = self.log_base
        return record


@dataclass(frozen=True)
class RunSpec:
    """
    Paramètres validés d'une commande.
    """

    command: str
    graph: Optional[GraphSpec]
    payoff: Optional[PayoffMatrix]
    alpha: float = DEFAULT_ALPHA
    rule: Optional[UpdateRule] = None
    runs: int = 100
    regen_every: int = DEFAULT_REGEN_EVERY
    seed: int = 0
    initial_pf: float = DEFAULT_INITIAL_PF
    max_gens: int = DEFAULT_MAX_GENERATIONS
    window: int = DEFAULT_WINDOW
    tol: float = DEFAULT_STEADY_TOL
    workers: int = 1
    output_format: str = "record"
    out: Optional[str] = None

    @property
    def selection(self) -> SelectionParams:
        return SelectionParams(self.alpha)

    @property
    def effective_rule(self) -> UpdateRule:
        return self.rule if self.rule is not None else self.graph.default_rule

    def sim_config(self) -> SimConfig:
        return SimConfig(self.effective_rule, self.payoff, self.alpha, self.initial_pf,
                         self.max_gens, self.window, self.tol, self.seed)

    def echo(self):
        record = {"command": self.command, "alpha": self.alpha, "seed": self.seed}
        if self.graph is not None:
            record["graph"] = self.graph.to_dict()
        if self.payoff is not None:
            record["payoff"] = self.payoff.to_dict()
        if self.command in ("simulate", "sweep"):
            record.update({
                "rule": self.effective_rule.value, "runs": self.runs,
                "regen_every": self.regen_every, "initial_pf": self.initial_pf,
                "max_gens": self.max_gens, "window": self.window, "tol": self.tol,
            })
        return record


@dataclass
class ReportRecord:
    """
    Enregistrement d'une comparaison théorie/simulation. L'écart est
    recalculé à partir de ses deux opérandes.
    """

    config: dict
    theory: Optional[EssResult] = None
    simulation: Optional[EnsembleResult] = None
    extra: dict = field(default_factory=dict)

    @property
    def gap(self) -> Optional[float]:
        if self.theory is None or self.simulation is None:
            return None
        return abs(self.simulation.mean_final_pf - self.theory.selected_ess)

    def to_dict(self):
        record = {"config": self.config}
        if self.theory is not None:
            record["theory"] = self.theory.to_dict()
        if self.simulation is not None:
            simulation = self.simulation.to_dict()
            simulation.pop("config", None)
            record["simulation"] = simulation
        if self.gap is not None:
            record["comparison"] = {"gap": self.gap}
        record.update(self.extra)
        return record

    def table_row(self):
        return {
            "theory_ess": self.theory.selected_ess if self.theory is not None else "",
            "regime": self.theory.regime.value if self.theory is not None else "",
            "mean_final_pf": self.simulation.mean_final_pf if self.simulation is not None else "",
            "std_final_pf": self.simulation.std_final_pf if self.simulation is not None else "",
            "gap": self.gap if self.gap is not None else "",
        }


def _as_int(value, name):
    if float(value) != int(float(value)):
        raise PreconditionError(f"{name} value {value} must be an integer")
    return int(float(value))


def _payoff_from_args(args) -> Optional[PayoffMatrix]:
    entries = (args.uff, args.ufn, args.unn)
    if args.pm is not None:
        if any(entry is not None for entry in entries):
            raise PreconditionError("Use either --pm or --uff/--ufn/--unn, not both")
        return payoff_preset(args.pm)
    if all(entry is not None for entry in entries):
        return PayoffMatrix(*entries)
    if any(entry is not None for entry in entries):
        raise PreconditionError("--uff, --ufn and --unn must be given together")
    return None


def _graph_from_args(args) -> Optional[GraphSpec]:
    family = getattr(args, "family", None)
    edges = getattr(args, "edges", None)
    if family is None and edges is None:
        return None
    return GraphSpec(family, args.n, args.k, args.m, args.kavg, edges, args.log_base)


def build_run_spec(args) -> RunSpec:
    """Valide les arguments analysés et construit la RunSpec."""
    graph = _graph_from_args(args)
    payoff = _payoff_from_args(args)
    if args.command in ("generate", "simulate", "predict", "sweep", "stability") and graph is None:
        raise PreconditionError(f"{args.command} requires --family or --edges")
    if args.command in ("simulate", "predict", "stability") and payoff is None:
        raise PreconditionError(f"{args.command} requires --pm or --uff/--ufn/--unn")
    if args.command == "sweep" and payoff is None and args.axis != "payoff-preset":
        raise PreconditionError("sweep requires a payoff matrix unless sweeping payoff-preset")
    return RunSpec(
        command=args.command,
        graph=graph,
        payoff=payoff,
        alpha=args.alpha,
        rule=UpdateRule(args.rule) if args.rule else None,
        runs=args.runs,
        regen_every=args.regen_every,
        seed=args.seed,
        initial_pf=args.initial_pf,
        max_gens=args.max_gens,
        window=args.window,
        tol=args.tol,
        workers=args.workers,
        output_format=args.format,
        out=args.out,
    )


def _loaded_graph(spec: RunSpec) -> Optional[Graph]:
    """Graphe lu une seule fois pour une source --edges ; None pour une famille."""
    return spec.graph.build(0) if spec.graph.edges is not None else None


def _simulate(spec: RunSpec, graph: Optional[Graph] = None) -> EnsembleResult:
    source = graph if graph is not None else spec.graph.build
    return run_ensemble(source, spec.sim_config(), spec.runs, spec.regen_every, spec.workers)


def _theory_or_none(spec: RunSpec, graph: Optional[Graph] = None) -> Optional[EssResult]:
    try:
        return spec.graph.theory(spec.payoff, spec.selection, graph)
    except DegenerateCaseError as error:
        logger.warning(f"No closed-form ESS for this configuration: {error}")
        return None


def cmd_generate(spec: RunSpec):
    """Génère le graphe, l'écrit au format liste d'arêtes et rend ses statistiques."""
    graph = spec.graph.build(spec.seed)
    stats = degree_stats(graph, exponent_hint=3.0 if spec.graph.family == "ba" else None)
    record = {"config": spec.echo(), "node_count": graph.node_count,
              "edge_count": graph.edge_count, "degree_stats": stats.to_dict()}
    return graph, record


def cmd_predict(spec: RunSpec) -> ReportRecord:
    """ESS théorique (théorèmes uniforme/non uniforme, cas ER et BA)."""
    return ReportRecord(spec.echo(), theory=spec.graph.theory(spec.payoff, spec.selection))


def cmd_simulate(spec: RunSpec, graph: Optional[Graph] = None) -> ReportRecord:
    """Ensemble de simulations, théorie attachée lorsqu'une formule existe."""
    if graph is None:
        graph = _loaded_graph(spec)
    theory = _theory_or_none(spec, graph)
    simulation = _simulate(spec, graph)
    return ReportRecord(spec.echo(), theory=theory, simulation=simulation)


def parse_sweep_values(raw: str) -> List[float]:
    values = [item.strip() for item in (raw or "").split(",") if item.strip()]
    if not values:
        raise PreconditionError("Sweep needs a non-empty --values list")
    try:
        return [float(item) for item in values]
    except ValueError:
        raise PreconditionError(f"Invalid sweep value list: {raw!r}") from None


def cmd_sweep(spec: RunSpec, axis: str, values: Sequence[float], theory_only: bool = False) -> List[ReportRecord]:
    """Un ReportRecord par valeur de l'axe balayé."""
    if axis not in SWEEP_AXES:
        raise PreconditionError(f"Sweep axis {axis} not supported")
    if not values:
        raise PreconditionError("Sweep needs at least one value")
    loaded = _loaded_graph(spec)
    records = []
    for value in values:
        if axis == "degree":
            point = replace(spec, graph=spec.graph.with_degree(value))
        elif axis == "alpha":
            point = replace(spec, alpha=float(value))
        else:
            point = replace(spec, payoff=payoff_preset(_as_int(value, "payoff-preset")))
        theory = _theory_or_none(point, loaded)
        simulation = None if theory_only else _simulate(point, loaded)
        record = ReportRecord(point.echo(), theory=theory, simulation=simulation,
                              extra={"axis": axis, "value": value})
        records.append(record)
        logger.info(f"Sweep {axis}={value}: theory={theory.selected_ess if theory else None}")
    return records


def _stability_descriptor(spec: RunSpec):
    """Descripteur de degré et taille de population pour la jacobienne."""
    if spec.graph.family == "regular":
        return spec.graph.k, spec.graph.n
    if spec.graph.family == "er":
        return erdos_renyi_stats(spec.graph.kavg), spec.graph.n
    if spec.graph.family == "ba":
        return barabasi_albert_stats(spec.graph.mean_degree, spec.graph.n, spec.graph.log_base), spec.graph.n
    graph = spec.graph.build(0)
    return degree_stats(graph), graph.node_count


def cmd_stability(spec: RunSpec, point=None):
    """Liste les points fixes et leurs étiquettes de stabilité."""
    descriptor, n = _stability_descriptor(spec)
    theory = spec.graph.theory(spec.payoff, spec.selection)
    if point is not None:
        points = [tuple(point)]
    else:
        points = [(p_f, p_f if p_f in (0.0, 1.0) else closure_state(p_f, theory.effective_degree).p_ff)
                  for p_f in theory.fixed_points]
    rows = [jacobian_analysis(descriptor, spec.selection, n, spec.payoff, p).to_dict() for p in points]
    return {"config": spec.echo(), "selected_ess": theory.selected_ess,
            "regime": theory.regime.value, "fixed_points": rows}


def cmd_invert(p_star: float, mode: str, k: Optional[int] = None, edges: Optional[str] = None):
    """Relation (u_ff, u_nn) à u_fn = 1 et bloc de vérification."""
    descriptor = degree_stats(read_edge_list(edges)) if edges else (k or DEFAULT_INVERSION_DEGREE)
    relation = invert_payoff_relation(p_star, descriptor, mode)
    return {"relation": relation.to_dict(), "verification": relation.verify()}


# Sérialisation

def _to_json(payload) -> str:
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def _to_csv(rows: Sequence[dict]) -> str:
    buffer = io.StringIO()
    if rows:
        writer = csv.DictWriter(buffer, fieldnames=list(rows[0].keys()), lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
    return buffer.getvalue()


def _emit(text: str, out: Optional[str]):
    if out:
        with open(out, "w") as handle:
            handle.write(text)
        logger.info(f"Wrote output to {out}")
    else:
        sys.stdout.write(text)


def _theory_rows(theory: EssResult):
    return [{"p_f": p, "stability": label.value, "selected": p == theory.selected_ess,
             "regime": theory.regime.value}
            for p, label in zip(theory.fixed_points, theory.stability)]


def dispatch(args) -> int:
    if args.command == "invert":
        if args.format == "record":
            payload = _to_json(cmd_invert(args.p_star, args.mode, args.k, args.edges))
        else:
            result = cmd_invert(args.p_star, args.mode, args.k, args.edges)
            rows = [{"u_ff": row["raw"]["u_ff"], "u_fn": row["raw"]["u_fn"], "u_nn": row["raw"]["u_nn"],
                     "recovered_p_star": row["recovered_p_star"], "error": row["error"]}
                    for row in result["verification"]]
            payload = _to_csv(rows)
        _emit(payload, args.out)
        return EXIT_OK

    spec = build_run_spec(args)
    if spec.command == "generate":
        graph, record = cmd_generate(spec)
        if spec.out:
            graph.write_edge_list(spec.out)
            stats_text = _to_json(record) if spec.output_format == "record" else _to_csv(
                [{"node_count": record["node_count"], "edge_count": record["edge_count"],
                  "mean_degree": record["degree_stats"]["mean_degree"],
                  "second_moment": record["degree_stats"]["second_moment"]}])
            sys.stdout.write(stats_text)
        else:
            sys.stdout.write(graph.to_edge_list())
            sys.stderr.write(_to_json(record))
        return EXIT_OK

    if spec.command == "predict":
        record = cmd_predict(spec)
        text = _to_json(record.to_dict()) if spec.output_format == "record" else _to_csv(
            _theory_rows(record.theory))
    elif spec.command == "simulate":
        loaded = _loaded_graph(spec)
        record = cmd_simulate(spec, loaded)
        if spec.output_format == "record":
            text = _to_json(record.to_dict())
        else:
            text = _to_csv([{"run": index, "final_pf": final}
                            for index, final in enumerate(record.simulation.per_run_final)]
                           ) if args.per_run else _to_csv([record.table_row()])
        if args.trajectory:
            graph = loaded if loaded is not None else spec.graph.build(
                derive_seed(spec.seed, GRAPH_STREAM, 0))
            first = run(graph, spec.sim_config().with_seed(derive_seed(spec.seed, RUN_STREAM, 0)))
            with open(args.trajectory, "w") as handle:
                handle.write(first.to_csv())
            logger.info(f"Wrote trajectory of run 0 to {args.trajectory}")
    elif spec.command == "sweep":
        records = cmd_sweep(spec, args.axis, parse_sweep_values(args.values), args.theory_only)
        if spec.output_format == "record":
            text = _to_json([record.to_dict() for record in records])
        else:
            text = _to_csv([dict({"axis": args.axis, "value": r.extra["value"]}, **r.table_row())
                            for r in records])
    else:
        report = cmd_stability(spec, args.point)
        text = _to_json(report) if spec.output_format == "record" else _to_csv(
            [{"p_f": row["p_f"], "p_ff": row["p_ff"], "det": row["det"], "trace": row["trace"],
              "label": row["label"]} for row in report["fixed_points"]])
    _emit(text, spec.out)
    return EXIT_OK


def _add_graph_arguments(parser):
    parser.add_argument("--family", choices=("regular", "er", "ba"), help="Graph generator family")
    parser.add_argument("--n", type=int, default=DEFAULT_POPULATION, help="Number of nodes")
    parser.add_argument("--k", type=int, help="Degree of a regular graph")
    parser.add_argument("--m", type=int, help="Edges per new node (Barabasi-Albert)")
    parser.add_argument("--kavg", type=float, help="Mean degree (Erdos-Renyi)")
    parser.add_argument("--edges", metavar="PATH", help="Edge-list file instead of a generator")
    parser.add_argument("--log-base", type=float, default=math.e,
                        help="Logarithm base of the Barabasi-Albert moment rule (default: e)")


def _add_game_arguments(parser):
    parser.add_argument("--pm", type=int, choices=(1, 2, 3, 4), help="Payoff preset PM1..PM4")
    parser.add_argument("--uff", type=float)
    parser.add_argument("--ufn", type=float)
    parser.add_argument("--unn", type=float)
    parser.add_argument("--alpha", type=float, default=DEFAULT_ALPHA, help="Selection intensity")
    parser.add_argument("--rule", choices=("im", "bd", "db"),
                        help="Update rule (default: im for regular graphs, bd otherwise)")


def _add_run_arguments(parser):
    parser.add_argument("--runs", type=int, default=100)
    parser.add_argument("--regen-every", type=int, default=DEFAULT_REGEN_EVERY)
    parser.add_argument("--initial-pf", type=float, default=DEFAULT_INITIAL_PF)
    parser.add_argument("--max-gens", type=int, default=DEFAULT_MAX_GENERATIONS)
    parser.add_argument("--window", type=int, default=DEFAULT_WINDOW)
    parser.add_argument("--tol", type=float, default=DEFAULT_STEADY_TOL)
    parser.add_argument("--workers", type=int, default=1, help="Parallel worker processes")


def _add_output_arguments(parser):
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--format", choices=("table", "record"), default="record")
    parser.add_argument("--out", metavar="PATH")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="diffusion-game",
        description="Graphical evolutionary game model of information diffusion")
    parser.add_argument("--log-level", default="WARNING",
                        choices=("DEBUG", "INFO", "WARNING", "ERROR"))
    commands = parser.add_subparsers(dest="command", required=True)

    generate = commands.add_parser("generate", help="Generate a graph as an edge list")
    predict = commands.add_parser("predict", help="Closed-form ESS prediction")
    simulate = commands.add_parser("simulate", help="Run a simulation ensemble")
    sweep = commands.add_parser("sweep", help="Theory-vs-simulation parameter sweep")
    stability = commands.add_parser("stability", help="Jacobian stability of fixed points")
    for sub in (generate, predict, simulate, sweep, stability):
        _add_graph_arguments(sub)
        _add_game_arguments(sub)
        _add_run_arguments(sub)
        _add_output_arguments(sub)

    simulate.add_argument("--per-run", action="store_true",
                          help="Table output lists every run's final p_f")
    simulate.add_argument("--trajectory", metavar="PATH",
                          help="Write the trajectory of run 0 as CSV")
    sweep.add_argument("--axis", choices=SWEEP_AXES, required=True)
    sweep.add_argument("--values", default="10,20,50", help="Comma-separated axis values")
    sweep.add_argument("--theory-only", action="store_true")
    stability.add_argument("--point", type=float, nargs=2, metavar=("P_F", "P_FF"),
                           help="Check a single candidate fixed point")

    invert = commands.add_parser("invert", help="Invert an observed ESS into a payoff relation")
    invert.add_argument("--p-star", type=float, required=True)
    invert.add_argument("--mode", choices=[m.value for m in InversionMode], default="exact")
    invert.add_argument("--k", type=int, default=DEFAULT_INVERSION_DEGREE)
    invert.add_argument("--edges", metavar="PATH")
    _add_output_arguments(invert)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exit_request:
        return EXIT_PARSE_ERROR if exit_request.code else EXIT_OK

    logging.basicConfig(level=getattr(logging, args.log_level), format=LOG_FORMAT, stream=sys.stderr)
    try:
        return dispatch(args)
    except GraphParseError as error:
        logger.error(str(error))
        sys.stderr.write(f"parse error: {error}\n")
        return EXIT_PARSE_ERROR
    except (PreconditionError, ValueError) as error:
        sys.stderr.write(f"precondition error: {error}\n")
        return EXIT_PRECONDITION
    except (SimulationInvariantError, GraphConstructionError, OSError) as error:
        sys.stderr.write(f"runtime error: {error}\n")
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
