"""Command-line front end: place, assign, simulate, pareto, validate.

Every command writes deterministic, header-first CSV/JSON files into --out and
prints a short human summary to stdout. Exit codes: 0 ok, 1 invalid
configuration, 2 infeasible request, 3 I/O failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

from .assignment import candidate_corr, greedy_correlation, relocate_servers
from .cache import CacheConfig, POLICIES
from .errors import InfeasibleError, ValidationError
from .placement import closest_assignment, dragoon, one_center
from .profiles import UserGroup, ZipfModel, generate_users, load_trace
from .simulation import (
    Scenario,
    experiment_sweep,
    run,
    scenario_from_json,
    SWEEP_AXES,
)
from .pareto import front_sweep
from .topology import Topology, parse_topology

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_INFEASIBLE = 2
EXIT_IO = 3


class _Parser(argparse.ArgumentParser):
    """argparse that reports usage problems as config errors (exit 1)."""

    def error(self, message):
        self.print_usage(sys.stderr)
        raise ValidationError(message)


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--topology", required=True, help="GraphML file")
    p.add_argument("--weight-key", default=None,
                   help="GraphML attribute holding edge weights (default: all 1.0)")
    p.add_argument("--priority-key", default="priority",
                   help="GraphML attribute holding node priorities")
    p.add_argument("--out", default=".", help="output directory")
    p.add_argument("--seed", type=int, default=0, help="master seed")


def _add_users(p: argparse.ArgumentParser):
    p.add_argument("--trace", default=None,
                   help="request-count CSV (node_id,service_id,count); "
                        "default is Zipf-generated profiles")
    p.add_argument("--alpha", type=float, default=0.3, help="Zipf exponent")
    p.add_argument("--universe", type=int, default=100, help="number of services")
    p.add_argument("--profile-size", type=int, default=15,
                   help="services per generated profile")
    p.add_argument("--requests", type=int, default=100, help="requests per user")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="cdnsim", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="parse and validate a topology")
    _add_common(p)

    p = sub.add_parser("place", help="optimize server placement for distance")
    _add_common(p)
    _add_users(p)
    p.add_argument("--k", type=int, required=True, help="number of servers")

    p = sub.add_parser("assign", help="optimize user assignment for correlation")
    _add_common(p)
    _add_users(p)
    p.add_argument("--placement", required=True, help="placement JSON from `place`")

    p = sub.add_parser("simulate", help="replay request workload, optionally sweeping")
    _add_common(p)
    _add_users(p)
    p.add_argument("--k", type=int, default=None, help="optimize placement here")
    p.add_argument("--placement", default=None, help="placement JSON from `place`")
    p.add_argument("--scenario", default=None, help="full scenario JSON")
    p.add_argument("--policy", default="LRU", choices=POLICIES)
    p.add_argument("--capacity", type=int, default=10)
    p.add_argument("--origin", default=None, help="origin node (default: 1-center)")
    p.add_argument("--optimizer", default="distance", choices=["distance", "correlation"])
    p.add_argument("--sweep", default=None, choices=SWEEP_AXES)
    p.add_argument("--values", default=None,
                   help="comma-separated sweep values, e.g. 1,2,4,8")

    p = sub.add_parser("pareto", help="distance vs. correlation front")
    _add_common(p)
    _add_users(p)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--steps", type=int, default=50)
    p.add_argument("--policy", default="LRU", choices=POLICIES)
    p.add_argument("--capacity", type=int, default=10)
    p.add_argument("--origin", default=None)

    return parser


def _read_bytes(path: str) -> bytes:
    try:
        return Path(path).read_bytes()
    except OSError as exc:
        raise _IOFailure(str(exc)) from exc


class _IOFailure(Exception):
    pass


def _load_topology(args) -> Topology:
    return parse_topology(
        _read_bytes(args.topology),
        weight_key=args.weight_key,
        priority_key=args.priority_key,
    )


def _load_users(args, topo: Topology) -> list[UserGroup]:
    if args.trace:
        users = load_trace(_read_bytes(args.trace))
        for u in users:
            if u.node not in topo:
                raise ValidationError(f"trace user {u.node!r} not in topology")
            u.priority = topo.priorities[u.node]
            u.request_count = args.requests
        return users
    model = ZipfModel(alpha=args.alpha, universe_size=args.universe,
                      profile_size=args.profile_size)
    return generate_users(topo, model, args.seed, request_count=args.requests)


def _load_placement(path: str, topo: Topology) -> tuple[str, ...]:
    try:
        servers = json.loads(_read_bytes(path))
    except json.JSONDecodeError as exc:
        raise ValidationError(f"bad placement JSON: {exc}") from exc
    if not isinstance(servers, list) or not servers:
        raise ValidationError("placement JSON must be a non-empty list of node ids")
    for s in servers:
        if s not in topo:
            raise ValidationError(f"placement references unknown node {s!r}")
    if len(set(servers)) != len(servers):
        raise ValidationError("placement contains duplicate nodes")
    return tuple(sorted(servers))


def _outdir(args) -> Path:
    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise _IOFailure(str(exc)) from exc
    return out


def _write_csv(path: Path, header: list[str], rows: list[list]):
    try:
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            writer.writerows(rows)
    except OSError as exc:
        raise _IOFailure(str(exc)) from exc


def _write_text(path: Path, text: str):
    try:
        path.write_text(text)
    except OSError as exc:
        raise _IOFailure(str(exc)) from exc


def cmd_validate(args) -> int:
    topo = _load_topology(args)
    print(f"topology ok: {len(topo.node_ids)} nodes, {len(topo.edges)} edges")
    return EXIT_OK


def cmd_place(args) -> int:
    topo = _load_topology(args)
    users = _load_users(args, topo)
    dm = topo.distance_matrix()
    placement, objective, log = dragoon(dm, topo, users, args.k)
    out = _outdir(args)
    _write_text(out / "placement.json", json.dumps(sorted(placement), indent=2) + "\n")
    _write_csv(
        out / "placement_log.csv",
        ["iteration", "server", "from", "to", "max_dist", "avg_dist"],
        [[m.iteration, m.server, m.from_node, m.to_node,
          repr(m.max_dist), repr(m.avg_dist)] for m in log],
    )
    print(f"placement: {' '.join(placement)}")
    print(f"objective: max_dist={objective.max_dist} avg_dist={objective.avg_dist}")
    return EXIT_OK


def cmd_assign(args) -> int:
    topo = _load_topology(args)
    users = _load_users(args, topo)
    dm = topo.distance_matrix()
    placement = _load_placement(args.placement, topo)
    initial = closest_assignment(dm, users, placement)
    assignment, objective, log = greedy_correlation(dm, users, placement, initial)
    placement, assignment = relocate_servers(dm, users, placement, assignment)
    out = _outdir(args)
    rows = []
    for u in sorted(users, key=lambda u: u.node):
        server = assignment[u.node]
        rho = candidate_corr(users, assignment, u, server)
        rows.append([u.node, server, repr(rho), repr(dm.get(u.node, server))])
    _write_csv(out / "assignment.csv",
               ["user_node", "server_node", "rho", "distance"], rows)
    _write_csv(
        out / "assignment_log.csv",
        ["iteration", "moves_proposed", "total_corr_before", "total_corr_after",
         "accepted"],
        [[b.iteration, b.moves_proposed, repr(b.total_corr_before),
          repr(b.total_corr_after), b.accepted] for b in log],
    )
    _write_text(out / "assignment_placement.json",
                json.dumps(sorted(placement), indent=2) + "\n")
    print(f"total_corr: {objective.total_corr}")
    print(f"relocated placement: {' '.join(placement)}")
    return EXIT_OK


def _assemble_scenario(args, topo: Topology, users: list[UserGroup]) -> Scenario:
    dm = topo.distance_matrix()
    if args.placement:
        placement = _load_placement(args.placement, topo)
        assignment = closest_assignment(dm, users, placement)
    elif args.k is not None:
        placement, _, _ = dragoon(dm, topo, users, args.k)
        assignment = closest_assignment(dm, users, placement)
        if args.optimizer == "correlation":
            assignment, _, _ = greedy_correlation(dm, users, placement, assignment)
            placement, assignment = relocate_servers(dm, users, placement, assignment)
    else:
        raise ValidationError("simulate needs --scenario, --placement or --k")
    origin = args.origin if args.origin else one_center(dm, users)
    return Scenario(
        topology=topo,
        users=users,
        placement=placement,
        assignment=assignment,
        cache=CacheConfig(capacity=args.capacity, policy=args.policy),
        origin=origin,
        master_seed=args.seed,
        requests_per_user=args.requests,
    ).validate()


_SIM_HEADER = ["axis_value", "miss_ratio", "max_dist", "avg_dist",
               "network_load", "cold_misses"]


def _sim_row(value, result) -> list:
    return [value, repr(result.miss_ratio), repr(result.max_user_distance),
            repr(result.avg_user_distance), repr(result.network_load),
            result.overall.cold_misses]


def cmd_simulate(args) -> int:
    if args.scenario:
        scenario = scenario_from_json(_read_bytes(args.scenario).decode())
    else:
        topo = _load_topology(args)
        users = _load_users(args, topo)
        scenario = _assemble_scenario(args, topo, users)
    out = _outdir(args)
    if args.sweep:
        if not args.values:
            raise ValidationError("--sweep requires --values")
        raw = [v.strip() for v in args.values.split(",") if v.strip()]
        if not raw:
            raise ValidationError("empty sweep value list")
        if args.sweep == "policy":
            values = raw
        else:
            try:
                values = [int(v) for v in raw]
            except ValueError as exc:
                raise ValidationError(f"bad sweep value: {exc}") from exc
        table = experiment_sweep(scenario, args.sweep, values, optimizer=args.optimizer)
        rows = [_sim_row(value, result) for value, result in table]
    else:
        result = run(scenario)
        rows = [_sim_row("-", result)]
        print(f"miss_ratio: {result.miss_ratio}")
        print(f"network_load: {result.network_load}")
    _write_csv(out / "simulation.csv", _SIM_HEADER, rows)
    return EXIT_OK


def cmd_pareto(args) -> int:
    topo = _load_topology(args)
    users = _load_users(args, topo)
    dm = topo.distance_matrix()
    origin = args.origin if args.origin else one_center(dm, users)
    scenario = Scenario(
        topology=topo,
        users=users,
        placement=(topo.node_ids[0],),  # front_sweep derives its own placements
        assignment={u.node: topo.node_ids[0] for u in users},
        cache=CacheConfig(capacity=args.capacity, policy=args.policy),
        origin=origin,
        master_seed=args.seed,
        requests_per_user=args.requests,
    )
    front = front_sweep(scenario, args.k, args.steps)
    out = _outdir(args)
    _write_csv(
        out / "pareto.csv",
        ["avg_dist", "total_corr", "max_dist", "miss_ratio", "placement",
         "seed", "step"],
        [[repr(p.avg_dist), repr(p.total_corr), repr(p.max_dist),
          repr(p.sim.miss_ratio) if p.sim else "",
          " ".join(p.placement), args.seed, p.step] for p in front],
    )
    print(f"front size: {len(front)}")
    return EXIT_OK


_COMMANDS = {
    "validate": cmd_validate,
    "place": cmd_place,
    "assign": cmd_assign,
    "simulate": cmd_simulate,
    "pareto": cmd_pareto,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return _COMMANDS[args.command](args)
    except InfeasibleError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except _IOFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
