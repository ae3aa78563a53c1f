"""Distance-correlation trade-off front between the two optimization extremes.

The walk starts at the distance-optimal solution (dragoon placement, closest
assignment) and moves toward the correlation optimum one seeded random
reassignment at a time, recording every state; the non-dominated filter keeps
the trade-off frontier. Distance is minimized, correlation is maximized.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .assignment import (
    greedy_correlation,
    proposal_set,
    relocate_servers,
    total_correlation,
)
from .errors import ValidationError
from .placement import Assignment, Placement, closest_assignment, dragoon
from .profiles import UserGroup
from .rng import derive_seed, make_rng
from .simulation import Scenario, SimulationResult, run
from .topology import DistanceMatrix


@dataclass(frozen=True)
class SolutionPoint:
    placement: Placement
    assignment: tuple[tuple[str, str], ...]  # sorted (user, server) pairs
    avg_dist: float
    total_corr: float
    max_dist: float
    step: int
    sim: SimulationResult | None = None

    def assignment_dict(self) -> Assignment:
        return dict(self.assignment)


ParetoFront = list[SolutionPoint]


def dominates(a: SolutionPoint, b: SolutionPoint) -> bool:
    """a is at least as good in both objectives and strictly better in one."""
    if a.avg_dist > b.avg_dist or a.total_corr < b.total_corr:
        return False
    return a.avg_dist < b.avg_dist or a.total_corr > b.total_corr


def non_dominated(points: list[SolutionPoint]) -> ParetoFront:
    """Maximal non-dominated subset, deduplicated, ascending by avg_dist.

    Sort-and-scan: after ordering by (avg_dist asc, total_corr desc), a point
    survives iff its correlation strictly beats everything cheaper.
    """
    ordered = sorted(points, key=lambda p: (p.avg_dist, -p.total_corr, p.step))
    front: ParetoFront = []
    best_corr = -np.inf
    for p in ordered:
        if p.total_corr > best_corr:
            front.append(p)
            best_corr = p.total_corr
    return front


def _evaluate(
    dm: DistanceMatrix,
    users: list[UserGroup],
    placement: Placement,
    assignment: Assignment,
    step: int,
) -> SolutionPoint:
    weighted = np.array([u.priority * dm.get(u.node, assignment[u.node]) for u in users])
    return SolutionPoint(
        placement=tuple(sorted(placement)),
        assignment=tuple(sorted(assignment.items())),
        avg_dist=float(weighted.mean()),
        max_dist=float(weighted.max()),
        total_corr=total_correlation(users, assignment),
        step=step,
    )


def front_sweep(
    scenario: Scenario, k: int, steps: int, simulate: bool = False
) -> ParetoFront:
    """Pareto front from a seeded walk between the two single-objective optima.

    Point 0 is the dragoon placement with closest assignment; the final point
    is the correlation-greedy fixpoint with relocated servers. Interior points
    apply one randomly chosen improving reassignment per step, drawn from the
    greedy proposal set under the walk seed derived from the scenario's master
    seed. With simulate=True every surviving front point also gets a cache
    simulation attached.
    """
    if steps < 2:
        raise ValidationError("steps must be at least 2")
    topo = scenario.topology
    users = scenario.users
    dm = topo.distance_matrix()

    place0, _, _ = dragoon(dm, topo, users, k)
    a0 = closest_assignment(dm, users, place0)
    recorded = [_evaluate(dm, users, place0, a0, step=0)]

    rng = make_rng(derive_seed(scenario.master_seed, "pareto-walk"))
    assignment = dict(a0)
    for step in range(1, steps - 1):
        proposals = proposal_set(users, place0, assignment)
        if not proposals:
            break
        user_node, server = proposals[int(rng.integers(len(proposals)))]
        assignment[user_node] = server
        recorded.append(_evaluate(dm, users, place0, assignment, step=step))

    a_greedy, _, _ = greedy_correlation(dm, users, place0, a0)
    place_end, a_end = relocate_servers(dm, users, place0, a_greedy)
    recorded.append(_evaluate(dm, users, place_end, a_end, step=steps - 1))

    front = non_dominated(recorded)
    if simulate:
        from dataclasses import replace as dc_replace

        front = [
            dc_replace(
                p,
                sim=run(
                    dc_replace(
                        scenario, placement=p.placement, assignment=p.assignment_dict()
                    )
                ),
            )
            for p in front
        ]
    return front
