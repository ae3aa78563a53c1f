import pytest

from cdnsim import (
    InfeasibleError,
    Profile,
    UserGroup,
    brute_force_placement,
    closest_assignment,
    dragoon,
    evaluate_placement,
    farthest_first_init,
    one_center,
)
from cdnsim.placement import PlacementObjective
from conftest import (
    dummy_profile,
    path_topology,
    random_connected_topology,
    star_topology,
    uniform_users,
)


class TestClosestAssignment:
    def test_tie_breaks_to_lower_id(self, path3):
        users = uniform_users(path3)
        a = closest_assignment(path3.distance_matrix(), users, ("A", "C"))
        assert a["B"] == "A"

    def test_single_server(self, path5):
        users = uniform_users(path5)
        a = closest_assignment(path5.distance_matrix(), users, ("C",))
        assert set(a.values()) == {"C"}

    @pytest.mark.parametrize("seed", range(5))
    def test_matches_per_user_argmin_oracle(self, seed):
        topo = random_connected_topology(seed, 8, weighted=True)
        dm = topo.distance_matrix()
        users = uniform_users(topo)
        servers = tuple(topo.node_ids[:3])
        a = closest_assignment(dm, users, servers)
        for u in users:
            # independent scan: smallest (distance, id) pair wins
            best = min(servers, key=lambda s: (dm.get(u.node, s), s))
            assert a[u.node] == best


class TestEvaluatePlacement:
    def test_path_center(self, path3):
        obj = evaluate_placement(path3.distance_matrix(), uniform_users(path3), ("B",))
        assert obj == PlacementObjective(1.0, pytest.approx(2 / 3))

    def test_servers_everywhere(self, path5):
        users = uniform_users(path5)
        obj = evaluate_placement(path5.distance_matrix(), users, path5.node_ids)
        assert obj == PlacementObjective(0.0, 0.0)

    @pytest.mark.parametrize("seed", range(5))
    def test_recomputation_oracle(self, seed):
        topo = random_connected_topology(seed, 10, weighted=True)
        dm = topo.distance_matrix()
        users = uniform_users(topo)
        servers = tuple(topo.node_ids[:2])
        obj = evaluate_placement(dm, users, servers)
        dists = [min(dm.get(u.node, s) for s in servers) for u in users]
        assert obj.max_dist == pytest.approx(max(dists))
        assert obj.avg_dist == pytest.approx(sum(dists) / len(dists))

    def test_priority_weighting(self, path3):
        heavy = [
            UserGroup(node="A", priority=5.0, profile=dummy_profile()),
            UserGroup(node="C", priority=1.0, profile=dummy_profile()),
        ]
        obj = evaluate_placement(path3.distance_matrix(), heavy, ("B",))
        assert obj.max_dist == 5.0  # 5 * dist(A,B)
        assert obj.avg_dist == 3.0  # (5*1 + 1*1) / 2


class TestOneCenter:
    def test_path3(self, path3):
        assert one_center(path3.distance_matrix(), uniform_users(path3)) == "B"

    def test_path5_symmetry(self, path5):
        assert one_center(path5.distance_matrix(), uniform_users(path5)) == "C"

    @pytest.mark.parametrize("seed", range(6))
    def test_exhaustive_scan_oracle(self, seed):
        topo = random_connected_topology(seed, 12, weighted=True)
        dm = topo.distance_matrix()
        users = uniform_users(topo)
        got = one_center(dm, users)
        best = None
        for c in dm.ids:
            w = [u.priority * dm.get(u.node, c) for u in users]
            key = (max(w), sum(w) / len(w), c)
            if best is None or key < best:
                best = key
        assert got == best[2]


class TestFarthestFirst:
    def test_path5_k2(self, path5):
        # mark C; farthest is A by tie-break; then E
        got = farthest_first_init(path5.distance_matrix(), uniform_users(path5), 2)
        assert got == ("A", "E")

    def test_k_equals_node_count(self, path3):
        got = farthest_first_init(path3.distance_matrix(), uniform_users(path3), 3)
        assert got == ("A", "B", "C")

    def test_k1_path3(self, path3):
        got = farthest_first_init(path3.distance_matrix(), uniform_users(path3), 1)
        assert got == ("A",)

    def test_k_out_of_range(self, path3):
        with pytest.raises(InfeasibleError):
            farthest_first_init(path3.distance_matrix(), uniform_users(path3), 4)


class TestDragoon:
    def test_path3_k1_moves_to_center(self, path3):
        placement, obj, log = dragoon(
            path3.distance_matrix(), path3, uniform_users(path3), 1
        )
        assert placement == ("B",)
        assert obj.max_dist == 1.0
        assert [(m.from_node, m.to_node) for m in log] == [("A", "B")]

    def test_path5_k2_reaches_optimum(self, path5):
        dm = path5.distance_matrix()
        users = uniform_users(path5)
        placement, obj, _ = dragoon(dm, path5, users, 2)
        _, opt = brute_force_placement(dm, users, 2)
        assert opt.max_dist == 1.0
        assert obj.max_dist == 1.0

    @pytest.mark.parametrize("seed", range(10))
    def test_never_worse_than_init(self, seed):
        topo = random_connected_topology(seed, 10, weighted=(seed % 2 == 0))
        dm = topo.distance_matrix()
        users = uniform_users(topo)
        for k in (1, 2, 3):
            init = farthest_first_init(dm, users, k)
            init_obj = evaluate_placement(dm, users, init)
            _, obj, _ = dragoon(dm, topo, users, k)
            assert obj <= init_obj

    def test_deterministic(self):
        topo = random_connected_topology(7, 15, weighted=True)
        dm = topo.distance_matrix()
        users = uniform_users(topo)
        runs = [dragoon(dm, topo, users, 3) for _ in range(3)]
        assert runs[0] == runs[1] == runs[2]

    def test_objective_decreases_along_log(self):
        topo = random_connected_topology(13, 20)
        dm = topo.distance_matrix()
        users = uniform_users(topo)
        _, _, log = dragoon(dm, topo, users, 2)
        objs = [(m.max_dist, m.avg_dist) for m in log]
        assert all(objs[i] > objs[i + 1] for i in range(len(objs) - 1))


class TestBruteForce:
    def test_path3(self, path3):
        placement, obj = brute_force_placement(
            path3.distance_matrix(), uniform_users(path3), 1
        )
        assert placement == ("B",)
        assert obj.max_dist == 1.0

    def test_star_center(self):
        topo = star_topology("m", ["a", "b", "c", "d"])
        placement, obj = brute_force_placement(
            topo.distance_matrix(), uniform_users(topo), 1
        )
        assert placement == ("m",)
        assert obj.max_dist == 1.0

    def test_guard_rejects_huge_instance(self):
        topo = random_connected_topology(0, 60)
        with pytest.raises(InfeasibleError, match="guard"):
            brute_force_placement(topo.distance_matrix(), uniform_users(topo), 10)


class TestSiteWhitelist:
    def test_farthest_first_respects_sites(self, path5):
        dm = path5.distance_matrix()
        users = uniform_users(path5)
        got = farthest_first_init(dm, users, 2, sites=("B", "C", "D"))
        assert set(got) <= {"B", "C", "D"}

    def test_dragoon_stays_on_sites(self, path5):
        dm = path5.distance_matrix()
        users = uniform_users(path5)
        placement, obj, _ = dragoon(dm, path5, users, 1, sites=("A", "B"))
        assert placement == ("B",)  # C is optimal but not allowed
        assert obj.max_dist == 3.0  # dist(B, E)

    def test_brute_force_with_sites(self, path5):
        dm = path5.distance_matrix()
        users = uniform_users(path5)
        placement, _ = brute_force_placement(dm, users, 1, sites=("A", "E"))
        assert placement == ("A",)

    def test_unknown_site_rejected(self, path3):
        from cdnsim import ValidationError

        with pytest.raises(ValidationError):
            farthest_first_init(path3.distance_matrix(), uniform_users(path3), 1,
                                sites=("Z",))


@pytest.mark.parametrize("seed", range(12))
def test_dragoon_within_two_approx(seed):
    topo = random_connected_topology(seed, 4 + seed % 9, weighted=(seed % 3 == 0))
    dm = topo.distance_matrix()
    users = uniform_users(topo)
    for k in (1, 2, 3):
        if k > len(topo.node_ids):
            continue
        _, obj, _ = dragoon(dm, topo, users, k)
        _, opt = brute_force_placement(dm, users, k)
        assert obj.max_dist <= 2 * opt.max_dist + 1e-12
