"""Topology structure, mode-masked routing and the flit-level engine."""

import numpy as np
import pytest

from hima.noc import (
    DeadlockError,
    Message,
    NocParams,
    UnreachableError,
    build_topology,
    hop_distance,
    route,
    simulate,
)


class TestTopologies:
    def test_centered_grid_structure(self):
        topo = build_topology("hima-multimode", 24)
        assert len(topo.neighbors) == 25
        assert topo.grid_size == 5
        interior = [n for n, (r, c) in topo.coords.items() if 0 < r < 4 and 0 < c < 4]
        assert all(len(topo.neighbors[n]) == 8 for n in interior)
        assert topo.coords[topo.ct] == (2, 2)

    def test_adjoined_grid_structure(self):
        topo = build_topology("hima-multimode", 16)
        assert len(topo.neighbors) == 17
        assert topo.ct not in topo.coords
        assert len(topo.neighbors[topo.ct]) == 4  # one link per edge column

    def test_htree_structure(self):
        topo = build_topology("h-tree", 16)
        assert len(topo.neighbors) == 31
        assert topo.ct == 30
        assert all(len(topo.neighbors[leaf]) == 1 for leaf in range(16))

    def test_binary_tree_x_lateral_links(self):
        plain = build_topology("h-tree", 8)
        crossed = build_topology("binary-tree-x", 8)
        plain_links = sum(len(v) for v in plain.neighbors.values())
        crossed_links = sum(len(v) for v in crossed.neighbors.values())
        assert crossed_links > plain_links
        assert crossed.neighbors[0].get("lat-e") == 1

    def test_ring_structure(self):
        topo = build_topology("ring", 16)
        degrees = [len(topo.neighbors[t]) for t in range(16)]
        assert degrees[0] == 3  # two ring neighbors plus the controller tap
        assert all(d == 2 for d in degrees[1:])

    def test_star_structure(self):
        topo = build_topology("star", 7)
        assert len(topo.neighbors[topo.ct]) == 7
        assert all(len(topo.neighbors[t]) == 1 for t in range(7))

    def test_rejects_bad_shapes(self):
        with pytest.raises(ValueError):
            build_topology("hima-multimode", 7)
        with pytest.raises(ValueError):
            build_topology("h-tree", 12)
        with pytest.raises(ValueError):
            build_topology("pentagram", 4)


class TestHopDistance:
    def test_hima_worst_case_is_four(self):
        topo = build_topology("hima-multimode", 24)
        worst = max(
            hop_distance(topo, a, b) for a in topo.nodes for b in topo.nodes
        )
        assert worst == 4

    def test_plain_mesh_manhattan(self):
        topo = build_topology("mesh", 24)
        corners = [n for n, rc in topo.coords.items() if rc in ((0, 0), (4, 4))]
        assert hop_distance(topo, corners[0], corners[1]) == 8

    def test_htree_opposite_halves(self):
        topo = build_topology("h-tree", 16)
        assert hop_distance(topo, 0, 15) == 8

    def test_ring_mode_masks_interior(self):
        topo = build_topology("hima-multimode", 24)
        interior = [n for n in topo.pts if n not in topo.ring_order][0]
        with pytest.raises(UnreachableError):
            hop_distance(topo, 0, interior, mode="ring")


class TestRouting:
    def test_empty_route_to_self(self):
        topo = build_topology("hima-multimode", 16)
        assert route(topo, "full", 3, 3) == []

    def test_full_mode_uses_diagonals(self):
        topo = build_topology("hima-multimode", 16)
        hops = route(topo, "full", 0, 15)  # (0,0) -> (3,3)
        assert len(hops) == 3
        assert all(label == "se" for label, _ in hops)

    def test_diagonal_mode_ne_sw_only(self):
        topo = build_topology("hima-multimode", 16)
        ne_path = route(topo, "diagonal", 8, 2)  # (2,0) -> (0,2)
        assert [label for label, _ in ne_path] == ["ne", "ne"]
        with pytest.raises(UnreachableError):
            route(topo, "diagonal", 0, 15)  # southeast displacement is masked

    def test_ring_mode_walks_cycle(self):
        topo = build_topology("hima-multimode", 16)
        hops = route(topo, "ring", topo.ring_order[0], topo.ring_order[3])
        assert len(hops) == 3

    def test_ring_mode_interior_unreachable(self):
        topo = build_topology("hima-multimode", 24)
        interior = [n for n in topo.pts if n not in topo.ring_order][0]
        with pytest.raises(UnreachableError):
            route(topo, "ring", 0, interior)

    def test_mesh_xy_order(self):
        topo = build_topology("mesh", 16)
        hops = route(topo, "mesh-xy", 0, 15)
        labels = [label for label, _ in hops]
        assert labels == ["e", "e", "e", "s", "s", "s"]

    def test_tree_routes_through_ancestors(self):
        topo = build_topology("h-tree", 8)
        hops = route(topo, "full", 0, 7)
        assert len(hops) == 6
        assert hops[0][0] == "parent"

    def test_binary_tree_x_lateral_shortcut(self):
        topo = build_topology("binary-tree-x", 8)
        plain = build_topology("h-tree", 8)
        assert len(route(topo, "full", 3, 4)) < len(route(plain, "full", 3, 4))

    def test_star_via_hub(self):
        topo = build_topology("star", 5)
        hops = route(topo, "full", 1, 4)
        assert [n for _, n in hops] == [topo.ct, 4]


class TestSimulate:
    def test_empty_trace(self):
        topo = build_topology("hima-multimode", 16)
        report = simulate(topo, [])
        assert report.finish_cycle == 0
        assert report.injected_flits == 0

    def test_single_message_pipeline_latency(self):
        topo = build_topology("hima-multimode", 16)
        for src, dst, words in ((0, 15, 8), (0, 1, 5), (5, 10, 1)):
            hops = len(route(topo, "full", src, dst))
            report = simulate(topo, [Message(src, dst, words)])
            assert report.finish_cycle == hops + words - 1
            assert report.message_latencies == {0: hops + words - 1}

    def test_second_message_streams_behind_first(self):
        topo = build_topology("hima-multimode", 16)
        words = 6
        report = simulate(topo, [Message(0, 15, words), Message(0, 15, words)])
        departures = report.source_departures
        assert departures[1] - departures[0] == words

    def test_flit_conservation(self):
        topo = build_topology("h-tree", 8)
        trace = [Message(a, b, 3) for a in range(8) for b in range(8) if a != b]
        report = simulate(topo, trace)
        assert report.delivered_flits == report.injected_flits == 3 * 56
        assert sum(report.link_flits[(u, v)] for (u, v) in report.link_flits if v == 0) > 0

    def test_deterministic(self):
        topo = build_topology("hima-multimode", 16)
        trace = [Message(a, (a * 5 + 3) % 16, 4) for a in range(16)]
        r1 = simulate(topo, trace)
        r2 = simulate(topo, trace)
        assert r1.finish_cycle == r2.finish_cycle
        assert r1.link_flits == r2.link_flits
        assert r1.message_latencies == r2.message_latencies

    def test_latency_lower_bound(self):
        topo = build_topology("mesh", 16)
        trace = [Message(a, (a * 7 + 2) % 16, 1 + a % 4) for a in range(16)]
        report = simulate(topo, trace)
        for idx, latency in report.message_latencies.items():
            msg = trace[idx]
            hops = len(route(topo, "full", msg.src, msg.dst))
            assert latency >= hops + msg.words - 1

    def test_adding_traffic_never_speeds_up(self):
        topo = build_topology("hima-multimode", 16)
        base = [Message(a, (a + 7) % 16, 3) for a in range(10)]
        finish = simulate(topo, base).finish_cycle
        for extra in (Message(3, 12, 5), Message(0, 15, 2), Message(8, 1, 7)):
            grown = base + [extra]
            assert simulate(topo, grown).finish_cycle >= finish

    def test_mode_mask_respected(self):
        topo = build_topology("hima-multimode", 16)
        report = simulate(topo, [Message(8, 2, 4)], mode="diagonal")
        for (u, v) in report.link_flits:
            label = next(d for d, n in topo.neighbors[u].items() if n == v)
            assert label in ("ne", "sw")

    def test_star_hub_serializes(self):
        topo = build_topology("star", 8)
        trace = [Message(topo.ct, t, 16) for t in range(8)]
        fast = simulate(topo, trace, params=NocParams(ct_ports_per_cycle=8))
        slow = simulate(topo, trace, params=NocParams(ct_ports_per_cycle=2))
        assert slow.finish_cycle > fast.finish_cycle

    def test_deadlock_detected_when_buffers_unusable(self):
        topo = build_topology("mesh", 16)
        with pytest.raises(DeadlockError) as err:
            simulate(topo, [Message(0, 15, 2)], params=NocParams(queue_depth=0))
        assert "queue" in str(err.value)

    def test_rejects_negative_words(self):
        topo = build_topology("star", 2)
        with pytest.raises(ValueError):
            simulate(topo, [Message(0, 1, -1)])
