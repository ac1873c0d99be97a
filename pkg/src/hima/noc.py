"""Flit-level simulator of candidate tile interconnects.

Topology kinds: ``h-tree``, ``binary-tree-x``, ``mesh``, ``star``, ``ring``
and the diagonal-augmented multi-mode grid ``hima-multimode``. On the
multi-mode grid the router ports can be masked per mode: ``full`` (all 8
directions), ``mesh-xy``, ``diagonal`` (NE/SW only), ``ring`` (the two
embedded-cycle neighbors; inner tiles end up with east/west only) and
``broadcast-collect`` (controller-tile centered traffic; all ports).

Timing model: links carry one word per cycle, each input port has a
bounded queue (default depth 4), output conflicts are resolved round-robin,
an uncontended hop costs a single cycle (feed-through) and a hop that had
to queue pays two extra router cycles on top of the time spent waiting.
The model is deterministic: node, port and message orders are all fixed.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

from .scriptgen import is_power_of_two

GRID_KINDS = ("mesh", "hima-multimode")
TREE_KINDS = ("h-tree", "binary-tree-x")
TOPOLOGY_KINDS = GRID_KINDS + TREE_KINDS + ("star", "ring")
MODES = ("full", "broadcast-collect", "ring", "diagonal", "mesh-xy")

_CARDINAL = {"n": (-1, 0), "s": (1, 0), "e": (0, 1), "w": (0, -1)}
_DIAGONAL = {"ne": (-1, 1), "nw": (-1, -1), "se": (1, 1), "sw": (1, -1)}
_COMPASS = {**_CARDINAL, **_DIAGONAL}


class UnreachableError(Exception):
    """Destination cannot be reached under the current port masks."""


class DeadlockError(Exception):
    """No flit made progress for the configured grace period."""


@dataclass(frozen=True)
class Message:
    src: int
    dst: int
    words: int
    cycle: int = 0
    tag: str = ""


TrafficTrace = list[Message]


@dataclass
class Topology:
    kind: str
    n_tiles: int
    ct: int
    pts: list[int]
    neighbors: dict[int, dict[str, int]]
    coords: dict[int, tuple[int, int]] = field(default_factory=dict)
    grid_size: int = 0
    ring_order: list[int] | None = None
    parent: dict[int, int] = field(default_factory=dict)
    depth: dict[int, int] = field(default_factory=dict)
    level_pos: dict[int, int] = field(default_factory=dict)

    @property
    def nodes(self) -> list[int]:
        return sorted(self.neighbors)

    def pt_node(self, tile: int) -> int:
        return self.pts[tile]

    def is_inter_pt(self, a: int, b: int) -> bool:
        return a != self.ct and b != self.ct

    def enabled_dirs(self, node: int, mode: str) -> dict[str, int]:
        """Port mask for one node under a mode; non-grid kinds ignore modes."""
        ports = self.neighbors[node]
        if self.kind not in GRID_KINDS or mode in ("full", "broadcast-collect"):
            return ports
        if mode == "mesh-xy":
            allowed = set(_CARDINAL) | {"ct"} | {d for d in ports if d.startswith("edge")}
            return {d: n for d, n in ports.items() if d in allowed}
        if mode == "diagonal":
            allowed = {"ne", "sw", "ct"} | {d for d in ports if d.startswith("edge")}
            return {d: n for d, n in ports.items() if d in allowed}
        if mode == "ring":
            if self.ring_order is None:
                return ports  # no embedded cycle on this grid: fall back to full
            allowed_nodes = set()
            if node in self.ring_order:
                i = self.ring_order.index(node)
                allowed_nodes = {
                    self.ring_order[(i + 1) % len(self.ring_order)],
                    self.ring_order[(i - 1) % len(self.ring_order)],
                }
            return {
                d: n
                for d, n in ports.items()
                if n in allowed_nodes or d == "ct" or d.startswith("edge") or node == self.ct
            }
        raise ValueError(f"unknown mode {mode!r}")


def _link(neighbors, a: int, dir_ab: str, b: int, dir_ba: str) -> None:
    neighbors.setdefault(a, {})[dir_ab] = b
    neighbors.setdefault(b, {})[dir_ba] = a


def _boustrophedon_cycle(g: int) -> list[tuple[int, int]]:
    """Hamiltonian cycle on an even-sided grid: row 0 east, snake down, return up col 0."""
    path = [(0, c) for c in range(g)]
    for r in range(1, g):
        cols = range(g - 1, 0, -1) if r % 2 == 1 else range(1, g)
        path.extend((r, c) for c in cols)
    path.extend((r, 0) for r in range(g - 1, 0, -1))
    return path


def build_topology(kind: str, n_tiles: int) -> Topology:
    """Build one controller tile plus ``n_tiles`` processing tiles."""
    if n_tiles < 1:
        raise ValueError("n_tiles must be >= 1")
    if kind in GRID_KINDS:
        return _build_grid(kind, n_tiles)
    if kind in TREE_KINDS:
        return _build_tree(kind, n_tiles)
    if kind == "star":
        return _build_star(n_tiles)
    if kind == "ring":
        return _build_ring(n_tiles)
    raise ValueError(f"unknown topology kind {kind!r}")


def _build_grid(kind: str, n_tiles: int) -> Topology:
    g_centered = _isqrt_exact(n_tiles + 1)
    g_adjoined = _isqrt_exact(n_tiles)
    if g_centered:
        g, centered = g_centered, True
    elif g_adjoined:
        g, centered = g_adjoined, False
    else:
        raise ValueError(
            f"{kind} needs n_tiles or n_tiles+1 to be a perfect square, got {n_tiles}"
        )

    center = (g // 2, g // 2) if centered else None
    coords: dict[int, tuple[int, int]] = {}
    by_pos: dict[tuple[int, int], int] = {}
    node = 0
    for r in range(g):
        for c in range(g):
            if centered and (r, c) == center:
                continue
            coords[node] = (r, c)
            by_pos[(r, c)] = node
            node += 1
    ct = node
    pts = list(range(n_tiles))
    if centered:
        coords[ct] = center
        by_pos[center] = ct

    dirs = _COMPASS if kind == "hima-multimode" else _CARDINAL
    neighbors: dict[int, dict[str, int]] = {n: {} for n in list(coords)}
    for (r, c), a in by_pos.items():
        for d, (dr, dc) in dirs.items():
            b = by_pos.get((r + dr, c + dc))
            if b is not None:
                neighbors[a][d] = b

    if not centered:
        # Controller adjoined along the top edge, one link per column.
        neighbors[ct] = {}
        for c in range(g):
            _link(neighbors, ct, f"edge{c}", by_pos[(0, c)], "ct")

    ring_order = None
    if centered and g >= 3:
        # Perimeter cycle; interior tiles have no ring ports in ring mode.
        perimeter = (
            [(0, c) for c in range(g)]
            + [(r, g - 1) for r in range(1, g)]
            + [(g - 1, c) for c in range(g - 2, -1, -1)]
            + [(r, 0) for r in range(g - 2, 0, -1)]
        )
        ring_order = [by_pos[p] for p in perimeter]
    elif g % 2 == 0:
        ring_order = [by_pos[p] for p in _boustrophedon_cycle(g)]

    return Topology(
        kind=kind,
        n_tiles=n_tiles,
        ct=ct,
        pts=pts,
        neighbors=neighbors,
        coords=coords,
        grid_size=g,
        ring_order=ring_order,
    )


def _isqrt_exact(value: int) -> int | None:
    import math

    g = math.isqrt(value)
    return g if g * g == value else None


def _build_tree(kind: str, n_tiles: int) -> Topology:
    if not is_power_of_two(n_tiles):
        raise ValueError(f"{kind} needs a power-of-two tile count, got {n_tiles}")
    neighbors: dict[int, dict[str, int]] = {t: {} for t in range(n_tiles)}
    parent: dict[int, int] = {}
    depth: dict[int, int] = {}
    level_pos: dict[int, int] = {}
    levels: list[list[int]] = [list(range(n_tiles))]
    for pos, leaf in enumerate(levels[0]):
        depth[leaf] = 0
        level_pos[leaf] = pos
    next_id = n_tiles
    while len(levels[-1]) > 1:
        below = levels[-1]
        level = []
        for i in range(0, len(below), 2):
            node = next_id
            next_id += 1
            neighbors[node] = {}
            _link(neighbors, node, "child0", below[i], "parent")
            _link(neighbors, node, "child1", below[i + 1], "parent")
            parent[below[i]] = node
            parent[below[i + 1]] = node
            depth[node] = depth[below[i]] + 1
            level_pos[node] = len(level)
            level.append(node)
        levels.append(level)
    root = levels[-1][0]
    if kind == "binary-tree-x":
        for level in levels[:-1]:
            for a, b in zip(level, level[1:]):
                _link(neighbors, a, "lat-e", b, "lat-w")
    return Topology(
        kind=kind,
        n_tiles=n_tiles,
        ct=root,
        pts=list(range(n_tiles)),
        neighbors=neighbors,
        parent=parent,
        depth=depth,
        level_pos=level_pos,
    )


def _build_star(n_tiles: int) -> Topology:
    neighbors: dict[int, dict[str, int]] = {}
    ct = n_tiles
    neighbors[ct] = {}
    for t in range(n_tiles):
        _link(neighbors, ct, f"pt{t}", t, "ct")
    return Topology(kind="star", n_tiles=n_tiles, ct=ct, pts=list(range(n_tiles)), neighbors=neighbors)


def _build_ring(n_tiles: int) -> Topology:
    neighbors: dict[int, dict[str, int]] = {t: {} for t in range(n_tiles)}
    for t in range(n_tiles):
        nxt = (t + 1) % n_tiles
        if n_tiles > 1 and nxt != t and "cw" not in neighbors[t]:
            _link(neighbors, t, "cw", nxt, "ccw")
    ct = n_tiles
    neighbors[ct] = {}
    _link(neighbors, ct, "tap", 0, "ct")
    return Topology(
        kind="ring",
        n_tiles=n_tiles,
        ct=ct,
        pts=list(range(n_tiles)),
        neighbors=neighbors,
        ring_order=list(range(n_tiles)),
    )


def hop_distance(topology: Topology, a: int, b: int, mode: str = "full") -> int:
    """Minimum hop count under the mode's port masks (BFS)."""
    if a not in topology.neighbors or b not in topology.neighbors:
        raise ValueError("unknown node id")
    if a == b:
        return 0
    seen = {a}
    frontier = deque([(a, 0)])
    while frontier:
        node, dist = frontier.popleft()
        for nxt in topology.enabled_dirs(node, mode).values():
            if nxt == b:
                return dist + 1
            if nxt not in seen:
                seen.add(nxt)
                frontier.append((nxt, dist + 1))
    raise UnreachableError(f"{b} unreachable from {a} in mode {mode}")


def route(topology: Topology, mode: str, src: int, dst: int) -> list[tuple[str, int]]:
    """Deterministic minimal path as (port label, next node) hops."""
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}")
    if src == dst:
        return []
    kind = topology.kind
    if kind in GRID_KINDS:
        return _route_grid(topology, mode, src, dst)
    if kind in TREE_KINDS:
        return _route_tree(topology, src, dst)
    if kind == "star":
        hops = []
        if src != topology.ct:
            hops.append(("ct", topology.ct))
        if dst != topology.ct:
            hops.append((f"pt{dst}", dst))
        return hops
    if kind == "ring":
        return _route_ring_topology(topology, src, dst)
    raise ValueError(f"unknown topology kind {kind!r}")


def _step_dir(topology, node, d):
    try:
        return topology.neighbors[node][d]
    except KeyError:
        raise UnreachableError(f"port {d} masked or absent at node {node}")


def _route_grid(topology: Topology, mode: str, src: int, dst: int) -> list[tuple[str, int]]:
    hops: list[tuple[str, int]] = []
    node = src
    # Off-grid controller: enter or leave through the best edge link.
    if topology.ct not in topology.coords:
        if node == topology.ct:
            target = topology.coords[dst]
            entries = sorted(topology.neighbors[topology.ct].items())
            # Prefer the column-aligned edge tile so controller traffic
            # spreads over all edge links instead of piling on one.
            label, entry = min(
                entries,
                key=lambda kv: (
                    _cheby(topology.coords[kv[1]], target),
                    abs(topology.coords[kv[1]][1] - target[1]),
                    kv[0],
                ),
            )
            hops.append((label, entry))
            node = entry
        if dst == topology.ct:
            here = topology.coords[node]
            exits = sorted(topology.neighbors[topology.ct].values())
            exit_node = min(
                exits,
                key=lambda n: (
                    _cheby(topology.coords[n], here),
                    abs(topology.coords[n][1] - here[1]),
                    n,
                ),
            )
            hops.extend(_route_grid_cells(topology, mode, node, exit_node))
            hops.append(("ct", topology.ct))
            return hops
    hops.extend(_route_grid_cells(topology, mode, node, dst))
    return hops


def _cheby(a: tuple[int, int], b: tuple[int, int]) -> int:
    return max(abs(a[0] - b[0]), abs(a[1] - b[1]))


def _route_grid_cells(topology: Topology, mode: str, src: int, dst: int) -> list[tuple[str, int]]:
    if src == dst:
        return []
    if mode == "ring":
        order = topology.ring_order
        if order is None:
            mode = "full"  # grids without an embedded cycle keep all ports open
        elif src in order and dst in order:
            return _ring_walk(topology, order, src, dst)
        else:
            raise UnreachableError(
                f"ring mode reaches only tiles on the embedded cycle ({src} -> {dst})"
            )
    hops: list[tuple[str, int]] = []
    node = src
    (r1, c1), (r2, c2) = topology.coords[node], topology.coords[dst]
    use_diagonals = topology.kind == "hima-multimode" and mode in ("full", "broadcast-collect", "diagonal")
    while (r1, c1) != (r2, c2):
        dr = 0 if r1 == r2 else (1 if r2 > r1 else -1)
        dc = 0 if c1 == c2 else (1 if c2 > c1 else -1)
        if mode == "diagonal":
            if not (dr, dc) in ((-1, 1), (1, -1)) or abs(r2 - r1) != abs(c2 - c1):
                raise UnreachableError(
                    f"diagonal mode cannot reach {dst} from {src} (NE/SW moves only)"
                )
            step = (dr, dc)
        elif use_diagonals and dr != 0 and dc != 0:
            step = (dr, dc)
        elif dc != 0:
            step = (0, dc)  # XY order: east/west first
        else:
            step = (dr, 0)
        label = next(d for d, v in _COMPASS.items() if v == step)
        node = _step_dir(topology, node, label)
        hops.append((label, node))
        r1, c1 = topology.coords[node]
    return hops


def _route_ring_topology(topology: Topology, src: int, dst: int) -> list[tuple[str, int]]:
    hops: list[tuple[str, int]] = []
    if src == topology.ct:
        hops.append(("tap", 0))
        src = 0
    tail_to_ct = dst == topology.ct
    ring_dst = 0 if tail_to_ct else dst
    if src != ring_dst:
        hops.extend(_ring_walk(topology, topology.ring_order, src, ring_dst))
    if tail_to_ct:
        hops.append(("ct", topology.ct))
    return hops


def _ring_walk(topology: Topology, order: list[int], src: int, dst: int) -> list[tuple[str, int]]:
    n = len(order)
    i, j = order.index(src), order.index(dst)
    fwd = (j - i) % n
    bwd = (i - j) % n
    step = 1 if fwd <= bwd else -1  # tie goes clockwise (increasing cycle index)
    hops = []
    node = src
    while node != dst:
        i = (i + step) % n
        nxt = order[i]
        label = next(d for d, v in topology.neighbors[node].items() if v == nxt)
        hops.append((label, nxt))
        node = nxt
    return hops


def _route_tree(topology: Topology, src: int, dst: int) -> list[tuple[str, int]]:
    up_src = _ancestors(topology, src)
    up_dst = _ancestors(topology, dst)
    common = next(n for n in up_src if n in set(up_dst))
    i, j = up_src.index(common), up_dst.index(common)
    hops: list[tuple[str, int]] = []
    lateral_used = False
    if topology.kind == "binary-tree-x" and i >= 1 and j >= 1:
        a, b = up_src[i - 1], up_dst[j - 1]
        if abs(topology.level_pos[a] - topology.level_pos[b]) == 1:
            for node in up_src[1:i]:
                hops.append(("parent", node))
            label = "lat-e" if topology.level_pos[b] > topology.level_pos[a] else "lat-w"
            hops.append((label, b))
            down = list(reversed(up_dst[: j - 1]))
            cur = b
            for node in down:
                label = next(d for d, v in topology.neighbors[cur].items() if v == node)
                hops.append((label, node))
                cur = node
            lateral_used = True
    if not lateral_used:
        for node in up_src[1 : i + 1]:
            hops.append(("parent", node))
        cur = common
        for node in reversed(up_dst[:j]):
            label = next(d for d, v in topology.neighbors[cur].items() if v == node)
            hops.append((label, node))
            cur = node
    return hops


def _ancestors(topology: Topology, node: int) -> list[int]:
    chain = [node]
    while chain[-1] in topology.parent:
        chain.append(topology.parent[chain[-1]])
    return chain


@dataclass(frozen=True)
class NocParams:
    queue_depth: int = 4
    ct_ports_per_cycle: int = 4  # serialization limit at the star hub only
    deadlock_factor: int = 10


@dataclass
class NocReport:
    finish_cycle: int
    injected_flits: int
    delivered_flits: int
    stalls: int
    max_queue: int
    link_flits: dict[tuple[int, int], int]
    message_latencies: dict[int, int]  # trace index -> last-flit latency
    source_departures: dict[int, int] = field(default_factory=dict)

    @property
    def total_flits(self) -> int:
        return self.injected_flits

    def flits_on(self, predicate) -> int:
        return sum(c for link, c in self.link_flits.items() if predicate(*link))


class _Flit:
    __slots__ = ("path", "hop", "ready", "msg", "seq")

    def __init__(self, path, msg, seq, ready):
        self.path = path
        self.hop = 0
        self.ready = ready
        self.msg = msg
        self.seq = seq


def simulate(
    topology: Topology,
    trace: TrafficTrace,
    mode: str = "full",
    params: NocParams = NocParams(),
) -> NocReport:
    """Cycle-stepped run of a traffic trace under one router mode.

    Raises DeadlockError (with a queue dump) when ready flits make no
    progress for ``deadlock_factor * nodes * longest_path`` cycles.
    """
    routes: dict[tuple[int, int], list[tuple[str, int]]] = {}
    flits: list[_Flit] = []
    for m_id, msg in enumerate(trace):
        if msg.words < 0:
            raise ValueError("message word count must be >= 0")
        if msg.src == msg.dst or msg.words == 0:
            continue
        key = (msg.src, msg.dst)
        if key not in routes:
            routes[key] = route(topology, mode, msg.src, msg.dst)
        for seq in range(msg.words):
            flits.append(_Flit(routes[key], m_id, seq, msg.cycle + seq))
    if not flits:
        return NocReport(0, 0, 0, 0, 0, {}, [])

    max_hops = max(len(r) for r in routes.values())
    grace = params.deadlock_factor * max(1, len(topology.neighbors)) * max(1, max_hops)

    # buffers[node][source] holds flits in arrival order; source is the
    # upstream node id, or a negative key for a local injection queue.
    # Injection queues are per first-hop link (virtual output queues, so a
    # multi-link node can issue on all its links at once) and FIFO per
    # message, so two messages from one source never interleave flit-wise.
    buffers: dict[int, dict[int, deque[_Flit]]] = {
        n: {} for n in topology.neighbors
    }
    inject: dict[tuple[int, int], deque[_Flit]] = {}
    for flit in sorted(flits, key=lambda f: (trace[f.msg].cycle, f.msg, f.seq)):
        src = trace[flit.msg].src
        inject.setdefault((src, flit.path[0][1]), deque()).append(flit)
    for (node, first_hop), q in inject.items():
        buffers[node][-(first_hop + 2)] = q

    enabled = {n: topology.enabled_dirs(n, mode) for n in topology.neighbors}
    budget_limit = params.ct_ports_per_cycle if topology.kind == "star" else None

    link_flits: dict[tuple[int, int], int] = {}
    arrivals: dict[int, int] = {}  # msg id -> last flit arrival cycle
    source_departures: dict[int, int] = {}  # msg id -> last first-hop crossing
    remaining = len(flits)
    delivered = 0
    stalls = 0
    max_queue = 0
    rr: dict[tuple[int, int], int] = {}
    t = 0
    idle = 0
    while remaining > 0:
        moved = False
        any_ready = False
        for node in sorted(buffers):
            ports = buffers[node]
            # Collect head flits eligible to move this cycle, per output link.
            wants: dict[int, list[int]] = {}
            for source in sorted(ports):
                q = ports[source]
                if not q or q[0].ready > t:
                    continue
                head = q[0]
                _, nxt = head.path[head.hop]
                wants.setdefault(nxt, []).append(source)
                any_ready = True
            budget = budget_limit if (budget_limit and node == topology.ct) else None
            for nxt in sorted(wants):
                if budget is not None and budget == 0:
                    stalls += len(wants[nxt])
                    continue
                sources = wants[nxt]
                pointer = rr.get((node, nxt), 0)
                order = sorted(sources, key=lambda s: ((s - pointer) % (1 << 30), s))
                chosen = None
                for source in order:
                    head = buffers[node][source][0]
                    label, hop_next = head.path[head.hop]
                    assert hop_next == nxt
                    if label != "local" and label not in enabled[node]:
                        raise AssertionError(
                            f"flit crossed masked port {label} at node {node} in mode {mode}"
                        )
                    dest_q = buffers[nxt].setdefault(node, deque())
                    if head.hop < len(head.path) - 1 and len(dest_q) >= params.queue_depth:
                        stalls += 1
                        continue
                    chosen = source
                    break
                if chosen is None:
                    continue
                head = buffers[node][chosen].popleft()
                waited = t > head.ready
                arrive = t + (2 if waited else 1)
                if head.hop == 0:
                    source_departures[head.msg] = t
                head.hop += 1
                head.ready = arrive
                link_flits[(node, nxt)] = link_flits.get((node, nxt), 0) + 1
                if head.hop == len(head.path):
                    delivered += 1
                    remaining -= 1
                    arrivals[head.msg] = max(arrivals.get(head.msg, 0), arrive)
                else:
                    q = buffers[nxt].setdefault(node, deque())
                    q.append(head)
                    max_queue = max(max_queue, len(q))
                rr[(node, nxt)] = chosen + 1
                stalls += len(sources) - 1
                moved = True
                if budget is not None:
                    budget -= 1
        if moved:
            idle = 0
        elif any_ready:
            idle += 1
            if idle > grace:
                raise DeadlockError(_deadlock_dump(buffers, t))
        else:
            # Everything pending is in flight or scheduled later: jump ahead.
            future = [
                q[0].ready
                for ports in buffers.values()
                for q in ports.values()
                if q
            ]
            if not future:
                break
            t = max(t, min(future) - 1)
            idle = 0
        t += 1

    finish = max(arrivals.values(), default=0)
    latencies = {m: arrivals[m] - trace[m].cycle for m in sorted(arrivals)}
    return NocReport(
        finish_cycle=finish,
        injected_flits=len(flits),
        delivered_flits=delivered,
        stalls=stalls,
        max_queue=max_queue,
        link_flits=link_flits,
        message_latencies=latencies,
        source_departures=source_departures,
    )


def _deadlock_dump(buffers, cycle) -> str:
    lines = [f"no progress by cycle {cycle}; queue occupancy:"]
    for node in sorted(buffers):
        for source in sorted(buffers[node]):
            q = buffers[node][source]
            if q:
                lines.append(
                    f"  node {node} <- port {source}: {len(q)} flits, head msg {q[0].msg}"
                )
    return "\n".join(lines)
