"""Online incremental force-directed layout.

Pipeline shape per stage: place newly added nodes (barycenter of placed
neighbors, or a ring around the centroid for isolated ones), then refine
high-energy nodes until they settle, then diff positions into per-node
movements for the animation. Everything is deterministic given the seed:
jitter and ring angles come from hashing (seed, node id), never from
global RNG state, and refinement sweeps nodes in sorted order.

Force model (spring-electrical with a central pull):
  spring    (d - k) along each edge, zero at the ideal length k
  repulsion C*k^2/d between every pair
  central   s*(centroid - p) on every node, keeping disconnected
            components from drifting apart forever
A node's energy is the squared magnitude of its net force. Refinement
moves nodes above the energy threshold along their net force, shrinking
the step whenever a sweep would raise the maximum energy, so the maximum
energy is non-increasing across sweeps by construction.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field

import numpy as np

from .events import GraphState, NodeId

MOVEMENT_EPSILON = 0.001  # layout units; smaller displacements are not animated
COINCIDENT_DISTANCE = 1e-6


@dataclass(frozen=True, slots=True)
class LayoutParams:
    ideal_edge_length: float = 1.0
    repulsion_constant: float = 0.25
    central_strength: float = 0.05
    step_size: float = 0.1
    cooling_factor: float = 0.95
    energy_threshold: float = 1e-4
    max_refine_iters: int = 100

    def __post_init__(self):
        if self.ideal_edge_length <= 0:
            raise ValueError("ideal_edge_length must be > 0")
        if self.repulsion_constant <= 0:
            raise ValueError("repulsion_constant must be > 0")
        if self.central_strength < 0:
            raise ValueError("central_strength must be >= 0")
        if self.step_size <= 0:
            raise ValueError("step_size must be > 0")
        if not 0 < self.cooling_factor < 1:
            raise ValueError("cooling_factor must be in (0, 1)")
        if self.energy_threshold <= 0:
            raise ValueError("energy_threshold must be > 0")
        if self.max_refine_iters < 1:
            raise ValueError("max_refine_iters must be >= 1")


@dataclass
class LayoutState:
    """Node positions in abstract layout units plus last computed energies."""

    positions: dict[NodeId, tuple[float, float]] = field(default_factory=dict)
    rng_seed: int = 42
    energy: dict[NodeId, float] = field(default_factory=dict)

    def copy(self) -> "LayoutState":
        return LayoutState(dict(self.positions), self.rng_seed, dict(self.energy))

    def check_finite(self):
        for node, (x, y) in self.positions.items():
            if not (math.isfinite(x) and math.isfinite(y)):
                raise AssertionError(f"non-finite position for node {node!r}: ({x}, {y})")


@dataclass(frozen=True, slots=True)
class Movement:
    node: NodeId
    source: tuple[float, float]
    target: tuple[float, float]

    @property
    def displacement(self) -> float:
        return math.hypot(self.target[0] - self.source[0], self.target[1] - self.source[1])


def _hash_unit(seed: int, *parts: str) -> float:
    """Deterministic float in [0, 1) from seed and string parts."""
    digest = hashlib.blake2b(
        ("%d|%s" % (seed, "|".join(parts))).encode(), digest_size=8).digest()
    return int.from_bytes(digest, "big") / 2.0 ** 64


def _hash_angle(seed: int, *parts: str) -> float:
    return _hash_unit(seed, *parts) * 2.0 * math.pi


def _centroid(positions: dict[NodeId, tuple[float, float]]) -> tuple[float, float]:
    if not positions:
        return (0.0, 0.0)
    xs = sum(p[0] for p in positions.values())
    ys = sum(p[1] for p in positions.values())
    n = len(positions)
    return (xs / n, ys / n)


def place_new(state: LayoutState, additions: set[NodeId], graph: GraphState,
              seed: int | None = None, params: LayoutParams = LayoutParams()) -> LayoutState:
    """Assign initial positions to newly added nodes.

    Nodes with at least one already-placed neighbor go to the neighbor
    barycenter plus a deterministic jitter of magnitude k/4; nodes with no
    placed neighbor go on a ring of radius 2k around the current centroid
    (the very first node of an empty layout sits at the origin, the
    centroid of the empty set). Placement order is rounds of sorted node
    ids, so chains of new nodes hang off each other deterministically.
    """
    if seed is None:
        seed = state.rng_seed
    k = params.ideal_edge_length
    todo = sorted(n for n in additions if n not in state.positions)
    while todo:
        placed_this_round: list[NodeId] = []
        for node in todo:
            neighbors = [p for p in graph.neighbors(node) if p in state.positions]
            if not neighbors:
                continue
            bx = sum(state.positions[p][0] for p in neighbors) / len(neighbors)
            by = sum(state.positions[p][1] for p in neighbors) / len(neighbors)
            angle = _hash_angle(seed, "jitter", node)
            r = k / 4.0
            state.positions[node] = (bx + r * math.cos(angle), by + r * math.sin(angle))
            placed_this_round.append(node)
        if placed_this_round:
            todo = [n for n in todo if n not in placed_this_round]
            continue
        # No node has a placed neighbor: take the first one as isolated.
        node = todo.pop(0)
        if not state.positions:
            state.positions[node] = (0.0, 0.0)
        else:
            cx, cy = _centroid(state.positions)
            angle = _hash_angle(seed, "ring", node)
            r = 2.0 * k
            state.positions[node] = (cx + r * math.cos(angle), cy + r * math.sin(angle))
    state.check_finite()
    return state


def _forces(pos: np.ndarray, edge_idx: np.ndarray, params: LayoutParams,
            fallback_dirs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Net force per node and per-node energy (squared force magnitude)."""
    n = pos.shape[0]
    k = params.ideal_edge_length
    force = np.zeros_like(pos)

    if n > 1:
        delta = pos[:, None, :] - pos[None, :, :]          # delta[i,j] = p_i - p_j
        dist = np.sqrt((delta ** 2).sum(axis=2))
        coincident = dist < COINCIDENT_DISTANCE
        np.fill_diagonal(coincident, False)
        safe = np.where(dist < COINCIDENT_DISTANCE, 1.0, dist)
        unit = delta / safe[:, :, None]
        if coincident.any():
            unit[coincident] = fallback_dirs[coincident]
        rep_mag = params.repulsion_constant * k * k / np.where(
            dist < COINCIDENT_DISTANCE, COINCIDENT_DISTANCE, dist)
        np.fill_diagonal(rep_mag, 0.0)
        force += (unit * rep_mag[:, :, None]).sum(axis=1)

        if edge_idx.size:
            i, j = edge_idx[:, 0], edge_idx[:, 1]
            d = pos[j] - pos[i]
            length = np.sqrt((d ** 2).sum(axis=1))
            tiny = length < COINCIDENT_DISTANCE
            safe_len = np.where(tiny, 1.0, length)
            edir = d / safe_len[:, None]
            if tiny.any():
                edir[tiny] = -fallback_dirs[i[tiny], j[tiny]]
            spring = (length - k)[:, None] * edir  # pulls when stretched, pushes when squashed
            np.add.at(force, i, spring)
            np.add.at(force, j, -spring)

    if params.central_strength > 0 and n > 0:
        centroid = pos.mean(axis=0)
        force += params.central_strength * (centroid - pos)

    energy = (force ** 2).sum(axis=1)
    return force, energy


def _fallback_directions(nodes: list[NodeId], seed: int) -> np.ndarray:
    """Deterministic unit directions used when two nodes coincide."""
    n = len(nodes)
    dirs = np.zeros((n, n, 2))
    for a in range(n):
        for b in range(n):
            if a == b:
                continue
            lo, hi = (a, b) if nodes[a] < nodes[b] else (b, a)
            angle = _hash_angle(seed, "apart", nodes[lo], nodes[hi])
            vec = (math.cos(angle), math.sin(angle))
            sign = 1.0 if (a, b) == (lo, hi) else -1.0
            dirs[a, b] = (sign * vec[0], sign * vec[1])
    return dirs


def compute_energies(state: LayoutState, graph: GraphState,
                     params: LayoutParams) -> dict[NodeId, float]:
    """Per-node energy of the current placement without moving anything."""
    nodes = sorted(graph.nodes)
    if not nodes:
        return {}
    pos = np.array([state.positions[n] for n in nodes], dtype=float)
    index = {n: i for i, n in enumerate(nodes)}
    edge_idx = np.array([[index[a], index[b]] for a, b in sorted(graph.edges)],
                        dtype=int).reshape(-1, 2)
    fallback = _fallback_directions(nodes, state.rng_seed)
    _, energy = _forces(pos, edge_idx, params, fallback)
    return {n: float(energy[i]) for i, n in enumerate(nodes)}


def refine(state: LayoutState, graph: GraphState, params: LayoutParams,
           energy_trace: list | None = None) -> LayoutState:
    """Iteratively settle high-energy nodes.

    Each sweep moves every node whose energy exceeds the threshold by
    step * force (displacement capped at one edge length). A sweep that
    would raise the maximum energy is rejected and only cools the step, so
    max energy never increases. Stops at the threshold or the iteration
    cap; convergence is visible afterwards as max(state.energy) <=
    params.energy_threshold. energy_trace, if given, receives the max
    energy after every sweep.
    """
    nodes = sorted(graph.nodes)
    if not nodes:
        state.energy = {}
        return state
    missing = [n for n in nodes if n not in state.positions]
    if missing:
        raise ValueError(f"refine requires all nodes positioned; missing {missing[:5]}")
    index = {n: i for i, n in enumerate(nodes)}
    pos = np.array([state.positions[n] for n in nodes], dtype=float)
    edge_idx = np.array([[index[a], index[b]] for a, b in sorted(graph.edges)],
                        dtype=int).reshape(-1, 2)
    fallback = _fallback_directions(nodes, state.rng_seed)

    force, energy = _forces(pos, edge_idx, params, fallback)
    max_energy = float(energy.max())
    step = params.step_size
    cap = params.ideal_edge_length
    if energy_trace is not None:
        energy_trace.append(max_energy)

    for _ in range(params.max_refine_iters):
        if max_energy <= params.energy_threshold:
            break
        moving = energy > params.energy_threshold
        disp = step * force[moving]
        norms = np.sqrt((disp ** 2).sum(axis=1))
        over = norms > cap
        if over.any():
            disp[over] *= (cap / norms[over])[:, None]
        trial = pos.copy()
        trial[moving] += disp
        t_force, t_energy = _forces(trial, edge_idx, params, fallback)
        t_max = float(t_energy.max())
        if t_max <= max_energy:
            pos, force, energy, max_energy = trial, t_force, t_energy, t_max
        step *= params.cooling_factor
        if energy_trace is not None:
            energy_trace.append(max_energy)

    for n, i in index.items():
        state.positions[n] = (float(pos[i, 0]), float(pos[i, 1]))
    state.energy = {n: float(energy[i]) for n, i in index.items()}
    state.check_finite()
    return state


def movements(before: LayoutState, after: LayoutState,
              survivors: set[NodeId]) -> list[Movement]:
    """Per-survivor displacement entries for the movement sub-stage.

    Deleted nodes are excluded (they stay frozen through the deletion
    sub-stage) and added nodes are excluded (they appear at their final
    positions); displacements at or below the epsilon are dropped.
    """
    moves = []
    for node in sorted(survivors):
        if node not in before.positions or node not in after.positions:
            raise ValueError(f"survivor {node!r} not positioned in both layouts")
        src = before.positions[node]
        dst = after.positions[node]
        if math.hypot(dst[0] - src[0], dst[1] - src[1]) > MOVEMENT_EPSILON:
            moves.append(Movement(node=node, source=src, target=dst))
    return moves


def bounding_radius(state: LayoutState) -> float:
    """Max distance of any node from the layout centroid."""
    if not state.positions:
        return 0.0
    cx, cy = _centroid(state.positions)
    return max(math.hypot(x - cx, y - cy) for x, y in state.positions.values())
