"""Compositional pattern producing networks for body growth.

A genome is a feed-forward graph with four fixed inputs ``(x, y, z, depth)``
and five fixed outputs ``(brick, hinge, empty, rot0, rot90)``. Variation
follows a small NEAT-style operator set: weight perturbation, weight reset,
add-connection and add-node, with innovation numbers handed out by a shared
:class:`InnovationTracker`.

Genomes are immutable; every operator returns a new genome.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Sequence

import numpy as np

NUM_INPUTS = 4
NUM_OUTPUTS = 5
INPUT_IDS = tuple(range(NUM_INPUTS))
OUTPUT_IDS = tuple(range(NUM_INPUTS, NUM_INPUTS + NUM_OUTPUTS))
SCHEMA = "evolearn.cppn/1"


def _sigmoid(x: float) -> float:
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    e = math.exp(x)
    return e / (1.0 + e)


ACTIVATIONS: dict[str, Callable[[float], float]] = {
    "linear": lambda x: x,
    "sigmoid": _sigmoid,
    "sine": math.sin,
    "gaussian": lambda x: math.exp(-x * x),
}
ACTIVATION_NAMES = tuple(ACTIVATIONS)


@dataclass(frozen=True)
class NodeGene:
    id: int
    kind: str  # "input" | "hidden" | "output" | "bias"
    activation: str = "linear"


@dataclass(frozen=True)
class ConnectionGene:
    src: int
    dst: int
    weight: float
    enabled: bool
    innovation: int


@dataclass(frozen=True)
class CppnGenome:
    nodes: tuple[NodeGene, ...]
    connections: tuple[ConnectionGene, ...]

    def __post_init__(self):
        ids = [n.id for n in self.nodes]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate node ids")
        for nid, kind in zip(INPUT_IDS + OUTPUT_IDS, ("input",) * NUM_INPUTS + ("output",) * NUM_OUTPUTS):
            if nid not in ids or self.node(nid).kind != kind:
                raise ValueError(f"node {nid} must be a fixed {kind} node")
        known = set(ids)
        for c in self.connections:
            if c.src not in known or c.dst not in known:
                raise ValueError(f"connection {c.innovation} references an unknown node")
        innovs = [c.innovation for c in self.connections]
        if len(set(innovs)) != len(innovs):
            raise ValueError("duplicate innovation numbers in genome")
        if _topological_order(ids, [(c.src, c.dst) for c in self.connections]) is None:
            raise ValueError("connection graph is cyclic")

    def node(self, node_id: int) -> NodeGene:
        for n in self.nodes:
            if n.id == node_id:
                return n
        raise KeyError(node_id)

    @property
    def hidden_nodes(self) -> tuple[NodeGene, ...]:
        return tuple(n for n in self.nodes if n.kind == "hidden")

    def to_dict(self) -> dict:
        return {
            "schema": SCHEMA,
            "nodes": [{"id": n.id, "kind": n.kind, "activation": n.activation} for n in self.nodes],
            "connections": [
                {
                    "src": c.src,
                    "dst": c.dst,
                    "weight": c.weight,
                    "enabled": c.enabled,
                    "innovation": c.innovation,
                }
                for c in self.connections
            ],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "CppnGenome":
        if data.get("schema") != SCHEMA:
            raise ValueError(f"unsupported genome schema {data.get('schema')!r}")
        nodes = tuple(NodeGene(int(n["id"]), n["kind"], n["activation"]) for n in data["nodes"])
        conns = tuple(
            ConnectionGene(int(c["src"]), int(c["dst"]), float(c["weight"]), bool(c["enabled"]), int(c["innovation"]))
            for c in data["connections"]
        )
        return cls(nodes, conns)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1)

    @classmethod
    def from_json(cls, text: str) -> "CppnGenome":
        return cls.from_dict(json.loads(text))


def _topological_order(node_ids: Iterable[int], edges: Sequence[tuple[int, int]]) -> list[int] | None:
    """Kahn's algorithm; ``None`` if the graph has a cycle. Ties resolve by node id."""
    node_ids = sorted(node_ids)
    indeg = {n: 0 for n in node_ids}
    succ: dict[int, list[int]] = {n: [] for n in node_ids}
    for s, d in edges:
        succ[s].append(d)
        indeg[d] += 1
    ready = [n for n in node_ids if indeg[n] == 0]
    order = []
    while ready:
        n = ready.pop(0)
        order.append(n)
        for d in succ[n]:
            indeg[d] -= 1
            if indeg[d] == 0:
                ready.append(d)
    return order if len(order) == len(node_ids) else None


def _creates_cycle(edges: Iterable[tuple[int, int]], src: int, dst: int) -> bool:
    """True if adding ``src -> dst`` closes a cycle, i.e. ``dst`` already reaches ``src``."""
    if src == dst:
        return True
    succ: dict[int, list[int]] = {}
    for s, d in edges:
        succ.setdefault(s, []).append(d)
    stack, seen = [dst], {dst}
    while stack:
        n = stack.pop()
        if n == src:
            return True
        for m in succ.get(n, ()):
            if m not in seen:
                seen.add(m)
                stack.append(m)
    return False


class InnovationTracker:
    """Run-wide source of innovation numbers and hidden-node ids.

    The same ``(src, dst)`` pair always receives the same innovation number, and
    splitting the same connection gene always yields the same hidden node id, so
    genomes that grow identical structure stay aligned for crossover.
    Not thread-safe: confine it to the reproduction step.
    """

    def __init__(self):
        self._innovations: dict[tuple[int, int], int] = {}
        self._split_nodes: dict[int, int] = {}
        self._next_innovation = 0
        self.next_node_id = NUM_INPUTS + NUM_OUTPUTS
        for i in INPUT_IDS:
            for o in OUTPUT_IDS:
                self.innovation(i, o)

    def innovation(self, src: int, dst: int) -> int:
        key = (src, dst)
        if key not in self._innovations:
            self._innovations[key] = self._next_innovation
            self._next_innovation += 1
        return self._innovations[key]

    def split_node(self, innovation: int, taken: Iterable[int] = ()) -> int:
        node_id = self._split_nodes.get(innovation)
        if node_id is None or node_id in set(taken):
            node_id = self.next_node_id
            self.next_node_id += 1
            self._split_nodes.setdefault(innovation, node_id)
        return node_id

    def observe(self, genome: CppnGenome) -> None:
        """Register the structure of a genome created elsewhere (e.g. loaded from disk)."""
        for c in genome.connections:
            self._innovations.setdefault((c.src, c.dst), c.innovation)
            self._next_innovation = max(self._next_innovation, c.innovation + 1)
        top = max(n.id for n in genome.nodes) + 1
        self.next_node_id = max(self.next_node_id, top)


def _initial_innovation(src: int, dst: int) -> int:
    return src * NUM_OUTPUTS + (dst - NUM_INPUTS)


def evaluate_cppn(genome: CppnGenome, query: Sequence[float]) -> np.ndarray:
    """Feed ``query = (x, y, z, depth)`` through the network and return the 5 outputs."""
    query = [float(q) for q in query]
    if len(query) != NUM_INPUTS:
        raise ValueError(f"query must have {NUM_INPUTS} components, got {len(query)}")
    if not all(math.isfinite(q) for q in query):
        raise ValueError(f"non-finite CPPN query {query}")
    return np.array(_compile(genome)(query))


def cppn_function(genome: CppnGenome) -> Callable[[Sequence[float]], list[float]]:
    """Unchecked fast evaluator for trusted queries (used by the body decoder)."""
    run = _compile(genome)
    return lambda q: run(list(q))


_compiled_cache: dict[int, tuple[CppnGenome, Callable]] = {}


def _compile(genome: CppnGenome) -> Callable[[list[float]], list[float]]:
    hit = _compiled_cache.get(id(genome))
    if hit is not None and hit[0] is genome:
        return hit[1]
    enabled = [c for c in genome.connections if c.enabled]
    order = _topological_order([n.id for n in genome.nodes], [(c.src, c.dst) for c in enabled])
    incoming: dict[int, list[tuple[int, float]]] = {n.id: [] for n in genome.nodes}
    for c in enabled:
        incoming[c.dst].append((c.src, c.weight))
    acts = {n.id: ACTIVATIONS[n.activation] for n in genome.nodes}
    plan = [(nid, incoming[nid], acts[nid]) for nid in order if nid not in INPUT_IDS]

    def run(query: list[float]) -> list[float]:
        values = dict(zip(INPUT_IDS, query))
        for nid, ins, act in plan:
            total = 0.0
            for src, w in ins:
                total += w * values[src]
            values[nid] = act(total)
        return [values[o] for o in OUTPUT_IDS]

    if len(_compiled_cache) > 4096:
        _compiled_cache.clear()
    _compiled_cache[id(genome)] = (genome, run)
    return run


@dataclass(frozen=True)
class CppnInitParams:
    weight_range: float = 1.0
    output_activations: tuple[str, ...] = ACTIVATION_NAMES


@dataclass(frozen=True)
class CppnMutationParams:
    """Per-offspring mutation settings. Probabilities of the two structural
    mutations are mutually exclusive; at most one fires per call."""

    weight_perturb_prob: float = 0.8
    weight_perturb_sigma: float = 0.1
    weight_reset_prob: float = 0.05
    weight_reset_range: float = 1.0
    add_connection_prob: float = 0.1
    add_node_prob: float = 0.05
    activations: tuple[str, ...] = ACTIVATION_NAMES
    max_attempts: int = 20

    @classmethod
    def disabled(cls) -> "CppnMutationParams":
        return cls(weight_perturb_prob=0.0, weight_reset_prob=0.0, add_connection_prob=0.0, add_node_prob=0.0)


def random_cppn(rng: np.random.Generator, init_params: CppnInitParams = CppnInitParams()) -> CppnGenome:
    """Minimal genome: every input wired to every output, no hidden nodes."""
    nodes = [NodeGene(i, "input", "linear") for i in INPUT_IDS]
    for o in OUTPUT_IDS:
        act = init_params.output_activations[int(rng.integers(len(init_params.output_activations)))]
        nodes.append(NodeGene(o, "output", act))
    r = init_params.weight_range
    conns = [
        ConnectionGene(i, o, float(rng.uniform(-r, r)), True, _initial_innovation(i, o))
        for i in INPUT_IDS
        for o in OUTPUT_IDS
    ]
    return CppnGenome(tuple(nodes), tuple(conns))


def mutate_cppn(
    genome: CppnGenome,
    rng: np.random.Generator,
    params: CppnMutationParams = CppnMutationParams(),
    tracker: InnovationTracker | None = None,
) -> CppnGenome:
    if tracker is None:
        tracker = InnovationTracker()
        tracker.observe(genome)
    conns = []
    for c in genome.connections:
        w = c.weight
        if params.weight_reset_prob and rng.random() < params.weight_reset_prob:
            w = float(rng.uniform(-params.weight_reset_range, params.weight_reset_range))
        elif params.weight_perturb_prob and rng.random() < params.weight_perturb_prob:
            w = w + float(rng.normal(0.0, params.weight_perturb_sigma))
        conns.append(replace(c, weight=w) if w != c.weight else c)
    nodes = list(genome.nodes)

    roll = rng.random() if (params.add_node_prob or params.add_connection_prob) else 1.0
    if roll < params.add_node_prob:
        _add_node(nodes, conns, rng, params, tracker)
    elif roll < params.add_node_prob + params.add_connection_prob:
        _add_connection(nodes, conns, rng, params, tracker)

    if tuple(conns) == genome.connections and tuple(nodes) == genome.nodes:
        return genome
    return CppnGenome(tuple(nodes), tuple(conns))


def _add_node(nodes, conns, rng, params, tracker) -> bool:
    candidates = [i for i, c in enumerate(conns) if c.enabled]
    if not candidates:
        return False
    idx = candidates[int(rng.integers(len(candidates)))]
    old = conns[idx]
    new_id = tracker.split_node(old.innovation, taken=[n.id for n in nodes])
    act = params.activations[int(rng.integers(len(params.activations)))]
    nodes.append(NodeGene(new_id, "hidden", act))
    conns[idx] = replace(old, enabled=False)
    conns.append(ConnectionGene(old.src, new_id, 1.0, True, tracker.innovation(old.src, new_id)))
    conns.append(ConnectionGene(new_id, old.dst, old.weight, True, tracker.innovation(new_id, old.dst)))
    return True


def _add_connection(nodes, conns, rng, params, tracker) -> bool:
    sources = [n.id for n in nodes if n.kind != "output"]
    targets = [n.id for n in nodes if n.kind not in ("input", "bias")]
    existing = {(c.src, c.dst) for c in conns}
    for _ in range(params.max_attempts):
        src = sources[int(rng.integers(len(sources)))]
        dst = targets[int(rng.integers(len(targets)))]
        if (src, dst) in existing or _creates_cycle(existing, src, dst):
            continue
        w = float(rng.uniform(-params.weight_reset_range, params.weight_reset_range))
        conns.append(ConnectionGene(src, dst, w, True, tracker.innovation(src, dst)))
        return True
    return False


def crossover_cppn(
    parent_a: CppnGenome,
    parent_b: CppnGenome,
    fitness_a: float,
    fitness_b: float,
    rng: np.random.Generator,
) -> CppnGenome:
    """NEAT crossover: matching genes from either parent at random, the rest
    from the fitter parent (``parent_a`` on ties)."""
    fitter, other = (parent_a, parent_b) if fitness_a >= fitness_b else (parent_b, parent_a)
    by_innov = {c.innovation: c for c in other.connections}
    conns = []
    for c in fitter.connections:
        match = by_innov.get(c.innovation)
        if match is not None and (match.src, match.dst) == (c.src, c.dst) and rng.random() < 0.5:
            conns.append(match)
        else:
            conns.append(c)
    return CppnGenome(fitter.nodes, tuple(conns))


def is_acyclic(genome: CppnGenome) -> bool:
    return _topological_order([n.id for n in genome.nodes], [(c.src, c.dst) for c in genome.connections]) is not None
