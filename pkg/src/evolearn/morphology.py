"""Modular bodies and the CPPN-driven breadth-first body decoder."""

from __future__ import annotations

import enum
import functools
import json
from collections import deque
from dataclasses import dataclass
from typing import Callable, NamedTuple, Sequence

import numpy as np

from .cppn import CppnGenome, cppn_function

MAX_MODULES = 10
GRID_LIMIT = 10
SCHEMA = "evolearn.body/1"


class ModuleKind(str, enum.Enum):
    CORE = "core"
    BRICK = "brick"
    ACTIVE_HINGE = "active_hinge"


# Socket directions in the module's own frame: x = right, y = front, z = up.
SOCKET_DIRECTIONS = {
    "front": (0, 1, 0),
    "back": (0, -1, 0),
    "left": (-1, 0, 0),
    "right": (1, 0, 0),
}
SOCKETS = {
    ModuleKind.CORE: ("front", "back", "left", "right"),
    ModuleKind.BRICK: ("front", "left", "right"),
    ModuleKind.ACTIVE_HINGE: ("front",),
}

Frame = tuple[tuple[int, int, int], tuple[int, int, int], tuple[int, int, int]]

IDENTITY: Frame = ((1, 0, 0), (0, 1, 0), (0, 0, 1))
# rotation about the vertical axis turning the local front onto each socket
_RZ: dict[str, Frame] = {
    "front": IDENTITY,
    "back": ((-1, 0, 0), (0, -1, 0), (0, 0, 1)),
    "left": ((0, -1, 0), (1, 0, 0), (0, 0, 1)),
    "right": ((0, 1, 0), (-1, 0, 0), (0, 0, 1)),
}
# 90 degrees about the child's own forward (attachment) axis
_RY90: Frame = ((0, 0, 1), (0, 1, 0), (-1, 0, 0))


def _matmul(a: Frame, b: Frame) -> Frame:
    return tuple(tuple(sum(a[i][k] * b[k][j] for k in range(3)) for j in range(3)) for i in range(3))


def _apply(a: Frame, v) -> tuple[int, int, int]:
    return tuple(a[i][0] * v[0] + a[i][1] * v[1] + a[i][2] * v[2] for i in range(3))


TYPE_ORDER = (ModuleKind.BRICK, ModuleKind.ACTIVE_HINGE, None)
ROTATION_ORDER = (0, 90)


@dataclass(frozen=True)
class Module:
    kind: ModuleKind
    rotation: int
    grid_pos: tuple[int, int, int]
    parent: int | None
    parent_socket: str | None
    depth: int
    frame: Frame


@dataclass(frozen=True)
class BodyPhenotype:
    """Body tree stored as a list; index 0 is the core, parents precede children."""

    modules: tuple[Module, ...]

    def __len__(self) -> int:
        return len(self.modules)

    def children(self, index: int) -> list[int]:
        return [i for i, m in enumerate(self.modules) if m.parent == index]

    @property
    def hinges(self) -> list[int]:
        return [i for i, m in enumerate(self.modules) if m.kind is ModuleKind.ACTIVE_HINGE]

    def to_dict(self) -> dict:
        return {
            "schema": SCHEMA,
            "modules": [
                {
                    "id": i,
                    "kind": m.kind.value,
                    "rotation": m.rotation,
                    "position": list(m.grid_pos),
                    "parent": m.parent,
                    "socket": m.parent_socket,
                }
                for i, m in enumerate(self.modules)
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1)

    @classmethod
    def from_json(cls, text: str) -> "BodyPhenotype":
        return cls.from_dict(json.loads(text))

    @classmethod
    def from_dict(cls, data: dict) -> "BodyPhenotype":
        if data.get("schema") != SCHEMA:
            raise ValueError(f"unsupported body schema {data.get('schema')!r}")
        modules: list[Module] = []
        for rec in data["modules"]:
            kind = ModuleKind(rec["kind"])
            parent = rec["parent"]
            if parent is None:
                modules.append(_core())
                continue
            pm = modules[parent]
            frame = _child_frame(pm.frame, rec["socket"], rec["rotation"])
            modules.append(Module(kind, rec["rotation"], tuple(rec["position"]), parent, rec["socket"], pm.depth + 1, frame))
        return cls(tuple(modules))


def _core() -> Module:
    return Module(ModuleKind.CORE, 0, (0, 0, 0), None, None, 0, IDENTITY)


@functools.lru_cache(maxsize=None)
def _child_frame(parent_frame: Frame, socket: str, rotation: int) -> Frame:
    frame = _matmul(parent_frame, _RZ[socket])
    if rotation == 90:
        frame = _matmul(frame, _RY90)
    return frame


def grow_body(query: Callable[[Sequence[float]], Sequence[float]]) -> BodyPhenotype:
    """Grow a body breadth-first, asking ``query(x, y, z, depth)`` for type and rotation scores.

    Candidates on an occupied cell, outside the grid, or on the core's vertical
    column are not placed and their branch ends.
    """
    modules = [_core()]
    occupied = {(0, 0, 0)}
    queue = deque([0])
    while queue and len(modules) < MAX_MODULES:
        idx = queue.popleft()
        parent = modules[idx]
        for socket in SOCKETS[parent.kind]:
            if len(modules) >= MAX_MODULES:
                break
            step = _apply(parent.frame, SOCKET_DIRECTIONS[socket])
            pos = (parent.grid_pos[0] + step[0], parent.grid_pos[1] + step[1], parent.grid_pos[2] + step[2])
            depth = parent.depth + 1
            out = [float(v) for v in query((pos[0], pos[1], pos[2], depth))]
            kind = TYPE_ORDER[_argmax(out[0:3])]
            if kind is None:
                continue
            if pos in occupied or max(abs(v) for v in pos) > GRID_LIMIT or pos[:2] == (0, 0):
                continue
            rotation = ROTATION_ORDER[_argmax(out[3:5])]
            frame = _child_frame(parent.frame, socket, rotation)
            modules.append(Module(kind, rotation, pos, idx, socket, depth, frame))
            occupied.add(pos)
            queue.append(len(modules) - 1)
    return BodyPhenotype(tuple(modules))


def _argmax(values) -> int:
    """Index of the largest score; the lowest index wins ties."""
    best = 0
    for i in range(1, len(values)):
        if values[i] > values[best]:
            best = i
    return best


def decode_body(genome: CppnGenome) -> BodyPhenotype:
    return grow_body(cppn_function(genome))


class JointCell(NamedTuple):
    joint_id: int
    coord: tuple[int, int]
    stacked: bool


def joint_grid_2d(body: BodyPhenotype) -> list[JointCell]:
    """Project every active hinge onto the horizontal grid (z dropped).

    ``stacked`` marks joints sharing their 2D cell with another joint.
    """
    cells = [(i, body.modules[i].grid_pos[:2]) for i in body.hinges]
    counts: dict[tuple[int, int], int] = {}
    for _, c in cells:
        counts[c] = counts.get(c, 0) + 1
    return [JointCell(i, c, counts[c] > 1) for i, c in cells]


def tree_distance(body: BodyPhenotype, a: int, b: int) -> int:
    n = len(body.modules)
    for m in (a, b):
        if not (isinstance(m, (int, np.integer)) and 0 <= m < n):
            raise ValueError(f"module {m!r} is not part of the body")
    mods = body.modules
    dist = 0
    while a != b:
        if mods[a].depth >= mods[b].depth:
            a = mods[a].parent
        else:
            b = mods[b].parent
        dist += 1
    return dist
