"""Hybrid decision trees: path correctness and the adversary's worst path.

Each node is one decision with an error probability. A root-to-leaf path
is decided correctly only if every decision on it is, and node errors are
assumed independent, so the path succeeds with ``prod(1 - p_v)``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterator, Sequence

TINY = 1e-300


@dataclass(frozen=True, eq=False)
class TreeNode:
    id: str
    error_prob: float
    children: tuple[TreeNode, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "children", tuple(self.children))
        if not 0 <= self.error_prob <= 1:
            raise ValueError(f"node {self.id!r}: error_prob must be in [0, 1]")

    @property
    def is_leaf(self) -> bool:
        return not self.children

    def iter_nodes(self) -> Iterator[TreeNode]:
        stack = [self]
        while stack:
            node = stack.pop()
            yield node
            stack.extend(reversed(node.children))


def validate_tree(root: TreeNode) -> TreeNode:
    seen = set()
    for node in root.iter_nodes():
        if node.id in seen:
            raise ValueError(f"duplicate node id {node.id!r}")
        seen.add(node.id)
    return root


def tree_from_dict(data: dict) -> TreeNode:
    """Build a tree from nested ``{"id", "error_prob", "children"}`` objects."""
    allowed = {"id", "error_prob", "children"}

    def check(obj):
        if not isinstance(obj, dict):
            raise ValueError(f"tree node must be an object, got {type(obj).__name__}")
        extra = set(obj) - allowed
        if extra:
            raise ValueError(f"unknown tree node keys {sorted(extra)}")
        if "id" not in obj or "error_prob" not in obj:
            raise ValueError("tree node needs 'id' and 'error_prob'")
        kids = obj.get("children", [])
        if not isinstance(kids, list):
            raise ValueError("'children' must be a list")
        return kids

    # Post-order build without recursion so deep chains are fine.
    stack = [(data, False)]
    built: dict[int, TreeNode] = {}
    while stack:
        obj, expanded = stack.pop()
        kids = check(obj)
        if not expanded:
            stack.append((obj, True))
            stack.extend((kid, False) for kid in kids)
            continue
        p = obj["error_prob"]
        if isinstance(p, bool) or not isinstance(p, (int, float)):
            raise ValueError(f"node {obj['id']!r}: error_prob must be a number")
        built[id(obj)] = TreeNode(str(obj["id"]), float(p),
                                  tuple(built.pop(id(k)) for k in kids))
    return validate_tree(built[id(data)])


def tree_to_dict(root: TreeNode) -> dict:
    out = {"id": root.id, "error_prob": root.error_prob, "children": []}
    stack = [(root, out)]
    while stack:
        node, d = stack.pop()
        for child in node.children:
            cd = {"id": child.id, "error_prob": child.error_prob, "children": []}
            d["children"].append(cd)
            stack.append((child, cd))
    return out


def load_tree(path) -> TreeNode:
    with open(path) as fh:
        return tree_from_dict(json.load(fh))


class _PathProb:
    """Running product of success probabilities, with a log fallback."""

    __slots__ = ("prod", "log")

    def __init__(self, prod=1.0, log=0.0):
        self.prod = prod
        self.log = log

    def times(self, p_err: float) -> _PathProb:
        q = 1.0 - p_err
        return _PathProb(self.prod * q, self.log + (math.log(q) if q > 0 else -math.inf))

    def value(self) -> float:
        return self.prod if self.prod >= TINY else math.exp(self.log)

    def __lt__(self, other: _PathProb) -> bool:
        if self.prod >= TINY and other.prod >= TINY:
            return self.prod < other.prod
        if self.prod >= TINY:
            return False
        if other.prod >= TINY:
            return True
        return self.log < other.log


def path_correct_prob(path: Sequence[TreeNode]) -> float:
    """Probability that every decision along ``path`` is correct."""
    if not path:
        raise ValueError("path must be non-empty")
    for parent, child in zip(path, path[1:]):
        if not any(c is child for c in parent.children):
            raise ValueError(f"node {child.id!r} is not a child of {parent.id!r}")
    acc = _PathProb()
    for node in path:
        acc = acc.times(node.error_prob)
    return acc.value()


def worst_path(root: TreeNode) -> tuple[list[str], float]:
    """Root-to-leaf path with the smallest probability of a correct decision.

    One depth-first pass; ties go to the path reached first in child order.
    """
    best: _PathProb | None = None
    best_leaf = None
    parent: dict[int, TreeNode | None] = {id(root): None}
    stack = [(root, _PathProb().times(root.error_prob))]
    while stack:
        node, prob = stack.pop()
        if node.is_leaf:
            if best is None or prob < best:
                best, best_leaf = prob, node
            continue
        for child in reversed(node.children):
            parent[id(child)] = node
            stack.append((child, prob.times(child.error_prob)))
    path = []
    node = best_leaf
    while node is not None:
        path.append(node.id)
        node = parent[id(node)]
    return path[::-1], best.value()


def enumerate_paths(root: TreeNode) -> Iterator[list[TreeNode]]:
    """Every root-to-leaf path, in child order."""
    stack = [[root]]
    while stack:
        path = stack.pop()
        node = path[-1]
        if node.is_leaf:
            yield path
        else:
            for child in reversed(node.children):
                stack.append(path + [child])
