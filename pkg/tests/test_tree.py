import json
import math

import numpy as np
import pytest

from hitlpolicy import TreeNode, path_correct_prob, tree_from_dict, worst_path
from hitlpolicy.tree import load_tree, tree_to_dict


def all_paths(node, prefix=()):
    """Brute-force oracle: every root-to-leaf path with its success probability."""
    prefix = prefix + (node,)
    if not node.children:
        prob = 1.0
        for v in prefix:
            prob *= 1.0 - v.error_prob
        yield [v.id for v in prefix], prob
        return
    for child in node.children:
        yield from all_paths(child, prefix)


def test_path_probabilities():
    assert path_correct_prob([TreeNode("a", 0.0)]) == 1.0
    b = TreeNode("b", 0.3)
    a = TreeNode("a", 0.1, (b,))
    assert path_correct_prob([a, b]) == pytest.approx(0.63)
    dead = TreeNode("d", 1.0)
    root = TreeNode("r", 0.2, (dead,))
    assert path_correct_prob([root, dead]) == 0


def test_path_linkage_checked():
    a, b = TreeNode("a", 0.1), TreeNode("b", 0.2)
    with pytest.raises(ValueError, match="not a child"):
        path_correct_prob([a, b])
    with pytest.raises(ValueError):
        path_correct_prob([])


def test_worst_path_two_leaves():
    root = TreeNode("r", 0.1, (TreeNode("x", 0.2), TreeNode("y", 0.3)))
    path, prob = worst_path(root)
    assert path == ["r", "y"]
    assert prob == pytest.approx(0.63)


def test_worst_path_single_node_and_ties():
    assert worst_path(TreeNode("only", 0.25)) == (["only"], 0.75)
    root = TreeNode("r", 0.0, (TreeNode("x", 0.5), TreeNode("y", 0.5)))
    assert worst_path(root)[0] == ["r", "x"]


def random_tree(rng, max_nodes, branching=(0, 1, 2, 3)):
    counter = iter(range(10**9))
    budget = [max_nodes - 1]

    def build(depth):
        nid = f"n{next(counter)}"
        kids = []
        if depth < 12:
            k = int(rng.choice(branching))
            k = min(k, budget[0])
            budget[0] -= k
            kids = [build(depth + 1) for _ in range(k)]
        return TreeNode(nid, float(rng.random() * rng.choice([0.05, 0.3, 1.0])), tuple(kids))

    return build(0)


def complete_binary(rng, depth):
    counter = iter(range(10**9))

    def build(d):
        kids = () if d == depth else (build(d + 1), build(d + 1))
        return TreeNode(f"n{next(counter)}", float(rng.random()), kids)

    return build(1)


@pytest.mark.parametrize("depth", [1, 2, 5, 10])
def test_complete_binary_trees_match_enumeration(depth):
    rng = np.random.default_rng(depth)
    root = complete_binary(rng, depth)
    paths = list(all_paths(root))
    assert len(paths) == 2 ** (depth - 1)
    best = min(p for _, p in paths)
    first = next(ids for ids, p in paths if p == best)
    assert worst_path(root) == (first, best)


def test_random_trees_match_enumeration():
    rng = np.random.default_rng(0)
    for _ in range(100):
        root = random_tree(rng, int(rng.integers(1, 4097)))
        paths = list(all_paths(root))
        best = min(p for _, p in paths)
        first = next(ids for ids, p in paths if p == best)
        assert worst_path(root) == (first, best)


def test_monotone_in_error_prob():
    rng = np.random.default_rng(1)
    for _ in range(30):
        d = tree_to_dict(random_tree(rng, 200))
        before = worst_path(tree_from_dict(d))[1]
        nodes = [d]
        flat = []
        while nodes:
            n = nodes.pop()
            flat.append(n)
            nodes.extend(n["children"])
        target = flat[int(rng.integers(len(flat)))]
        target["error_prob"] = min(1.0, target["error_prob"] + float(rng.random()))
        assert worst_path(tree_from_dict(d))[1] <= before


def test_deep_chain_underflow():
    node = TreeNode("leaf", 0.9)
    for i in range(5000):
        node = TreeNode(f"c{i}", 0.9, (node,))
    alt = TreeNode("alt", 0.0)
    root = TreeNode("root", 0.0, (alt, node))
    path, prob = worst_path(root)
    # 0.1**5001 underflows; the log comparison still picks the long chain
    assert path[1] == "c4999" and len(path) == 5002
    assert prob == 0.0 or prob < 1e-300


def test_json_roundtrip_and_validation(tmp_path):
    data = {"id": "r", "error_prob": 0.1, "children": [
        {"id": "x", "error_prob": 0.2, "children": []}, {"id": "y", "error_prob": 0.3}]}
    f = tmp_path / "t.json"
    f.write_text(json.dumps(data))
    root = load_tree(f)
    assert worst_path(root) == (["r", "y"], pytest.approx(0.63))
    with pytest.raises(ValueError, match="duplicate"):
        tree_from_dict({"id": "r", "error_prob": 0.1, "children": [{"id": "r", "error_prob": 0.1}]})
    with pytest.raises(ValueError, match="unknown"):
        tree_from_dict({"id": "r", "error_prob": 0.1, "weight": 3})
    with pytest.raises(ValueError):
        tree_from_dict({"id": "r", "error_prob": 1.5})
