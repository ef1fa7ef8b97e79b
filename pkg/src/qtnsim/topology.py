"""k-ary tree network topology: labels, routing paths, and memory layout.

A tree network with branching factor ``k`` and depth ``n`` serves
``N = k**n`` end nodes at the leaves; every internal node is an
entanglement router.  Nodes are addressed by their k-ary digit string:
the root is the empty tuple ``()``, its children are ``(0,)`` .. ``(k-1,)``,
and a leaf has ``n`` digits.  Each node connects only to its parent, so
the route between two leaves is the unique path through their lowest
common ancestor.

Link capacities follow the aggregation hierarchy: the edge between a
parent at depth ``d`` and its child carries ``m * k**(n-d-1)`` entangled
pairs, which makes the total capacity of every inter-layer cut equal to
``m * N``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction

__all__ = [
    "NodeLabel",
    "TreeTopology",
    "activation_probability",
    "activation_probability_exact",
]

NodeLabel = tuple[int, ...]


@dataclass(frozen=True)
class TreeTopology:
    """Complete k-ary routing tree with ``k**n`` end nodes.

    Parameters
    ----------
    k : int
        Branching factor, at least 2.
    n : int
        Tree depth (number of digit positions in a leaf label), at least 1.
    m : int
        Buffer multiplicity: number of entangled-pair slots per leaf link.
        Capacities of higher links scale as ``m * k**(n-d-1)``.
    """

    k: int
    n: int
    m: int = 1

    def __post_init__(self):
        if self.k < 2:
            raise ValueError(f"branching factor k must be >= 2, got {self.k}")
        if self.n < 1:
            raise ValueError(f"depth n must be >= 1, got {self.n}")
        if self.m < 1:
            raise ValueError(f"buffer size m must be >= 1, got {self.m}")

    @property
    def num_leaves(self) -> int:
        """Number of end nodes, ``k**n``."""
        return self.k**self.n

    def validate_label(self, label: NodeLabel) -> None:
        if len(label) > self.n:
            raise ValueError(f"label {label} deeper than tree depth {self.n}")
        if any(not (0 <= digit < self.k) for digit in label):
            raise ValueError(f"label {label} has digits outside 0..{self.k - 1}")

    def depth(self, label: NodeLabel) -> int:
        return len(label)

    def is_leaf(self, label: NodeLabel) -> bool:
        return len(label) == self.n

    def parent(self, label: NodeLabel) -> NodeLabel:
        if not label:
            raise ValueError("root has no parent")
        return label[:-1]

    def children(self, label: NodeLabel) -> list[NodeLabel]:
        if self.is_leaf(label):
            return []
        return [label + (digit,) for digit in range(self.k)]

    def nodes_at_depth(self, depth: int):
        """Iterate all labels at a given depth, in lexicographic order."""
        if not (0 <= depth <= self.n):
            raise ValueError(f"depth {depth} outside 0..{self.n}")
        return (tuple(digits) for digits in itertools.product(range(self.k), repeat=depth))

    def leaves(self):
        return self.nodes_at_depth(self.n)

    def edges(self):
        """Iterate all edges, each identified by its child endpoint's label."""
        for depth in range(1, self.n + 1):
            yield from self.nodes_at_depth(depth)

    def lowest_common_ancestor(self, a: NodeLabel, b: NodeLabel) -> NodeLabel:
        self.validate_label(a)
        self.validate_label(b)
        prefix = []
        for digit_a, digit_b in zip(a, b):
            if digit_a != digit_b:
                break
            prefix.append(digit_a)
        return tuple(prefix)

    def routing_path(self, a: NodeLabel, b: NodeLabel) -> list[NodeLabel]:
        """Edges of the unique route between leaves ``a`` and ``b``.

        Each edge is named by its child endpoint.  The list runs from
        ``a``'s access link up to the lowest common ancestor, then back
        down to ``b``; its length is ``2 * (n - depth(lca))``.

        Examples
        --------
        >>> t = TreeTopology(k=2, n=2)
        >>> t.routing_path((0, 0), (1, 0))
        [(0, 0), (0,), (1,), (1, 0)]
        """
        if not (self.is_leaf(a) and self.is_leaf(b)):
            raise ValueError("routing endpoints must be leaves")
        if a == b:
            raise ValueError("routing endpoints must differ")
        apex_depth = len(self.lowest_common_ancestor(a, b))
        up = [a[:length] for length in range(self.n, apex_depth, -1)]
        down = [b[:length] for length in range(apex_depth + 1, self.n + 1)]
        return up + down

    def memory_allocation(self, label: NodeLabel) -> int:
        """Qubit count held by a node.

        The root terminates one link per child subtree (``m * k**n`` total),
        an internal router at depth ``d`` terminates both its upstream and
        downstream links (``2 * m * k**(n-d)``), and a leaf holds ``m``.
        """
        self.validate_label(label)
        depth = len(label)
        if depth == 0:
            return self.m * self.k**self.n
        if depth == self.n:
            return self.m
        return 2 * self.m * self.k ** (self.n - depth)

    def edge_capacity(self, parent_depth: int) -> int:
        """Pair slots on an edge between depth ``parent_depth`` and below."""
        if not (0 <= parent_depth < self.n):
            raise ValueError(f"parent depth {parent_depth} outside 0..{self.n - 1}")
        return self.m * self.k ** (self.n - parent_depth - 1)

    def activation_probability_empirical(self, label: NodeLabel) -> float:
        """Fraction of all unordered leaf pairs whose route crosses ``label``.

        Exhaustive enumeration over all ``N*(N-1)/2`` pairs; intended as a
        ground-truth oracle for small trees (cost ``O(N**2 * n)``).
        """
        self.validate_label(label)
        if self.is_leaf(label):
            raise ValueError("activation is defined for routers, not leaves")
        hits = 0
        total = 0
        for a, b in itertools.combinations(self.leaves(), 2):
            total += 1
            apex_depth = len(self.lowest_common_ancestor(a, b))
            if len(label) >= apex_depth and (
                a[: len(label)] == label or b[: len(label)] == label
            ):
                hits += 1
        return hits / total

    def to_dict(self) -> dict:
        """Serializable description (fields k, n, m, N)."""
        return {"k": self.k, "n": self.n, "m": self.m, "N": self.num_leaves}

    @classmethod
    def from_dict(cls, data: dict) -> "TreeTopology":
        topo = cls(k=int(data["k"]), n=int(data["n"]), m=int(data.get("m", 1)))
        if "N" in data and int(data["N"]) != topo.num_leaves:
            raise ValueError(f"inconsistent N={data['N']} for k={topo.k}, n={topo.n}")
        return topo


def activation_probability_exact(k: int, y: int) -> tuple[Fraction, Fraction, Fraction]:
    """Analytic per-cycle activation probability of a depth-y router, exact.

    Returns ``(branch, root, total)`` as rationals.  With ``q = k**-y``:
    the router relays traffic leaving its subtree with probability
    ``branch = q * (1 - q) * (2 - q)`` and terminates a swap as the apex
    of the route with probability ``root = q**2 * (k - 1) / k``.  The sum
    approaches ``2 * k**-y`` for large ``k`` or ``y``.
    """
    if k < 2:
        raise ValueError(f"branching factor k must be >= 2, got {k}")
    if y < 0:
        raise ValueError(f"depth y must be >= 0, got {y}")
    q = Fraction(1, k**y)
    p = 1 - q
    branch = (1 - p * p) * p
    root = q * q * Fraction(k - 1, k)
    return branch, root, branch + root


def activation_probability(k: int, y: int) -> tuple[float, float, float]:
    """Float version of :func:`activation_probability_exact`."""
    branch, root, total = activation_probability_exact(k, y)
    return float(branch), float(root), float(total)
