"""Attack graphs and the topologies used to generate benchmark graphs.

Arguments are identified by 0-based integers. Argument 0 is always the root
(the first witness's claim); an edge ``(a, b)`` means argument ``a`` attacks
argument ``b``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Literal

Edge = tuple[int, int]


@dataclass(frozen=True)
class AttackGraph:
    n: int
    edges: frozenset[Edge] = field(default_factory=frozenset)

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValueError(f"attack graph needs at least one argument, got n={self.n}")
        object.__setattr__(self, "edges", frozenset(self.edges))
        for a, b in self.edges:
            if not (0 <= a < self.n and 0 <= b < self.n):
                raise ValueError(f"edge {a}->{b} out of range for n={self.n}")

    def attackers(self) -> list[list[int]]:
        """Attackers of each argument, sorted by id."""
        result: list[list[int]] = [[] for _ in range(self.n)]
        for a, b in sorted(self.edges):
            result[b].append(a)
        return result

    def targets(self) -> list[list[int]]:
        result: list[list[int]] = [[] for _ in range(self.n)]
        for a, b in sorted(self.edges):
            result[a].append(b)
        return result

    def is_in_tree(self) -> bool:
        """True if every non-root argument attacks exactly one argument and all
        attack chains end at the root."""
        targets = self.targets()
        if targets[0] or any(len(t) != 1 for t in targets[1:]):
            return False
        for start in range(1, self.n):
            seen = set()
            node = start
            while node != 0:
                if node in seen:
                    return False
                seen.add(node)
                node = targets[node][0]
        return True


@dataclass(frozen=True)
class Topology:
    """Shape of a benchmark graph.

    ``linear`` topologies are a single chain of ``n`` arguments. ``star``
    topologies attach ``len(paths)`` disjoint chains to the root, where
    ``paths[i]`` is the number of arguments in chain ``i``. Path order is kept
    as given; :meth:`canonical` sorts it non-increasing.
    """

    kind: Literal["linear", "star"]
    n: int = 0
    paths: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        if self.kind == "linear":
            if self.n < 1:
                raise ValueError(f"linear topology needs n >= 1, got {self.n}")
            if self.paths:
                raise ValueError("linear topology takes no path list")
        elif self.kind == "star":
            paths = tuple(self.paths)
            if any(p < 1 for p in paths):
                raise ValueError(f"path lengths must be positive, got {list(paths)}")
            object.__setattr__(self, "paths", paths)
            object.__setattr__(self, "n", 1 + sum(paths))
        else:
            raise ValueError(f"unknown topology kind {self.kind!r}")

    @classmethod
    def linear(cls, n: int) -> Topology:
        return cls("linear", n=n)

    @classmethod
    def star(cls, paths: list[int] | tuple[int, ...]) -> Topology:
        return cls("star", paths=tuple(paths))

    @property
    def n_args(self) -> int:
        return self.n

    @property
    def path_lengths(self) -> tuple[int, ...]:
        """Lengths of the chains attached to the root (a linear chain counts as one)."""
        if self.kind == "linear":
            return (self.n - 1,) if self.n > 1 else ()
        return self.paths

    @property
    def num_paths(self) -> int:
        return len(self.path_lengths)

    def canonical(self) -> Topology:
        if self.kind == "linear":
            return self
        return Topology.star(sorted(self.paths, reverse=True))

    def graph(self) -> AttackGraph:
        if self.kind == "linear":
            return make_linear(self.n)
        return make_star(self.paths)

    @property
    def text(self) -> str:
        if self.kind == "linear":
            return f"linear:{self.n}"
        return "star:" + "+".join(str(p) for p in self.paths)

    @classmethod
    def parse(cls, text: str) -> Topology:
        """Inverse of :attr:`text`: ``linear:<n>`` or ``star:<l1>+<l2>+...``."""
        kind, sep, body = text.strip().partition(":")
        if not sep:
            raise ValueError(f"bad topology {text!r}: expected 'linear:<n>' or 'star:<l1>+<l2>...'")
        try:
            if kind == "linear":
                return cls.linear(int(body))
            if kind == "star":
                return cls.star([int(p) for p in body.split("+")] if body else [])
        except ValueError as exc:
            raise ValueError(f"bad topology {text!r}: {exc}") from None
        raise ValueError(f"bad topology {text!r}: unknown kind {kind!r}")

    def __str__(self) -> str:
        return self.text


def _partitions(m: int, largest: int) -> Iterator[list[int]]:
    if m == 0:
        yield []
        return
    for first in range(min(m, largest), 0, -1):
        for rest in _partitions(m - first, first):
            yield [first, *rest]


def enumerate_partitions(m: int) -> list[list[int]]:
    """All partitions of ``m`` as non-increasing lists, in reverse-lexicographic order.

    >>> enumerate_partitions(4)
    [[4], [3, 1], [2, 2], [2, 1, 1], [1, 1, 1, 1]]
    """
    if m < 0:
        raise ValueError(f"cannot partition a negative number: {m}")
    return list(_partitions(m, m))


def make_linear(n: int) -> AttackGraph:
    """Chain where argument ``i + 1`` attacks argument ``i``."""
    if n < 1:
        raise ValueError(f"linear graph needs n >= 1, got {n}")
    return AttackGraph(n, frozenset((i + 1, i) for i in range(n - 1)))


def make_star(paths: list[int] | tuple[int, ...]) -> AttackGraph:
    """Root attacked by the heads of disjoint chains.

    Ids follow presentation order: root is 0, then each chain in list order,
    numbered from the argument attacking the root outward.
    """
    if any(p < 1 for p in paths):
        raise ValueError(f"path lengths must be positive, got {list(paths)}")
    edges = []
    next_id = 1
    for length in paths:
        target = 0
        for _ in range(length):
            edges.append((next_id, target))
            target = next_id
            next_id += 1
    return AttackGraph(next_id, frozenset(edges))


def enumerate_topologies(n_min: int, n_max: int) -> list[Topology]:
    """One star topology per partition of ``n - 1`` for every ``n`` in the range."""
    if n_min < 1:
        raise ValueError(f"n_min must be >= 1, got {n_min}")
    if n_min > n_max:
        raise ValueError(f"inverted range: n_min={n_min} > n_max={n_max}")
    return [
        Topology.star(parts)
        for n in range(n_min, n_max + 1)
        for parts in enumerate_partitions(n - 1)
    ]
