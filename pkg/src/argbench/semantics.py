"""Argument acceptance under grounded semantics."""

from __future__ import annotations

import enum

from argbench.graphs import AttackGraph, Topology

MAX_BRUTE_FORCE_ARGS = 20


class Label(str, enum.Enum):
    IN = "IN"
    OUT = "OUT"
    UNDEC = "UNDEC"


Labelling = dict[int, Label]


def grounded_labelling(graph: AttackGraph) -> Labelling:
    """Least fixed point labelling; arguments left unresolved are UNDEC.

    Works on any finite graph, cycles included. Each round sweeps arguments in
    id order and stops once a sweep changes nothing.
    """
    attackers = graph.attackers()
    labels: dict[int, Label] = {}
    changed = True
    while changed:
        changed = False
        for arg in range(graph.n):
            if arg in labels:
                continue
            if all(labels.get(a) is Label.OUT for a in attackers[arg]):
                labels[arg] = Label.IN
                changed = True
            elif any(labels.get(a) is Label.IN for a in attackers[arg]):
                labels[arg] = Label.OUT
                changed = True
    return {arg: labels.get(arg, Label.UNDEC) for arg in range(graph.n)}


def in_set(labelling: Labelling) -> frozenset[int]:
    return frozenset(a for a, lab in labelling.items() if lab is Label.IN)


def root_accepted(graph: AttackGraph) -> bool:
    """Whether the root is IN. An UNDEC root counts as not accepted."""
    return grounded_labelling(graph)[0] is Label.IN


def closed_form_accept(topology: Topology) -> bool:
    """Root acceptance read straight off the shape.

    A chain accepts its root when it has an odd number of arguments; a star
    accepts its root when every attached chain has even length.
    """
    if topology.kind == "linear":
        return topology.n % 2 == 1
    return all(length % 2 == 0 for length in topology.paths)


def brute_force_extensions(graph: AttackGraph) -> list[frozenset[int]]:
    """Every stable extension, found by checking all 2**n subsets."""
    if graph.n > MAX_BRUTE_FORCE_ARGS:
        raise ValueError(
            f"brute force is limited to {MAX_BRUTE_FORCE_ARGS} arguments, got {graph.n}"
        )
    attacker_mask = [0] * graph.n
    for a, b in graph.edges:
        attacker_mask[b] |= 1 << a
    extensions = []
    for subset in range(1 << graph.n):
        ok = True
        for arg in range(graph.n):
            hit = attacker_mask[arg] & subset
            inside = subset >> arg & 1
            # members must be unattacked by the set, outsiders must be attacked
            if (inside and hit) or (not inside and not hit):
                ok = False
                break
        if ok:
            extensions.append(frozenset(i for i in range(graph.n) if subset >> i & 1))
    return extensions


def format_labelling(labelling: Labelling) -> str:
    return "\n".join(f"{arg}:{lab.value}" for arg, lab in sorted(labelling.items()))
