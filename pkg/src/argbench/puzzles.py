"""Witness-testimony puzzles built from attack graphs.

An :class:`Ontology` supplies witness names and statements; a topology plus a
seed picks concrete bindings, and :func:`render_prompt` turns the result into
the prompt text sent to a model.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import random
import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Iterable, Literal

from argbench.graphs import AttackGraph, Topology, enumerate_topologies
from argbench.semantics import closed_form_accept, root_accepted

SCHEMA_VERSION = 1

INTRO = (
    "The following is a reasoning puzzle. Witnesses should be believed unless there is "
    "testimony that they are lying. Now consider the following facts:"
)
INSTRUCTION = 'End your answer with: "Answer: yes or no".'


class OntologyError(ValueError):
    pass


class CapacityError(ValueError):
    pass


class PromptParseError(ValueError):
    def __init__(self, line_no: int, message: str) -> None:
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


@dataclass(frozen=True)
class Ontology:
    names: tuple[str, ...]
    statements: tuple[str, ...]

    def __post_init__(self) -> None:
        for kind, entries in (("names", self.names), ("statements", self.statements)):
            if not entries:
                raise OntologyError(f"{kind} list is empty")
            seen: dict[str, int] = {}
            for i, entry in enumerate(entries, 1):
                if not entry or entry != entry.strip() or "\n" in entry:
                    raise OntologyError(f"{kind} entry {i} is blank or has stray whitespace")
                if entry in seen:
                    raise OntologyError(
                        f"duplicate {kind} entry {entry!r} (entries {seen[entry]} and {i})"
                    )
                seen[entry] = i
        for s in self.statements:
            if s[-1] in ".?!,;:":
                raise OntologyError(f"statement {s!r} must not end with punctuation")


def _read_entries(source: str | Path, kind: str) -> list[tuple[int, str]]:
    text = Path(source).read_text(encoding="utf-8")
    entries = [(no, line.strip()) for no, line in enumerate(text.splitlines(), 1) if line.strip()]
    seen: dict[str, int] = {}
    for no, entry in entries:
        if entry in seen:
            raise OntologyError(
                f"{source}: line {no}: duplicate {kind} entry {entry!r} (first on line {seen[entry]})"
            )
        seen[entry] = no
    if not entries:
        raise OntologyError(f"{source}: {kind} list is empty")
    return entries


def load_ontology(names_source: str | Path, statements_source: str | Path) -> Ontology:
    """Read one entry per line (blank lines skipped), preserving order."""
    names = _read_entries(names_source, "name")
    statements = _read_entries(statements_source, "statement")
    return Ontology(tuple(e for _, e in names), tuple(e for _, e in statements))


def default_ontology() -> Ontology:
    data = resources.files("argbench") / "data"
    with resources.as_file(data / "names.txt") as names, resources.as_file(
        data / "statements.txt"
    ) as statements:
        return load_ontology(names, statements)


@dataclass(frozen=True)
class PuzzleInstance:
    id: str
    topology: Topology
    names: tuple[str, ...]
    statement: str
    presentation_order: tuple[int, ...]
    label: bool
    seed: int = 0
    shuffled: bool = False
    family: str = ""

    @property
    def graph(self) -> AttackGraph:
        return self.topology.graph()

    @property
    def witness_names(self) -> dict[int, str]:
        return dict(enumerate(self.names))

    @property
    def n_args(self) -> int:
        return self.topology.n_args

    @property
    def num_paths(self) -> int:
        return self.topology.num_paths

    @property
    def prompt(self) -> str:
        return render_prompt(self)

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "id": self.id,
            "family": self.family,
            "topology": self.topology.text,
            "n_args": self.n_args,
            "num_paths": self.num_paths,
            "path_lengths": list(self.topology.path_lengths),
            "names": list(self.names),
            "statement": self.statement,
            "presentation_order": list(self.presentation_order),
            "shuffled": self.shuffled,
            "label": "yes" if self.label else "no",
            "seed": self.seed,
            "prompt": self.prompt,
        }

    @classmethod
    def from_dict(cls, row: dict) -> PuzzleInstance:
        version = row.get("schema_version")
        if version != SCHEMA_VERSION:
            raise ValueError(f"unsupported dataset schema_version {version!r}")
        if row["label"] not in ("yes", "no"):
            raise ValueError(f"instance {row['id']}: label must be 'yes' or 'no'")
        return cls(
            id=row["id"],
            topology=Topology.parse(row["topology"]),
            names=tuple(row["names"]),
            statement=row["statement"],
            presentation_order=tuple(row["presentation_order"]),
            label=row["label"] == "yes",
            seed=int(row["seed"]),
            shuffled=bool(row["shuffled"]),
            family=row.get("family", ""),
        )


def make_instance(
    topology: Topology,
    names: Iterable[str],
    statement: str,
    *,
    instance_id: str | None = None,
    seed: int = 0,
    family: str = "",
) -> PuzzleInstance:
    """Bind explicit names (in argument id order) and a statement to a topology."""
    names = tuple(names)
    if len(names) != topology.n_args:
        raise ValueError(f"need {topology.n_args} names, got {len(names)}")
    if len(set(names)) != len(names):
        raise ValueError(f"witness names must be distinct: {names}")
    label = closed_form_accept(topology)
    if label != root_accepted(topology.graph()):
        raise AssertionError(f"closed-form and grounded labels disagree on {topology.text}")
    return PuzzleInstance(
        id=instance_id or f"{topology.text}@{seed:016x}",
        topology=topology,
        names=names,
        statement=statement,
        presentation_order=tuple(range(topology.n_args)),
        label=label,
        seed=seed,
        family=family,
    )


def sample_instance(topology: Topology, ontology: Ontology, seed: int) -> PuzzleInstance:
    """Draw a statement and distinct names for ``topology``, deterministically from ``seed``."""
    n = topology.n_args
    if len(ontology.names) < n:
        raise CapacityError(
            f"{topology.text} needs {n} distinct names but the ontology has {len(ontology.names)}"
        )
    rng = random.Random(seed)
    statement = rng.choice(ontology.statements)
    names = rng.sample(ontology.names, n)
    return make_instance(topology, names, statement, seed=seed)


def shuffle_presentation(instance: PuzzleInstance, seed: int) -> PuzzleInstance:
    """Copy of ``instance`` with fact lines in a uniformly random order."""
    order = list(range(instance.n_args))
    random.Random(seed).shuffle(order)
    return dataclasses.replace(instance, presentation_order=tuple(order), shuffled=True)


def fact_line(instance: PuzzleInstance, arg: int, targets: list[list[int]] | None = None) -> str:
    if arg == 0:
        return f"Witness {instance.names[0]} says that {instance.statement}."
    if targets is None:
        targets = instance.graph.targets()
    (target,) = targets[arg]
    return f"Witness {instance.names[arg]} says that witness {instance.names[target]} is lying."


def render_prompt(instance: PuzzleInstance) -> str:
    targets = instance.graph.targets()
    lines = [INTRO, ""]
    lines += [fact_line(instance, arg, targets) for arg in instance.presentation_order]
    lines += ["", f"Question: should it be believed that {instance.statement}?", INSTRUCTION]
    return "\n".join(lines)


_ATTACK_RE = re.compile(r"^Witness (\S.*?) says that witness (\S.*?) is lying\.$")
_CLAIM_RE = re.compile(r"^Witness (\S.*?) says that (\S.*)\.$")
_QUESTION_RE = re.compile(r"^Question: should it be believed that (\S.*)\?$")


def reparse_prompt(prompt: str) -> tuple[AttackGraph, list[str], str]:
    """Recover ``(graph, names by id, statement)`` from rendered prompt text.

    The root witness gets id 0; the others are numbered in order of their
    first fact line. For an unshuffled prompt this reproduces the original ids.
    """
    lines = prompt.split("\n")
    if not lines or lines[0] != INTRO:
        raise PromptParseError(1, "missing puzzle introduction")
    if len(lines) < 2 or lines[1] != "":
        raise PromptParseError(2, "expected blank line after introduction")
    try:
        end = lines.index("", 2)
    except ValueError:
        raise PromptParseError(len(lines), "missing blank line before question") from None
    if end + 1 >= len(lines):
        raise PromptParseError(end + 2, "missing question line")
    question = _QUESTION_RE.match(lines[end + 1])
    if not question:
        raise PromptParseError(end + 2, f"expected question line, got {lines[end + 1]!r}")
    if end + 2 >= len(lines) or lines[end + 2] != INSTRUCTION:
        raise PromptParseError(end + 3, "missing answer instruction line")
    if end + 3 != len(lines):
        raise PromptParseError(end + 4, "unexpected text after answer instruction")
    if end == 2:
        raise PromptParseError(3, "no fact lines")

    root: tuple[str, str] | None = None
    attacks: list[tuple[int, str, str]] = []
    speakers: list[str] = []
    for idx in range(2, end):
        line_no = idx + 1
        line = lines[idx]
        if m := _ATTACK_RE.match(line):
            attacks.append((line_no, m.group(1), m.group(2)))
            name = m.group(1)
        elif m := _CLAIM_RE.match(line):
            if root is not None:
                raise PromptParseError(line_no, "more than one witness makes a claim")
            root = (m.group(1), m.group(2))
            name = m.group(1)
        else:
            raise PromptParseError(line_no, f"malformed fact line {line!r}")
        if name in speakers:
            raise PromptParseError(line_no, f"witness {name} testifies twice")
        speakers.append(name)

    if root is None:
        raise PromptParseError(3, "no witness makes the questioned claim")
    root_name, statement = root
    if question.group(1) != statement:
        raise PromptParseError(end + 2, "question does not match the root witness's statement")

    names = [root_name] + [s for s in speakers if s != root_name]
    ids = {name: i for i, name in enumerate(names)}
    edges = set()
    for line_no, attacker, target in attacks:
        if target not in ids:
            raise PromptParseError(line_no, f"unknown witness {target!r}")
        edges.add((ids[attacker], ids[target]))
    return AttackGraph(len(names), frozenset(edges)), names, statement


Family = Literal["linear", "nonlinear"]


@dataclass(frozen=True)
class DatasetSpec:
    family: Family
    n_min: int
    n_max: int
    variations: int = 1
    master_seed: int = 0
    shuffled: bool = False

    def __post_init__(self) -> None:
        if self.family not in ("linear", "nonlinear"):
            raise ValueError(f"family must be 'linear' or 'nonlinear', got {self.family!r}")
        if self.n_min < 1:
            raise ValueError(f"n_min must be >= 1, got {self.n_min}")
        if self.n_min > self.n_max:
            raise ValueError(f"inverted range: n_min={self.n_min} > n_max={self.n_max}")
        if self.variations < 1:
            raise ValueError(f"variations must be >= 1, got {self.variations}")
        if not 0 <= self.master_seed < 2**64:
            raise ValueError("master_seed must fit in 64 unsigned bits")

    def topologies(self) -> list[Topology]:
        if self.family == "linear":
            return [Topology.linear(n) for n in range(self.n_min, self.n_max + 1)]
        return enumerate_topologies(self.n_min, self.n_max)


def derive_seed(master_seed: int, topology_index: int, variation: int, purpose: str) -> int:
    key = f"{master_seed}:{topology_index}:{variation}:{purpose}".encode()
    return int.from_bytes(hashlib.blake2b(key, digest_size=8).digest(), "big")


def generate_dataset(spec: DatasetSpec, ontology: Ontology) -> list[PuzzleInstance]:
    """Instances in topology-major, variation-minor order."""
    instances = []
    for t_idx, topology in enumerate(spec.topologies()):
        for v in range(spec.variations):
            seed = derive_seed(spec.master_seed, t_idx, v, "sample")
            inst = sample_instance(topology, ontology, seed)
            instance_id = f"{spec.family}/{topology.text}/v{v}"
            if spec.shuffled:
                inst = shuffle_presentation(inst, derive_seed(spec.master_seed, t_idx, v, "shuffle"))
                instance_id += "/shuffled"
            instances.append(dataclasses.replace(inst, id=instance_id, family=spec.family))
    return instances


def write_dataset(instances: Iterable[PuzzleInstance], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for inst in instances:
            fh.write(json.dumps(inst.to_dict(), ensure_ascii=False) + "\n")


def read_dataset(path: str | Path) -> list[PuzzleInstance]:
    instances = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                instances.append(PuzzleInstance.from_dict(json.loads(line)))
            except (KeyError, ValueError, TypeError) as exc:
                raise ValueError(f"{path}: line {line_no}: {exc}") from exc
    return instances
