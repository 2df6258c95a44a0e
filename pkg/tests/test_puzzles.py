from __future__ import annotations

import random
from collections import Counter

import pytest

from argbench.graphs import Topology, enumerate_topologies
from argbench.puzzles import (
    CapacityError,
    DatasetSpec,
    Ontology,
    OntologyError,
    PromptParseError,
    PuzzleInstance,
    generate_dataset,
    load_ontology,
    read_dataset,
    render_prompt,
    reparse_prompt,
    sample_instance,
    shuffle_presentation,
    write_dataset,
)
from argbench.semantics import closed_form_accept, root_accepted

from conftest import FIXTURES


def fact_lines(prompt: str) -> list[str]:
    lines = prompt.split("\n")
    return lines[2:lines.index("", 2)]


def named_edges(graph, names) -> set[tuple[str, str]]:
    return {(names[a], names[b]) for a, b in graph.edges}


class TestOntology:
    def test_default_lists(self, ontology):
        assert len(ontology.names) == 474
        assert len(ontology.statements) == 90
        for name in ("Alice", "Bob", "Charlie", "Dan", "Landry", "Ellie", "Nikolas", "Avani"):
            assert name in ontology.names
        assert "the train is late" in ontology.statements

    def test_statements_read_in_both_frames(self, ontology):
        for s in ontology.statements:
            assert s == s.strip() and s[0].islower() and s[-1].isalnum()

    def test_order_and_blank_lines(self, tmp_path):
        (tmp_path / "n.txt").write_text("Zed\n\nAmy\n  Bo  \n", encoding="utf-8")
        (tmp_path / "s.txt").write_text("the sky is grey\n", encoding="utf-8")
        ont = load_ontology(tmp_path / "n.txt", tmp_path / "s.txt")
        assert ont.names == ("Zed", "Amy", "Bo")

    def test_duplicate_names_line(self, tmp_path):
        (tmp_path / "n.txt").write_text("Amy\nBo\nAmy\n", encoding="utf-8")
        (tmp_path / "s.txt").write_text("the sky is grey\n", encoding="utf-8")
        with pytest.raises(OntologyError, match=r"line 3.*'Amy'.*line 1"):
            load_ontology(tmp_path / "n.txt", tmp_path / "s.txt")

    def test_empty_statements(self, tmp_path):
        (tmp_path / "n.txt").write_text("Amy\n", encoding="utf-8")
        (tmp_path / "s.txt").write_text("\n\n", encoding="utf-8")
        with pytest.raises(OntologyError, match="empty"):
            load_ontology(tmp_path / "n.txt", tmp_path / "s.txt")

    def test_statement_punctuation_rejected(self):
        with pytest.raises(OntologyError):
            Ontology(("Amy",), ("the sky is grey.",))


class TestSampling:
    def test_star12_bindings(self, star12_instance):
        assert star12_instance.label is False
        assert star12_instance.witness_names == {0: "Alice", 1: "Bob", 2: "Charlie", 3: "Dan"}

    def test_single_witness(self, ontology):
        inst = sample_instance(Topology.linear(1), ontology, 5)
        assert inst.label is True
        assert len(inst.names) == 1

    def test_deterministic(self, ontology):
        t = Topology.star([3, 1, 1])
        assert sample_instance(t, ontology, 99) == sample_instance(t, ontology, 99)
        assert sample_instance(t, ontology, 99) != sample_instance(t, ontology, 100)

    def test_capacity(self):
        ont = Ontology(("Amy", "Bo"), ("the sky is grey",))
        with pytest.raises(CapacityError):
            sample_instance(Topology.linear(3), ont, 0)

    def test_names_distinct_and_from_ontology(self, ontology):
        for seed in range(200):
            inst = sample_instance(Topology.linear(25), ontology, seed)
            assert len(set(inst.names)) == 25
            assert set(inst.names) <= set(ontology.names)
            assert inst.statement in ontology.statements
            assert inst.presentation_order == tuple(range(25))


class TestRendering:
    def test_chain2_byte_exact(self, chain2_instance):
        expected = (FIXTURES / "chain2_prompt.txt").read_text(encoding="utf-8")
        assert render_prompt(chain2_instance) == expected

    def test_star12_byte_exact(self, star12_instance):
        expected = (FIXTURES / "star12_prompt.txt").read_text(encoding="utf-8")
        assert render_prompt(star12_instance) == expected

    def test_single_fact_line(self, ontology):
        prompt = render_prompt(sample_instance(Topology.linear(1), ontology, 3))
        assert len(fact_lines(prompt)) == 1
        assert prompt.count("\n\n") == 2

    def test_no_trailing_whitespace(self, ontology):
        inst = sample_instance(Topology.star([2, 1]), ontology, 1)
        for line in render_prompt(inst).split("\n"):
            assert line == line.rstrip()
            assert "  " not in line


class TestShuffle:
    def test_single_argument_unchanged(self, ontology):
        inst = sample_instance(Topology.linear(1), ontology, 3)
        assert shuffle_presentation(inst, 42).presentation_order == (0,)

    def test_deterministic(self, star12_instance):
        assert shuffle_presentation(star12_instance, 5) == shuffle_presentation(star12_instance, 5)

    def test_reverse_order_example(self, star12_instance):
        # find a seed producing Dan, Charlie, Bob, Alice
        seed = next(s for s in range(10_000)
                    if shuffle_presentation(star12_instance, s).presentation_order == (3, 2, 1, 0))
        shuffled = shuffle_presentation(star12_instance, seed)
        assert shuffled.shuffled and shuffled.label is False
        lines = fact_lines(render_prompt(shuffled))
        assert [line.split()[1] for line in lines] == ["Dan", "Charlie", "Bob", "Alice"]
        assert lines[0] == "Witness Dan says that witness Charlie is lying."

    def test_permutations_roughly_uniform(self, star12_instance):
        counts = Counter(shuffle_presentation(star12_instance, s).presentation_order for s in range(24_000))
        assert len(counts) == 24
        assert all(800 < c < 1200 for c in counts.values())

    def test_preserves_label_and_fact_multiset(self, ontology):
        rng = random.Random(0)
        tops = enumerate_topologies(1, 15)
        for _ in range(300):
            inst = sample_instance(rng.choice(tops), ontology, rng.getrandbits(64))
            shuffled = shuffle_presentation(inst, rng.getrandbits(64))
            assert shuffled.label == inst.label
            assert (shuffled.names, shuffled.statement, shuffled.topology) == (
                inst.names, inst.statement, inst.topology)
            before, after = render_prompt(inst), render_prompt(shuffled)
            assert Counter(fact_lines(before)) == Counter(fact_lines(after))
            assert before.split("\n")[-3:] == after.split("\n")[-3:]


class TestReparse:
    def test_chain2(self):
        graph, names, statement = reparse_prompt((FIXTURES / "chain2_prompt.txt").read_text())
        assert graph.n == 2 and graph.edges == {(1, 0)}
        assert names == ["Alice", "Bob"]
        assert statement == "the train is late"

    def test_star12(self, star12_instance):
        graph, names, statement = reparse_prompt((FIXTURES / "star12_prompt.txt").read_text())
        assert graph == star12_instance.graph
        assert names == ["Alice", "Bob", "Charlie", "Dan"]

    def test_missing_question(self):
        text = (FIXTURES / "chain2_prompt.txt").read_text()
        broken = "\n".join(l for l in text.split("\n") if not l.startswith("Question"))
        with pytest.raises(PromptParseError):
            reparse_prompt(broken)

    @pytest.mark.parametrize("mutate, line_no", [
        (lambda ls: ls[:3] + ["Witness Bob whispers."] + ls[4:], 4),
        (lambda ls: ls[:3] + ["Witness Bob says that witness Zoe is lying."] + ls[4:], 4),
        (lambda ls: ls[:-1], 7),
        (lambda ls: ["Hello"] + ls[1:], 1),
        (lambda ls: ls + ["extra"], 8),
    ])
    def test_parse_errors_carry_line_numbers(self, mutate, line_no):
        lines = (FIXTURES / "chain2_prompt.txt").read_text().split("\n")
        with pytest.raises(PromptParseError) as info:
            reparse_prompt("\n".join(mutate(lines)))
        assert info.value.line_no == line_no

    def test_duplicate_claim(self):
        lines = (FIXTURES / "chain2_prompt.txt").read_text().split("\n")
        lines.insert(3, "Witness Carl says that the train is late.")
        with pytest.raises(PromptParseError, match="more than one"):
            reparse_prompt("\n".join(lines))

    def test_round_trip_both_families(self, ontology):
        rng = random.Random(7)
        tops = enumerate_topologies(1, 15) + [Topology.linear(n) for n in range(1, 26)]
        for i in range(1000):
            inst = sample_instance(rng.choice(tops), ontology, rng.getrandbits(64))
            if i % 2:
                inst = shuffle_presentation(inst, rng.getrandbits(64))
            graph, names, statement = reparse_prompt(render_prompt(inst))
            assert statement == inst.statement
            assert sorted(names) == sorted(inst.names)
            assert named_edges(graph, names) == named_edges(inst.graph, inst.names)
            assert root_accepted(graph) == inst.label
            if not inst.shuffled:
                assert graph == inst.graph and tuple(names) == inst.names


class TestDataset:
    def test_linear_full_scale(self, ontology):
        data = generate_dataset(DatasetSpec("linear", 1, 25, 100, 7), ontology)
        assert len(data) == 2500
        assert sum(i.label for i in data) == 1300
        for inst in data:
            assert inst.label == (inst.n_args % 2 == 1)

    def test_nonlinear_full_scale(self, ontology):
        data = generate_dataset(DatasetSpec("nonlinear", 1, 15, 5, 7), ontology)
        assert len(data) == 2540
        assert len({i.topology for i in data}) == 508
        # brute-force label count: topologies whose paths are all even
        even = sum(all(p % 2 == 0 for p in t.paths) for t in enumerate_topologies(1, 15))
        assert even == 45
        assert sum(i.label for i in data) == 225 == even * 5

    def test_linear_one_to_fifty_is_half_yes(self, ontology):
        data = generate_dataset(DatasetSpec("linear", 1, 50, 100, 1), ontology)
        assert len(data) == 5000
        assert sum(i.label for i in data) == 2500

    def test_order_ids_and_labels(self, ontology):
        data = generate_dataset(DatasetSpec("nonlinear", 1, 5, 3, 11, shuffled=True), ontology)
        assert [i.id for i in data[:4]] == [
            "nonlinear/star:/v0/shuffled", "nonlinear/star:/v1/shuffled",
            "nonlinear/star:/v2/shuffled", "nonlinear/star:1/v0/shuffled"]
        assert len({i.id for i in data}) == len(data)
        for inst in data:
            assert inst.shuffled
            assert inst.label == closed_form_accept(inst.topology) == root_accepted(inst.graph)
            assert sorted(inst.presentation_order) == list(range(inst.n_args))
            assert len(set(inst.names)) == inst.n_args

    def test_deterministic_bytes(self, ontology, tmp_path):
        spec = DatasetSpec("nonlinear", 1, 9, 2, 123, shuffled=True)
        write_dataset(generate_dataset(spec, ontology), tmp_path / "a.jsonl")
        write_dataset(generate_dataset(spec, ontology), tmp_path / "b.jsonl")
        assert (tmp_path / "a.jsonl").read_bytes() == (tmp_path / "b.jsonl").read_bytes()

    def test_master_seed_changes_bindings(self, ontology):
        a = generate_dataset(DatasetSpec("linear", 3, 3, 5, 1), ontology)
        b = generate_dataset(DatasetSpec("linear", 3, 3, 5, 2), ontology)
        assert [i.names for i in a] != [i.names for i in b]

    def test_capacity_propagates(self):
        ont = Ontology(("Amy", "Bo"), ("the sky is grey",))
        with pytest.raises(CapacityError):
            generate_dataset(DatasetSpec("linear", 1, 3), ont)

    @pytest.mark.parametrize("kwargs", [
        dict(family="tree", n_min=1, n_max=2),
        dict(family="linear", n_min=0, n_max=2),
        dict(family="linear", n_min=3, n_max=2),
        dict(family="linear", n_min=1, n_max=2, variations=0),
        dict(family="linear", n_min=1, n_max=2, master_seed=2**64),
    ])
    def test_spec_validation(self, kwargs):
        with pytest.raises(ValueError):
            DatasetSpec(**kwargs)

    def test_jsonl_round_trip(self, ontology, tmp_path):
        data = generate_dataset(DatasetSpec("nonlinear", 1, 6, 2, 3, shuffled=True), ontology)
        path = tmp_path / "d.jsonl"
        write_dataset(data, path)
        assert read_dataset(path) == data
        row = data[5].to_dict()
        assert set(row) == {"schema_version", "id", "family", "topology", "n_args", "num_paths",
                            "path_lengths", "names", "statement", "presentation_order",
                            "shuffled", "label", "seed", "prompt"}
        assert row["label"] in ("yes", "no")

    def test_bad_schema_version(self, chain2_instance):
        row = chain2_instance.to_dict() | {"schema_version": 99}
        with pytest.raises(ValueError, match="schema_version"):
            PuzzleInstance.from_dict(row)
