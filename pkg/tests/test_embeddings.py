import math

import numpy as np
import pytest

from vlca.embeddings import (
    EmbeddingTable,
    PromptEmbeddings,
    VocabularyPolicy,
    format_float,
    hashed_unit_vector,
    parse_glove,
    pseudo_prompt_table,
    read_prompt_table,
    read_synonym_map,
    resolve_class,
    write_prompt_table,
)
from vlca.exceptions import (
    BadHeaderError,
    DimensionMismatchError,
    DuplicateNameError,
    DuplicateTokenError,
    MalformedNumberError,
    MalformedRecordError,
    NameNotFoundError,
    TokenNotFoundError,
    ZeroVectorError,
)


class TestParseGlove:
    def test_direct_parse(self):
        table = parse_glove("a 1.0 2.0\nb 3.0 4.0")
        assert table.dim == 2
        assert len(table) == 2
        np.testing.assert_array_equal(table.vector("a"), [1.0, 2.0])
        np.testing.assert_array_equal(table.vector("b"), [3.0, 4.0])

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            parse_glove("a 1.0 2.0\nb 3.0")

    def test_malformed_number(self):
        with pytest.raises(MalformedNumberError):
            parse_glove("a 1.0 oops")

    def test_duplicate_token(self):
        with pytest.raises(DuplicateTokenError):
            parse_glove("a 1.0 2.0\na 3.0 4.0")

    def test_blank_lines_skipped(self):
        table = parse_glove("a 1.0 2.0\n\nb 3.0 4.0\n")
        assert len(table) == 2

    def test_empty_stream_rejected(self):
        with pytest.raises(DimensionMismatchError):
            parse_glove("")

    def test_missing_token_lookup(self, tiny_glove_text):
        table = parse_glove(tiny_glove_text)
        with pytest.raises(TokenNotFoundError):
            table.vector("cat")

    def test_non_finite_component(self):
        with pytest.raises(MalformedNumberError):
            parse_glove("a 1.0 nan")


class TestResolveClass:
    def test_compound_is_sum(self, tiny_glove_text):
        table = parse_glove(tiny_glove_text)
        policy = VocabularyPolicy()
        got = resolve_class(table, policy, "alarm clock")
        expected = table.vector("alarm") + table.vector("clock")
        np.testing.assert_array_equal(got, expected)

    def test_synonym_applies_to_full_name(self, tiny_glove_text):
        table = parse_glove(tiny_glove_text)
        policy = VocabularyPolicy()
        np.testing.assert_array_equal(
            resolve_class(table, policy, "football"), table.vector("soccer")
        )
        np.testing.assert_array_equal(
            resolve_class(table, policy, "flipflop"), table.vector("slipper")
        )

    def test_lowercase_normalization(self, tiny_glove_text):
        table = parse_glove(tiny_glove_text)
        policy = VocabularyPolicy()
        np.testing.assert_array_equal(
            resolve_class(table, policy, "Dog"), table.vector("dog")
        )

    def test_separator_variants(self, tiny_glove_text):
        table = parse_glove(tiny_glove_text)
        policy = VocabularyPolicy()
        expected = table.vector("alarm") + table.vector("clock")
        for name in ("alarm_clock", "alarm-clock", "alarm  clock"):
            np.testing.assert_array_equal(resolve_class(table, policy, name), expected)

    def test_missing_component_token(self, tiny_glove_text):
        table = parse_glove(tiny_glove_text)
        with pytest.raises(TokenNotFoundError):
            resolve_class(table, VocabularyPolicy(), "dog kennel")

    def test_deterministic_and_pure(self, tiny_glove_text):
        table = parse_glove(tiny_glove_text)
        policy = VocabularyPolicy()
        a = resolve_class(table, policy, "alarm clock")
        b = resolve_class(table, policy, "alarm clock")
        assert np.array_equal(a, b)
        a[:] = 0.0  # returned vectors are fresh copies, table is untouched
        assert not np.array_equal(a, resolve_class(table, policy, "alarm clock"))

    def test_additivity_property(self, tiny_glove_text):
        table = parse_glove(tiny_glove_text)
        policy = VocabularyPolicy()
        tokens = list(table.tokens())
        for u in tokens:
            for v in tokens:
                if u == v:
                    continue
                lhs = resolve_class(table, policy, f"{u} {v}")
                rhs = resolve_class(table, policy, u) + resolve_class(table, policy, v)
                np.testing.assert_array_equal(lhs, rhs)


class TestSynonymFile:
    def test_read(self):
        text = "# comment\nfootball=soccer\n\nflipflop = slipper\n"
        assert read_synonym_map(text) == {"football": "soccer", "flipflop": "slipper"}

    def test_bad_line(self):
        with pytest.raises(MalformedRecordError):
            read_synonym_map("football soccer")

    def test_duplicate_source(self):
        with pytest.raises(DuplicateTokenError):
            read_synonym_map("a=b\na=c")


def random_prompts(rng, n_style=3, n_semantic=7, k=5) -> PromptEmbeddings:
    style = tuple(
        (f"domain{i}", rng.standard_normal(k) + 0.01) for i in range(n_style)
    )
    semantic = tuple(
        (f"class{i}", rng.standard_normal(k) + 0.01) for i in range(n_semantic)
    )
    return PromptEmbeddings(k=k, style=style, semantic=semantic)


class TestPromptTable:
    def test_direct_parse(self):
        text = (
            "#vlca-prompts v1 dim=4\n"
            "style\tphoto\t1\t0\t0\t0\n"
            "semantic\tdog\t0\t1\t0\t0\n"
        )
        p = read_prompt_table(text)
        assert p.k == 4
        assert p.style_names() == ["photo"]
        assert p.semantic_names() == ["dog"]
        np.testing.assert_array_equal(p.style_vector("photo"), [1, 0, 0, 0])

    def test_round_trip_exact(self, rng):
        # 3 domains x 7 classes with awkward values: round trip must be
        # bit-exact at 17 significant digits
        p = random_prompts(rng)
        q = read_prompt_table(write_prompt_table(p))
        assert q == p

    def test_round_trip_many(self, rng):
        for _ in range(25):
            k = int(rng.integers(1, 9))
            p = random_prompts(
                rng, n_style=int(rng.integers(1, 4)), n_semantic=int(rng.integers(1, 5)), k=k
            )
            assert read_prompt_table(write_prompt_table(p)) == p

    def test_seventeen_digit_format(self):
        x = 0.1 + 0.2  # famous non-representable sum
        assert float(format_float(x)) == x

    def test_bad_header(self):
        with pytest.raises(BadHeaderError):
            read_prompt_table("#vlca-prompts v2 dim=4\n")
        with pytest.raises(BadHeaderError):
            read_prompt_table("dim=4\n")
        with pytest.raises(BadHeaderError):
            read_prompt_table("")

    def test_zero_dim_header(self):
        with pytest.raises(BadHeaderError):
            read_prompt_table("#vlca-prompts v1 dim=0\n")

    def test_dimension_mismatch_row(self):
        text = "#vlca-prompts v1 dim=3\nstyle\tphoto\t1\t2\n"
        with pytest.raises(DimensionMismatchError):
            read_prompt_table(text)

    def test_duplicate_name(self):
        text = (
            "#vlca-prompts v1 dim=2\n"
            "style\tphoto\t1\t2\n"
            "style\tphoto\t3\t4\n"
        )
        with pytest.raises(DuplicateNameError):
            read_prompt_table(text)

    def test_same_name_across_kinds_allowed(self):
        text = (
            "#vlca-prompts v1 dim=2\n"
            "style\tphoto\t1\t2\n"
            "semantic\tphoto\t3\t4\n"
        )
        p = read_prompt_table(text)
        assert p.style_names() == p.semantic_names() == ["photo"]

    def test_zero_vector_rejected(self):
        text = "#vlca-prompts v1 dim=2\nsemantic\tdog\t0\t0\n"
        with pytest.raises(ZeroVectorError):
            read_prompt_table(text)

    def test_unknown_kind(self):
        text = "#vlca-prompts v1 dim=2\nstylo\tphoto\t1\t2\n"
        with pytest.raises(MalformedRecordError):
            read_prompt_table(text)

    def test_malformed_number(self):
        text = "#vlca-prompts v1 dim=2\nstyle\tphoto\t1\tx\n"
        with pytest.raises(MalformedNumberError):
            read_prompt_table(text)

    def test_missing_name_lookup(self, rng):
        p = random_prompts(rng)
        with pytest.raises(NameNotFoundError):
            p.style_vector("nope")
        with pytest.raises(NameNotFoundError):
            p.semantic_vector("nope")

    def test_names_may_contain_spaces(self):
        text = "#vlca-prompts v1 dim=2\nstyle\tart painting\t1\t2\n"
        assert read_prompt_table(text).style_names() == ["art painting"]


class TestPseudoPrompts:
    def test_deterministic(self):
        a = pseudo_prompt_table(["photo"], ["dog"], 8)
        b = pseudo_prompt_table(["photo"], ["dog"], 8)
        assert a == b

    def test_unit_norm(self):
        p = pseudo_prompt_table(["photo", "sketch"], ["dog", "horse"], 16)
        for _, vec in p.style + p.semantic:
            assert math.isclose(np.linalg.norm(vec), 1.0, rel_tol=1e-12)

    def test_distinct_prompts_distinct_vectors(self):
        p = pseudo_prompt_table(["photo", "sketch"], ["dog"], 8)
        assert not np.allclose(p.style_vector("photo"), p.style_vector("sketch"))

    def test_depends_on_rendered_template(self):
        a = pseudo_prompt_table(["photo"], ["dog"], 8)
        b = pseudo_prompt_table(
            ["photo"], ["dog"], 8, style_template="The image style is from dataset {domain}"
        )
        assert not np.allclose(a.style_vector("photo"), b.style_vector("photo"))

    def test_hash_vector_frozen_values(self):
        # frozen spot check: the generator must never drift, or committed
        # golden runs silently change meaning
        v = hashed_unit_vector("The image style is photo", 4)
        assert math.isclose(np.linalg.norm(v), 1.0, rel_tol=1e-12)
        w = hashed_unit_vector("The image style is photo", 4)
        np.testing.assert_array_equal(v, w)


class TestEmbeddingTableInvariants:
    def test_vectors_read_only(self, tiny_glove_text):
        table = parse_glove(tiny_glove_text)
        with pytest.raises(ValueError):
            table.vector("dog")[0] = 99.0

    def test_bad_dim_construction(self):
        with pytest.raises(DimensionMismatchError):
            EmbeddingTable(dim=0, _vectors={})

    def test_contains(self, tiny_glove_text):
        table = parse_glove(tiny_glove_text)
        assert "dog" in table
        assert "cat" not in table
