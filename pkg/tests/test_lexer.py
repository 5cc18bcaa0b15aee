import string

import pytest
from hypothesis import given, strategies as st

from sast_triage.lexer import NUM_TOKEN, STR_TOKEN, tokenize, tokenize_with_spans


def test_empty_input():
    assert tokenize("") == []


def test_statement_with_string_literal():
    assert tokenize('stmt.executeQuery("SELECT * FROM t" + id);') == [
        "stmt", ".", "executeQuery", "(", STR_TOKEN, "+", "id", ")", ";",
    ]


def test_multichar_operator_and_number_collapse():
    assert tokenize("if (a <= 10)") == ["if", "(", "a", "<=", NUM_TOKEN, ")"]


@pytest.mark.parametrize(
    "source,expected",
    [
        ("x == y", ["x", "==", "y"]),
        ("a != b && c || d", ["a", "!=", "b", "&&", "c", "||", "d"]),
        ("i++ + --j", ["i", "++", "+", "--", "j"]),
        ("x += 2", ["x", "+=", NUM_TOKEN]),
        ("() -> x", ["(", ")", "->", "x"]),
        ("a >= b", ["a", ">=", "b"]),
    ],
)
def test_operators(source, expected):
    assert tokenize(source) == expected


@pytest.mark.parametrize(
    "source,expected",
    [
        ("0x1F", [NUM_TOKEN]),
        ("3.14f", [NUM_TOKEN]),
        ("1_000_000L", [NUM_TOKEN]),
        ("1e-5", [NUM_TOKEN]),
        ("x.5", ["x", ".", NUM_TOKEN]),
    ],
)
def test_numeric_literals(source, expected):
    assert tokenize(source) == expected


def test_char_literal_collapses():
    assert tokenize("c = 'x';") == ["c", "=", STR_TOKEN, ";"]


def test_escaped_quote_inside_string():
    assert tokenize(r's = "a\"b";') == ["s", "=", STR_TOKEN, ";"]


def test_unterminated_string_consumes_remainder():
    assert tokenize('s = "oops + more')[-1] == STR_TOKEN
    assert tokenize('s = "oops + more') == ["s", "=", STR_TOKEN]


def test_identifiers_keep_case_and_dollars():
    assert tokenize("Random $tmp_1 = randomVal;") == [
        "Random", "$tmp_1", "=", "randomVal", ";",
    ]


def test_placeholders_are_single_tokens():
    assert tokenize("<NUM> <STR>") == [NUM_TOKEN, STR_TOKEN]
    # '<' not followed by a placeholder stays an ordinary operator
    assert tokenize("<N>") == ["<", "N", ">"]


printable_text = st.text(
    alphabet=st.characters(min_codepoint=9, max_codepoint=0x2FF), max_size=200
)


@given(printable_text)
def test_determinism(text):
    assert tokenize(text) == tokenize(text)


@given(printable_text)
def test_no_token_is_empty_or_has_whitespace(text):
    for tok in tokenize(text):
        assert tok
        assert not any(c.isspace() for c in tok)


@given(printable_text)
def test_span_coverage(text):
    """Every non-whitespace character is consumed by exactly one token span."""
    spans = tokenize_with_spans(text)
    covered = [0] * len(text)
    last_end = 0
    for tok, start, end in spans:
        assert start >= last_end, "spans must not overlap"
        assert end > start
        last_end = end
        for i in range(start, end):
            covered[i] += 1
    for i, c in enumerate(text):
        if c.isspace():
            assert covered[i] <= 1  # whitespace only inside string literals
        else:
            assert covered[i] == 1, f"character {c!r} at {i} consumed {covered[i]} times"


@given(printable_text)
def test_idempotent_retokenization(text):
    tokens = tokenize(text)
    assert tokenize(" ".join(tokens)) == tokens


@given(st.lists(st.sampled_from(
    ["request", "getParameter", NUM_TOKEN, STR_TOKEN, "==", "->", "(", ")", ";", "$id"]
), max_size=30))
def test_token_sequences_are_fixed_points(tokens):
    assert tokenize(" ".join(tokens)) == tokens


def test_java_line_end_to_end():
    line = 'String sql = "SELECT * FROM users WHERE id = \'" + request.getParameter("id") + "\'";'
    assert tokenize(line) == [
        "String", "sql", "=", STR_TOKEN, "+", "request", ".", "getParameter",
        "(", STR_TOKEN, ")", "+", STR_TOKEN, ";",
    ]
