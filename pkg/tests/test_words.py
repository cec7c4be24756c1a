import random

import pytest
from hypothesis import given, strategies as st

from outerspace.errors import BudgetExceeded, TrivialClass
from outerspace.words import Basis, CyclicWord, Word, conjugacy_length, enumerate_cyclic_words, reduce

# counts of cyclic words up to rotation, from exhausting all letter strings (oracles.cyclic_classes)
CYCLIC_COUNTS = {2: [4, 12, 24, 50, 102, 234], 3: [6, 24, 70, 238]}


def test_reduce_examples():
    assert str(reduce(Word.parse("a b B a").letters)) == "aa"
    assert str(reduce(())) == ""
    assert str(Word.parse("a A")) == ""


def test_conjugacy_length_examples():
    assert conjugacy_length(Word.parse("baB")) == 1
    assert conjugacy_length(Word.parse("abAB")) == 4
    with pytest.raises(TrivialClass):
        conjugacy_length(Word.parse(""))


def test_uppercase_is_inverse():
    w = Word.parse("abAB")
    assert w.letters == (1, 2, -1, -2)
    assert str(w.inverse()) == "baBA"


def test_enumeration_small():
    got = {str(c) for c in enumerate_cyclic_words(Basis(2), 1)}
    assert got == {"a", "A", "b", "B"}
    assert len(list(enumerate_cyclic_words(Basis(2), 2))) == 12


@pytest.mark.parametrize("r", [2, 3])
def test_enumeration_counts_match_exhaustive_oracle(r):
    for n, expected in enumerate(CYCLIC_COUNTS[r], start=1):
        words = list(enumerate_cyclic_words(Basis(r), n))
        assert len(words) == expected
        assert len(set(words)) == expected


def test_enumeration_deterministic():
    a = [str(c) for c in enumerate_cyclic_words(Basis(2), 4)]
    b = [str(c) for c in enumerate_cyclic_words(Basis(2), 4)]
    assert a == b


def test_enumeration_degenerate_and_budget():
    assert list(enumerate_cyclic_words(Basis(2), 0)) == []
    with pytest.raises(BudgetExceeded):
        list(enumerate_cyclic_words(Basis(3), 6, cap=10))


def test_cyclic_word_canonical_rotation():
    assert CyclicWord(Word.parse("ba")) == CyclicWord(Word.parse("ab"))
    assert str(CyclicWord(Word.parse("bAAb"))) == str(CyclicWord(Word.parse("AAbb")))
    assert CyclicWord(Word.parse("baB")) == CyclicWord(Word.parse("a"))


letters2 = st.lists(st.sampled_from([1, -1, 2, -2]), max_size=14)


@given(letters2)
def test_reduce_idempotent(raw):
    w = reduce(raw)
    assert reduce(w.letters) == w
    assert all(w.letters[i] != -w.letters[i + 1] for i in range(len(w) - 1))


@given(letters2, letters2)
def test_conjugacy_length_is_class_function(raw, conj):
    w = reduce(raw)
    if not w:
        return
    u = reduce(conj)
    assert conjugacy_length(u * w * u.inverse()) == conjugacy_length(w)


@given(letters2)
def test_conjugacy_length_bounded_by_length(raw):
    w = reduce(raw)
    if not w:
        return
    c = conjugacy_length(w)
    assert c <= len(w)
    assert (c == len(w)) == w.is_cyclically_reduced()


def test_parse_rejects_unknown_letters():
    with pytest.raises(ValueError):
        Word.parse("az", Basis(2))
    with pytest.raises(ValueError):
        Basis(0)


def test_random_words_round_trip():
    rng = random.Random(0)
    for _ in range(50):
        w = reduce([rng.choice([1, -1, 2, -2, 3, -3]) for _ in range(rng.randint(0, 12))])
        assert Word.parse(w.to_string(Basis(3)), Basis(3)) == w
