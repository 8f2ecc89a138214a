import pytest

from smallcancel import Alphabet, ValidationError
from smallcancel.words import (
    canonical_rotation,
    concat,
    cyclic_class,
    cyclic_reduce,
    free_reduce,
    inverse,
    is_cyclically_reduced,
    is_freely_reduced,
    power,
)


AB = Alphabet(["a", "b"])


def test_parse_and_print_roundtrip():
    w = AB.parse_word("a b^20 a b^-20")
    assert len(w) == 42
    assert AB.word_str(w) == "a b^20 a b^-20"
    assert AB.parse_word("abAB") == (1, 2, -1, -2)
    assert AB.parse_word("") == ()
    assert AB.word_str(()) == "1"


def test_parse_rejects_unknown():
    with pytest.raises(ValidationError):
        AB.parse_word("a c")
    with pytest.raises(ValidationError):
        Alphabet(["a", "a"])


def test_free_reduction():
    assert free_reduce((1, -1)) == ()
    assert free_reduce((1, 2, -2, -1, 1)) == (1,)
    assert is_freely_reduced((1, 2, 1))
    assert not is_freely_reduced((1, -1))


def test_cyclic_reduction():
    assert cyclic_reduce((1, 2, -1)) == (2,)
    assert is_cyclically_reduced((1, 2))
    assert not is_cyclically_reduced((1, 2, -1))


def test_inverse_and_power():
    w = (1, 2, -1)
    assert inverse(w) == (1, -2, -1)
    assert free_reduce(w + inverse(w)) == ()
    assert power((1, 2), 3) == (1, 2, 1, 2, 1, 2)
    assert power((1, 2), -1) == (-2, -1)
    assert concat((1, 2), (-2, 1)) == (1, 1)


def test_canonical_rotation_is_class_minimum():
    w = (2, 1, 2, 2)
    cls = cyclic_class(w)
    assert canonical_rotation(w) == min(cls)
    for u in cls:
        assert canonical_rotation(u) == canonical_rotation(w)
    assert len(cls) == 8  # 4 rotations of w and 4 of its inverse
