"""Alphabets, signed letters, and words in the free group.

A letter is a nonzero int: generator ``i`` (0-based) is ``i + 1``, its formal
inverse is ``-(i + 1)``.  A word is a tuple of letters.  This keeps words
hashable and cheap to slice, which the piece search and Dehn's algorithm
lean on heavily.
"""

from __future__ import annotations

import re
from typing import Iterable, Sequence

from .errors import ValidationError

Letter = int
WordTuple = tuple

# generator names may be plain identifiers but also labels like -1, 0, inf
_NAME_RE = re.compile(r"[A-Za-z0-9\-][A-Za-z0-9_\-~]*")


class Alphabet:
    """An ordered set of generator names with formal inverses.

    >>> ab = Alphabet(["a", "b"])
    >>> ab.parse_word("a b^-2")
    (1, -2, -2)
    >>> ab.word_str((1, -2, -2))
    'a b^-2'
    """

    def __init__(self, generators: Sequence[str]):
        gens = list(generators)
        if not gens:
            raise ValidationError("alphabet needs at least one generator")
        if len(set(gens)) != len(gens):
            raise ValidationError(f"duplicate generator names in {gens}")
        for g in gens:
            if not _NAME_RE.fullmatch(g):
                raise ValidationError(f"invalid generator name {g!r}")
        self.generators = tuple(gens)
        self._index = {g: i + 1 for i, g in enumerate(gens)}

    def __len__(self):
        return len(self.generators)

    def __eq__(self, other):
        return isinstance(other, Alphabet) and self.generators == other.generators

    def __hash__(self):
        return hash(self.generators)

    def __repr__(self):
        return f"Alphabet({list(self.generators)})"

    def letter(self, name: str, sign: int = 1) -> Letter:
        try:
            return sign * self._index[name]
        except KeyError:
            raise ValidationError(f"unknown generator {name!r}") from None

    def letters(self) -> list[Letter]:
        """All signed letters, positive ones first."""
        n = len(self.generators)
        return [i + 1 for i in range(n)] + [-(i + 1) for i in range(n)]

    def letter_name(self, letter: Letter) -> str:
        g = self.generators[abs(letter) - 1]
        return g if letter > 0 else g + "^-1"

    # -- parsing / printing ------------------------------------------------

    def parse_word(self, text: str) -> WordTuple:
        """Parse ``a b^-2 c`` style words; ``*`` also separates tokens.

        If every generator is a single lowercase letter, a compact form is
        accepted too: ``abA`` means ``a b a^-1``.
        """
        text = text.strip()
        if not text:
            return ()
        tokens = [t for t in re.split(r"[\s*]+", text) if t]
        compact_ok = all(len(g) == 1 and g.islower() for g in self.generators)
        out: list[Letter] = []
        for tok in tokens:
            m = re.fullmatch(r"(" + _NAME_RE.pattern + r")(?:\^(-?\d+))?", tok)
            if m and m.group(1) in self._index:
                exp = int(m.group(2)) if m.group(2) is not None else 1
                base = self._index[m.group(1)]
                if exp >= 0:
                    out.extend([base] * exp)
                else:
                    out.extend([-base] * (-exp))
            elif compact_ok and all(c.lower() in self._index for c in tok):
                for c in tok:
                    out.append(self._index[c.lower()] * (1 if c.islower() else -1))
            else:
                raise ValidationError(f"cannot parse word token {tok!r}")
        return tuple(out)

    def word_str(self, word: Iterable[Letter]) -> str:
        """Run-length printed form, e.g. ``a b^-2``."""
        word = tuple(word)
        if not word:
            return "1"
        parts = []
        i = 0
        while i < len(word):
            j = i
            while j < len(word) and word[j] == word[i]:
                j += 1
            name = self.generators[abs(word[i]) - 1]
            exp = (j - i) * (1 if word[i] > 0 else -1)
            parts.append(name if exp == 1 else f"{name}^{exp}")
            i = j
        return " ".join(parts)


def inverse(word: Iterable[Letter]) -> WordTuple:
    return tuple(-x for x in reversed(tuple(word)))


def free_reduce(word: Iterable[Letter]) -> WordTuple:
    out: list[Letter] = []
    for x in word:
        if x == 0:
            raise ValidationError("0 is not a letter")
        if out and out[-1] == -x:
            out.pop()
        else:
            out.append(x)
    return tuple(out)


def is_freely_reduced(word: Sequence[Letter]) -> bool:
    return all(word[i] != -word[i + 1] for i in range(len(word) - 1))


def is_cyclically_reduced(word: Sequence[Letter]) -> bool:
    if not is_freely_reduced(word):
        return False
    return len(word) < 2 or word[-1] != -word[0]


def cyclic_reduce(word: Iterable[Letter]) -> WordTuple:
    w = free_reduce(word)
    while len(w) >= 2 and w[0] == -w[-1]:
        w = w[1:-1]
    return w


def concat(*words: Iterable[Letter]) -> WordTuple:
    out: tuple = ()
    for w in words:
        out = out + tuple(w)
    return free_reduce(out)


def power(word: Iterable[Letter], n: int) -> WordTuple:
    w = tuple(word)
    if n < 0:
        w, n = inverse(w), -n
    return free_reduce(w * n)


def rotations(word: Sequence[Letter]):
    w = tuple(word)
    for i in range(len(w)):
        yield w[i:] + w[:i]


def cyclic_class(word: Sequence[Letter]) -> frozenset:
    """All rotations of the word and of its inverse."""
    out = set(rotations(word))
    out.update(rotations(inverse(word)))
    return frozenset(out)


def canonical_rotation(word: Sequence[Letter]) -> WordTuple:
    """Lexicographically least element of the rotation/inversion class.

    Used to store one representative per relator class; the full class is
    recovered with :func:`cyclic_class`.
    """
    cls = cyclic_class(word)
    return min(cls) if cls else ()


def abelianization(word: Iterable[Letter], n_generators: int) -> tuple:
    vec = [0] * n_generators
    for x in word:
        vec[abs(x) - 1] += 1 if x > 0 else -1
    return tuple(vec)
