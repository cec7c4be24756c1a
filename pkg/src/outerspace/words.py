"""Reduced words in a free basis.

Letters are stored as signed generator indices: ``+i`` is the i-th basis
letter (1-based) and ``-i`` its inverse.  In text, lowercase letters are
generators and uppercase letters their inverses, so ``"abAB"`` is the
commutator of ``a`` and ``b``.
"""

from dataclasses import dataclass
from typing import Iterator, Sequence

from ._validation import budget, check_positive_int
from .errors import BudgetExceeded, TrivialClass

ALPHABET = "abcdefghijklmnopqrstuvwxyz"
DEFAULT_ENUMERATION_CAP = 2_000_000


def letter_key(x: int) -> int:
    # ordering a < A < b < B < ...
    return 2 * (abs(x) - 1) + (1 if x < 0 else 0)


def free_reduce(letters: Sequence[int]) -> tuple:
    out = []
    for x in letters:
        if out and out[-1] == -x:
            out.pop()
        else:
            out.append(x)
    return tuple(out)


def cyclic_core(letters: Sequence[int]):
    """Split a reduced word as ``u c u^-1``; returns ``(u, c)``."""
    i, j = 0, len(letters) - 1
    while i < j and letters[i] == -letters[j]:
        i += 1
        j -= 1
    return tuple(letters[:i]), tuple(letters[i:j + 1])


def least_rotation(letters: Sequence[int]) -> tuple:
    n = len(letters)
    if n == 0:
        return ()
    keys = [letter_key(x) for x in letters]
    best = 0
    for k in range(1, n):
        if keys[k:] + keys[:k] < keys[best:] + keys[:best]:
            best = k
    return tuple(letters[best:]) + tuple(letters[:best])


@dataclass(frozen=True)
class Basis:
    rank: int
    names: str = ""

    def __post_init__(self):
        check_positive_int(self.rank, "rank", minimum=1)
        names = self.names or ALPHABET[: self.rank]
        if len(names) != self.rank:
            raise ValueError(f"need {self.rank} letter names, got {names!r}")
        if len(set(names.lower())) != self.rank or not names.islower():
            raise ValueError(f"letter names must be distinct lowercase letters: {names!r}")
        object.__setattr__(self, "names", names)

    def letter(self, x: int) -> str:
        c = self.names[abs(x) - 1]
        return c if x > 0 else c.upper()

    def index(self, c: str) -> int:
        i = self.names.find(c.lower())
        if i < 0:
            raise ValueError(f"letter {c!r} is not in basis {self.names!r}")
        return i + 1 if c.islower() else -(i + 1)

    def generators(self):
        return [Word((i,)) for i in range(1, self.rank + 1)]

    def __len__(self):
        return self.rank


def _parse_letters(text: str, basis=None) -> tuple:
    if basis is None:
        out = []
        for c in text:
            if c.isspace() or c in "·*.":
                continue
            i = ALPHABET.find(c.lower())
            if i < 0:
                raise ValueError(f"unexpected character {c!r} in word {text!r}")
            out.append(i + 1 if c.islower() else -(i + 1))
        return tuple(out)
    return tuple(basis.index(c) for c in text if not c.isspace() and c not in "·*.")


class Word:
    """A freely reduced word; construction reduces its input."""

    __slots__ = ("letters", "_hash")

    def __init__(self, letters=()):
        if isinstance(letters, str):
            letters = _parse_letters(letters)
        letters = tuple(letters)
        for x in letters:
            if not isinstance(x, int) or x == 0:
                raise ValueError(f"letters must be nonzero ints, got {x!r}")
        object.__setattr__(self, "letters", free_reduce(letters))
        object.__setattr__(self, "_hash", None)

    def __setattr__(self, name, value):
        raise AttributeError("Word is immutable")

    @classmethod
    def parse(cls, text: str, basis=None) -> "Word":
        return cls(_parse_letters(text, basis))

    def __len__(self):
        return len(self.letters)

    def __iter__(self):
        return iter(self.letters)

    def __bool__(self):
        return bool(self.letters)

    def __eq__(self, other):
        if isinstance(other, Word):
            return self.letters == other.letters
        if isinstance(other, str):
            return self.letters == Word(other).letters
        return NotImplemented

    def __hash__(self):
        if self._hash is None:
            object.__setattr__(self, "_hash", hash(("Word", self.letters)))
        return self._hash

    def __mul__(self, other):
        if isinstance(other, str):
            other = Word(other)
        return Word(self.letters + other.letters)

    def __pow__(self, n: int):
        if n < 0:
            return self.inverse() ** (-n)
        return Word(self.letters * n)

    def inverse(self) -> "Word":
        return Word(tuple(-x for x in reversed(self.letters)))

    def sort_key(self):
        return (len(self.letters), [letter_key(x) for x in self.letters])

    def __lt__(self, other):
        return self.sort_key() < other.sort_key()

    def max_index(self) -> int:
        return max((abs(x) for x in self.letters), default=0)

    def cyclic_reduction(self) -> "Word":
        return Word(cyclic_core(self.letters)[1])

    def is_cyclically_reduced(self) -> bool:
        return not self.letters or self.letters[0] != -self.letters[-1]

    def exponent_sums(self, rank: int) -> list:
        v = [0] * rank
        for x in self.letters:
            v[abs(x) - 1] += 1 if x > 0 else -1
        return v

    def to_string(self, basis=None) -> str:
        if basis is None:
            return "".join(ALPHABET[abs(x) - 1] if x > 0 else ALPHABET[abs(x) - 1].upper()
                           for x in self.letters)
        return "".join(basis.letter(x) for x in self.letters)

    def __str__(self):
        return self.to_string()

    def __repr__(self):
        return f"Word({self.to_string()!r})"


def reduce(raw) -> Word:
    """Freely reduce a letter sequence or a letter string."""
    return Word(raw)


def conjugacy_length(w) -> int:
    """Length of the cyclic reduction; the shortest length in the conjugacy class."""
    if not isinstance(w, Word):
        w = Word(w)
    if not w:
        raise TrivialClass("the trivial word has no conjugacy length")
    return len(cyclic_core(w.letters)[1])


class CyclicWord:
    """A conjugacy class, stored as the least rotation of a cyclically reduced word."""

    __slots__ = ("letters", "_hash")

    def __init__(self, w=()):
        if isinstance(w, CyclicWord):
            letters = w.letters
        else:
            if not isinstance(w, Word):
                w = Word(w)
            letters = least_rotation(cyclic_core(w.letters)[1])
        object.__setattr__(self, "letters", letters)
        object.__setattr__(self, "_hash", None)

    def __setattr__(self, name, value):
        raise AttributeError("CyclicWord is immutable")

    @classmethod
    def parse(cls, text: str, basis=None) -> "CyclicWord":
        return cls(Word.parse(text, basis))

    def __len__(self):
        return len(self.letters)

    def __bool__(self):
        return bool(self.letters)

    def __eq__(self, other):
        if isinstance(other, CyclicWord):
            return self.letters == other.letters
        if isinstance(other, str):
            return self.letters == CyclicWord(other).letters
        return NotImplemented

    def __hash__(self):
        if self._hash is None:
            object.__setattr__(self, "_hash", hash(("CyclicWord", self.letters)))
        return self._hash

    def word(self) -> Word:
        return Word(self.letters)

    def inverse(self) -> "CyclicWord":
        return CyclicWord(self.word().inverse())

    def unoriented(self) -> "CyclicWord":
        """Representative of the class up to inversion (the smaller of the two)."""
        inv = self.inverse()
        return inv if inv.sort_key() < self.sort_key() else self

    def sort_key(self):
        return (len(self.letters), [letter_key(x) for x in self.letters])

    def __lt__(self, other):
        return self.sort_key() < other.sort_key()

    def to_string(self, basis=None) -> str:
        return self.word().to_string(basis)

    def __str__(self):
        return self.to_string()

    def __repr__(self):
        return f"CyclicWord({self.to_string()!r})"


def enumerate_cyclic_words(basis, max_len: int, cap: int = None) -> Iterator[CyclicWord]:
    """Yield every cyclic word of length 1..max_len exactly once, shortest first.

    Within a length the order is lexicographic in the a < A < b < B ordering.
    ``cap`` bounds the number of classes produced; exceeding it raises
    BudgetExceeded.  ``max_len == 0`` produces nothing.
    """
    rank = basis.rank if isinstance(basis, Basis) else int(basis)
    if max_len < 0:
        raise ValueError("max_len must be >= 0")
    cap = budget(cap, DEFAULT_ENUMERATION_CAP)
    alphabet = sorted([i for i in range(1, rank + 1)] + [-i for i in range(1, rank + 1)],
                      key=letter_key)
    count = 0
    for n in range(1, max_len + 1):
        word = []

        def extend(depth):
            nonlocal count
            if depth == n:
                if n > 1 and word[0] == -word[-1]:
                    return
                t = tuple(word)
                if least_rotation(t) == t:
                    count += 1
                    if count > cap:
                        raise BudgetExceeded(f"more than {cap} cyclic words requested")
                    yield t
                return
            for x in alphabet:
                if word and word[-1] == -x:
                    continue
                # a least rotation never starts with a letter larger than a later one
                if depth > 0 and letter_key(x) < letter_key(word[0]):
                    continue
                word.append(x)
                yield from extend(depth + 1)
                word.pop()

        for t in extend(0):
            yield CyclicWord(Word(t))
