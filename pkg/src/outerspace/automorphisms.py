"""Automorphisms of a free group given by the images of the basis.

Every Automorphism is checked at construction by computing its inverse with
tagged Stallings folding; a family of images that does not fold to a rose on
``r`` distinct letters is rejected.
"""

from __future__ import annotations

import re
from typing import Dict, Optional, Sequence

from ._validation import budget
from .errors import NotAnAutomorphism, SearchBudgetExceeded
from .stallings import FoldConflict, LabeledGraph
from .words import Basis, CyclicWord, Word, cyclic_core


def _as_basis(b) -> Basis:
    return b if isinstance(b, Basis) else Basis(int(b))


def _substitute(images: Sequence[Word], w: Word) -> Word:
    out = []
    for x in w.letters:
        img = images[abs(x) - 1].letters
        if x > 0:
            out.extend(img)
        else:
            out.extend(-y for y in reversed(img))
    return Word(out)


def _fold_inverse(images: Sequence[Word], rank: int):
    g = LabeledGraph()
    for i, img in enumerate(images):
        if not img:
            raise NotAnAutomorphism(f"image of generator {i + 1} is trivial")
        g.add_loop(img.letters, first_tag=Word((i + 1,)))
    try:
        g.fold(tagged=True)
    except FoldConflict as exc:
        raise NotAnAutomorphism(f"images satisfy a relation: {exc}") from None
    g.prune(keep_base=True)
    if len(g.vertices) != 1 or len(g.edges) != rank:
        raise NotAnAutomorphism(
            f"images fold to a graph with {len(g.vertices)} vertices and {len(g.edges)} edges"
        )
    inv: list = [None] * rank
    for u, x, v, t in g.edges.values():
        j = abs(x) - 1
        if j >= rank or inv[j] is not None:
            raise NotAnAutomorphism("images do not generate the free group")
        inv[j] = t if x > 0 else t.inverse()
    return inv


class Automorphism:
    __slots__ = ("basis", "images", "_inverse", "_hash")

    def __init__(self, images, basis=None, *, _checked=False):
        if isinstance(images, dict):
            if basis is None:
                basis = Basis(len(images))
            basis = _as_basis(basis)
            imgs = []
            for name in basis.names:
                if name not in images:
                    raise ValueError(f"missing image for generator {name!r}")
                imgs.append(images[name])
            images = imgs
        imgs = tuple(w if isinstance(w, Word) else Word.parse(w, basis if isinstance(basis, Basis) else None)
                     for w in images)
        if basis is None:
            basis = Basis(len(imgs))
        basis = _as_basis(basis)
        if len(imgs) != basis.rank:
            raise ValueError(f"expected {basis.rank} images, got {len(imgs)}")
        for w in imgs:
            if w.max_index() > basis.rank:
                raise ValueError(f"image {w} uses letters outside the basis")
        object.__setattr__(self, "basis", basis)
        object.__setattr__(self, "images", imgs)
        object.__setattr__(self, "_hash", None)
        object.__setattr__(self, "_inverse", None)
        if not _checked:
            inv = _fold_inverse(imgs, basis.rank)
            object.__setattr__(self, "_inverse", tuple(inv))

    def __setattr__(self, name, value):
        raise AttributeError("Automorphism is immutable")

    @classmethod
    def identity(cls, basis) -> "Automorphism":
        basis = _as_basis(basis)
        return cls(basis.generators(), basis, _checked=True)._with_inverse(basis.generators())

    @classmethod
    def inner(cls, w, basis) -> "Automorphism":
        """The inner automorphism x -> w x w^-1."""
        basis = _as_basis(basis)
        w = w if isinstance(w, Word) else Word(w)
        winv = w.inverse()
        imgs = [w * g * winv for g in basis.generators()]
        inv = [winv * g * w for g in basis.generators()]
        return cls(imgs, basis, _checked=True)._with_inverse(inv)

    def _with_inverse(self, inv):
        object.__setattr__(self, "_inverse", tuple(inv))
        return self

    @property
    def rank(self) -> int:
        return self.basis.rank

    def __call__(self, w):
        return self.apply(w)

    def apply(self, w) -> Word:
        if isinstance(w, str):
            w = Word.parse(w, self.basis)
        return _substitute(self.images, w)

    def compose(self, other: "Automorphism") -> "Automorphism":
        """(self . other)(x) = self(other(x))."""
        self._check_same(other)
        imgs = [_substitute(self.images, w) for w in other.images]
        result = Automorphism(imgs, self.basis, _checked=True)
        if self._inverse is not None and other._inverse is not None:
            inv = [_substitute(other._inverse, w) for w in self._inverse]
            result._with_inverse(inv)
        return result

    __mul__ = compose

    def __pow__(self, n: int) -> "Automorphism":
        base = self if n >= 0 else self.invert()
        result = Automorphism.identity(self.basis)
        for _ in range(abs(n)):
            result = result.compose(base)
        return result

    def invert(self) -> "Automorphism":
        inv = self._inverse
        if inv is None:
            inv = _fold_inverse(self.images, self.rank)
            object.__setattr__(self, "_inverse", tuple(inv))
        return Automorphism(inv, self.basis, _checked=True)._with_inverse(self.images)

    def is_identity(self) -> bool:
        return all(w.letters == (i + 1,) for i, w in enumerate(self.images))

    def _check_same(self, other):
        if self.basis.rank != other.basis.rank:
            raise ValueError("automorphisms over different bases")

    def __eq__(self, other):
        if not isinstance(other, Automorphism):
            return NotImplemented
        return self.basis.rank == other.basis.rank and self.images == other.images

    def __hash__(self):
        if self._hash is None:
            object.__setattr__(self, "_hash", hash(("Aut", self.images)))
        return self._hash

    def max_image_length(self) -> int:
        return max(len(w) for w in self.images)

    def to_dict(self) -> Dict[str, str]:
        return {name: self.images[i].to_string(self.basis) for i, name in enumerate(self.basis.names)}

    def to_text(self) -> str:
        lines = []
        for i, name in enumerate(self.basis.names):
            img = self.images[i].to_string(self.basis)
            lines.append(f"{name} -> {' '.join(img)}".rstrip())
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str, basis=None) -> "Automorphism":
        images = {}
        for raw in text.splitlines():
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            m = re.fullmatch(r"([a-z])\s*->\s*(.*)", line)
            if not m:
                raise ValueError(f"cannot parse automorphism line {raw!r}")
            if m.group(1) in images:
                raise ValueError(f"generator {m.group(1)!r} given twice")
            images[m.group(1)] = "".join(m.group(2).split())
        if basis is None:
            names = "".join(sorted(images))
            basis = Basis(len(names), names)
        basis = _as_basis(basis)
        return cls({k: Word.parse(v, basis) for k, v in images.items()}, basis)

    def __str__(self):
        return "(" + ", ".join(f"{n}↦{self.images[i].to_string(self.basis) or '1'}"
                               for i, n in enumerate(self.basis.names)) + ")"

    def __repr__(self):
        return f"Automorphism({self.to_dict()!r})"


def apply(phi: Automorphism, w) -> Word:
    return phi.apply(w)


def compose(phi: Automorphism, psi: Automorphism) -> Automorphism:
    return phi.compose(psi)


def invert(phi: Automorphism) -> Automorphism:
    return phi.invert()


def inner(w, basis) -> Automorphism:
    return Automorphism.inner(w, basis)


def abelianize(phi: Automorphism):
    """Integer matrix whose column j is the exponent-sum vector of phi(x_j)."""
    r = phi.rank
    cols = [w.exponent_sums(r) for w in phi.images]
    return [[cols[j][i] for j in range(r)] for i in range(r)]


def determinant(m) -> int:
    n = len(m)
    if n == 1:
        return m[0][0]
    total = 0
    for j in range(n):
        minor = [row[:j] + row[j + 1:] for row in m[1:]]
        total += (-1) ** j * m[0][j] * determinant(minor)
    return total


def matmul(a, b):
    return [[sum(a[i][k] * b[k][j] for k in range(len(b))) for j in range(len(b[0]))]
            for i in range(len(a))]


def root(letters) -> tuple:
    """Shortest u with letters = u^k."""
    n = len(letters)
    for d in range(1, n + 1):
        if n % d == 0 and tuple(letters[:d]) * (n // d) == tuple(letters):
            return tuple(letters[:d])
    return tuple(letters)


def _conjugators(u: Word, v: Word):
    """All z with z u z^-1 = v, as (z0, p, rc): z = z0 (p rc^k p^-1), rc cyclically reduced."""
    p, c = cyclic_core(u.letters)
    q, d = cyclic_core(v.letters)
    if len(c) != len(d) or not c:
        return None
    n = len(c)
    for i in range(n):
        if c[i:] + c[:i] == d:
            z = Word(c[:i]).inverse()
            break
    else:
        return None
    w0 = Word(q) * z * Word(p).inverse()
    return w0, Word(p), Word(root(c))


def _grows_forever(rc: Word, s: Word) -> bool:
    # rc s rc^-1 is reduced as written; then every further conjugation is too
    if not s:
        return False
    r = rc.letters
    return r[-1] != -s.letters[0] and s.letters[-1] != r[-1]


def _scan_direction(w0, p, rc, checks, cap):
    """Try w = w0 p rc^k p^-1 for k = 0, 1, 2, ... until every check provably keeps failing."""
    pinv = p.inverse()
    # w y w^-1 = t  <=>  rc^k y' rc^-k = T  with y' = p^-1 y p and T = p^-1 w0^-1 t w0 p
    reduced = [(pinv * y * p, pinv * w0.inverse() * t * w0 * p) for y, t in checks]
    current = [y for y, _ in reduced]
    k = 0
    while True:
        if all(s == T for s, (_, T) in zip(current, reduced)):
            return w0 * p * Word(rc.letters * k) * pinv
        if all(_grows_forever(rc, s) and len(s) > len(T) for s, (_, T) in zip(current, reduced)):
            return None
        k += 1
        if k * len(rc) > cap:
            raise SearchBudgetExceeded(f"conjugator search exceeded length {cap}")
        current = [rc * s * rc.inverse() for s in current]


def out_equal(phi: Automorphism, psi: Automorphism, cap: Optional[int] = None):
    """Decide whether phi and psi agree in Out.

    Returns ``(True, w)`` with psi(x) = w phi(x) w^-1 for every generator x,
    or ``(False, None)``.  The candidates for w are forced by the first
    generator up to its centralizer; the centralizer is scanned in both
    directions until the remaining generators certifiably stop matching.
    """
    phi._check_same(psi)
    if phi.images == psi.images:
        return True, Word()
    if abelianize(phi) != abelianize(psi):
        return False, None
    for u, v in zip(phi.images, psi.images):
        if CyclicWord(u) != CyclicWord(v):
            return False, None
    longest = max(phi.max_image_length(), psi.max_image_length())
    cap = budget(cap, 2 * longest + 2)
    sol = _conjugators(phi.images[0], psi.images[0])
    if sol is None:
        return False, None
    w0, p, rc = sol
    rho = p * rc * p.inverse()
    moving = []
    for y, t in zip(phi.images[1:], psi.images[1:]):
        if rho * y * rho.inverse() == y:
            # commutes with the centralizer: the same test for every k
            if w0 * y * w0.inverse() != t:
                return False, None
        else:
            moving.append((y, t))
    if not moving:
        return True, w0
    for direction in (rc, rc.inverse()):
        found = _scan_direction(w0, p, direction, moving, cap)
        if found is not None:
            return True, found
    return False, None


class OutElement:
    """An outer class, compared through out_equal."""

    __slots__ = ("representative", "_key")

    def __init__(self, representative: Automorphism):
        object.__setattr__(self, "representative", representative)
        object.__setattr__(self, "_key", invariant_key(representative))

    def __setattr__(self, name, value):
        raise AttributeError("OutElement is immutable")

    def __eq__(self, other):
        if not isinstance(other, OutElement):
            return NotImplemented
        return self._key == other._key and out_equal(self.representative, other.representative)[0]

    def __hash__(self):
        return hash(self._key)

    def __mul__(self, other):
        return OutElement(self.representative.compose(other.representative))

    def inverse(self):
        return OutElement(self.representative.invert())


def invariant_key(phi: Automorphism):
    """A hash key constant on outer classes: abelianization plus image conjugacy classes."""
    ab = tuple(tuple(row) for row in abelianize(phi))
    return ab, tuple(CyclicWord(w).letters for w in phi.images)
