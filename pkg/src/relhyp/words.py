"""Group elements as words, normal forms, and peripheral subgroups.

Letters are integers: generator ``i`` is letter ``2*i`` and its formal inverse
is ``2*i + 1``, so inversion is ``letter ^ 1``.  A word is a tuple of letters
and the empty tuple is the identity.  Letter order (hence shortlex order) is
``a < a' < b < b' < ...``.
"""

from __future__ import annotations

import numbers
import re
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Iterable, Sequence

from .errors import InputError, ResourceError

Word = tuple

IDENTITY_STR = "1"


def shortlex_key(w: Word):
    return (len(w), w)


def free_reduce(w: Iterable[int]) -> Word:
    out: list[int] = []
    for x in w:
        if out and out[-1] == x ^ 1:
            out.pop()
        else:
            out.append(x)
    return tuple(out)


def formal_inverse(w: Sequence[int]) -> Word:
    return tuple(x ^ 1 for x in reversed(w))


@dataclass(frozen=True)
class Alphabet:
    symbols: tuple[str, ...]

    def __post_init__(self):
        if len(set(self.symbols)) != len(self.symbols):
            raise InputError(f"duplicate generator names in {self.symbols}")
        for s in self.symbols:
            if not re.fullmatch(r"[A-Za-z]", s):
                raise InputError(f"generator name {s!r} must be a single letter")

    @property
    def size(self) -> int:
        return 2 * len(self.symbols)

    @staticmethod
    def inverse(letter: int) -> int:
        return letter ^ 1

    def letter(self, name: str, inverse: bool = False) -> int:
        try:
            i = self.symbols.index(name)
        except ValueError:
            raise InputError(f"unknown generator {name!r}") from None
        return 2 * i + (1 if inverse else 0)

    def validate(self, w: Iterable[int]) -> Word:
        w = tuple(w)
        n = self.size
        for x in w:
            if isinstance(x, bool) or not isinstance(x, numbers.Integral) or not 0 <= x < n:
                raise InputError(f"invalid letter index {x!r} for alphabet {self.symbols}")
        return tuple(int(x) for x in w)

    def format(self, w: Sequence[int]) -> str:
        if not w:
            return IDENTITY_STR
        return "".join(self.symbols[x >> 1] + ("'" if x & 1 else "") for x in w)

    def parse(self, text: str) -> Word:
        """Parse ``aba'b'``, ``[a,b]``, ``(ab)^3``, ``a^-2`` or ``1``."""
        return _WordParser(self, text).parse()


class _WordParser:
    def __init__(self, alphabet: Alphabet, text: str):
        self.alphabet = alphabet
        self.text = text.replace(" ", "")
        self.pos = 0

    def error(self, msg):
        return InputError(f"cannot parse word {self.text!r} at position {self.pos}: {msg}")

    def peek(self):
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def parse(self) -> Word:
        if self.text in ("", IDENTITY_STR):
            return ()
        w = self.product(stop="")
        if self.pos != len(self.text):
            raise self.error("unexpected character")
        return w

    def product(self, stop) -> Word:
        out: list[int] = []
        while self.peek() and self.peek() not in stop:
            out.extend(self.factor())
        return tuple(out)

    def factor(self) -> Word:
        c = self.peek()
        if c == "(":
            self.pos += 1
            w = self.product(stop=")")
            if self.peek() != ")":
                raise self.error("missing ')'")
            self.pos += 1
        elif c == "[":
            self.pos += 1
            u = self.product(stop=",")
            if self.peek() != ",":
                raise self.error("missing ',' in commutator")
            self.pos += 1
            v = self.product(stop="]")
            if self.peek() != "]":
                raise self.error("missing ']'")
            self.pos += 1
            w = u + v + formal_inverse(u) + formal_inverse(v)
        elif c.isalpha():
            self.pos += 1
            w = (self.alphabet.letter(c),)
        elif c == IDENTITY_STR:
            self.pos += 1
            w = ()
        else:
            raise self.error(f"unexpected {c!r}")
        while self.peek() == "'":
            self.pos += 1
            w = formal_inverse(w)
        if self.peek() == "^":
            self.pos += 1
            m = re.match(r"-?\d+", self.text[self.pos:])
            if not m:
                raise self.error("exponent expected after '^'")
            self.pos += m.end()
            k = int(m.group())
            w = (w if k >= 0 else formal_inverse(w)) * abs(k)
        return w


def default_symbols(n: int, offset: int = 0) -> tuple[str, ...]:
    if offset + n > 26:
        raise InputError("at most 26 generators are supported")
    return tuple(chr(ord("a") + offset + i) for i in range(n))


@dataclass(frozen=True)
class Family:
    kind: str  # free | free_abelian | surface | direct | free_product
    rank: int = 0
    factors: tuple["GroupOracle", ...] = ()

    def describe(self) -> str:
        if self.kind in ("direct", "free_product"):
            return f"{self.kind}({','.join(f.family.describe() for f in self.factors)})"
        return f"{self.kind}({self.rank})"


@dataclass(frozen=True, eq=False)
class GroupOracle:
    """A generating alphabet plus an exact normal-form procedure.

    Every normal form returned is the shortlex-least geodesic word for its
    element, so ``len(normalize(w))`` is the word length.
    """

    alphabet: Alphabet
    family: Family
    normalizer: Callable[[Word], Word] = field(repr=False)

    def normalize(self, w: Iterable[int]) -> Word:
        return self.normalizer(self.alphabet.validate(w))

    def multiply(self, u, v) -> Word:
        return self.normalize(tuple(u) + tuple(v))

    def invert(self, w) -> Word:
        return self.normalize(formal_inverse(self.alphabet.validate(w)))

    def length(self, w) -> int:
        return len(self.normalize(w))

    def parse(self, text: str) -> Word:
        return self.alphabet.parse(text)

    def format(self, w) -> str:
        return self.alphabet.format(w)

    @property
    def letters(self) -> range:
        return range(self.alphabet.size)

    def describe(self) -> str:
        return self.family.describe()

    def __eq__(self, other):
        return isinstance(other, GroupOracle) and self.describe() == other.describe()

    def __hash__(self):
        return hash(self.describe())


def normalize(oracle: GroupOracle, w) -> Word:
    return oracle.normalize(w)


def multiply(oracle: GroupOracle, u, v) -> Word:
    return oracle.multiply(u, v)


def invert(oracle: GroupOracle, w) -> Word:
    return oracle.invert(w)


# --- families -------------------------------------------------------------


def free_group(n: int, symbols=None) -> GroupOracle:
    if n < 1:
        raise InputError("free group rank must be >= 1")
    alphabet = Alphabet(tuple(symbols) if symbols else default_symbols(n))
    return GroupOracle(alphabet, Family("free", n), free_reduce)


def _abelian_normalizer(n: int):
    def normalizer(w: Word) -> Word:
        exps = [0] * n
        for x in w:
            exps[x >> 1] += -1 if x & 1 else 1
        out: list[int] = []
        for i, e in enumerate(exps):
            out.extend([2 * i + (e < 0)] * abs(e))
        return tuple(out)

    return normalizer


def free_abelian(n: int, symbols=None) -> GroupOracle:
    if n < 1:
        raise InputError("free abelian rank must be >= 1")
    alphabet = Alphabet(tuple(symbols) if symbols else default_symbols(n))
    return GroupOracle(alphabet, Family("free_abelian", n), _abelian_normalizer(n))


def surface_relator(genus: int) -> Word:
    """``[a,b][c,d]...`` over generators a, b, c, d, ..."""
    rel: list[int] = []
    for j in range(genus):
        x, y = 4 * j, 4 * j + 2
        rel += [x, y, x ^ 1, y ^ 1]
    return tuple(rel)


# Size of the equal-length rewrite class explored per word.  Words up to a few
# dozen letters stay far below this.
SURFACE_CLASS_CAP = 200_000


class SurfaceDehn:
    """Dehn's algorithm plus half-relator moves for the closed surface group.

    ``dehn`` removes any subword that is more than half of a cyclic conjugate
    of the relator or its inverse.  ``geodesic`` then explores all words
    reachable by swapping exact half-relators (equal length), restarting from
    any shorter word produced, and returns the shortlex-least word of the
    final class.
    """

    def __init__(self, genus: int):
        if genus < 2:
            raise InputError("surface group genus must be >= 2")
        self.genus = genus
        rel = surface_relator(genus)
        n = len(rel)
        self.relator = rel
        conjugates = []
        for r in (rel, formal_inverse(rel)):
            for i in range(n):
                conjugates.append(r[i:] + r[:i])
        half = n // 2
        # long[L][subword] -> shorter replacement, for half < L <= n
        self.long: dict[int, dict[Word, Word]] = {L: {} for L in range(half + 1, n + 1)}
        self.half: dict[Word, list[Word]] = {}
        for r in conjugates:
            for L in range(half + 1, n + 1):
                self.long[L].setdefault(r[:L], formal_inverse(r[L:]))
            rep = formal_inverse(r[half:])
            swaps = self.half.setdefault(r[:half], [])
            if rep not in swaps:
                swaps.append(rep)
        self.half_len = half
        self._cache: dict[Word, Word] = {}

    def dehn(self, w: Sequence[int]) -> Word:
        w = free_reduce(w)
        n = len(self.relator)
        changed = True
        while changed:
            changed = False
            for i in range(len(w)):
                for L in range(min(n, len(w) - i), self.half_len, -1):
                    rep = self.long[L].get(w[i:i + L])
                    if rep is not None:
                        w = free_reduce(w[:i] + rep + w[i + L:])
                        changed = True
                        break
                if changed:
                    break
        return w

    def _half_moves(self, w: Word):
        h = self.half_len
        for i in range(len(w) - h + 1):
            for rep in self.half.get(w[i:i + h], ()):
                yield self.dehn(w[:i] + rep + w[i + h:])

    def geodesic(self, w: Sequence[int]) -> Word:
        w = tuple(w)
        hit = self._cache.get(w)
        if hit is not None:
            return hit
        start = self.dehn(w)
        while True:
            seen = {start}
            frontier = [start]
            shorter = None
            while frontier and shorter is None:
                nxt = []
                for u in frontier:
                    for v in self._half_moves(u):
                        if len(v) < len(start):
                            shorter = v
                            break
                        if v not in seen:
                            seen.add(v)
                            nxt.append(v)
                            if len(seen) > SURFACE_CLASS_CAP:
                                raise ResourceError(
                                    f"surface normal form class exceeds {SURFACE_CLASS_CAP} words",
                                    cap=SURFACE_CLASS_CAP,
                                )
                    if shorter is not None:
                        break
                frontier = nxt
            if shorter is None:
                break
            start = shorter
        result = min(seen)
        if len(self._cache) < 500_000:
            self._cache[w] = result
        return result


@lru_cache(maxsize=None)
def _surface_solver(genus: int) -> SurfaceDehn:
    return SurfaceDehn(genus)


def dehn_reduce(genus: int, w: Sequence[int]) -> Word:
    """Geodesic shortlex normal form in the genus-``genus`` surface group.

    Never longer than ``w``; empty exactly when ``w`` is trivial.
    """
    return _surface_solver(genus).geodesic(tuple(w))


def surface_group(genus: int, symbols=None) -> GroupOracle:
    solver = _surface_solver(genus)
    alphabet = Alphabet(tuple(symbols) if symbols else default_symbols(2 * genus))
    return GroupOracle(alphabet, Family("surface", genus), solver.geodesic)


def _embed(factors: Sequence[GroupOracle]):
    offsets, total = [], 0
    for f in factors:
        offsets.append(total)
        total += f.alphabet.size
    owner = []
    for i, f in enumerate(factors):
        owner += [i] * f.alphabet.size
    return offsets, owner, total


def direct_product(*factors: GroupOracle) -> GroupOracle:
    if len(factors) < 2:
        raise InputError("a direct product needs at least two factors")
    offsets, owner, total = _embed(factors)
    alphabet = Alphabet(default_symbols(total // 2))

    def normalizer(w: Word) -> Word:
        parts: list[list[int]] = [[] for _ in factors]
        for x in w:
            i = owner[x]
            parts[i].append(x - offsets[i])
        out: list[int] = []
        for i, f in enumerate(factors):
            out.extend(y + offsets[i] for y in f.normalizer(tuple(parts[i])))
        return tuple(out)

    return GroupOracle(alphabet, Family("direct", factors=tuple(factors)), normalizer)


def free_product(*factors: GroupOracle) -> GroupOracle:
    if len(factors) < 2:
        raise InputError("a free product needs at least two factors")
    offsets, owner, total = _embed(factors)
    alphabet = Alphabet(default_symbols(total // 2))

    def normalizer(w: Word) -> Word:
        while True:
            runs: list[tuple[int, list[int]]] = []
            for x in w:
                i = owner[x]
                if runs and runs[-1][0] == i:
                    runs[-1][1].append(x - offsets[i])
                else:
                    runs.append((i, [x - offsets[i]]))
            out: list[int] = []
            for i, letters in runs:
                out.extend(y + offsets[i] for y in factors[i].normalizer(tuple(letters)))
            out_t = tuple(out)
            if out_t == w:
                return out_t
            w = out_t

    return GroupOracle(alphabet, Family("free_product", factors=tuple(factors)), normalizer)


_FAMILY_RE = re.compile(r"\s*(free_abelian|free_product|free|surface|direct)\s*\(")


def oracle_from_spec(text: str) -> GroupOracle:
    """Build an oracle from e.g. ``free(2)``, ``surface(2)``, ``direct(free(1),free_abelian(1))``."""
    oracle, rest = _parse_family(text)
    if rest.strip():
        raise InputError(f"trailing text in group spec {text!r}")
    return oracle


def _parse_family(text: str):
    m = _FAMILY_RE.match(text)
    if not m:
        raise InputError(f"unknown group family in {text!r}")
    kind, rest = m.group(1), text[m.end():]
    if kind in ("direct", "free_product"):
        factors = []
        while True:
            f, rest = _parse_family(rest)
            factors.append(f)
            rest = rest.lstrip()
            if rest.startswith(","):
                rest = rest[1:]
                continue
            if rest.startswith(")"):
                rest = rest[1:]
                break
            raise InputError(f"malformed factor list in {text!r}")
        build = direct_product if kind == "direct" else free_product
        return build(*factors), rest
    m = re.match(r"\s*(\d+)\s*\)", rest)
    if not m:
        raise InputError(f"{kind} expects an integer parameter in {text!r}")
    n = int(m.group(1))
    build = {"free": free_group, "free_abelian": free_abelian, "surface": surface_group}[kind]
    return build(n), rest[m.end():]


# --- peripheral subgroups -------------------------------------------------


@dataclass(frozen=True)
class PeripheralSpec:
    """A peripheral subgroup P <= G, known through membership and coset keys.

    ``kind`` is ``cyclic`` (P = <w>), ``factor`` (a direct or free factor)
    or ``whole`` (P = G).
    """

    label: str
    oracle: GroupOracle = field(repr=False)
    kind: str
    generators: tuple[Word, ...]
    factor_index: int | None = None

    def contains(self, w) -> bool:
        return self.coset_key(w) == ()

    def coset_key(self, w) -> Word:
        g = self.oracle.normalize(w)
        if self.kind == "whole":
            return ()
        if self.kind == "factor":
            return self._factor_key(g)
        return self._cyclic_key(g)

    def _cyclic_key(self, g: Word) -> Word:
        gen = self.generators[0]
        if not gen:
            return g
        norm = self.oracle.normalizer
        inv = formal_inverse(gen)
        best = g
        pos = neg = g
        ppow = npow = ()
        limit = 2 * len(g) + len(gen)
        k = 0
        while True:
            k += 1
            ppow, npow = norm(ppow + gen), norm(npow + inv)
            pos, neg = norm(pos + gen), norm(neg + inv)
            for cand in (pos, neg):
                if shortlex_key(cand) < shortlex_key(best):
                    best = cand
            if min(len(ppow), len(npow)) > limit or k > 4 * len(g) + 8:
                return best

    def _factor_key(self, g: Word) -> Word:
        fam = self.oracle.family
        offsets, owner, _ = _embed(fam.factors)
        i = self.factor_index
        if fam.kind == "direct":
            return tuple(x for x in g if owner[x] != i)
        # free product: strip a trailing syllable from factor i
        j = len(g)
        while j > 0 and owner[g[j - 1]] == i:
            j -= 1
        return g[:j]


def cyclic_peripheral(oracle: GroupOracle, word, label: str) -> PeripheralSpec:
    w = oracle.normalize(word)
    return PeripheralSpec(label, oracle, "cyclic", (w,))


def factor_peripheral(oracle: GroupOracle, index: int, label: str) -> PeripheralSpec:
    fam = oracle.family
    if fam.kind not in ("direct", "free_product"):
        raise InputError(f"factor peripheral needs a direct or free product, got {fam.describe()}")
    if not 0 <= index < len(fam.factors):
        raise InputError(f"factor index {index} out of range")
    offsets, _, _ = _embed(fam.factors)
    gens = tuple((offsets[index] + 2 * j,) for j in range(len(fam.factors[index].alphabet.symbols)))
    return PeripheralSpec(label, oracle, "factor", gens, index)


def whole_peripheral(oracle: GroupOracle, label: str) -> PeripheralSpec:
    gens = tuple((2 * j,) for j in range(len(oracle.alphabet.symbols)))
    return PeripheralSpec(label, oracle, "whole", gens)


def coset_key_of(p: PeripheralSpec, w) -> Word:
    return p.coset_key(w)


@dataclass(frozen=True)
class PeripheralFamily:
    representatives: tuple[PeripheralSpec, ...] = ()

    def __post_init__(self):
        labels = [p.label for p in self.representatives]
        if len(set(labels)) != len(labels):
            raise InputError(f"peripheral labels must be distinct: {labels}")
        oracles = {p.oracle for p in self.representatives}
        if len(oracles) > 1:
            raise InputError("all peripherals must live in the same group")

    def __iter__(self):
        return iter(self.representatives)

    def __len__(self):
        return len(self.representatives)

    def __bool__(self):
        return bool(self.representatives)
