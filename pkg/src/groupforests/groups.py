"""Finitely generated groups, their words, and finite quotient actions.

Three families are supported: free abelian groups Z^d, free groups F_k, and
the discrete Heisenberg group (upper unitriangular 3x3 integer matrices).
Each family carries a normal form for its elements, so words multiply and
compare cheaply.  A finite quotient is stored as one permutation of the coset
set per generator letter (right translation); quotients of the free-abelian
and Heisenberg families are generated from moduli, while free-group quotients
are arbitrary transitive permutation actions supplied by the caller.

Generator letters are signed integers: +i is the i-th generator, -i its
inverse.  The text rendering uses 'a', 'b', ... for generators and
'A', 'B', ... for inverses, with 'e' for the identity.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np

from .errors import FamilyMismatchError, GroupForestsError

_FAMILY_KINDS = ("free-abelian", "free", "heisenberg")


@dataclass(frozen=True)
class GroupFamily:
    """A group presentation family together with its generator count.

    kind: one of "free-abelian", "free", "heisenberg".
    rank: number of generators (d for Z^d, k for F_k, always 2 for Heisenberg).
    """

    kind: str
    rank: int

    def __post_init__(self):
        if self.kind not in _FAMILY_KINDS:
            raise ValueError(f"unknown family kind {self.kind!r}")
        if self.rank < 1:
            raise ValueError("rank must be a positive integer")
        if self.kind == "heisenberg" and self.rank != 2:
            raise ValueError("the Heisenberg family has exactly 2 generators")

    @classmethod
    def free_abelian(cls, d: int) -> "GroupFamily":
        return cls("free-abelian", d)

    @classmethod
    def free(cls, k: int) -> "GroupFamily":
        return cls("free", k)

    @classmethod
    def heisenberg(cls) -> "GroupFamily":
        return cls("heisenberg", 2)

    @property
    def letters(self) -> tuple[int, ...]:
        """All generator letters, positive then negative."""
        pos = tuple(range(1, self.rank + 1))
        return pos + tuple(-i for i in pos)

    def inverse_letter(self, letter: int) -> int:
        """The letter of the inverse generator.

        Every generator's inverse partner is its formal inverse; no generator
        of these families is an involution.
        """
        self._check_letter(letter)
        return -letter

    def _check_letter(self, letter: int):
        if not isinstance(letter, int) or letter == 0 or abs(letter) > self.rank:
            raise ValueError(f"letter {letter!r} out of range for rank {self.rank}")

    # ----- normal forms -------------------------------------------------

    def identity_normal(self):
        if self.kind == "free-abelian":
            return (0,) * self.rank
        if self.kind == "free":
            return ()
        return (0, 0, 0)

    def normal_of_letters(self, letters) -> tuple:
        nf = self.identity_normal()
        for l in letters:
            self._check_letter(l)
            nf = self.multiply_normals(nf, self._letter_normal(l))
        return nf

    def _letter_normal(self, letter: int):
        if self.kind == "free-abelian":
            v = [0] * self.rank
            v[abs(letter) - 1] = 1 if letter > 0 else -1
            return tuple(v)
        if self.kind == "free":
            return (letter,)
        if letter == 1:
            return (1, 0, 0)
        if letter == -1:
            return (-1, 0, 0)
        if letter == 2:
            return (0, 1, 0)
        return (0, -1, 0)

    def multiply_normals(self, a: tuple, b: tuple) -> tuple:
        if self.kind == "free-abelian":
            return tuple(x + y for x, y in zip(a, b))
        if self.kind == "free":
            # concatenate with cancellation at the seam
            a = list(a)
            i = 0
            while a and i < len(b) and a[-1] == -b[i]:
                a.pop()
                i += 1
            return tuple(a) + tuple(b[i:])
        x, y, z = a
        u, v, w = b
        return (x + u, y + v, z + w + x * v)

    def invert_normal(self, a: tuple) -> tuple:
        if self.kind == "free-abelian":
            return tuple(-x for x in a)
        if self.kind == "free":
            return tuple(-l for l in reversed(a))
        x, y, z = a
        return (-x, -y, -z + x * y)

    def letters_of_normal(self, a: tuple) -> tuple[int, ...]:
        """A canonical word (letter sequence) evaluating to the element."""
        if self.kind == "free-abelian":
            out = []
            for i, v in enumerate(a):
                out.extend([i + 1 if v > 0 else -(i + 1)] * abs(v))
            return tuple(out)
        if self.kind == "free":
            return tuple(a)
        x, y, z = a
        out = [1 if x > 0 else -1] * abs(x)
        out += [2 if y > 0 else -2] * abs(y)
        # remaining central part: z - x*y copies of the commutator [x,y]
        c = z - x * y
        comm = (1, 2, -1, -2) if c > 0 else (2, 1, -2, -1)
        out += list(comm) * abs(c)
        return tuple(out)


@dataclass(frozen=True, eq=False)
class GroupWord:
    """A group element: the letters it was built from plus its normal form.

    Words compare and hash by normal form, so different spellings of the same
    element are equal.
    """

    family: GroupFamily
    letters: tuple[int, ...]
    normal: tuple

    @classmethod
    def from_letters(cls, family: GroupFamily, letters) -> "GroupWord":
        letters = tuple(letters)
        return cls(family, letters, family.normal_of_letters(letters))

    @classmethod
    def from_normal(cls, family: GroupFamily, normal: tuple) -> "GroupWord":
        return cls(family, family.letters_of_normal(normal), tuple(normal))

    @classmethod
    def identity(cls, family: GroupFamily) -> "GroupWord":
        return cls.from_normal(family, family.identity_normal())

    def __mul__(self, other: "GroupWord") -> "GroupWord":
        if self.family != other.family:
            raise FamilyMismatchError("cannot multiply words from different families")
        return GroupWord.from_normal(
            self.family, self.family.multiply_normals(self.normal, other.normal)
        )

    def inverse(self) -> "GroupWord":
        return GroupWord.from_normal(self.family, self.family.invert_normal(self.normal))

    def is_identity(self) -> bool:
        return self.normal == self.family.identity_normal()

    def __hash__(self):
        return hash((self.family.kind, self.family.rank, self.normal))

    def __eq__(self, other):
        return (
            isinstance(other, GroupWord)
            and self.family == other.family
            and self.normal == other.normal
        )

    def __str__(self):
        return format_word(self)


def parse_word(family: GroupFamily, text: str) -> GroupWord:
    """Parse a word like "aB" or "a B" (case encodes inversion), "e" = identity."""
    letters = []
    for ch in text.replace(" ", ""):
        if ch == "e":
            continue
        if "a" <= ch <= "z":
            idx = ord(ch) - ord("a") + 1
        elif "A" <= ch <= "Z":
            idx = -(ord(ch) - ord("A") + 1)
        else:
            raise ValueError(f"bad character {ch!r} in word {text!r}")
        if abs(idx) > family.rank:
            raise ValueError(f"letter {ch!r} exceeds family rank {family.rank}")
        letters.append(idx)
    return GroupWord.from_letters(family, letters)


def format_word(word: GroupWord) -> str:
    if not word.letters:
        return "e"
    out = []
    for l in word.letters:
        ch = chr(ord("a") + abs(l) - 1)
        out.append(ch if l > 0 else ch.upper())
    return "".join(out)


class FiniteQuotient:
    """A transitive right action of a family on cosets {0, ..., N-1}.

    Stores one permutation per positive generator letter; inverse letters act
    by the inverse permutations.  Coset 0 is the identity coset.
    """

    def __init__(self, family: GroupFamily, perms: dict[int, np.ndarray], label: str = ""):
        self.family = family
        self.label = label
        sizes = {len(p) for p in perms.values()}
        if len(sizes) != 1:
            raise ValueError("generator permutations have inconsistent lengths")
        self.size = sizes.pop()
        if self.size < 1:
            raise ValueError("a quotient needs at least one coset")
        self.perms: dict[int, np.ndarray] = {}
        for i in range(1, family.rank + 1):
            if i not in perms:
                raise ValueError(f"missing permutation for generator {i}")
            p = np.asarray(perms[i], dtype=np.int64)
            self._check_permutation(p)
            inv = np.empty_like(p)
            inv[p] = np.arange(self.size, dtype=np.int64)
            p.setflags(write=False)
            inv.setflags(write=False)
            self.perms[i] = p
            self.perms[-i] = inv
        for letter, p in perms.items():
            if letter < 0:
                # caller supplied an explicit inverse: must match the derived one
                if not np.array_equal(np.asarray(p, dtype=np.int64), self.perms[letter]):
                    raise ValueError(
                        f"permutation for letter {letter} is not the inverse of {-letter}"
                    )
        if not self._is_transitive():
            raise ValueError("the generator permutations do not act transitively")
        self._normal_flag = None
        self.moduli = None  # set by from_moduli for congruence quotients

    def _check_permutation(self, p: np.ndarray):
        if p.ndim != 1:
            raise ValueError("permutation must be one-dimensional")
        seen = np.zeros(self.size, dtype=bool)
        if p.min(initial=0) < 0 or p.max(initial=0) >= self.size:
            raise ValueError("permutation image out of range")
        seen[p] = True
        if not seen.all():
            raise ValueError("not a permutation: repeated images")

    def _is_transitive(self) -> bool:
        reached = np.zeros(self.size, dtype=bool)
        stack = [0]
        reached[0] = True
        while stack:
            c = stack.pop()
            for i in range(1, self.family.rank + 1):
                for p in (self.perms[i], self.perms[-i]):
                    d = int(p[c])
                    if not reached[d]:
                        reached[d] = True
                        stack.append(d)
        return bool(reached.all())

    # ----- constructors -------------------------------------------------

    @classmethod
    def from_moduli(cls, family: GroupFamily, moduli) -> "FiniteQuotient":
        """Congruence quotient from a modulus vector.

        free-abelian(d): moduli is a length-d vector, quotient is the product
        of cyclic groups.  heisenberg: a single modulus m (all three matrix
        entries reduced mod m), quotient has m^3 cosets.
        """
        if family.kind == "free":
            raise ValueError("free-group quotients are given by explicit permutations")
        moduli = [int(m) for m in np.atleast_1d(moduli)]
        if any(m < 1 for m in moduli):
            raise ValueError("moduli must be >= 1")
        if family.kind == "free-abelian":
            if len(moduli) == 1 and family.rank > 1:
                moduli = moduli * family.rank
            if len(moduli) != family.rank:
                raise ValueError(f"expected {family.rank} moduli, got {len(moduli)}")
            shape = tuple(moduli)
            n = int(np.prod(shape))
            coords = np.unravel_index(np.arange(n), shape)
            perms = {}
            for i in range(family.rank):
                shifted = list(coords)
                shifted[i] = (coords[i] + 1) % shape[i]
                perms[i + 1] = np.ravel_multi_index(tuple(shifted), shape)
            label = "Z^%d mod %s" % (family.rank, "x".join(map(str, moduli)))
            q = cls(family, perms, label=label)
            q._validate_relations()
            q.moduli = tuple(moduli)
            return q
        # Heisenberg: entries mod m, multiplication (a,b,c)(a',b',c')=(a+a',b+b',c+c'+ab')
        if len(moduli) != 1:
            if len(set(moduli)) != 1:
                raise ValueError("heisenberg quotients take a single modulus")
            moduli = [moduli[0]]
        m = moduli[0]
        n = m**3
        a, b, c = np.unravel_index(np.arange(n), (m, m, m))
        perms = {
            1: np.ravel_multi_index(((a + 1) % m, b, c), (m, m, m)),
            2: np.ravel_multi_index((a, (b + 1) % m, (c + a) % m), (m, m, m)),
        }
        q = cls(family, perms, label=f"H mod {m}")
        q._validate_relations()
        q.moduli = (m,)
        return q

    def _validate_relations(self):
        """Defining relations of built-in families must hold as permutation identities."""
        if self.family.kind == "free-abelian":
            for i in range(1, self.family.rank + 1):
                for j in range(i + 1, self.family.rank + 1):
                    a, b = self.perms[i], self.perms[j]
                    if not np.array_equal(a[b], b[a]):
                        raise GroupForestsError(f"generators {i},{j} do not commute")
        elif self.family.kind == "heisenberg":
            x, y = self.perms[1], self.perms[2]
            xi, yi = self.perms[-1], self.perms[-2]
            z = yi[xi[y[x]]]  # right-action composite for the commutator word
            for g in (x, y):
                if not np.array_equal(z[g], g[z]):
                    raise GroupForestsError("commutator is not central in the quotient")
            m = round(self.size ** (1 / 3))
            cur = np.arange(self.size)
            for _ in range(m):
                cur = z[cur]
            if not np.array_equal(cur, np.arange(self.size)):
                raise GroupForestsError("central element has wrong order")

    @classmethod
    def from_text(cls, family: GroupFamily, text: str, label: str = "") -> "FiniteQuotient":
        """Parse the quotient file format.

        First line: "N k" (coset count, generator count).  Then k lines, one
        per generator, each with N space-separated 0-based images.  Inverse
        letters are derived from the generator permutations.  Blank lines and
        '#' comments are skipped.
        """
        lines = [ln for ln in (l.strip() for l in io.StringIO(text)) if ln and not ln.startswith("#")]
        if not lines:
            raise ValueError("empty quotient description")
        head = lines[0].split()
        if len(head) != 2:
            raise ValueError("header must be 'N k'")
        n, k = int(head[0]), int(head[1])
        if k != family.rank:
            raise ValueError(f"file has {k} generators, family has rank {family.rank}")
        if len(lines) != 1 + k:
            raise ValueError(f"expected {k} permutation lines, got {len(lines) - 1}")
        perms = {}
        for i in range(k):
            images = [int(t) for t in lines[1 + i].split()]
            if len(images) != n:
                raise ValueError(f"permutation line {i + 1} has {len(images)} entries, expected {n}")
            perms[i + 1] = np.array(images, dtype=np.int64)
        return cls(family, perms, label=label)

    def to_text(self) -> str:
        out = [f"{self.size} {self.family.rank}"]
        for i in range(1, self.family.rank + 1):
            out.append(" ".join(str(int(v)) for v in self.perms[i]))
        return "\n".join(out) + "\n"

    # ----- the action ---------------------------------------------------

    def act_letter(self, coset: int, letter: int) -> int:
        return int(self.perms[letter][coset])

    def act(self, coset: int, word: GroupWord) -> int:
        """Right-translate a coset by a word."""
        if word.family != self.family:
            raise FamilyMismatchError("word family does not match quotient family")
        c = coset
        for l in self.family.letters_of_normal(word.normal):
            c = int(self.perms[l][c])
        return c

    def word_permutation(self, word: GroupWord) -> np.ndarray:
        """The permutation c -> c*word as an array over all cosets."""
        if word.family != self.family:
            raise FamilyMismatchError("word family does not match quotient family")
        arr = np.arange(self.size, dtype=np.int64)
        for l in self.family.letters_of_normal(word.normal):
            arr = self.perms[l][arr]
        return arr

    def coset_of(self, word: GroupWord) -> int:
        """Image of a group element under the quotient map (its coset index)."""
        return self.act(0, word)

    # ----- diagnostics --------------------------------------------------

    def is_normal_action(self) -> bool:
        """Whether the action looks like right translation on a genuine group quotient.

        Builds left translations from BFS representative words and checks that
        they commute with every generator's right translation.  For coset
        spaces of non-normal subgroups this fails; such actions are still
        accepted everywhere, this flag is purely informational.
        """
        if self._normal_flag is not None:
            return self._normal_flag
        reps: list = [None] * self.size
        reps[0] = ()
        order = [0]
        qi = 0
        while qi < len(order):
            c = order[qi]
            qi += 1
            for l in self.family.letters:
                d = int(self.perms[l][c])
                if reps[d] is None:
                    reps[d] = reps[c] + (l,)
                    order.append(d)
        flag = True
        for t in self.family.letters:
            left = np.empty(self.size, dtype=np.int64)
            for c in range(self.size):
                x = int(self.perms[t][0])
                for l in reps[c]:
                    x = int(self.perms[l][x])
                left[c] = x
            for s in self.family.letters:
                if not np.array_equal(left[self.perms[s]], self.perms[s][left]):
                    flag = False
                    break
            if not flag:
                break
        self._normal_flag = flag
        return flag

    def __repr__(self):
        tag = f" {self.label!r}" if self.label else ""
        return f"<FiniteQuotient N={self.size} family={self.family.kind}({self.family.rank}){tag}>"


def injectivity_radius(
    quotient: FiniteQuotient, r_max: int = 512, generators=None
) -> int:
    """Largest r <= r_max such that the quotient map is injective on the word ball B(r).

    The ball is taken with respect to `generators` (GroupWords, closed under
    inverses implicitly; defaults to the family's letters).  BFS expands group
    elements by normal form while tracking coset images; the first time two
    distinct elements land on one coset at depth r, the radius is r - 1.
    """
    fam = quotient.family
    if generators is None:
        gens = [GroupWord.from_letters(fam, (l,)) for l in fam.letters]
    else:
        gens = []
        for g in generators:
            if g.family != fam:
                raise FamilyMismatchError("generator family does not match quotient")
            if g.is_identity():
                continue
            gens.append(g)
            gens.append(g.inverse())
    gen_pairs = [(g.normal, quotient.word_permutation(g)) for g in gens]
    ident = fam.identity_normal()
    owner = {0: ident}
    seen = {ident}
    frontier = [(ident, 0)]
    for r in range(1, r_max + 1):
        nxt = []
        for nf, c in frontier:
            for gnf, gperm in gen_pairs:
                nf2 = fam.multiply_normals(nf, gnf)
                if nf2 in seen:
                    continue
                c2 = int(gperm[c])
                if c2 in owner:
                    return r - 1
                seen.add(nf2)
                owner[c2] = nf2
                nxt.append((nf2, c2))
        if not nxt:
            break
        frontier = nxt
    return r_max


def word_ball(family: GroupFamily, radius: int, generators=None) -> list:
    """All group elements within word-metric distance `radius` of the identity.

    The metric is taken with respect to `generators` (GroupWords, closed under
    inverses implicitly; defaults to the family's letters).  Returns GroupWords
    in breadth-first order with a deterministic tie-break, identity first.
    """
    if radius < 0:
        raise ValueError("radius must be >= 0")
    if generators is None:
        gens = [GroupWord.from_letters(family, (l,)) for l in family.letters]
    else:
        gens = []
        for g in generators:
            if g.family != family:
                raise FamilyMismatchError("generator family does not match")
            if g.is_identity():
                continue
            gens.append(g)
            gens.append(g.inverse())
    gen_normals = sorted({g.normal for g in gens})
    ident = family.identity_normal()
    seen = {ident}
    out = [ident]
    frontier = [ident]
    for _ in range(radius):
        nxt = []
        for nf in frontier:
            for gnf in gen_normals:
                nf2 = family.multiply_normals(nf, gnf)
                if nf2 not in seen:
                    seen.add(nf2)
                    nxt.append(nf2)
        nxt.sort()
        out.extend(nxt)
        frontier = nxt
        if not nxt:
            break
    return [GroupWord.from_normal(family, nf) for nf in out]


class QuotientChain:
    """An ordered family of quotients with non-decreasing injectivity radius."""

    def __init__(self, quotients, r_max: int = 512, generators=None):
        self.quotients = list(quotients)
        if not self.quotients:
            raise ValueError("a chain needs at least one quotient")
        fam = self.quotients[0].family
        for q in self.quotients:
            if q.family != fam:
                raise FamilyMismatchError("all quotients in a chain share one family")
        self.family = fam
        self.radii = [injectivity_radius(q, r_max=r_max, generators=generators) for q in self.quotients]
        for a, b in zip(self.radii, self.radii[1:]):
            if b < a:
                raise ValueError(
                    f"injectivity radii must be non-decreasing along the chain, got {self.radii}"
                )

    def __len__(self):
        return len(self.quotients)

    def __iter__(self):
        return iter(self.quotients)

    def __getitem__(self, i):
        return self.quotients[i]


def free_ball_quotient(family: GroupFamily, radius: int, seed: int = 0) -> FiniteQuotient:
    """A transitive permutation action of a free group with injectivity radius >= radius.

    Takes the Cayley-tree ball of the given radius as the coset set and closes
    each generator's partial permutation by matching boundary half-edges with
    a seeded bijection.  Near the identity coset the action is exactly the
    tree, so word balls of the given radius embed.  Useful for generating
    quotient files for free-group experiments.
    """
    if family.kind != "free":
        raise ValueError("free_ball_quotient only applies to free families")
    if radius < 1:
        raise ValueError("radius must be >= 1")
    words = [()]
    frontier = [()]
    for _ in range(radius):
        nxt = []
        for w in frontier:
            for l in family.letters:
                if w and w[-1] == -l:
                    continue
                nxt.append(w + (l,))
        words.extend(nxt)
        frontier = nxt
    index = {w: i for i, w in enumerate(words)}
    n = len(words)
    rng = np.random.default_rng(seed)
    perms = {}
    for g in range(1, family.rank + 1):
        out = np.full(n, -1, dtype=np.int64)
        has_in = np.zeros(n, dtype=bool)
        for w, i in index.items():
            tgt = w[:-1] if (w and w[-1] == -g) else w + (g,)
            j = index.get(tgt)
            if j is not None:
                out[i] = j
                has_in[j] = True
        missing_out = np.flatnonzero(out == -1)
        missing_in = np.flatnonzero(~has_in)
        out[missing_out] = missing_in[rng.permutation(len(missing_in))]
        perms[g] = out
    return FiniteQuotient(family, perms, label=f"F{family.rank} ball r={radius} seed={seed}")
