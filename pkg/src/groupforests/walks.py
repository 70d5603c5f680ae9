"""Group-ring arithmetic and random-walk analysis on the built-in families.

The central object is an integer (or rational) group-ring element f.  When f
is well balanced (zero coefficient sum, non-positive off the identity,
self-adjoint, generating support) it is the Laplacian of a Cayley multigraph,
and mu = -(f - f_e)/f_e is the step distribution of a symmetric random walk
with no standing-still mass.  This module computes return-probability series
for that walk by three interchangeable engines, and builds on them: tree
entropy (log f_e minus the weighted return series), truncated Green's
functions, homoclinic points of the associated harmonic model, and a
spectral-radius probe for amenability.

Engines for the return series:

- "direct": dictionary convolution over normal forms.  Exact rationals up to
  a support cap, then a float fast path.  Works for every family.
- "grid": for free-abelian families, evaluates the Fourier multiplier of mu
  on an m^d grid; the grid average of its k-th power equals (mu^k) at the
  origin exactly as long as k * reach < m (no wrap-around), and is an upper
  bound with exponentially small bias otherwise.
- "tree": for free groups with nearest-neighbor support, a first-passage /
  renewal recurrence in the word-length coordinate.
"""

from __future__ import annotations

import math
import warnings as _warnings
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import (
    FamilyMismatchError,
    NotWellBalancedError,
    ResourceLimitError,
    UnsupportedFamilyError,
    WindowError,
)
from .groups import GroupFamily, GroupWord, format_word, parse_word, word_ball
from .intmat import lattice_spans_z_d

DEFAULT_MAX_SUPPORT = 200_000
DEFAULT_MAX_EXACT_SUPPORT = 20_000
DEFAULT_MAX_GRID_CELLS = 1 << 22
DEFAULT_MAX_TREE_ORDER = 4000


def _coerce_coeff(c):
    if isinstance(c, bool):
        raise TypeError("boolean coefficient")
    if isinstance(c, int):
        return c
    if isinstance(c, Fraction):
        return int(c) if c.denominator == 1 else c
    if isinstance(c, float):
        return Fraction(str(c)) if c != int(c) else int(c)
    raise TypeError(f"unsupported coefficient type {type(c).__name__}")


class GroupRingElement:
    """Finitely supported int- or rational-valued function on a group family.

    Immutable by convention: the coefficient table is private and all
    operations return new elements.  Keys are normal forms; the public API
    speaks GroupWords or generator-letter strings.
    """

    __slots__ = ("family", "_coeffs")

    def __init__(self, family: GroupFamily, coeffs):
        clean = {}
        for nf, c in coeffs.items():
            c = _coerce_coeff(c)
            if c:
                clean[tuple(nf)] = c
        self.family = family
        self._coeffs = dict(sorted(clean.items()))

    # ----- construction -------------------------------------------------

    @classmethod
    def from_items(cls, family: GroupFamily, items) -> "GroupRingElement":
        """Build from (word, coefficient) pairs; words may be GroupWords or text."""
        acc: dict = {}
        pairs = items.items() if isinstance(items, dict) else items
        for w, c in pairs:
            if isinstance(w, GroupWord):
                if w.family != family:
                    raise FamilyMismatchError("word family does not match element family")
                nf = w.normal
            elif isinstance(w, str):
                nf = parse_word(family, w).normal
            else:
                nf = tuple(w)
            acc[nf] = acc.get(nf, 0) + _coerce_coeff(c)
        return cls(family, acc)

    @classmethod
    def identity(cls, family: GroupFamily, coeff=1) -> "GroupRingElement":
        return cls(family, {family.identity_normal(): coeff})

    @classmethod
    def zero(cls, family: GroupFamily) -> "GroupRingElement":
        return cls(family, {})

    # ----- inspection ---------------------------------------------------

    def _normal_of(self, w):
        if isinstance(w, GroupWord):
            if w.family != self.family:
                raise FamilyMismatchError("word family does not match element family")
            return w.normal
        if isinstance(w, str):
            return parse_word(self.family, w).normal
        return tuple(w)

    def coefficient(self, w):
        return self._coeffs.get(self._normal_of(w), 0)

    @property
    def identity_coefficient(self):
        return self._coeffs.get(self.family.identity_normal(), 0)

    def items(self):
        """(GroupWord, coefficient) pairs in canonical order."""
        return [
            (GroupWord.from_normal(self.family, nf), c) for nf, c in self._coeffs.items()
        ]

    def support_normals(self):
        return list(self._coeffs.keys())

    def support(self):
        return [GroupWord.from_normal(self.family, nf) for nf in self._coeffs]

    def support_size(self) -> int:
        return len(self._coeffs)

    def one_norm(self):
        return sum(abs(c) for c in self._coeffs.values())

    def support_letter_radius(self) -> int:
        """Upper bound on the letter length of any support element.

        Uses the normal form's letter spelling, which is a geodesic for
        free and free-abelian families and an upper bound for heisenberg.
        """
        r = 0
        for nf in self._coeffs:
            r = max(r, len(self.family.letters_of_normal(nf)))
        return r

    def is_integer(self) -> bool:
        return all(isinstance(c, int) for c in self._coeffs.values())

    def __len__(self):
        return len(self._coeffs)

    def __bool__(self):
        return bool(self._coeffs)

    def __eq__(self, other):
        if not isinstance(other, GroupRingElement):
            return NotImplemented
        return self.family == other.family and self._coeffs == other._coeffs

    def __hash__(self):
        return hash((self.family, tuple(self._coeffs.items())))

    # ----- arithmetic ---------------------------------------------------

    def _check_family(self, other):
        if self.family != other.family:
            raise FamilyMismatchError("group-ring elements over different families")

    def __add__(self, other):
        if not isinstance(other, GroupRingElement):
            return NotImplemented
        self._check_family(other)
        acc = dict(self._coeffs)
        for nf, c in other._coeffs.items():
            acc[nf] = acc.get(nf, 0) + c
        return GroupRingElement(self.family, acc)

    def __sub__(self, other):
        if not isinstance(other, GroupRingElement):
            return NotImplemented
        return self + (-other)

    def __neg__(self):
        return GroupRingElement(self.family, {nf: -c for nf, c in self._coeffs.items()})

    def scale(self, s):
        s = _coerce_coeff(s) if s else 0
        return GroupRingElement(self.family, {nf: s * c for nf, c in self._coeffs.items()})

    def __mul__(self, other):
        if isinstance(other, GroupRingElement):
            return convolve(self, other)
        if isinstance(other, (int, Fraction)):
            return self.scale(other)
        return NotImplemented

    def __rmul__(self, other):
        if isinstance(other, (int, Fraction)):
            return self.scale(other)
        return NotImplemented

    def adjoint(self) -> "GroupRingElement":
        """The element with coefficient at s equal to this one's at s^{-1}."""
        fam = self.family
        return GroupRingElement(
            fam, {fam.invert_normal(nf): c for nf, c in self._coeffs.items()}
        )

    def is_self_adjoint(self) -> bool:
        return self._coeffs == self.adjoint()._coeffs

    def __str__(self):
        return format_group_ring(self)

    def __repr__(self):
        inner = ", ".join(f"{format_word(w)}: {c}" for w, c in self.items())
        return f"<GroupRingElement {self.family.kind}({self.family.rank}) {{{inner}}}>"


def convolve(a: GroupRingElement, b: GroupRingElement) -> GroupRingElement:
    """Group-ring product: (ab)_w = sum over s of a_s * b_{s^{-1} w}."""
    if a.family != b.family:
        raise FamilyMismatchError("convolution needs a single family")
    fam = a.family
    acc: dict = {}
    for nf1, c1 in a._coeffs.items():
        for nf2, c2 in b._coeffs.items():
            nf = fam.multiply_normals(nf1, nf2)
            acc[nf] = acc.get(nf, 0) + c1 * c2
    return GroupRingElement(fam, acc)


def parse_group_ring(family: GroupFamily, text: str) -> GroupRingElement:
    """Parse the line format `word coefficient`.

    The word is spelled in generator letters (lowercase = generator,
    uppercase = inverse, `e` = identity) and may be split across tokens;
    the final token on each line is the coefficient (integer, p/q, or
    decimal).  Blank lines and '#' comments are skipped.  Repeated words
    accumulate.
    """
    acc: dict = {}
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        if len(tokens) < 2:
            raise ValueError(f"line needs a word and a coefficient: {raw!r}")
        coeff = _coerce_coeff(Fraction(tokens[-1]))
        word = parse_word(family, "".join(tokens[:-1]))
        acc[word.normal] = acc.get(word.normal, 0) + coeff
    return GroupRingElement(family, acc)


def format_group_ring(f: GroupRingElement) -> str:
    """Inverse of parse_group_ring; identity first, then by word length."""
    fam = f.family
    lines = []
    for nf, c in sorted(
        f._coeffs.items(), key=lambda kv: (len(fam.letters_of_normal(kv[0])), kv[0])
    ):
        word = format_word(GroupWord.from_normal(fam, nf))
        lines.append(f"{word} {c}")
    return "\n".join(lines) + ("\n" if lines else "")


def laplacian_element(family: GroupFamily) -> GroupRingElement:
    """The nearest-neighbor Laplacian 2r - sum of generators and inverses."""
    coeffs = {family.identity_normal(): 2 * family.rank}
    for l in family.letters:
        coeffs[family._letter_normal(l)] = -1
    return GroupRingElement(family, coeffs)


# ----- well-balancedness ---------------------------------------------------


@dataclass(frozen=True)
class WellBalancedReport:
    ok: bool
    violations: tuple
    integer_ok: bool = True
    sum_ok: bool = True
    sign_ok: bool = True
    adjoint_ok: bool = True
    generation_ok: bool = True

    def __bool__(self):
        return self.ok


def is_well_balanced(f: GroupRingElement) -> WellBalancedReport:
    """Check the four defining clauses of a well-balanced element.

    Clauses: integer coefficients summing to zero; off-identity coefficients
    non-positive; self-adjoint; support generates the family.  The generation
    clause is decided per family: for free-abelian the support exponent
    vectors must span Z^d as a lattice; for free and heisenberg families the
    support must contain each generator or its inverse outright.
    """
    fam = f.family
    violations = []
    integer_ok = f.is_integer()
    if not integer_ok:
        violations.append("coefficients must be integers")
    total = sum(f._coeffs.values())
    sum_ok = total == 0
    if not sum_ok:
        violations.append(f"coefficient sum is {total}, expected 0")
    ident = fam.identity_normal()
    sign_ok = True
    for nf, c in f._coeffs.items():
        if nf != ident and c > 0:
            sign_ok = False
            w = format_word(GroupWord.from_normal(fam, nf))
            violations.append(f"positive coefficient {c} at {w} (must be <= 0 off identity)")
    adjoint_ok = f.is_self_adjoint()
    if not adjoint_ok:
        violations.append("not self-adjoint: coefficients at s and s^{-1} differ somewhere")
    support = [nf for nf in f._coeffs if nf != ident]
    generation_ok = True
    if fam.kind == "free-abelian":
        if not support or not lattice_spans_z_d(support, fam.rank):
            generation_ok = False
            violations.append(f"support does not span Z^{fam.rank} as a lattice")
    else:
        for i in range(1, fam.rank + 1):
            pos = fam._letter_normal(i)
            neg = fam._letter_normal(-i)
            if pos not in f._coeffs and neg not in f._coeffs:
                generation_ok = False
                violations.append(f"support misses generator {i} and its inverse")
    return WellBalancedReport(
        ok=not violations,
        violations=tuple(violations),
        integer_ok=integer_ok,
        sum_ok=sum_ok,
        sign_ok=sign_ok,
        adjoint_ok=adjoint_ok,
        generation_ok=generation_ok,
    )


def require_well_balanced(f: GroupRingElement) -> None:
    report = is_well_balanced(f)
    if not report.ok:
        raise NotWellBalancedError("; ".join(report.violations))


# ----- the step distribution and exact convolution powers ------------------


@dataclass(frozen=True)
class WalkDistribution:
    """An exact rational probability distribution on the group: one mu^k."""

    family: GroupFamily
    step_count: int
    coeffs: dict  # normal form -> Fraction

    def mass(self) -> Fraction:
        return sum(self.coeffs.values(), Fraction(0))

    def coefficient(self, w) -> Fraction:
        if isinstance(w, GroupWord):
            key = w.normal
        elif isinstance(w, str):
            key = parse_word(self.family, w).normal
        else:
            key = tuple(w)
        return self.coeffs.get(key, Fraction(0))

    @property
    def at_identity(self) -> Fraction:
        return self.coeffs.get(self.family.identity_normal(), Fraction(0))

    def support_size(self) -> int:
        return len(self.coeffs)

    def validate(self) -> None:
        if any(c < 0 for c in self.coeffs.values()):
            raise AssertionError("negative probability")
        if self.mass() != 1:
            raise AssertionError(f"mass {self.mass()} != 1")

    def as_group_ring_element(self) -> GroupRingElement:
        return GroupRingElement(self.family, self.coeffs)


def walk_distribution(f: GroupRingElement) -> WalkDistribution:
    """The step distribution mu = -(f - f_e)/f_e of a well-balanced f."""
    require_well_balanced(f)
    fe = f.identity_coefficient
    ident = f.family.identity_normal()
    coeffs = {
        nf: Fraction(-c, fe) for nf, c in f._coeffs.items() if nf != ident
    }
    return WalkDistribution(f.family, 1, coeffs)


def convolve_powers(f: GroupRingElement, k_max=None, max_support: int = DEFAULT_MAX_SUPPORT):
    """Yield mu^0, mu^1, ... as exact WalkDistributions (k_max inclusive, or endless)."""
    mu = walk_distribution(f)
    fam = f.family
    cur = {fam.identity_normal(): Fraction(1)}
    k = 0
    while True:
        yield WalkDistribution(fam, k, dict(cur))
        if k_max is not None and k >= k_max:
            return
        nxt: dict = {}
        for nf1, c1 in cur.items():
            for nf2, c2 in mu.coeffs.items():
                nf = fam.multiply_normals(nf1, nf2)
                nxt[nf] = nxt.get(nf, Fraction(0)) + c1 * c2
        if len(nxt) > max_support:
            raise ResourceLimitError(
                f"walk support {len(nxt)} exceeds cap {max_support} at step {k + 1}"
            )
        cur = nxt
        k += 1


def return_probability(f: GroupRingElement, k: int, max_support: int = DEFAULT_MAX_SUPPORT) -> Fraction:
    """Exact rational (mu^k) at the identity."""
    if k < 0:
        raise ValueError("k must be >= 0")
    for dist in convolve_powers(f, k_max=k, max_support=max_support):
        if dist.step_count == k:
            return dist.at_identity
    raise AssertionError("unreachable")


# ----- return-probability series engines ------------------------------------


@dataclass(frozen=True)
class ReturnSeries:
    """Float series values[k] = (mu^k) at the identity, k = 0..K.

    alias_free_through: largest k whose value carries no systematic bias
    (grid wrap-around); beyond it grid values are upper bounds with
    exponentially small excess.  Direct and tree engines have no such bias.
    """

    values: np.ndarray
    engine: str
    alias_free_through: int
    notes: tuple = ()


def _mu_float(f: GroupRingElement):
    fe = f.identity_coefficient
    ident = f.family.identity_normal()
    return {nf: -c / fe for nf, c in f._coeffs.items() if nf != ident}


def _auto_engine(f: GroupRingElement) -> str:
    fam = f.family
    if fam.kind == "free-abelian":
        return "grid"
    if fam.kind == "free":
        ident = fam.identity_normal()
        if all(len(nf) == 1 for nf in f._coeffs if nf != ident):
            return "tree"
    return "direct"


def _series_direct(f, K, max_support, max_exact_support):
    fam = f.family
    ident = fam.identity_normal()
    mu_exact = walk_distribution(f).coeffs
    mu_float = {nf: float(c) for nf, c in mu_exact.items()}
    out = np.zeros(K + 1)
    out[0] = 1.0
    cur: dict = {ident: Fraction(1)}
    exact = True
    for k in range(1, K + 1):
        step = mu_exact if exact else mu_float
        zero = Fraction(0) if exact else 0.0
        nxt: dict = {}
        for nf1, c1 in cur.items():
            for nf2, c2 in step.items():
                nf = fam.multiply_normals(nf1, nf2)
                nxt[nf] = nxt.get(nf, zero) + c1 * c2
        if len(nxt) > max_support:
            raise ResourceLimitError(
                f"walk support {len(nxt)} exceeds cap {max_support} at step {k}"
            )
        if exact and len(nxt) > max_exact_support:
            nxt = {nf: float(c) for nf, c in nxt.items()}
            exact = False
        cur = nxt
        out[k] = float(cur.get(ident, 0))
    return ReturnSeries(out, "direct", K)


DEFAULT_MAX_GRID_FLOPS = 1 << 30


def _pick_grid_size(target: int, d: int, max_cells: int, iterations: int = 1) -> int:
    """Grid edge length: the no-wrap target, capped by cell and work budgets.

    Below the no-wrap target the values for large k acquire a positive
    wrap-around bias of order exp(-m^2 / k), which is far below float
    precision whenever m^2 is a few dozen times the iteration count; the
    work cap keeps long series from choosing grids whose exactness would
    cost minutes while adding nothing at double precision.
    """
    cap = int(max_cells ** (1.0 / d))
    while (cap + 1) ** d <= max_cells:
        cap += 1
    if iterations > 0:
        work = int((DEFAULT_MAX_GRID_FLOPS / iterations) ** (1.0 / d))
        cap = min(cap, max(work, 64))
    return max(16, min(target, cap))


def _grid_multiplier(f, m):
    """Fourier multiplier of mu on the m^d grid, as a d-dimensional array."""
    fam = f.family
    d = fam.rank
    theta = 2.0 * np.pi * np.arange(m) / m
    lam = np.zeros((m,) * d)
    for nf, w in _mu_float(f).items():
        phase = np.zeros((m,) * d)
        for i, s_i in enumerate(nf):
            if s_i:
                shape = [1] * d
                shape[i] = m
                phase = phase + s_i * theta.reshape(shape)
        lam += w * np.cos(phase)
    return lam


def _grid_reach(f) -> int:
    ident = f.family.identity_normal()
    return max(
        (max(abs(x) for x in nf) for nf in f._coeffs if nf != ident), default=1
    )


def _series_grid(f, K, grid_size, max_cells):
    fam = f.family
    if fam.kind != "free-abelian":
        raise UnsupportedFamilyError("grid engine needs a free-abelian family")
    d = fam.rank
    R = _grid_reach(f)
    m = grid_size or _pick_grid_size(K * R + 1, d, max_cells, iterations=K)
    if m**d > max_cells:
        raise ResourceLimitError(f"grid {m}^{d} exceeds cell cap {max_cells}")
    lam = _grid_multiplier(f, m)
    out = np.zeros(K + 1)
    out[0] = 1.0
    p = np.ones_like(lam)
    for k in range(1, K + 1):
        p = p * lam
        out[k] = float(p.mean())
    np.maximum(out, 0.0, out=out)  # guard float rounding of exact zeros
    notes = ()
    alias_free = (m - 1) // R
    if alias_free < K:
        notes = (
            f"grid size {m} wraps for k > {alias_free}; affected values are "
            "upper bounds with exponentially small excess",
        )
    return ReturnSeries(out, "grid", min(K, alias_free), notes)


def _tree_first_passage(f, K):
    """First-passage arrays F[t][m] = P(first visit of neighbor t at step m)."""
    fam = f.family
    mu = _mu_float(f)
    letters = list(fam.letters)
    if set(mu) - {fam._letter_normal(l) for l in letters}:
        raise UnsupportedFamilyError("tree engine needs nearest-neighbor support")
    w = {l: mu.get(fam._letter_normal(l), 0.0) for l in letters}
    F = {l: np.zeros(K + 1) for l in letters}
    for l in letters:
        if K >= 1:
            F[l][1] = w[l]
    for m in range(2, K + 1):
        for t in letters:
            s = 0.0
            for u in letters:
                if u == -t:
                    continue
                if w[u]:
                    # (F_u * F_t)[m-1], both factors vanish at index 0
                    s += w[u] * float(np.dot(F[u][1 : m - 1], F[t][m - 2 : 0 : -1]))
            F[t][m] = s
    return F, w


def _series_tree(f, K, max_order):
    if K > max_order:
        raise ResourceLimitError(f"tree engine order {K} exceeds cap {max_order}")
    fam = f.family
    F, w = _tree_first_passage(f, K)
    r = np.zeros(K + 1)
    for u in fam.letters:
        if w[u]:
            r[1:] += w[u] * F[-u][: K]
    out = np.zeros(K + 1)
    out[0] = 1.0
    for k in range(1, K + 1):
        out[k] = float(np.dot(r[1 : k + 1], out[k - 1 :: -1]))
    return ReturnSeries(out, "tree", K)


def return_series(
    f: GroupRingElement,
    K: int,
    engine: str = "auto",
    max_support: int = DEFAULT_MAX_SUPPORT,
    max_exact_support: int = DEFAULT_MAX_EXACT_SUPPORT,
    grid_size=None,
    max_grid_cells: int = DEFAULT_MAX_GRID_CELLS,
    max_tree_order: int = DEFAULT_MAX_TREE_ORDER,
) -> ReturnSeries:
    """Float return-probability series (mu^k)_e for k = 0..K."""
    if K < 0:
        raise ValueError("K must be >= 0")
    require_well_balanced(f)
    if engine == "auto":
        engine = _auto_engine(f)
    if engine == "direct":
        return _series_direct(f, K, max_support, max_exact_support)
    if engine == "grid":
        return _series_grid(f, K, grid_size, max_grid_cells)
    if engine == "tree":
        return _series_tree(f, K, max_tree_order)
    raise ValueError(f"unknown engine {engine!r}")


# ----- tree entropy ---------------------------------------------------------


@dataclass(frozen=True)
class TreeEntropyResult:
    """Partial sum of the tree-entropy series with an advisory tail estimate.

    value = log f_e - sum_{k=1}^{K} (mu^k)_e / k.  The terms are nonnegative,
    so successive partial sums are non-increasing and bound the limit from
    above.  tail_estimate extrapolates the remaining mass (geometric fit on
    the last even terms, polynomial fallback); it is reported, never added.
    """

    value: float
    K: int
    terms: np.ndarray
    engine: str
    tail_estimate: float
    log_fe: float
    notes: tuple = ()

    @property
    def partials(self) -> np.ndarray:
        return self.log_fe - np.cumsum(self.terms)

    def __float__(self):
        return self.value


def _tail_estimate(values: np.ndarray, K: int) -> float:
    # geometric fit on the last two even-index terms of the return series
    if K < 6:
        return math.inf
    k2 = K - (K % 2)
    a, b = values[k2 - 2], values[k2]
    if a <= 0 or b <= 0:
        return 0.0
    q = b / a
    if q < 0.999:
        # sum_{j>=1} b q^j / (k2 + 2j) <= (b/k2) q/(1-q)
        return (b / k2) * q / (1.0 - q)
    # near-critical ratio: assume polynomial decay k^{-p}, so the remaining
    # sum of k^{-1-p} terms is about R_K / p
    p = -math.log(q) / (math.log(k2) - math.log(k2 - 2)) if q < 1 else 1.0
    p = max(p, 0.5)
    return b / p


def tree_entropy(f: GroupRingElement, K: int, engine: str = "auto", **caps) -> TreeEntropyResult:
    """K-th partial sum of log f_e - sum_k (mu^k)_e / k."""
    series = return_series(f, K, engine=engine, **caps)
    fe = f.identity_coefficient
    terms = np.zeros(K + 1)
    if K >= 1:
        ks = np.arange(1, K + 1, dtype=float)
        terms[1:] = series.values[1:] / ks
    log_fe = math.log(fe)
    value = log_fe - math.fsum(terms[1:])
    return TreeEntropyResult(
        value=value,
        K=K,
        terms=terms,
        engine=series.engine,
        tail_estimate=_tail_estimate(series.values, K),
        log_fe=log_fe,
        notes=series.notes,
    )


# ----- truncated Green's function -------------------------------------------


def _is_transient(family: GroupFamily) -> bool:
    if family.kind == "free-abelian":
        return family.rank >= 3
    if family.kind == "free":
        return family.rank >= 2
    return family.kind == "heisenberg"


@dataclass(frozen=True)
class GreenTruncation:
    """Window values of f_e^{-1} sum_{k=0}^{K} mu^k.

    values maps normal forms inside the requested ball (word metric of the
    support of f) to floats.  tail_estimate bounds the truncation error at
    the identity heuristically; warnings record recurrence or wrap notes.
    """

    family: GroupFamily
    source: GroupRingElement
    K: int
    radius: int
    values: dict
    engine: str
    tail_estimate: float
    warnings: tuple = ()

    def value(self, w) -> float:
        if isinstance(w, GroupWord):
            key = w.normal
        elif isinstance(w, str):
            key = parse_word(self.family, w).normal
        else:
            key = tuple(w)
        if key not in self.values:
            raise WindowError(f"word outside the computed ball: {key}")
        return self.values[key]

    @property
    def at_identity(self) -> float:
        return self.values[self.family.identity_normal()]

    def window_words(self):
        return [GroupWord.from_normal(self.family, nf) for nf in self.values]


def _support_generators(f: GroupRingElement):
    ident = f.family.identity_normal()
    return [
        GroupWord.from_normal(f.family, nf) for nf in f._coeffs if nf != ident
    ]


def _green_direct(f, K, radius, max_support):
    fam = f.family
    ball = word_ball(fam, radius, generators=_support_generators(f))
    wanted = {w.normal for w in ball}
    mu = walk_distribution(f).coeffs
    mu_f = {nf: float(c) for nf, c in mu.items()}
    ident = fam.identity_normal()
    acc = {nf: 0.0 for nf in wanted}
    cur = {ident: 1.0}
    acc[ident] = 1.0
    for k in range(1, K + 1):
        nxt: dict = {}
        for nf1, c1 in cur.items():
            for nf2, c2 in mu_f.items():
                nf = fam.multiply_normals(nf1, nf2)
                nxt[nf] = nxt.get(nf, 0.0) + c1 * c2
        if len(nxt) > max_support:
            raise ResourceLimitError(
                f"walk support {len(nxt)} exceeds cap {max_support} at step {k}"
            )
        cur = nxt
        for nf in wanted:
            v = cur.get(nf)
            if v:
                acc[nf] += v
    fe = f.identity_coefficient
    return {nf: v / fe for nf, v in acc.items()}, "direct", ()


def _green_grid(f, K, radius, grid_size, max_cells):
    fam = f.family
    d = fam.rank
    R = _grid_reach(f)
    m = grid_size or _pick_grid_size(K * R + radius + 1, d, max_cells, iterations=K)
    if m**d > max_cells:
        raise ResourceLimitError(f"grid {m}^{d} exceeds cell cap {max_cells}")
    lam = _grid_multiplier(f, m)
    S = np.ones_like(lam)
    p = np.ones_like(lam)
    for _ in range(K):
        p = p * lam
        S += p
    table = np.fft.ifftn(S).real
    ball = word_ball(fam, radius, generators=_support_generators(f))
    fe = f.identity_coefficient
    values = {}
    for w in ball:
        idx = tuple(int(x) % m for x in w.normal)
        values[w.normal] = float(table[idx]) / fe
    notes = ()
    if (K * R + radius) >= m:
        notes = (f"grid size {m} wraps at order {K}; values are upper bounds",)
    return values, "grid", notes


def _green_tree(f, K, radius, max_order):
    if K > max_order:
        raise ResourceLimitError(f"tree engine order {K} exceeds cap {max_order}")
    fam = f.family
    F, w = _tree_first_passage(f, K)
    r = np.zeros(K + 1)
    for u in fam.letters:
        if w[u]:
            r[1:] += w[u] * F[-u][: K]
    ret = np.zeros(K + 1)
    ret[0] = 1.0
    for k in range(1, K + 1):
        ret[k] = float(np.dot(r[1 : k + 1], ret[k - 1 :: -1]))
    # first-passage distribution to each word in the ball, then renewal at it
    fe = f.identity_coefficient
    values = {}
    passage = {fam.identity_normal(): None}  # None encodes the delta at step 0
    order = word_ball(fam, radius)
    for word in order:
        nf = word.normal
        if nf == fam.identity_normal():
            values[nf] = float(np.sum(ret)) / fe
            continue
        parent, last = nf[:-1], nf[-1]
        pp = passage[parent]
        fp = F[last][: K + 1] if pp is None else np.convolve(pp, F[last])[: K + 1]
        passage[nf] = fp
        occ = np.convolve(fp, ret)[: K + 1]
        values[nf] = float(np.sum(occ)) / fe
    return values, "tree", ()


def green_truncation(
    f: GroupRingElement,
    K: int,
    radius: int,
    engine: str = "auto",
    max_support: int = DEFAULT_MAX_SUPPORT,
    grid_size=None,
    max_grid_cells: int = DEFAULT_MAX_GRID_CELLS,
    max_tree_order: int = DEFAULT_MAX_TREE_ORDER,
) -> GreenTruncation:
    """Truncated Green's function on the radius ball of the support metric."""
    if K < 0 or radius < 0:
        raise ValueError("K and radius must be >= 0")
    require_well_balanced(f)
    fam = f.family
    warn: list = []
    if not _is_transient(fam):
        msg = (
            f"{fam.kind}({fam.rank}) walks are recurrent: the Green series "
            "diverges and partial sums grow without bound"
        )
        warn.append(msg)
        _warnings.warn(msg, stacklevel=2)
    if engine == "auto":
        engine = _auto_engine(f)
    if engine == "direct":
        values, eng, notes = _green_direct(f, K, radius, max_support)
    elif engine == "grid":
        values, eng, notes = _green_grid(f, K, radius, grid_size, max_grid_cells)
    elif engine == "tree":
        values, eng, notes = _green_tree(f, K, radius, max_tree_order)
    else:
        raise ValueError(f"unknown engine {engine!r}")
    # advisory tail estimate: geometric fit of the identity return terms
    tail = math.inf
    fe = f.identity_coefficient
    if K >= 6:
        rs = return_series(
            f,
            K,
            engine=eng,
            max_support=max_support,
            grid_size=grid_size,
            max_grid_cells=max_grid_cells,
            max_tree_order=max_tree_order,
        )
        k2 = K - (K % 2)
        a, b = rs.values[k2 - 2], rs.values[k2]
        if b <= 0:
            tail = 0.0
        elif b < a:
            q = b / a
            tail = (b / fe) * q / (1.0 - q)
    return GreenTruncation(
        family=fam,
        source=f,
        K=K,
        radius=radius,
        values=values,
        engine=eng,
        tail_estimate=tail,
        warnings=tuple(warn) + tuple(notes),
    )


def formal_inverse_residual(green: GreenTruncation, radius: int) -> float:
    """Max over the radius ball of |(omega_K * f) - delta_e|.

    Needs omega on the (radius + 1)-ball; raises WindowError otherwise.
    The value is non-increasing in K for transient walks and tends to 0.
    """
    f = green.source
    fam = green.family
    ball = word_ball(fam, radius, generators=_support_generators(f))
    worst = 0.0
    ident = fam.identity_normal()
    for w in ball:
        total = 0.0
        for nf_u, cu in f._coeffs.items():
            key = fam.multiply_normals(w.normal, fam.invert_normal(nf_u))
            if key not in green.values:
                raise WindowError(
                    f"residual at radius {radius} needs the Green ball of radius {radius + 1}"
                )
            total += green.values[key] * cu
        target = 1.0 if w.normal == ident else 0.0
        worst = max(worst, abs(total - target))
    return worst


# ----- homoclinic points ----------------------------------------------------


@dataclass(frozen=True)
class HomoclinicResult:
    """A candidate homoclinic point x = (h * omega) mod 1 on a window.

    values maps normal forms to floats in [0, 1).  residual_max is the
    largest distance of (x' * f) from the integers over interior window
    points, where x' is the [-1/2, 1/2) lift of x; it should shrink as the
    Green truncation order grows.
    """

    family: GroupFamily
    values: dict
    window: tuple
    residual_max: float
    residuals: dict
    K: int
    notes: tuple = ()

    def value(self, w) -> float:
        if isinstance(w, GroupWord):
            key = w.normal
        elif isinstance(w, str):
            key = parse_word(self.family, w).normal
        else:
            key = tuple(w)
        return self.values[key]


def homoclinic_point(
    h: GroupRingElement, green: GreenTruncation, window_radius: int | None = None
) -> HomoclinicResult:
    """Evaluate x = (h * omega) mod 1 and report how harmonic it is.

    h must have integer coefficients.  The window is the word ball (support
    metric of the Green source f) on which every shifted lookup s^{-1} w
    stays inside the Green ball; pass window_radius to restrict it further.
    """
    fam = green.family
    f = green.source
    if h.family != fam:
        raise FamilyMismatchError("h and the Green truncation use different families")
    if not h.is_integer():
        raise ValueError("homoclinic construction needs integer coefficients in h")
    if fam.kind == "free-abelian" and fam.rank <= 2:
        raise UnsupportedFamilyError(
            "the Green series diverges for free-abelian rank <= 2; "
            "no homoclinic point is defined there"
        )
    gens = _support_generators(f)
    if window_radius is None:
        candidates = [GroupWord.from_normal(fam, nf) for nf in green.values]
    else:
        if window_radius > green.radius:
            raise WindowError(
                f"window radius {window_radius} exceeds the Green ball radius {green.radius}"
            )
        candidates = word_ball(fam, window_radius, generators=gens)
    h_items = list(h._coeffs.items())
    values = {}
    for w in candidates:
        total = 0.0
        ok = True
        for nf_s, cs in h_items:
            key = fam.multiply_normals(fam.invert_normal(nf_s), w.normal)
            v = green.values.get(key)
            if v is None:
                ok = False
                break
            total += cs * v
        if ok:
            values[w.normal] = total % 1.0
    if not values:
        raise WindowError("window is empty: h reaches outside the Green ball everywhere")
    if window_radius is not None and any(
        w.normal not in values for w in candidates
    ):
        raise WindowError(
            f"window radius {window_radius} plus the support of h exceeds the Green ball"
        )
    lift = {nf: ((x + 0.5) % 1.0) - 0.5 for nf, x in values.items()}
    residuals = {}
    f_items = list(f._coeffs.items())
    for nf_t in values:
        total = 0.0
        ok = True
        for nf_u, cu in f_items:
            key = fam.multiply_normals(nf_t, fam.invert_normal(nf_u))
            if key not in lift:
                ok = False
                break
            total += lift[key] * cu
        if ok:
            residuals[nf_t] = abs(total - round(total))
    residual_max = max(residuals.values()) if residuals else math.nan
    notes = () if residuals else ("window has no interior points; residual undefined",)
    return HomoclinicResult(
        family=fam,
        values=values,
        window=tuple(values.keys()),
        residual_max=residual_max,
        residuals=residuals,
        K=green.K,
        notes=notes + green.warnings,
    )


# ----- spectral-radius probe ------------------------------------------------


@dataclass(frozen=True)
class SpectralRadiusProbe:
    """Estimates of the walk-operator norm from even return probabilities.

    root_estimates[j] = ((mu^{2k_j})_e)^{1/(2k_j)} for k_values[j] = k_j.
    These converge from below but slowly (polynomial prefactors enter at
    rate log k / k).  ratio_estimates are sqrt of consecutive even-return
    ratios, and extrapolated_estimates apply one Richardson step to those;
    estimate is the headline value (median of the last extrapolated values,
    clipped to 1 since the norm of a probability never exceeds 1).
    """

    k_values: tuple
    root_estimates: tuple
    ratio_estimates: tuple
    extrapolated_estimates: tuple
    estimate: float
    amenable_like: bool
    tol: float
    engine: str

    def final_root_estimate(self) -> float:
        return self.root_estimates[-1]


def spectral_radius_probe(
    f: GroupRingElement, k_max: int, engine: str = "auto", tol: float = 0.05, **caps
) -> SpectralRadiusProbe:
    """Probe the spectral radius of mu through (mu^{2k})_e for 2k <= k_max."""
    if k_max < 2 or k_max % 2:
        raise ValueError("k_max must be an even integer >= 2")
    series = return_series(f, k_max, engine=engine, **caps)
    ks, roots, ratios = [], [], []
    prev = None
    for k in range(2, k_max + 1, 2):
        v = float(series.values[k])
        if v <= 0.0:
            prev = None
            continue
        ks.append(k)
        roots.append(v ** (1.0 / k))
        if prev is not None and prev > 0:
            ratios.append(math.sqrt(v / prev))
        else:
            ratios.append(math.nan)
        prev = v
    extrap = [math.nan] * len(ratios)
    for j in range(1, len(ratios)):
        a, b = ratios[j - 1], ratios[j]
        ma, mb = ks[j - 1] // 2, ks[j] // 2
        if not (math.isnan(a) or math.isnan(b)) and mb > ma:
            # one Richardson step for sequences r_m = rho (1 - c/m + O(1/m^2))
            extrap[j] = (mb * b - ma * a) / (mb - ma)
    finite = [x for x in extrap if not math.isnan(x)]
    if finite:
        headline = float(np.median(finite[-3:]))
    else:
        good_ratios = [x for x in ratios if not math.isnan(x)]
        headline = good_ratios[-1] if good_ratios else (roots[-1] if roots else math.nan)
    estimate = min(1.0, headline)
    return SpectralRadiusProbe(
        k_values=tuple(ks),
        root_estimates=tuple(roots),
        ratio_estimates=tuple(ratios),
        extrapolated_estimates=tuple(extrap),
        estimate=estimate,
        amenable_like=bool(estimate > 1.0 - tol),
        tol=tol,
        engine=series.engine,
    )
