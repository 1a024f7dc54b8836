"""Exact combinatorics of finite abelian p-groups.

A finite abelian p-group is identified with its type: the partition
lambda such that G = prod_i Z/p^lambda_i.  Everything here is computed
in exact integer/rational arithmetic; the only floats are the values of
the infinite products c_inf(p), which carry an explicit truncation
bound.

Counting conventions:

* ``hom_count(G, H) = prod_{i,j} p^min(lambda_i, mu_j)`` (classical
  product formula for Hom between abelian p-groups).
* ``sur_count`` is obtained from hom counts by inverting
  ``#Hom(G, H) = sum_{K <= H} #Sur(G, K)`` over isomorphism types of
  subgroups of H, with subgroup-type multiplicities found by explicit
  enumeration of the subgroups of H.
* ``aut_order`` uses the closed form
  ``p^(sum_i conj_i^2) * prod_i c_{conj_i - conj_{i+1}}(p)``
  where conj is the conjugate partition; evaluated over Fraction so the
  result is exactly integral.
"""

from __future__ import annotations

import itertools
import math
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

Partition = tuple  # weakly decreasing tuple of positive ints; () = trivial

MAX_SUBGROUP_ORDER_EXP = 8  # refuse to enumerate subgroups of H with |H| > p^8


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n < 4:
        return True
    if n % 2 == 0:
        return False
    d = 3
    while d * d <= n:
        if n % d == 0:
            return False
        d += 2
    return True


def check_partition(parts) -> Partition:
    """Validate and canonicalize a partition (weakly decreasing, parts >= 1)."""
    parts = tuple(int(x) for x in parts)
    for i, x in enumerate(parts):
        if x < 1:
            raise ValueError(f"partition parts must be >= 1, got {parts}")
        if i > 0 and parts[i - 1] < x:
            raise ValueError(f"partition parts must be weakly decreasing, got {parts}")
    return parts


def conjugate(parts: Partition) -> Partition:
    """Conjugate partition (transpose of the Young diagram)."""
    parts = check_partition(parts)
    if not parts:
        return ()
    return tuple(sum(1 for x in parts if x >= i) for i in range(1, parts[0] + 1))


def dominates(lam: Partition, mu: Partition) -> bool:
    """Containment of Young diagrams: lam_i >= mu_i for all i (zero-padded)."""
    if len(mu) > len(lam):
        return False
    return all(l >= m for l, m in zip(lam, mu))


@dataclass(frozen=True)
class PGroupType:
    """A finite abelian p-group up to isomorphism: prime plus type partition."""

    p: int
    parts: Partition

    def __post_init__(self):
        if not is_prime(self.p):
            raise ValueError(f"p must be prime, got {self.p}")
        object.__setattr__(self, "parts", check_partition(self.parts))

    @property
    def order(self) -> int:
        return self.p ** sum(self.parts)

    @property
    def rank(self) -> int:
        """p-rank: dim of G/pG over F_p, i.e. the number of parts."""
        return len(self.parts)

    @property
    def exponent(self) -> int:
        """Largest part: the group has exponent p^exponent."""
        return self.parts[0] if self.parts else 0

    @property
    def is_trivial(self) -> bool:
        return not self.parts

    def __str__(self):
        if not self.parts:
            return "1"
        return " x ".join(f"Z/{self.p}^{a}" if a > 1 else f"Z/{self.p}" for a in self.parts)


def trivial_group(p: int) -> PGroupType:
    return PGroupType(p, ())


# ---------------------------------------------------------------------------
# c-products


def c_exact(p: int, r: int) -> Fraction:
    """prod_{k=1}^{r} (1 - p^-k) as an exact rational."""
    if p < 2:
        raise ValueError(f"p must be >= 2, got {p}")
    if r < 0:
        raise ValueError(f"r must be >= 0, got {r}")
    out = Fraction(1)
    for k in range(1, r + 1):
        out *= 1 - Fraction(1, p**k)
    return out


def c_infinity(p: int, eps: float = 1e-12) -> tuple[float, float]:
    """Truncated c_inf(p) = prod_{k>=1}(1 - p^-k), with its tail bound.

    Returns (value, bound) where the true infinite product lies within
    value * (1 +- bound).  The tail prod_{k>K}(1-p^-k) differs from 1 by
    at most sum_{k>K} p^-k = p^-K / (p - 1) <= p^-K / (1 - 1/p).
    """
    if p < 2:
        raise ValueError(f"p must be >= 2, got {p}")
    if eps <= 0:
        raise ValueError("eps must be positive")
    value = 1.0
    k = 1
    while True:
        value *= 1.0 - float(p) ** -k
        tail = float(p) ** -k / (1.0 - 1.0 / p)
        if tail < eps:
            return value, tail
        k += 1


def c_partial(p: int, r, eps: float = 1e-12) -> float:
    """prod_{k=1}^{r} (1 - p^-k); r may be math.inf (truncated, tail < eps)."""
    if r == math.inf:
        return c_infinity(p, eps)[0]
    return float(c_exact(p, int(r)))


# ---------------------------------------------------------------------------
# Hom / Sur / Aut counting


def hom_count(g: PGroupType, h: PGroupType) -> int:
    """#Hom(G, H) = prod_{i,j} p^min(lambda_i, mu_j)."""
    if g.p != h.p:
        raise ValueError(f"mismatched primes {g.p} != {h.p}")
    e = sum(min(a, b) for a in g.parts for b in h.parts)
    return g.p**e


@lru_cache(maxsize=None)
def subgroup_type_counts(p: int, mu: Partition) -> tuple:
    """Multiplicities of subgroup isomorphism types of G_mu.

    Returns a tuple of (type partition, count) pairs covering every
    subgroup of G_mu, found by closure enumeration of the subgroups.
    Guarded to |G| <= p^MAX_SUBGROUP_ORDER_EXP.
    """
    mu = check_partition(mu)
    if sum(mu) > MAX_SUBGROUP_ORDER_EXP:
        raise ValueError(f"subgroup enumeration guard exceeded: |G| = {p}^{sum(mu)}")
    moduli = tuple(p**a for a in mu)
    elems = list(itertools.product(*(range(m) for m in moduli)))
    zero = tuple(0 for _ in moduli)

    def cyclic(x):
        out = {zero}
        y = x
        while y != zero:
            out.add(y)
            y = tuple((a + b) % m for a, b, m in zip(y, x, moduli))
        return frozenset(out)

    # subgroup generated by known subgroup S plus one element x is the
    # sumset S + <x> (abelian)
    seen = {frozenset([zero])}
    frontier = [frozenset([zero])]
    while frontier:
        new = []
        for sub in frontier:
            for x in elems:
                if x in sub:
                    continue
                cyc = cyclic(x)
                ext = frozenset(
                    tuple((a + b) % m for a, b, m in zip(s, c, moduli))
                    for s in sub
                    for c in cyc
                )
                if ext not in seen:
                    seen.add(ext)
                    new.append(ext)
        frontier = new

    counter = Counter()
    for sub in seen:
        counter[_subgroup_type(p, sub, moduli)] += 1
    return tuple(sorted(counter.items()))


def _subgroup_type(p: int, sub: frozenset, moduli: tuple) -> Partition:
    """Type of a subgroup given as an explicit element set."""
    zero = tuple(0 for _ in moduli)
    max_e = 0
    orders = []
    for x in sub:
        e = 0
        y = x
        while y != zero:
            y = tuple((a * p) % m for a, m in zip(y, moduli))
            e += 1
        orders.append(e)
        max_e = max(max_e, e)
    conj = []
    prev = 0
    for j in range(1, max_e + 1):
        n_j = sum(1 for e in orders if e <= j)
        ej = round(math.log(n_j, p))
        conj.append(ej - prev)
        prev = ej
    return conjugate(tuple(conj)) if conj else ()


@lru_cache(maxsize=None)
def _sur_count_cached(p: int, lam: Partition, mu: Partition) -> int:
    if not dominates(lam, mu):
        return 0
    total = hom_count(PGroupType(p, lam), PGroupType(p, mu))
    for tau, mult in subgroup_type_counts(p, mu):
        if tau != mu:
            total -= mult * _sur_count_cached(p, lam, tau)
    return total


def sur_count(g: PGroupType, h: PGroupType) -> int:
    """#Sur(G, H); zero exactly when the type of H is not contained in G's."""
    if g.p != h.p:
        raise ValueError(f"mismatched primes {g.p} != {h.p}")
    return _sur_count_cached(g.p, g.parts, h.parts)


@lru_cache(maxsize=None)
def _aut_order_cached(p: int, parts: Partition) -> int:
    conj = conjugate(parts)
    if not conj:
        return 1
    lam1 = parts[0]
    exp = sum(c * c for c in conj)
    out = Fraction(p) ** exp
    padded = conj + (0,)
    for i in range(lam1):
        out *= c_exact(p, padded[i] - padded[i + 1])
    assert out.denominator == 1, f"aut order not integral for {parts}"
    return int(out)


def aut_order(g: PGroupType) -> int:
    """|Aut(G)| via the p-group closed form (exact integer)."""
    return _aut_order_cached(g.p, g.parts)


# ---------------------------------------------------------------------------
# moment-growth weight


@dataclass(frozen=True)
class HalfPower:
    """Exact p^(half_exponent / 2); keeps half-integer exponents exact."""

    p: int
    half_exponent: int  # exponent numerator, in halves

    @property
    def value(self) -> float:
        return float(self.p) ** (self.half_exponent / 2.0)

    def __float__(self):
        return self.value

    def __mul__(self, other: "HalfPower") -> "HalfPower":
        if self.p != other.p:
            raise ValueError("mismatched primes")
        return HalfPower(self.p, self.half_exponent + other.half_exponent)

    @property
    def squared(self) -> int:
        """The exact integer p^half_exponent (this value squared)."""
        return self.p**self.half_exponent


def moment_weight(g: PGroupType) -> HalfPower:
    """Growth weight p^(sum_i conj_i^2 / 2) controlling moment determinacy."""
    return HalfPower(g.p, sum(c * c for c in conjugate(g.parts)))


# ---------------------------------------------------------------------------
# limiting densities


@dataclass(frozen=True)
class SymbolicDensity:
    """A density of the exact shape coeff * c_inf(p)^cinf_power.

    coeff is an exact rational, so float error enters only through the
    truncated evaluation of c_inf(p).
    """

    coeff: Fraction
    p: int
    cinf_power: int

    def value(self, eps: float = 1e-15) -> float:
        if self.coeff == 0:
            return 0.0
        return float(self.coeff) * c_infinity(self.p, eps)[0] ** self.cinf_power

    def __float__(self):
        return self.value()

    def render(self) -> str:
        if self.coeff == 0:
            return "0"
        if self.cinf_power == 0:
            return str(self.coeff)
        return f"({self.coeff})*cinf({self.p})^{self.cinf_power}"


def density_cokernel(h: PGroupType, u: int) -> SymbolicDensity:
    """Limiting P(cok = H) for n x (n+u) balanced matrices.

    prod_{k>=1}(1 - p^-k-u) / (|H|^u |Aut H|), with the numerator
    rewritten as c_inf(p) / c_u(p).
    """
    if u < 0:
        raise ValueError(f"u must be >= 0, got {u}")
    coeff = 1 / (c_exact(h.p, u) * h.order**u * aut_order(h))
    return SymbolicDensity(coeff, h.p, 1)


def density_joint_shifts(hs) -> SymbolicDensity:
    """Limiting joint density for cok(A + t_j I): prod_j c_inf(p)/|Aut H_j|."""
    hs = list(hs)
    if not hs:
        return SymbolicDensity(Fraction(1), 2, 0)
    p = hs[0].p
    if any(h.p != p for h in hs):
        raise ValueError("all groups must share the same prime")
    coeff = Fraction(1)
    for h in hs:
        coeff /= aut_order(h)
    return SymbolicDensity(coeff, p, len(hs))


def density_joint_pshift(h1: PGroupType, h2: PGroupType) -> SymbolicDensity:
    """Limiting joint density of (cok(A), cok(A + pI)).

    Zero when the p-ranks differ; otherwise
    p^(r^2) c_inf(p) c_r(p)^2 / (|Aut H1| |Aut H2|) with r the common rank.
    """
    if h1.p != h2.p:
        raise ValueError(f"mismatched primes {h1.p} != {h2.p}")
    p = h1.p
    if h1.rank != h2.rank:
        return SymbolicDensity(Fraction(0), p, 1)
    r = h1.rank
    coeff = Fraction(p) ** (r * r) * c_exact(p, r) ** 2
    coeff /= aut_order(h1) * aut_order(h2)
    return SymbolicDensity(coeff, p, 1)


# ---------------------------------------------------------------------------
# subspaces with surjective projections


def _rank_modp(rows: list, p: int, width: int) -> int:
    rows = [list(r) for r in rows]
    rank = 0
    for c in range(width):
        piv = next((i for i in range(rank, len(rows)) if rows[i][c] % p), None)
        if piv is None:
            continue
        rows[rank], rows[piv] = rows[piv], rows[rank]
        inv = pow(rows[rank][c], -1, p)
        rows[rank] = [(x * inv) % p for x in rows[rank]]
        for i in range(len(rows)):
            if i != rank and rows[i][c] % p:
                f = rows[i][c]
                rows[i] = [(a - f * b) % p for a, b in zip(rows[i], rows[rank])]
        rank += 1
    return rank


def _rref_bases(p: int, dim: int, k: int):
    """All k-dimensional subspaces of F_p^dim, one RREF basis each."""
    for pivots in itertools.combinations(range(dim), k):
        free_pos = []
        for i, pc in enumerate(pivots):
            for c in range(pc + 1, dim):
                if c not in pivots:
                    free_pos.append((i, c))
        for vals in itertools.product(range(p), repeat=len(free_pos)):
            rows = [[0] * dim for _ in range(k)]
            for i, pc in enumerate(pivots):
                rows[i][pc] = 1
            for (i, c), v in zip(free_pos, vals):
                rows[i][c] = v
            yield rows


def subspace_full_projection_count(p: int, r1: int, r2: int) -> int:
    """N(r1, r2): subspaces of F_p^r1 x F_p^r2 projecting onto both factors."""
    if r1 < 0 or r2 < 0:
        raise ValueError("ranks must be >= 0")
    if r1 + r2 > 8:
        raise ValueError(f"dimension guard exceeded: r1 + r2 = {r1 + r2} > 8")
    if not is_prime(p):
        raise ValueError(f"p must be prime, got {p}")
    dim = r1 + r2
    count = 0
    for k in range(max(r1, r2), dim + 1):
        for rows in _rref_bases(p, dim, k):
            left = [row[:r1] for row in rows]
            right = [row[r1:] for row in rows]
            if _rank_modp(left, p, r1) == r1 and _rank_modp(right, p, r2) == r2:
                count += 1
    return count
