"""Exact surjection counts and pair moments for small finite groups.

Random quotients F_n / <r_1, ..., r_{n+u}> are never sampled: for Haar
random r, the image phi(r) is uniform on im(phi), so every expectation
here reduces to an exact finite sum over surjections.  Groups are given
by explicit multiplication tables (order <= 64), with subgroup lattices
and Moebius values built by closure enumeration.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

MAX_GROUP_ORDER = 64
PAIR_ENUM_GUARD = 10_000_000


@dataclass(frozen=True)
class FiniteGroupTable:
    """A finite group as a multiplication table on indices 0..N-1."""

    name: str
    table: tuple  # table[i][j] = index of g_i * g_j
    identity: int
    labels: tuple

    def __post_init__(self):
        n = len(self.table)
        if any(len(row) != n for row in self.table):
            raise ValueError("multiplication table must be square")
        e = self.identity
        if any(self.table[e][i] != i or self.table[i][e] != i for i in range(n)):
            raise ValueError("identity element does not act trivially")
        for i in range(n):
            if e not in (self.table[i][j] for j in range(n)):
                raise ValueError(f"element {i} has no inverse")
        for i in range(n):
            for j in range(n):
                for l in range(n):
                    if self.table[self.table[i][j]][l] != self.table[i][self.table[j][l]]:
                        raise ValueError("multiplication is not associative")

    @property
    def order(self) -> int:
        return len(self.table)

    def mul(self, a: int, b: int) -> int:
        return self.table[a][b]

    def inv(self, a: int) -> int:
        return next(b for b in range(self.order) if self.table[a][b] == self.identity)

    def element_order(self, a: int) -> int:
        x, n = a, 1
        while x != self.identity:
            x = self.table[x][a]
            n += 1
        return n



def _label_table(name, pairs, mul, identity_key) -> FiniteGroupTable:
    index = {x: i for i, x in enumerate(pairs)}
    table = tuple(
        tuple(index[mul(a, b)] for b in pairs) for a in pairs
    )
    return FiniteGroupTable(name, table, index[identity_key], tuple(str(x) for x in pairs))


def cyclic(m: int) -> FiniteGroupTable:
    if m < 1 or m > MAX_GROUP_ORDER:
        raise ValueError(f"cyclic order {m} out of range 1..{MAX_GROUP_ORDER}")
    return _label_table(f"C{m}", list(range(m)), lambda a, b: (a + b) % m, 0)


def dihedral(m: int) -> FiniteGroupTable:
    """Dihedral group of order 2m (symmetries of the m-gon)."""
    if m < 1 or 2 * m > MAX_GROUP_ORDER:
        raise ValueError(f"dihedral parameter {m} out of range")
    elems = [(r, s) for s in (0, 1) for r in range(m)]

    def mul(a, b):
        r1, s1 = a
        r2, s2 = b
        return ((r1 + (r2 if s1 == 0 else -r2)) % m, (s1 + s2) % 2)

    return _label_table(f"D{m}", elems, mul, (0, 0))


def symmetric3() -> FiniteGroupTable:
    perms = list(itertools.permutations(range(3)))

    def mul(a, b):
        return tuple(a[b[i]] for i in range(3))

    return _label_table("S3", perms, mul, (0, 1, 2))


def quaternion8() -> FiniteGroupTable:
    # elements +-1, +-i, +-j, +-k encoded as (axis, sign): axis 0 = 1
    elems = [(axis, sign) for axis in range(4) for sign in (0, 1)]
    axis_mul = {
        (1, 1): (0, 1), (2, 2): (0, 1), (3, 3): (0, 1),
        (1, 2): (3, 0), (2, 3): (1, 0), (3, 1): (2, 0),
        (2, 1): (3, 1), (3, 2): (1, 1), (1, 3): (2, 1),
    }

    def mul(a, b):
        (ax1, s1), (ax2, s2) = a, b
        if ax1 == 0:
            ax, s = ax2, 0
        elif ax2 == 0:
            ax, s = ax1, 0
        else:
            ax, s = axis_mul[(ax1, ax2)]
        return (ax, (s1 + s2 + s) % 2)

    return _label_table("Q8", elems, mul, (0, 0))


def direct_product(a: FiniteGroupTable, b: FiniteGroupTable) -> FiniteGroupTable:
    if a.order * b.order > MAX_GROUP_ORDER:
        raise ValueError(f"product order {a.order * b.order} exceeds {MAX_GROUP_ORDER}")
    pairs = [(i, j) for i in range(a.order) for j in range(b.order)]

    def mul(x, y):
        return (a.table[x[0]][y[0]], b.table[x[1]][y[1]])

    g = _label_table(f"{a.name}x{b.name}", pairs, mul, (a.identity, b.identity))
    return g


def build_group(spec: str) -> FiniteGroupTable:
    """Parse a group spec: C<m>, D<m>, S3, Q8, joined by 'x' for products."""
    parts = [s.strip() for s in spec.split("x")]
    groups = []
    for tok in parts:
        t = tok.upper()
        if t.startswith("C") and t[1:].isdigit():
            groups.append(cyclic(int(t[1:])))
        elif t.startswith("D") and t[1:].isdigit():
            groups.append(dihedral(int(t[1:])))
        elif t == "S3":
            groups.append(symmetric3())
        elif t == "Q8":
            groups.append(quaternion8())
        else:
            raise ValueError(f"unknown group token {tok!r} in spec {spec!r}")
    g = groups[0]
    for h in groups[1:]:
        g = direct_product(g, h)
    return g


# ---------------------------------------------------------------------------
# subgroup lattice


def generated_subgroup(g: FiniteGroupTable, gens) -> frozenset:
    out = {g.identity}
    frontier = [g.identity]
    gens = list(gens)
    while frontier:
        x = frontier.pop()
        for s in gens:
            y = g.table[x][s]
            if y not in out:
                out.add(y)
                frontier.append(y)
    return frozenset(out)


class SubgroupLattice:
    """All subgroups of a group, with inclusion, Moebius values, normality."""

    def __init__(self, g: FiniteGroupTable):
        self.group = g
        subs = {frozenset([g.identity])}
        frontier = [frozenset([g.identity])]
        while frontier:
            new = []
            for sub in frontier:
                for x in range(g.order):
                    if x in sub:
                        continue
                    ext = generated_subgroup(g, list(sub) + [x])
                    if ext not in subs:
                        subs.add(ext)
                        new.append(ext)
            frontier = new
        self.subgroups = sorted(subs, key=lambda s: (len(s), sorted(s)))
        self.index = {s: i for i, s in enumerate(self.subgroups)}
        self.top = self.index[frozenset(range(g.order))]
        self._mu = {}

    def leq(self, i: int, j: int) -> bool:
        return self.subgroups[i] <= self.subgroups[j]

    def is_normal(self, i: int) -> bool:
        g = self.group
        sub = self.subgroups[i]
        for x in range(g.order):
            xi = g.inv(x)
            if any(g.table[g.table[x][s]][xi] not in sub for s in sub):
                return False
        return True

    def moebius(self, i: int, j: int) -> int:
        """mu(K_i, K_j) of the subgroup lattice; 0 unless K_i <= K_j."""
        if not self.leq(i, j):
            return 0
        if i == j:
            return 1
        key = (i, j)
        if key not in self._mu:
            total = 0
            for l in range(len(self.subgroups)):
                if l != i and self.leq(i, l) and self.leq(l, j):
                    total += self.moebius(l, j)
            self._mu[key] = -total
        return self._mu[key]

    def join(self, i: int, j: int) -> int:
        gen = self.subgroups[i] | self.subgroups[j]
        return self.index[generated_subgroup(self.group, gen)]


@lru_cache(maxsize=None)
def subgroup_lattice(g: FiniteGroupTable) -> SubgroupLattice:
    return SubgroupLattice(g)


def rank(g: FiniteGroupTable) -> int:
    """Minimum number of generators, by layered joins over the lattice."""
    lat = subgroup_lattice(g)
    if g.order == 1:
        return 0
    cyc = {lat.index[generated_subgroup(g, [x])] for x in range(g.order)}
    layer = {lat.index[frozenset([g.identity])]}
    r = 0
    while lat.top not in layer:
        layer = {lat.join(i, c) for i in layer for c in cyc}
        r += 1
    return r


# ---------------------------------------------------------------------------
# surjections from free groups


def sur_free_count(n: int, h: FiniteGroupTable) -> int:
    """#Sur(F_n, H) = sum over subgroups K of mu(K, H) |K|^n."""
    if n < 0:
        raise ValueError("n must be >= 0")
    lat = subgroup_lattice(h)
    total = 0
    for i, sub in enumerate(lat.subgroups):
        mu = lat.moebius(i, lat.top)
        if mu:
            total += mu * len(sub) ** n
    return total


def expected_sur_random_quotient(n: int, u: int, h: FiniteGroupTable) -> Fraction:
    """E #Sur(F_n/<r_1..r_{n+u}>, H) = #Sur(F_n, H) / |H|^(n+u), exactly.

    Each surjection phi survives iff all n+u uniform relators die under
    phi, each with probability 1/|H|.  Tends to |H|^-u as n grows.
    """
    if u < 0:
        raise ValueError("u must be >= 0")
    return Fraction(sur_free_count(n, h), h.order ** (n + u))


def generating_tuples(g: FiniteGroupTable, n: int) -> list:
    """All n-tuples of elements generating the group (as index tuples)."""
    lat = subgroup_lattice(g)
    cyc = [lat.index[generated_subgroup(g, [x])] for x in range(g.order)]
    out = []
    bottom = lat.index[frozenset([g.identity])]

    def rec(prefix, span):
        if len(prefix) == n:
            if span == lat.top:
                out.append(tuple(prefix))
            return
        for x in range(g.order):
            prefix.append(x)
            rec(prefix, lat.join(span, cyc[x]))
            prefix.pop()

    rec([], bottom)
    return out


# ---------------------------------------------------------------------------
# free-group words


@dataclass(frozen=True)
class FreeGroupWord:
    """Freely reduced word over x_1..x_n: letters +i for x_i, -i for x_i^-1."""

    letters: tuple

    def __post_init__(self):
        reduced = []
        for l in self.letters:
            if l == 0:
                raise ValueError("letter 0 is not allowed")
            if reduced and reduced[-1] == -l:
                reduced.pop()
            else:
                reduced.append(int(l))
        object.__setattr__(self, "letters", tuple(reduced))

    def evaluate(self, images, g: FiniteGroupTable) -> int:
        """Image of the word under x_i -> images[i-1]."""
        out = g.identity
        for l in self.letters:
            x = images[abs(l) - 1]
            out = g.table[out][x if l > 0 else g.inv(x)]
        return out


def identity_words(count: int) -> list:
    return [FreeGroupWord(()) for _ in range(count)]


def inverse_basis_words(n: int, count: int) -> list:
    """b_i = x_i^-1 for i <= n, identity beyond (for relator counts > n)."""
    return [FreeGroupWord((-i,)) if i <= n else FreeGroupWord(()) for i in range(1, count + 1)]


# ---------------------------------------------------------------------------
# pair statistics


def _pair_context(n: int, h1: FiniteGroupTable, h2: FiniteGroupTable):
    if h1.order**n * h2.order**n > PAIR_ENUM_GUARD:
        raise ValueError(
            f"enumeration guard exceeded: |H1|^n * |H2|^n = "
            f"{h1.order ** n * h2.order ** n} > {PAIR_ENUM_GUARD}"
        )
    prod = direct_product(h1, h2)
    lat = subgroup_lattice(prod)
    pair_idx = {(a, b): a * h2.order + b for a in range(h1.order) for b in range(h2.order)}
    cyc = [
        lat.index[generated_subgroup(prod, [pair_idx[(a, b)]])]
        for a in range(h1.order)
        for b in range(h2.order)
    ]
    join_memo = {}

    def join(i, j):
        key = (i, j) if i <= j else (j, i)
        if key not in join_memo:
            join_memo[key] = lat.join(i, j)
        return join_memo[key]

    return prod, lat, pair_idx, cyc, join


def _span_index(lat, cyc, join, t1, t2, h2_order) -> int:
    span = 0  # index 0 is the trivial subgroup by the lattice sort order
    for a, b in zip(t1, t2):
        span = join(span, cyc[a * h2_order + b])
    return span


def pair_moment_random_quotients(
    n: int, u: int, h1: FiniteGroupTable, h2: FiniteGroupTable, b_words
) -> Fraction:
    """Exact E[#Sur(F_n/<r_i>, H1) * #Sur(F_n/<r_i b_i>, H2)].

    Equals the sum over surjection pairs (phi1, phi2) of
    [ (1, phi2(b_i)^-1) in im(phi1 x phi2) for all i ] / |im|^(n+u),
    since (phi1, phi2)(r) is uniform on the joint image for Haar r.
    """
    b_words = list(b_words)
    if len(b_words) != n + u:
        raise ValueError(f"need {n + u} words, got {len(b_words)}")
    prod, lat, pair_idx, cyc, join = _pair_context(n, h1, h2)
    gen1 = generating_tuples(h1, n)
    gen2 = generating_tuples(h2, n)
    members = [sub for sub in lat.subgroups]
    sizes = [len(sub) for sub in lat.subgroups]
    e1 = h1.identity
    total = Fraction(0)
    denom_cache = {}
    for t2 in gen2:
        targets = [
            pair_idx[(e1, h2.inv(w.evaluate(t2, h2)))] for w in b_words
        ]
        for t1 in gen1:
            span = _span_index(lat, cyc, join, t1, t2, h2.order)
            sub = members[span]
            if all(t in sub for t in targets):
                if span not in denom_cache:
                    denom_cache[span] = Fraction(1, sizes[span] ** (n + u))
                total += denom_cache[span]
    return total


def pair_set_count(
    n: int,
    h1: FiniteGroupTable,
    h2: FiniteGroupTable,
    g1: frozenset,
    g2: frozenset,
) -> int:
    """|S_{G1,G2}|: surjection pairs with phi1(ker phi2) = G1, phi2(ker phi1) = G2.

    phi1(ker phi2) = {a : (a, 1) in im(phi1 x phi2)} and symmetrically,
    so the count is an enumeration over pairs of generating tuples.
    Both G_i must be normal; the count is 0 when H1/G1 and H2/G2 are
    not isomorphic.
    """
    g1, g2 = frozenset(g1), frozenset(g2)
    for (h, g) in ((h1, g1), (h2, g2)):
        lat = subgroup_lattice(h)
        if g not in lat.index:
            raise ValueError(f"{sorted(g)} is not a subgroup of {h.name}")
        if not lat.is_normal(lat.index[g]):
            raise ValueError(f"{sorted(g)} is not normal in {h.name}")
    prod, lat, pair_idx, cyc, join = _pair_context(n, h1, h2)
    # slice subgroups of each joint image along the two factors
    e1, e2 = h1.identity, h2.identity
    slice1 = []
    slice2 = []
    for sub in lat.subgroups:
        slice1.append(frozenset(a for a in range(h1.order) if pair_idx[(a, e2)] in sub))
        slice2.append(frozenset(b for b in range(h2.order) if pair_idx[(e1, b)] in sub))
    count = 0
    gen1 = generating_tuples(h1, n)
    gen2 = generating_tuples(h2, n)
    for t1 in gen1:
        for t2 in gen2:
            span = _span_index(lat, cyc, join, t1, t2, h2.order)
            if slice1[span] == g1 and slice2[span] == g2:
                count += 1
    return count


def pair_set_bound(n: int, h1: FiniteGroupTable, h2: FiniteGroupTable, g2: frozenset) -> int:
    """Upper bound |H1|^n |G2|^n |H2|^rank(H1) for |S_{G1,G2}|."""
    return h1.order**n * len(g2) ** n * h2.order ** rank(h1)


# ---------------------------------------------------------------------------
# quotients and isomorphism testing (for the partition identity)


def quotient_table(h: FiniteGroupTable, nsub: frozenset) -> FiniteGroupTable:
    lat = subgroup_lattice(h)
    if nsub not in lat.index or not lat.is_normal(lat.index[nsub]):
        raise ValueError("quotient needs a normal subgroup")
    cosets = []
    seen = set()
    for x in range(h.order):
        coset = frozenset(h.table[x][s] for s in nsub)
        if coset not in seen:
            seen.add(coset)
            cosets.append(coset)
    rep = {c: min(c) for c in cosets}
    index = {c: i for i, c in enumerate(cosets)}

    def coset_of(x):
        return next(c for c in cosets if x in c)

    table = tuple(
        tuple(index[coset_of(h.table[rep[a]][rep[b]])] for b in cosets) for a in cosets
    )
    ident = index[coset_of(h.identity)]
    return FiniteGroupTable(f"{h.name}/N", table, ident, tuple(str(sorted(c)) for c in cosets))


def isomorphic(a: FiniteGroupTable, b: FiniteGroupTable) -> bool:
    if a.order != b.order:
        return False
    orders_a = sorted(a.element_order(x) for x in range(a.order))
    orders_b = sorted(b.element_order(x) for x in range(b.order))
    if orders_a != orders_b:
        return False
    r = rank(a)
    gens = _generating_sequence(a, r)
    # express every element of a as a word in the generators (BFS)
    parent = {a.identity: None}
    order = [a.identity]
    for x in order:
        for gi, g in enumerate(gens):
            y = a.table[x][g]
            if y not in parent:
                parent[y] = (x, gi)
                order.append(y)
    by_order = {}
    for x in range(b.order):
        by_order.setdefault(b.element_order(x), []).append(x)
    cand = [by_order.get(a.element_order(g), []) for g in gens]
    for images in itertools.product(*cand):
        phi = {a.identity: b.identity}
        for x in order[1:]:
            px, gi = parent[x]
            phi[x] = b.table[phi[px]][images[gi]]
        if len(set(phi.values())) != a.order:
            continue
        if all(
            phi[a.table[x][y]] == b.table[phi[x]][phi[y]]
            for x in range(a.order)
            for y in range(a.order)
        ):
            return True
    return False


def _generating_sequence(g: FiniteGroupTable, r: int) -> list:
    if r == 0:
        return []
    lat = subgroup_lattice(g)
    cyc = {x: lat.index[generated_subgroup(g, [x])] for x in range(g.order)}

    def rec(prefix, span):
        if span == lat.top:
            return list(prefix)
        if len(prefix) == r:
            return None
        for x in range(g.order):
            got = rec(prefix + [x], lat.join(span, cyc[x]))
            if got is not None:
                return got
        return None

    seq = rec([], lat.index[frozenset([g.identity])])
    assert seq is not None
    return seq
