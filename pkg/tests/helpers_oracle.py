"""Independent brute-force oracles used by the tests.

Everything here works at element level on explicit tuples: no counting
formula from the package is reused.  Generating-tuple counts enumerate
the full image-tuple space as a DFS with memoization on the subgroup
generated so far (identical totals to a plain nested loop, which
cross-checks the DFS on tiny groups).
"""

from __future__ import annotations

import itertools
from fractions import Fraction


def elements(p: int, mu: tuple) -> list:
    return list(itertools.product(*(range(p**a) for a in mu)))


def _zero(mu: tuple) -> tuple:
    return tuple(0 for _ in mu)


def _add(x, y, moduli):
    return tuple((a + b) % m for a, b, m in zip(x, y, moduli))


def _scale(x, c, moduli):
    return tuple((a * c) % m for a, m in zip(x, moduli))


def annihilator(p: int, mu: tuple, e: int) -> list:
    """Elements x of G_mu with p^e * x = 0, by scanning all elements."""
    moduli = tuple(p**a for a in mu)
    out = []
    for x in elements(p, mu):
        if _scale(x, p**e, moduli) == _zero(mu):
            out.append(x)
    return out


def span(p: int, mu: tuple, gens) -> frozenset:
    moduli = tuple(p**a for a in mu)
    out = {_zero(mu)}
    frontier = [_zero(mu)]
    gens = list(gens)
    while frontier:
        x = frontier.pop()
        for g in gens:
            y = _add(x, g, moduli)
            if y not in out:
                out.add(y)
                frontier.append(y)
    return frozenset(out)


def hom_count_oracle(p: int, lam: tuple, mu: tuple) -> int:
    """#Hom(G_lam, G_mu): choices of images killed by the right powers."""
    out = 1
    for e in lam:
        out *= len(annihilator(p, mu, e))
    return out


def sur_count_oracle(p: int, lam: tuple, mu: tuple) -> int:
    """#Sur(G_lam, G_mu): exhaustive image-tuple enumeration.

    DFS over generator images with memoization keyed on the subgroup
    generated so far; counts exactly the generating tuples.
    """
    moduli = tuple(p**a for a in mu)
    allowed = [tuple(annihilator(p, mu, e)) for e in lam]
    full = frozenset(elements(p, mu))
    join_cache = {}

    def join(sub: frozenset, x) -> frozenset:
        key = (sub, x)
        if key not in join_cache:
            if x in sub:
                join_cache[key] = sub
            else:
                cyc = []
                y = x
                while y != _zero(mu):
                    cyc.append(y)
                    y = _add(y, x, moduli)
                join_cache[key] = frozenset(
                    _add(s, c, moduli) for s in sub for c in [_zero(mu)] + cyc
                )
        return join_cache[key]

    memo = {}

    def count(i: int, sub: frozenset) -> int:
        if i == len(allowed):
            return 1 if sub == full else 0
        key = (i, sub)
        if key not in memo:
            memo[key] = sum(count(i + 1, join(sub, x)) for x in allowed[i])
        return memo[key]

    return count(0, frozenset([_zero(mu)]))


def sur_count_plain_loop(p: int, lam: tuple, mu: tuple) -> int:
    """Plain nested-loop version; feasible only for tiny image spaces."""
    allowed = [annihilator(p, mu, e) for e in lam]
    total = 1
    for a in allowed:
        total *= len(a)
    if total > 300_000:
        raise ValueError(f"plain loop too large: {total}")
    full = frozenset(elements(p, mu))
    count = 0
    for images in itertools.product(*allowed):
        if span(p, mu, images) == full:
            count += 1
    return count


def aut_order_oracle(p: int, lam: tuple) -> int:
    """#invertible endomorphisms: generating image tuples of G_lam itself."""
    return sur_count_oracle(p, lam, lam)


def all_partitions_of_order(max_total: int) -> list:
    """All partitions with |lambda| <= max_total (weakly decreasing)."""
    out = [()]

    def rec(prefix, largest, remaining):
        for part in range(min(largest, remaining), 0, -1):
            cand = prefix + [part]
            out.append(tuple(cand))
            rec(cand, part, remaining - part)

    rec([], max_total, max_total)
    return out


# ---------------------------------------------------------------------------
# exact-integer Smith normal form oracle (sympy over Z)


def snf_exponents_oracle(entries, p: int, k: int) -> tuple:
    """p-valuations (capped at k) of the integer SNF of the lifted matrix."""
    from sympy import Matrix, ZZ
    from sympy.matrices.normalforms import smith_normal_form

    m = len(entries)
    n = len(entries[0]) if m else 0
    if m == 0 or n == 0:
        return ()
    d = smith_normal_form(Matrix(entries), domain=ZZ)
    exps = []
    for i in range(min(m, n)):
        x = abs(int(d[i, i]))
        if x == 0:
            exps.append(k)
            continue
        e = 0
        while x % p == 0 and e < k:
            x //= p
            e += 1
        exps.append(e)
    return tuple(sorted(exps))


# ---------------------------------------------------------------------------
# free-group brute force (tiny cases)


def generating_tuple_count_plain(group, n: int) -> int:
    """Plain loop over all |G|^n image tuples, closure check per tuple."""
    if group.order**n > 300_000:
        raise ValueError("plain loop too large")
    count = 0
    full = frozenset(range(group.order))
    for images in itertools.product(range(group.order), repeat=n):
        out = {group.identity}
        frontier = [group.identity]
        while frontier:
            x = frontier.pop()
            for g in images:
                y = group.table[x][g]
                if y not in out:
                    out.add(y)
                    frontier.append(y)
        if frozenset(out) == full:
            count += 1
    return count


def expected_sur_plain(group, n: int, u: int) -> Fraction:
    return Fraction(generating_tuple_count_plain(group, n), group.order ** (n + u))
