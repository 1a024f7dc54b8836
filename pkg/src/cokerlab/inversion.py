"""Finite-truncation moment inversion over tuples of abelian group types.

The surjection-moment problem is solved exactly on a finite lattice:
the index set is all r-tuples of group types with bounded exponent and
rank (per prime; multi-prime lattices tensor the per-prime index sets
and surjection counts factor across primes).

The forward map C(H) = sum_G nu(G) prod_i #Sur(G_i, H_i) is triangular
with respect to componentwise containment of types, with diagonal
prod_i |Aut(H_i)|, so it inverts by back-substitution in exact rational
arithmetic.  Floats never enter; round-trips are exact equalities.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction

from .pgroup import (
    PGroupType,
    aut_order,
    c_exact,
    c_infinity,
    conjugate,
    dominates,
    is_prime,
    sur_count,
)

# A lattice point is a tuple of partitions, one per prime; an index is
# an arity-r tuple of points.


def _box_partitions(max_part: int, max_len: int) -> list:
    """All partitions with parts <= max_part and length <= max_len."""
    out = []

    def rec(prefix, largest, remaining):
        out.append(tuple(prefix))
        if remaining == 0:
            return
        for part in range(min(largest, max_part), 0, -1):
            prefix.append(part)
            rec(prefix, part, remaining - 1)
            prefix.pop()

    rec([], max_part, max_len)
    return out


@dataclass(frozen=True)
class TruncatedLattice:
    """Index lattice: types with exponent <= p_j^exponents[j], rank <= ranks[j]."""

    primes: tuple
    exponents: tuple
    ranks: tuple
    arity: int

    def __post_init__(self):
        if not self.primes:
            raise ValueError("at least one prime required")
        if len({*self.primes}) != len(self.primes):
            raise ValueError("primes must be distinct")
        for p in self.primes:
            if not is_prime(p):
                raise ValueError(f"{p} is not prime")
        if len(self.exponents) != len(self.primes) or len(self.ranks) != len(self.primes):
            raise ValueError("need one exponent and rank bound per prime")
        if any(k < 0 for k in self.exponents) or any(m < 0 for m in self.ranks):
            raise ValueError("bounds must be >= 0")
        if self.arity < 1:
            raise ValueError("arity must be >= 1")

    def points(self) -> list:
        """All lattice points in a fixed total order refining containment."""
        per_prime = [
            _box_partitions(k, m) for k, m in zip(self.exponents, self.ranks)
        ]
        pts = [tuple(combo) for combo in itertools.product(*per_prime)]
        pts.sort(key=self._point_key)
        return pts

    def tuples(self) -> list:
        """All arity-r index tuples, ordered by the induced total order."""
        pts = self.points()
        idx = [tuple(combo) for combo in itertools.product(pts, repeat=self.arity)]
        idx.sort(key=lambda t: tuple(self._point_key(pt) for pt in t))
        return idx

    @staticmethod
    def _point_key(point):
        # total size first: containment implies smaller size, so this
        # order refines the componentwise partial order
        return (sum(sum(lam) for lam in point), point)

    def groups(self, point) -> tuple:
        return tuple(PGroupType(p, lam) for p, lam in zip(self.primes, point))

    def render_point(self, point) -> str:
        return "|".join("+".join(map(str, lam)) if lam else "0" for lam in point)

    def parse_point(self, text: str):
        chunks = text.split("|")
        if len(chunks) != len(self.primes):
            raise ValueError(f"expected {len(self.primes)} prime components in {text!r}")
        point = []
        for chunk in chunks:
            if chunk.strip() in ("0", ""):
                point.append(())
            else:
                point.append(tuple(int(x) for x in chunk.split("+")))
        return tuple(point)


def point_contains(g_point, h_point) -> bool:
    return all(dominates(g, h) for g, h in zip(g_point, h_point))


def sur_point(lattice: TruncatedLattice, g_point, h_point) -> int:
    """#Sur between multi-prime types: the product over primes."""
    out = 1
    for p, g, h in zip(lattice.primes, g_point, h_point):
        out *= sur_count(PGroupType(p, g), PGroupType(p, h))
        if out == 0:
            return 0
    return out


def aut_point(lattice: TruncatedLattice, point) -> int:
    out = 1
    for p, lam in zip(lattice.primes, point):
        out *= aut_order(PGroupType(p, lam))
    return out


def _sur_tuple(lattice: TruncatedLattice, g_tuple, h_tuple) -> int:
    out = 1
    for g, h in zip(g_tuple, h_tuple):
        out *= sur_point(lattice, g, h)
        if out == 0:
            return 0
    return out


@dataclass
class MomentTable:
    """Exact mixed moments indexed by the lattice's tuples."""

    lattice: TruncatedLattice
    values: dict  # index tuple -> Fraction

    def check_complete(self) -> None:
        index = self.lattice.tuples()
        for t in index:
            if t not in self.values:
                raise ValueError(
                    f"moment table is missing lattice cell "
                    f"{tuple(self.lattice.render_point(pt) for pt in t)}"
                )
        if len(self.values) != len(index):
            extras = set(self.values) - set(index)
            raise ValueError(f"moment table has {len(extras)} cells outside the lattice")


def moments_from_distribution(dist: dict, lattice: TruncatedLattice) -> MomentTable:
    """C(H) = sum_G nu(G) prod_i #Sur(G_i, H_i), exactly."""
    index = lattice.tuples()
    support = set(index)
    for g in dist:
        if g not in support:
            raise ValueError(f"distribution point {g} lies outside the lattice")
        if dist[g] < 0:
            raise ValueError("distribution values must be >= 0")
    values = {}
    for h in index:
        total = Fraction(0)
        for g, mass in dist.items():
            if mass == 0:
                continue
            s = _sur_tuple(lattice, g, h)
            if s:
                total += Fraction(mass) * s
        values[h] = total
    return MomentTable(lattice, values)


def invert_moments(table: MomentTable, lattice: TruncatedLattice) -> dict:
    """Unique distribution on the lattice with the given moments.

    Back-substitution from the largest tuple downward; the system is
    triangular because #Sur(G, H) vanishes unless H's type is contained
    in G's, componentwise.  Exact: forward-then-invert is the identity.
    """
    table.check_complete()
    index = lattice.tuples()
    out: dict = {}
    for h in reversed(index):
        acc = table.values[h]
        for g, mass in out.items():
            if mass == 0 or g == h:
                continue
            s = _sur_tuple(lattice, g, h)
            if s:
                acc -= mass * s
        diag = 1
        for pt in h:
            diag *= aut_point(lattice, pt)
        out[h] = acc / diag
    return {h: out[h] for h in index}


@dataclass(frozen=True)
class GrowthReport:
    holds: bool
    worst_ratio: float
    worst_cell: tuple
    minimal_f: float


def check_moment_growth(table: MomentTable, f_const: float) -> GrowthReport:
    """Check C(H) <= prod_i prod_j F^k_j p_j^(sum conj(H_i^j)^2 / 2).

    The comparison is exact (both sides squared in rationals).  Also
    reports the smallest F that would make every cell pass.
    """
    lattice = table.lattice
    f2 = Fraction(f_const) ** 2
    holds = True
    worst_ratio = 0.0
    worst_cell = None
    minimal_f = 0.0
    kexp_total = lattice.arity * sum(lattice.exponents)
    for h, c in table.values.items():
        # exact square of the weight bound: prod p^(sum conj^2) and F^(2k)
        weight_sq = Fraction(1)
        f_pow = 0
        for pt in h:
            for p, lam, kj in zip(lattice.primes, pt, lattice.exponents):
                weight_sq *= Fraction(p) ** sum(x * x for x in conjugate(lam))
                f_pow += kj
        bound_sq = f2**f_pow * weight_sq
        c_sq = Fraction(c) ** 2
        ratio = float(c_sq / (Fraction(f_const) ** (2 * f_pow) * weight_sq)) ** 0.5 if c > 0 else 0.0
        if c_sq > bound_sq:
            holds = False
        if ratio > worst_ratio:
            worst_ratio = ratio
            worst_cell = h
        if c > 0 and kexp_total > 0:
            need = float(c_sq / weight_sq) ** (1.0 / (2 * f_pow)) if f_pow else float("inf")
            minimal_f = max(minimal_f, need)
    return GrowthReport(holds, worst_ratio, worst_cell, minimal_f)


def unit_moment_fixed_point(
    p: int, r: int, lattice: TruncatedLattice, tol: float = 1e-9, max_iter: int = 10_000
):
    """Weights forced by all-ones moments, via two-sided bound refinement.

    With beta = c_inf(p)^-r - 1 < 1 (precondition 2^(1/r) c_inf(p) > 1),
    the normalized weight alpha = nu * prod |Aut| satisfies
    alpha = 1 - sum_{G != H} alpha(G) w(G, H) with the w summing to
    beta, so an interval [lo, hi] containing alpha maps to
    [1 - hi*beta, 1 - lo*beta].  Iterating from [0, 1] contracts to
    alpha = c_inf(p)^r uniformly in H; the recovered distribution is
    alpha / prod_i |Aut(H_i)| on every lattice tuple.

    Returns (weights, trace) where trace is the list of (lo, hi) pairs.
    """
    if not is_prime(p):
        raise ValueError(f"p must be prime, got {p}")
    if r < 1:
        raise ValueError("r must be >= 1")
    cinf, _ = c_infinity(p, 1e-15)
    if 2.0 ** (1.0 / r) * cinf <= 1.0:
        raise ValueError(
            f"contraction precondition fails: 2^(1/{r}) * c_inf({p}) = "
            f"{2.0 ** (1.0 / r) * cinf:.6f} <= 1"
        )
    beta = cinf**-r - 1.0
    lo, hi = 0.0, 1.0
    trace = [(lo, hi)]
    for _ in range(max_iter):
        lo, hi = 1.0 - hi * beta, 1.0 - lo * beta
        lo = max(lo, 0.0)
        trace.append((lo, hi))
        if hi - lo < tol:
            break
    else:
        raise RuntimeError("interval iteration did not converge")
    alpha = Fraction((lo + hi) / 2.0)
    weights = {}
    for h in lattice.tuples():
        diag = 1
        for pt in h:
            diag *= aut_point(lattice, pt)
        weights[h] = alpha / diag
    return weights, trace


def write_moment_csv(table: MomentTable, fh) -> None:
    """One row per index tuple: the r rendered points, then "num/den"."""
    lattice = table.lattice
    cols = [f"coord_{i + 1}" for i in range(lattice.arity)]
    fh.write(",".join(cols + ["value"]) + "\n")
    for t in lattice.tuples():
        v = table.values[t]
        cells = [lattice.render_point(pt) for pt in t]
        fh.write(",".join(cells + [f"{v.numerator}/{v.denominator}"]) + "\n")


def read_moment_csv(fh, lattice: TruncatedLattice) -> MomentTable:
    header = fh.readline()
    if not header.startswith("coord_1"):
        raise ValueError("moment CSV must start with a coord_1,... header")
    values = {}
    for line in fh:
        line = line.strip()
        if not line:
            continue
        cells = line.split(",")
        if len(cells) != lattice.arity + 1:
            raise ValueError(f"expected {lattice.arity + 1} columns, got {line!r}")
        point_tuple = tuple(lattice.parse_point(c) for c in cells[:-1])
        num, _, den = cells[-1].partition("/")
        try:
            values[point_tuple] = Fraction(int(num), int(den) if den else 1)
        except ValueError as exc:
            raise ValueError(f"malformed rational {cells[-1]!r}") from exc
    table = MomentTable(lattice, values)
    table.check_complete()
    return table


def cohen_lenstra_truncated(p: int, lattice: TruncatedLattice, eps: float = 1e-15) -> dict:
    """Rational proxy of the weights c_inf(p)/|Aut| on an arity-1 lattice.

    c_inf(p) enters as an exact rational approximation with tail below
    eps, so downstream arithmetic stays rational.
    """
    if lattice.arity != 1 or lattice.primes != (p,):
        raise ValueError("expected a single-prime arity-1 lattice")
    # exact finite product long enough that the tail is below eps
    depth = 1
    while float(p) ** -depth / (1 - 1 / p) >= eps:
        depth += 1
    cinf = c_exact(p, depth)
    return {(pt,): cinf / aut_point(lattice, pt) for pt in lattice.points()}
