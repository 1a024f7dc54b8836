"""Matrices over Z/p^k: sampling, Smith normal form, cokernel types.

Orientation convention: a matrix A with m rows and n columns presents
the module R^n / (row span of A) over R = Z/p^k.  An m x n matrix with
n > m therefore has at least n - m cokernel directions that saturate at
the working precision.  Random ensembles with u extra relations are
realized as (n + u) x n matrices; since entries are i.i.d. the
orientation does not affect any distribution.

Precision semantics: a Smith exponent e < k certifies an elementary
divisor p^e; e = k means "divisible by p^k", which at precision k cannot
be told apart from any larger power (saturated).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .pgroup import PGroupType, is_prime

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pure-numpy fallback below
    HAVE_NUMBA = False

HAAR = "haar-uniform"
CATEGORICAL = "categorical-mod-p"
SPARSE = "sparse-alpha"

_MAX_MODULUS = 2**31  # int64 products of two reduced entries stay exact


def philox_gen(seed: int, stream: int) -> np.random.Generator:
    """Counter-based generator keyed by (seed, stream).

    Identical keys give bit-identical streams, independent of any other
    stream, so trials can run in any order on any number of workers.
    """
    return np.random.Generator(np.random.Philox(key=[seed & (2**64 - 1), stream & (2**64 - 1)]))


def trial_stream(n: int, trial: int) -> int:
    """Stream id for (matrix size, trial index); injective for n < 2^31."""
    return (n << 32) | trial


@dataclass(frozen=True)
class EntrySampler:
    """Distribution of a single matrix entry in Z/p^k.

    Only the mod-p layer is shaped; higher digits are always uniform.

    kind = "haar-uniform": uniform on [0, p^k).
    kind = "categorical-mod-p": probs[r] = P(entry = r mod p); if eps is
        declared, every probs[r] must be <= 1 - eps.
    kind = "sparse-alpha": P(entry = 0 mod p) = 1 - alpha, the nonzero
        residues sharing alpha uniformly.
    """

    kind: str
    probs: tuple | None = None
    alpha: float | None = None
    eps: float | None = None

    def validate(self, p: int) -> None:
        if self.kind == HAAR:
            return
        if self.kind == CATEGORICAL:
            if self.probs is None or len(self.probs) != p:
                raise ValueError(f"categorical sampler needs {p} residue probabilities")
            if any(q < 0 for q in self.probs):
                raise ValueError("negative residue probability")
            if abs(sum(self.probs) - 1.0) > 1e-9:
                raise ValueError(f"residue probabilities sum to {sum(self.probs)}, not 1")
            if self.eps is not None and max(self.probs) > 1 - self.eps + 1e-12:
                raise ValueError(f"sampler is not {self.eps}-balanced: max prob {max(self.probs)}")
            return
        if self.kind == SPARSE:
            if self.alpha is None or not (0 <= self.alpha <= 1):
                raise ValueError(f"sparse sampler needs alpha in [0, 1], got {self.alpha}")
            return
        raise ValueError(f"unknown sampler kind {self.kind!r}")


def haar_sampler() -> EntrySampler:
    return EntrySampler(HAAR)


def categorical_sampler(probs, eps: float | None = None) -> EntrySampler:
    return EntrySampler(CATEGORICAL, probs=tuple(float(q) for q in probs), eps=eps)


def sparse_sampler(alpha: float) -> EntrySampler:
    return EntrySampler(SPARSE, alpha=float(alpha))


@dataclass(frozen=True)
class MatModPk:
    """Immutable m x n matrix with entries reduced mod p^k."""

    p: int
    k: int
    entries: np.ndarray

    def __post_init__(self):
        if not is_prime(self.p):
            raise ValueError(f"p must be prime, got {self.p}")
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")
        if self.p**self.k >= _MAX_MODULUS:
            raise ValueError(f"p^k = {self.p ** self.k} too large for exact int64 arithmetic")
        a = np.asarray(self.entries, dtype=np.int64)
        if a.ndim != 2:
            raise ValueError("entries must be a 2-d array")
        a = np.mod(a, self.p**self.k)
        a.setflags(write=False)
        object.__setattr__(self, "entries", a)

    @property
    def rows(self) -> int:
        return self.entries.shape[0]

    @property
    def cols(self) -> int:
        return self.entries.shape[1]

    @property
    def modulus(self) -> int:
        return self.p**self.k


def matrix(p: int, k: int, rows) -> MatModPk:
    return MatModPk(p, k, np.array(rows, dtype=np.int64))


def sample_matrix(
    sampler: EntrySampler, m: int, n: int, p: int, k: int, seed: int, stream: int
) -> MatModPk:
    """Draw an m x n matrix with i.i.d. entries from the sampler.

    Bit-identical for identical (sampler, shape, p, k, seed, stream).
    """
    sampler.validate(p)
    rng = philox_gen(seed, stream)
    pk = p**k
    shape = (m, n)
    if sampler.kind == HAAR:
        ent = rng.integers(0, pk, size=shape, dtype=np.int64)
    elif sampler.kind == CATEGORICAL:
        cum = np.cumsum(np.asarray(sampler.probs, dtype=np.float64))
        cum[-1] = 1.0
        res = np.searchsorted(cum, rng.random(size=shape), side="right").astype(np.int64)
        ent = res
        if k > 1:
            ent = res + p * rng.integers(0, p ** (k - 1), size=shape, dtype=np.int64)
    elif sampler.kind == SPARSE:
        u = rng.random(size=shape)
        nz = rng.integers(1, p, size=shape, dtype=np.int64)
        res = np.where(u < sampler.alpha, nz, 0)
        ent = res
        if k > 1:
            ent = res + p * rng.integers(0, p ** (k - 1), size=shape, dtype=np.int64)
    else:  # pragma: no cover - validate() already rejects
        raise ValueError(sampler.kind)
    return MatModPk(p, k, ent)


# ---------------------------------------------------------------------------
# Smith normal form


@dataclass(frozen=True)
class SnfResult:
    """Diagonal p-power exponents of UAV, ascending; exponent k = saturated."""

    exponents: tuple
    k: int

    @property
    def saturated(self) -> tuple:
        return tuple(e == self.k for e in self.exponents)


def _snf_exponents(a: np.ndarray, p: int, k: int) -> list:
    """Exponent list for an int64 matrix already reduced mod p^k.

    Unit-pivot elimination; when no unit entry remains every entry is
    divisible by p, so factor p out of the block and continue one
    precision level down.  Pivot search is deterministic: first unit in
    the current column, else first unit column by row-major scan.
    For p = 2 reductions use bitwise masks (two's-complement AND is
    exact for power-of-two moduli).
    """
    A = a.copy()
    m, n = A.shape
    r = min(m, n)
    exps: list = []
    offset = 0
    pk = p**k

    def reduce_inplace(view, modulus):
        if p == 2:
            np.bitwise_and(view, modulus - 1, out=view)
        else:
            np.mod(view, modulus, out=view)

    s = 0
    while s < r and offset < k:
        col = A[s:, s]
        units = (col & 1) if p == 2 else (col % p)
        nz = np.nonzero(units)[0]
        if nz.size == 0:
            sub = A[s:, s:]
            mask = ((sub & 1) if p == 2 else (sub % p)) != 0
            if not mask.any():
                A[s:, s:] = sub // p
                pk //= p
                offset += 1
                continue
            flat = int(np.argmax(mask))
            j = flat % sub.shape[1] + s
            A[:, [s, j]] = A[:, [j, s]]
            continue
        i = int(nz[0]) + s
        if i != s:
            A[[s, i], :] = A[[i, s], :]
        inv = pow(int(A[s, s]), -1, pk)
        below = A[s + 1 :, s]
        if below.size:
            factors = (below * inv) % pk
            prod = factors[:, None] * A[s, s:][None, :]
            tail = A[s + 1 :, s:]
            np.subtract(tail, prod, out=tail)
            reduce_inplace(tail, pk)
        exps.append(offset)
        s += 1
    exps.extend([k] * (r - s))
    return exps


if HAVE_NUMBA:

    @njit(cache=True)
    def _modinv(a, mod):  # pragma: no cover - exercised via _snf_kernel
        # extended Euclid; a is a unit mod `mod`
        r0, r1 = mod, a % mod
        t0, t1 = 0, 1
        while r1 != 0:
            q = r0 // r1
            r0, r1 = r1, r0 - q * r1
            t0, t1 = t1, t0 - q * t1
        return t0 % mod

    @njit(cache=True)
    def _snf_kernel(A, p, k):  # pragma: no cover - parity-tested against python path
        m, n = A.shape
        r = min(m, n)
        out = np.empty(r, np.int64)
        cnt = 0
        offset = 0
        pk = p**k
        pow2 = (p & (p - 1)) == 0
        mask = pk - 1
        # for small odd moduli, replace x*y % pk with a lookup table
        use_tab = (not pow2) and pk <= 256
        tab = np.zeros(pk * pk if use_tab else 1, np.int64)
        if use_tab:
            for x in range(pk):
                for y in range(pk):
                    tab[x * pk + y] = (x * y) % pk
        s = 0
        while s < r and offset < k:
            pi = -1
            pj = -1
            for i in range(s, m):
                if A[i, s] % p != 0:
                    pi = i
                    pj = s
                    break
            if pi < 0:
                for i in range(s, m):
                    for j in range(s + 1, n):
                        if A[i, j] % p != 0:
                            pi = i
                            pj = j
                            break
                    if pi >= 0:
                        break
            if pi < 0:
                for i in range(s, m):
                    for j in range(s, n):
                        A[i, j] //= p
                pk //= p
                mask = pk - 1
                if use_tab:
                    for x in range(pk):
                        for y in range(pk):
                            tab[x * pk + y] = (x * y) % pk
                offset += 1
                continue
            if pj != s:
                for i in range(m):
                    tmp = A[i, s]
                    A[i, s] = A[i, pj]
                    A[i, pj] = tmp
            if pi != s:
                for j in range(s, n):
                    tmp = A[s, j]
                    A[s, j] = A[pi, j]
                    A[pi, j] = tmp
            inv = _modinv(A[s, s], pk)
            if pow2:
                for i in range(s + 1, m):
                    f = (A[i, s] * inv) & mask
                    if f != 0:
                        for j in range(s, n):
                            A[i, j] = (A[i, j] - f * A[s, j]) & mask
            elif use_tab:
                for i in range(s + 1, m):
                    f = tab[A[i, s] * pk + inv]
                    if f != 0:
                        frow = f * pk
                        for j in range(s, n):
                            d = A[i, j] - tab[frow + A[s, j]]
                            A[i, j] = d + pk if d < 0 else d
            else:
                for i in range(s + 1, m):
                    f = (A[i, s] * inv) % pk
                    if f != 0:
                        for j in range(s, n):
                            A[i, j] = (A[i, j] - f * A[s, j]) % pk
            out[cnt] = offset
            cnt += 1
            s += 1
        for t in range(cnt, r):
            out[t] = k
        return out


def smith_normal_form(a: MatModPk) -> SnfResult:
    """Smith normal form over Z/p^k: UAV = diag(p^e) with e ascending."""
    if HAVE_NUMBA:
        work = np.ascontiguousarray(a.entries)
        exps = _snf_kernel(work.copy(), a.p, a.k)
        return SnfResult(tuple(int(e) for e in exps), a.k)
    return SnfResult(tuple(_snf_exponents(a.entries, a.p, a.k)), a.k)


def cokernel_type(a: MatModPk) -> tuple:
    """Type of R^cols / (row span of A), truncated at precision k.

    Returns (partition, saturated): the positive Smith exponents plus
    cols - rows extra parts equal to k when cols > rows; saturated is
    True when any part equals k, i.e. the true part could exceed p^k.
    """
    snf = smith_normal_form(a)
    parts = [e for e in snf.exponents if e > 0]
    if a.cols > a.rows:
        parts.extend([a.k] * (a.cols - a.rows))
    parts.sort(reverse=True)
    return tuple(parts), bool(parts and parts[0] == a.k)


def match_group(a: MatModPk, h: PGroupType) -> bool:
    """Decide cok(A) = H exactly; requires precision k >= exponent(H) + 1."""
    if a.p != h.p:
        raise ValueError(f"mismatched primes {a.p} != {h.p}")
    if a.k < h.exponent + 1:
        raise ValueError(
            f"precision too low: k = {a.k} cannot separate {h} (need k >= {h.exponent + 1})"
        )
    parts, saturated = cokernel_type(a)
    return not saturated and parts == h.parts


# ---------------------------------------------------------------------------
# transforms


def shift(a: MatModPk, t: int) -> MatModPk:
    """A + t*I (square only)."""
    if a.rows != a.cols:
        raise ValueError(f"shift needs a square matrix, got {a.rows} x {a.cols}")
    ent = a.entries + t * np.eye(a.rows, dtype=np.int64)
    return MatModPk(a.p, a.k, ent)


def add(a: MatModPk, b: MatModPk) -> MatModPk:
    if (a.p, a.k) != (b.p, b.k):
        raise ValueError("mismatched ring")
    if a.entries.shape != b.entries.shape:
        raise ValueError(f"shape mismatch {a.entries.shape} vs {b.entries.shape}")
    return MatModPk(a.p, a.k, a.entries + b.entries)


def scalar_p_shift(a: MatModPk) -> MatModPk:
    """A + p*I."""
    return shift(a, a.p)


def residual_rank(a: MatModPk) -> int:
    """Rank of (A mod p) over F_p by Gaussian elimination."""
    A = (a.entries % a.p).astype(np.int64)
    m, n = A.shape
    p = a.p
    rank = 0
    for c in range(n):
        piv = None
        for i in range(rank, m):
            if A[i, c]:
                piv = i
                break
        if piv is None:
            continue
        if piv != rank:
            A[[rank, piv], :] = A[[piv, rank], :]
        inv = pow(int(A[rank, c]), -1, p)
        A[rank, :] = (A[rank, :] * inv) % p
        col = A[rank + 1 :, c].copy()
        if col.size:
            A[rank + 1 :, :] = (A[rank + 1 :, :] - col[:, None] * A[rank, :][None, :]) % p
        rank += 1
        if rank == m:
            break
    return rank


B_KINDS = ("identity", "block-rank", "p-scalar", "zero")


def make_b_sequence(kind: str, n: int, u: int, p: int, k: int, d: int | None = None) -> MatModPk:
    """Deterministic (n+u) x n offset matrix with a declared mod-p rank.

    identity -> r_p = n; block-rank (needs d <= n) -> r_p = d;
    p-scalar -> r_p = 0; zero -> r_p = 0.
    """
    ent = np.zeros((n + u, n), dtype=np.int64)
    if kind == "identity":
        ent[: n, : n][np.diag_indices(n)] = 1
    elif kind == "block-rank":
        if d is None or not (0 <= d <= n):
            raise ValueError(f"block-rank needs 0 <= d <= n, got d={d}")
        ent[:d, :d][np.diag_indices(d)] = 1
    elif kind == "p-scalar":
        ent[: n, : n][np.diag_indices(n)] = p
    elif kind == "zero":
        pass
    else:
        raise ValueError(f"unknown B kind {kind!r}; expected one of {B_KINDS}")
    return MatModPk(p, k, ent)


# ---------------------------------------------------------------------------
# plain-text matrix literals


def write_matrix_text(a: MatModPk, path) -> None:
    """Header "p k m n", then the entries row-major, space-separated."""
    with open(path, "w") as fh:
        fh.write(f"{a.p} {a.k} {a.rows} {a.cols}\n")
        for row in a.entries:
            fh.write(" ".join(str(int(x)) for x in row) + "\n")


def read_matrix_text(path) -> MatModPk:
    with open(path) as fh:
        tokens = fh.read().split()
    if len(tokens) < 4:
        raise ValueError(f"matrix literal too short in {path}")
    p, k, m, n = (int(t) for t in tokens[:4])
    body = tokens[4:]
    if len(body) != m * n:
        raise ValueError(f"expected {m * n} entries, got {len(body)} in {path}")
    ent = np.array([int(t) for t in body], dtype=np.int64).reshape(m, n)
    return MatModPk(p, k, ent)
