"""Seeded Monte Carlo engine for joint cokernel distributions.

Each trial draws one matrix A_n keyed by (seed, n, trial) via a
counter-based generator, applies every transform of the plan to the
same draw (common random numbers), and records the tuple of truncated
cokernel types.  Counts merge by integer addition, so the result is
bit-identical for any worker count or scheduling order.

Truncated types containing a saturated part are binned under the
reserved "overflow" label for classification; mixed-moment estimation
keeps the saturated parts as exponent-k parts, which is exact for
targets of exponent dividing p^k.
"""

from __future__ import annotations

import math
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .padic import (
    EntrySampler,
    MatModPk,
    cokernel_type,
    make_b_sequence,
    philox_gen,
    sample_matrix,
    trial_stream,
)
from .pgroup import PGroupType, is_prime, sur_count

OVERFLOW = "overflow"

SHIFT = "shift"
PSHIFT = "pshift"
ADD = "add"


@dataclass(frozen=True)
class TransformSpec:
    """One transform applied to the sampled matrix before taking cok.

    kind = "shift": A + t*I (square, so u must be 0).
    kind = "pshift": A + p*I (square).
    kind = "add": A + B for the deterministic B of the given b_kind
        ("identity" | "block-rank" | "p-scalar" | "zero"), rank d for
        block-rank.
    """

    kind: str
    t: int = 0
    b_kind: str | None = None
    d: int | None = None

    def describe(self) -> str:
        if self.kind == SHIFT:
            return f"shift:{self.t}"
        if self.kind == PSHIFT:
            return "pshift"
        if self.kind == ADD:
            return f"add:{self.b_kind}" + (f":{self.d}" if self.b_kind == "block-rank" else "")
        raise ValueError(f"unknown transform kind {self.kind!r}")


def shift_transform(t: int) -> TransformSpec:
    return TransformSpec(SHIFT, t=t)


def pshift_transform() -> TransformSpec:
    return TransformSpec(PSHIFT)


def add_transform(b_kind: str, d: int | None = None) -> TransformSpec:
    return TransformSpec(ADD, b_kind=b_kind, d=d)


@dataclass(frozen=True)
class ExperimentPlan:
    """Declarative joint-cokernel experiment."""

    p: int
    k: int
    u: int
    n_schedule: tuple
    trials: int
    sampler: EntrySampler
    transforms: tuple
    targets: tuple = ()  # tuples of PGroupType, one coordinate per transform
    seed: int = 0

    def validate(self) -> None:
        if not is_prime(self.p):
            raise ValueError(f"p must be prime, got {self.p}")
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")
        if self.u < 0:
            raise ValueError(f"u must be >= 0, got {self.u}")
        if self.trials < 0:
            raise ValueError("trials must be >= 0")
        if not self.n_schedule or any(n < 1 for n in self.n_schedule):
            raise ValueError(f"bad n schedule {self.n_schedule}")
        if not self.transforms:
            raise ValueError("at least one transform required")
        self.sampler.validate(self.p)
        shifts = [tr.t for tr in self.transforms if tr.kind == SHIFT]
        if any(tr.kind in (SHIFT, PSHIFT) for tr in self.transforms) and self.u != 0:
            raise ValueError("shift transforms need square matrices (u = 0)")
        for i, t1 in enumerate(shifts):
            for t2 in shifts[i + 1 :]:
                if (t1 - t2) % self.p == 0:
                    raise ValueError(
                        f"shift constants {t1}, {t2} are congruent mod {self.p}"
                    )
        for target in self.targets:
            if len(target) != len(self.transforms):
                raise ValueError(
                    f"target {target} has {len(target)} coordinates, "
                    f"expected {len(self.transforms)}"
                )
            for h in target:
                if h.p != self.p:
                    raise ValueError(f"target group {h} has wrong prime")
                if self.k < h.exponent + 1:
                    raise ValueError(
                        f"precision too low for target {h}: k = {self.k} "
                        f"< exponent + 1 = {h.exponent + 1}"
                    )


def type_label(parts: tuple, saturated: bool) -> str:
    """Canonical cell label: "0" trivial, "2+1" for (2,1), or "overflow"."""
    if saturated:
        return OVERFLOW
    return "+".join(str(x) for x in parts) if parts else "0"


def target_label(target) -> tuple:
    return tuple(type_label(h.parts, False) for h in target)


@dataclass
class JointEmpirical:
    """Counted outcomes of a joint-cokernel experiment, per matrix size."""

    plan: ExperimentPlan
    counts: dict  # n -> {tuple of labels: count}
    trials: int

    def freq(self, n: int, cell: tuple) -> float:
        return self.counts[n].get(cell, 0) / self.trials if self.trials else 0.0

    def stderr(self, n: int, cell: tuple) -> float:
        f = self.freq(n, cell)
        return math.sqrt(f * (1.0 - f) / self.trials) if self.trials else 0.0

    def cells(self, n: int) -> list:
        return sorted(self.counts[n])

    def marginal(self, n: int, coord: int) -> dict:
        out: Counter = Counter()
        for cell, c in self.counts[n].items():
            out[cell[coord]] += c
        return dict(out)

    def overflow_mass(self, n: int) -> float:
        bad = sum(c for cell, c in self.counts[n].items() if OVERFLOW in cell)
        return bad / self.trials if self.trials else 0.0


def _transform_offsets(plan: ExperimentPlan, n: int) -> list:
    """Constant entry offsets realizing each transform at size n."""
    rows, cols = n + plan.u, n
    offsets = []
    for tr in plan.transforms:
        if tr.kind == SHIFT:
            off = tr.t * np.eye(n, dtype=np.int64)
        elif tr.kind == PSHIFT:
            off = plan.p * np.eye(n, dtype=np.int64)
        elif tr.kind == ADD:
            off = np.array(
                make_b_sequence(tr.b_kind, n, plan.u, plan.p, plan.k, tr.d).entries
            )
        else:
            raise ValueError(f"unknown transform kind {tr.kind!r}")
        if off.shape != (rows, cols):
            raise ValueError("transform shape mismatch")
        offsets.append(off)
    return offsets


def _trial_types(plan: ExperimentPlan, n: int, trial: int, offsets: list) -> list:
    a = sample_matrix(
        plan.sampler, n + plan.u, n, plan.p, plan.k, plan.seed, trial_stream(n, trial)
    )
    out = []
    for off in offsets:
        b = MatModPk(plan.p, plan.k, a.entries + off)
        out.append(cokernel_type(b))
    return out


def _count_chunk(plan: ExperimentPlan, n: int, lo: int, hi: int) -> Counter:
    offsets = _transform_offsets(plan, n)
    counter: Counter = Counter()
    for trial in range(lo, hi):
        types = _trial_types(plan, n, trial, offsets)
        counter[tuple(type_label(parts, sat) for parts, sat in types)] += 1
    return counter


def _moment_chunk(plan: ExperimentPlan, n: int, lo: int, hi: int, h_parts: tuple):
    offsets = _transform_offsets(plan, n)
    hs = [PGroupType(plan.p, parts) for parts in h_parts]
    total = 0
    total_sq = 0
    for trial in range(lo, hi):
        types = _trial_types(plan, n, trial, offsets)
        v = 1
        for (parts, _sat), h in zip(types, hs):
            v *= sur_count(PGroupType(plan.p, parts), h)
            if v == 0:
                break
        total += v
        total_sq += v * v
    return total, total_sq


def _chunks(trials: int, workers: int) -> list:
    if trials == 0:
        return []
    per = max(1, math.ceil(trials / (workers * 8)) if workers > 1 else trials)
    return [(lo, min(lo + per, trials)) for lo in range(0, trials, per)]


def _map_chunks(fn, argsets, workers: int):
    if workers <= 1 or len(argsets) <= 1:
        return [fn(*args) for args in argsets]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, *zip(*argsets)))


def run_joint_cokernel(plan: ExperimentPlan, workers: int = 1) -> JointEmpirical:
    """Run the plan; deterministic in (plan, seed) for any worker count."""
    plan.validate()
    counts = {}
    for n in plan.n_schedule:
        argsets = [(plan, n, lo, hi) for lo, hi in _chunks(plan.trials, workers)]
        merged: Counter = Counter()
        for c in _map_chunks(_count_chunk, argsets, workers):
            merged.update(c)
        counts[n] = dict(merged)
    return JointEmpirical(plan, counts, plan.trials)


def mixed_moment_by_n(plan: ExperimentPlan, h_tuple, workers: int = 1) -> dict:
    """Per-n sample mean and stderr of prod_j #Sur(cok_j, H_j)."""
    plan.validate()
    if len(h_tuple) != len(plan.transforms):
        raise ValueError("moment target arity must match transform count")
    for h in h_tuple:
        if h.p != plan.p:
            raise ValueError(f"moment target {h} has wrong prime")
        if plan.k < h.exponent:
            raise ValueError(
                f"precision too low for moment target {h}: need k >= {h.exponent}"
            )
    h_parts = tuple(h.parts for h in h_tuple)
    out = {}
    for n in plan.n_schedule:
        argsets = [(plan, n, lo, hi, h_parts) for lo, hi in _chunks(plan.trials, workers)]
        total = 0
        total_sq = 0
        for s, sq in _map_chunks(_moment_chunk, argsets, workers):
            total += s
            total_sq += sq
        if plan.trials == 0:
            out[n] = (0.0, 0.0)
            continue
        mean = total / plan.trials
        var = max(total_sq / plan.trials - mean * mean, 0.0)
        out[n] = (mean, math.sqrt(var / plan.trials))
    return out


def estimate_mixed_moment(plan: ExperimentPlan, h_tuple, workers: int = 1) -> tuple:
    """(estimate, stderr) at the largest size of the schedule."""
    table = mixed_moment_by_n(plan, h_tuple, workers=workers)
    return table[max(plan.n_schedule)]


# ---------------------------------------------------------------------------
# comparison against theory


@dataclass(frozen=True)
class CellComparison:
    n: int
    cell: tuple
    count: int
    freq: float
    stderr: float
    theory: float | None
    z: float | None


@dataclass
class ComparisonReport:
    rows: list
    z_threshold: float
    unclassified_mass: dict  # n -> observed mass on cells without theory
    overflow_mass: dict

    @property
    def max_abs_z(self) -> float:
        zs = [abs(r.z) for r in self.rows if r.z is not None]
        return max(zs) if zs else 0.0

    @property
    def passed(self) -> bool:
        return all(r.z is None or abs(r.z) <= self.z_threshold for r in self.rows)


def zscore(freq: float, stderr: float, theory: float) -> float:
    if stderr == 0.0:
        return 0.0 if freq == theory else math.inf if freq > theory else -math.inf
    return (freq - theory) / stderr


def compare_with_theory(
    emp: JointEmpirical, theory: dict, z_threshold: float = 3.0
) -> ComparisonReport:
    """Per-cell z-scores of empirical frequencies against limit values.

    `theory` maps label tuples to predicted probabilities.  Observed
    cells without a prediction are reported with empty theory/z and
    contribute to the unclassified mass.
    """
    rows = []
    unclassified = {}
    overflow = {}
    for n in sorted(emp.counts):
        seen = set()
        for cell in sorted(set(emp.cells(n)) | set(theory)):
            count = emp.counts[n].get(cell, 0)
            f = emp.freq(n, cell)
            se = emp.stderr(n, cell)
            q = theory.get(cell)
            z = zscore(f, se, q) if q is not None else None
            rows.append(CellComparison(n, cell, count, f, se, q, z))
            seen.add(cell)
        unclassified[n] = sum(
            c for cell, c in emp.counts[n].items() if cell not in theory
        ) / max(emp.trials, 1)
        overflow[n] = emp.overflow_mass(n)
    return ComparisonReport(rows, z_threshold, unclassified, overflow)


# ---------------------------------------------------------------------------
# sparse-ensemble failure probe


def sparse_zero_row_prob(n: int, u: int, alpha: float) -> float:
    """Exact finite-n P(some row is 0 mod p): 1 - (1 - (1-a)^(n+u))^n."""
    return 1.0 - (1.0 - (1.0 - alpha) ** (n + u)) ** n


def sparse_failure_probe(
    n_schedule, u: int, p: int = 2, trials: int = 10_000, seed: int = 0, alpha=None
) -> dict:
    """Empirical frequency of an all-zero mod-p row, per matrix size.

    alpha defaults to the threshold schedule log(n)/n.  Per-row nonzero
    counts are Binomial(n+u, alpha) since entries are i.i.d., so rows
    are simulated at that level; this is distribution-exact.
    """
    out = {}
    for n in n_schedule:
        a = math.log(n) / n if alpha is None else float(alpha)
        if not 0 <= a <= 1:
            raise ValueError(f"alpha out of range at n={n}: {a}")
        rng = philox_gen(seed, trial_stream(n, 0))
        hits = 0
        done = 0
        while done < trials:
            batch = min(2000, trials - done)
            nonzero_counts = rng.binomial(n + u, a, size=(batch, n))
            hits += int(np.count_nonzero((nonzero_counts == 0).any(axis=1)))
            done += batch
        f = hits / trials if trials else 0.0
        out[n] = (f, math.sqrt(f * (1 - f) / trials) if trials else 0.0)
    return out
