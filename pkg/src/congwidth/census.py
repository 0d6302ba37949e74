"""Brute-force oracle over finite matrix groups.

Enumerates SL_n over a finite ring by closure under elementary generators
(cross-checked against the closed-form order where known), runs exhaustive
BFS for conjugacy-width minima, studies sum sets of subgroup elements modulo
m, and checks the explicit five-term sum decomposition.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .errors import BudgetExceeded, CentralInput, UnsupportedRing
from .matrices import (
    SqMatrix,
    determinant,
    elementary,
    identity,
    in_congruence_subgroup,
    is_central,
    mat_inv,
)
from .rings import KIND_ZMOD, Ideal, RingSpec


def sl_order(n: int, ring: RingSpec) -> int:
    """Closed-form |SL_n(Z/m)| (multiplicative over prime powers)."""
    if ring.kind != KIND_ZMOD:
        raise UnsupportedRing("order formula only implemented for Z/m")
    m = ring.modulus
    total = 1
    rest = m
    p = 2
    while rest > 1:
        if p * p > rest:
            p = rest
        if rest % p == 0:
            e = 0
            while rest % p == 0:
                rest //= p
                e += 1
            base = p ** (n * (n - 1) // 2)
            for k in range(2, n + 1):
                base *= p**k - 1
            total *= base * p ** ((e - 1) * (n * n - 1))
        else:
            p += 1 if p == 2 else 2
    return total


class _LazyMulRow:
    """Row of the multiplication table computed on demand (large groups)."""

    __slots__ = ("table", "a", "cache")

    def __init__(self, table: "FiniteGroupTable", a: int):
        self.table = table
        self.a = a
        self.cache: dict[int, int] = {}

    def __getitem__(self, b: int) -> int:
        hit = self.cache.get(b)
        if hit is None:
            t = self.table
            hit = t.index[(t.elements[self.a] * t.elements[b]).key()]
            self.cache[b] = hit
        return hit


class _LazyMul:
    __slots__ = ("rows",)

    def __init__(self, table: "FiniteGroupTable"):
        self.rows = [_LazyMulRow(table, a) for a in range(len(table.elements))]

    def __getitem__(self, a: int) -> _LazyMulRow:
        return self.rows[a]


@dataclass
class FiniteGroupTable:
    """All of SL_n over a finite ring, with index-based multiplication.

    Small groups carry a dense product table; past _DENSE_TABLE_LIMIT
    entries, multiplication falls back to hash-based lookups with caching.
    """

    ring: RingSpec
    n: int
    elements: list[SqMatrix]
    index: dict = field(repr=False)
    mul: object = field(repr=False)  # dense list-of-lists or _LazyMul
    inv: list[int] = field(repr=False)
    center: list[int] = field(repr=False)

    def __len__(self) -> int:
        return len(self.elements)

    def idx(self, g: SqMatrix) -> int:
        return self.index[g.key()]

    def subset_congruent(self, ideal: Ideal) -> list[int]:
        """Indices of elements congruent to I modulo the ideal."""
        return [
            k
            for k, g in enumerate(self.elements)
            if in_congruence_subgroup(g, ideal)
        ]

    def elementary_subgroup(self, ideal: Ideal) -> list[int]:
        """Closure of the elementary matrices with entries in the ideal."""
        gens = []
        for i in range(1, self.n + 1):
            for j in range(1, self.n + 1):
                if i == j:
                    continue
                for a in self.ring.residues():
                    if a.is_zero or not ideal.contains(a):
                        continue
                    gens.append(self.idx(elementary(self.ring, self.n, i, j, a)))
        e = self.idx(identity(self.ring, self.n))
        seen = {e}
        frontier = deque([e])
        while frontier:
            g = frontier.popleft()
            for s in gens:
                h = self.mul[g][s]
                if h not in seen:
                    seen.add(h)
                    frontier.append(h)
        return sorted(seen)

    def target_elementaries(self, i: int, j: int, ideal: Ideal) -> list[int]:
        """Indices of nontrivial I + a*e_ij with a in the ideal."""
        out = []
        for a in self.ring.residues():
            if a.is_zero or not ideal.contains(a):
                continue
            out.append(self.idx(elementary(self.ring, self.n, i, j, a)))
        return out


_TABLE_CACHE: dict = {}
_DENSE_TABLE_LIMIT = 4 * 10**6  # entries; larger groups multiply lazily


def enumerate_sl(n: int, ring: RingSpec, budget: int = 10**6) -> FiniteGroupTable:
    """Enumerate SL_n(ring) for finite rings by generator closure.

    Verifies closure and, for Z/m, cross-checks the classical order formula.
    Tables are cached per (n, ring); callers must not mutate them.
    """
    if not ring.is_finite:
        raise UnsupportedRing(f"{ring.descriptor()} is not finite")
    expected = sl_order(n, ring)
    if expected > budget:
        raise BudgetExceeded(f"|SL_{n}({ring.descriptor()})| = {expected} over budget {budget}")
    cached = _TABLE_CACHE.get((n, ring))
    if cached is not None:
        return cached

    gens = []
    for i in range(1, n + 1):
        for j in range(1, n + 1):
            if i == j:
                continue
            for a in ring.residues():
                if not a.is_zero:
                    gens.append(elementary(ring, n, i, j, a))

    one = identity(ring, n)
    elements = [one]
    index = {one.key(): 0}
    frontier = deque([one])
    while frontier:
        g = frontier.popleft()
        for s in gens:
            h = g * s
            key = h.key()
            if key not in index:
                index[key] = len(elements)
                elements.append(h)
                frontier.append(h)
                if len(elements) > budget:
                    raise BudgetExceeded(f"enumeration exceeded budget {budget}")

    assert len(elements) == expected, (
        f"closure found {len(elements)} elements, formula gives {expected}"
    )
    size = len(elements)
    inv = [index[mat_inv(g).key()] for g in elements]
    center = [k for k, g in enumerate(elements) if is_central(g)]
    table = FiniteGroupTable(ring, n, elements, index, None, inv, center)
    if size * size <= _DENSE_TABLE_LIMIT:
        mul = [[0] * size for _ in range(size)]
        for a in range(size):
            ga = elements[a]
            for b in range(size):
                mul[a][b] = index[(ga * elements[b]).key()]
        table.mul = mul
    else:
        table.mul = _LazyMul(table)
    _TABLE_CACHE[(n, ring)] = table
    return table


@dataclass(frozen=True)
class WidthResult:
    target: tuple[int, int]
    min_ops: int | None
    min_word: int | None

    @property
    def unreachable(self) -> bool:
        return self.min_ops is None or self.min_word is None


def width_bfs(
    table: FiniteGroupTable,
    sigma: SqMatrix | int,
    ideal: Ideal,
    targets: list[tuple[int, int]] | None = None,
) -> dict[tuple[int, int], WidthResult]:
    """Exact minima over the finite group, per target position (i, j):

    - minimum number of operations g -> sgs^-1 / [g, s] / [s, g] (s ranging
      over the whole elementary subgroup of the ideal) taking sigma to a
      nontrivial element of E_ij(ideal);
    - minimum word length over conjugates of sigma^{±1} reaching the same set.
    """
    sidx = sigma if isinstance(sigma, int) else table.idx(sigma)
    if sidx in table.center:
        raise CentralInput("width census needs a non-central element")
    n = table.n
    if targets is None:
        targets = [(i, j) for i in range(1, n + 1) for j in range(1, n + 1) if i != j]

    esub = table.elementary_subgroup(ideal)
    mul = table.mul
    inv = table.inv

    # BFS 1: operation count from sigma over the q-operation graph.
    dist_ops = {sidx: 0}
    frontier = deque([sidx])
    while frontier:
        g = frontier.popleft()
        d = dist_ops[g] + 1
        gi = inv[g]
        for s in esub:
            si = inv[s]
            conj = mul[mul[s][g]][si]
            commr = mul[mul[mul[g][s]][gi]][si]
            comml = mul[mul[mul[s][g]][si]][gi]
            for h in (conj, commr, comml):
                if h not in dist_ops:
                    dist_ops[h] = d
                    frontier.append(h)

    # BFS 2: word length over conjugates of sigma^{±1}.
    letters = set()
    for s in esub:
        si = inv[s]
        letters.add(mul[mul[s][sidx]][si])
        letters.add(mul[mul[s][inv[sidx]]][si])
    letters = sorted(letters)
    eidx = table.idx(identity(table.ring, n))
    dist_word = {eidx: 0}
    frontier = deque([eidx])
    while frontier:
        g = frontier.popleft()
        d = dist_word[g] + 1
        for let in letters:
            h = mul[g][let]
            if h not in dist_word:
                dist_word[h] = d
                frontier.append(h)

    results = {}
    for (i, j) in targets:
        tset = table.target_elementaries(i, j, ideal)
        ops = min((dist_ops[t] for t in tset if t in dist_ops), default=None)
        word = min(
            (dist_word[t] for t in tset if t in dist_word and dist_word[t] > 0),
            default=None,
        )
        results[(i, j)] = WidthResult((i, j), ops, word)
    return results


def width_census_csv(table: FiniteGroupTable, ideal: Ideal) -> str:
    """CSV census over every non-central element and every target.

    Unreachable targets (the generated subgroup misses the elementary group
    entirely, possible in dimension 2) appear as "unreachable" rows and are
    counted separately in the summary.
    """
    lines = ["sigma_index,min_ops,min_len,target"]
    all_ops = []
    all_words = []
    unreachable = 0
    for k in range(len(table.elements)):
        if k in table.center:
            continue
        res = width_bfs(table, k, ideal)
        for (i, j) in sorted(res):
            r = res[(i, j)]
            if r.unreachable:
                unreachable += 1
                lines.append(f"{k},unreachable,unreachable,{i}{j}")
                continue
            lines.append(f"{k},{r.min_ops},{r.min_word},{i}{j}")
            all_ops.append(r.min_ops)
            all_words.append(r.min_word)
    lines.append("summary {")
    lines.append(f"  group_order={len(table.elements)}")
    lines.append(f"  noncentral={len(table.elements) - len(table.center)}")
    lines.append(f"  unreachable_pairs={unreachable}")
    if all_ops:
        lines.append(f"  max_ops={max(all_ops)} mean_ops={sum(all_ops) / len(all_ops):.4f}")
        lines.append(f"  max_len={max(all_words)} mean_len={sum(all_words) / len(all_words):.4f}")
    lines.append("}")
    return "\n".join(lines) + "\n"


# -- sum sets ------------------------------------------------------------------


@dataclass(frozen=True)
class SumSetReport:
    modulus: int
    group_size: int
    sizes: tuple[int, ...]  # |S_l| for l = 1..M
    covered_at: int | None  # least l covering the target congruence subgroup
    target_level: int
    target_size: int

    def render(self) -> str:
        lines = [f"modulus={self.modulus} group_size={self.group_size} target_level={self.target_level}"]
        for l, s in enumerate(self.sizes, start=1):
            cov = "yes" if self.covered_at is not None and l >= self.covered_at else "no"
            lines.append(f"l={l} size={s} covered={cov}")
        lines.append(
            f"covered_at={self.covered_at}"
            if self.covered_at is not None
            else "covered_at=never-within-budget"
        )
        return "\n".join(lines) + "\n"


def sum_set_census(
    gens: list[SqMatrix],
    m: int,
    max_terms: int,
    target_level: int,
    budget: int = 10**6,
) -> SumSetReport:
    """Sums of at most max_terms elements of the subgroup generated by gens,
    computed modulo m; reports when the congruence subgroup at target_level
    (2x2 SL matrices congruent to I modulo target_level) is fully covered.

    This is the finite shadow of the sum-set question only: nothing is decided
    about the integral statement.
    """
    ring = RingSpec.integers_mod(m)
    if m**4 > budget:
        raise BudgetExceeded(f"universe size {m**4} over budget {budget}")
    one = identity(ring, 2)
    for g in gens:
        if g.ring != ring or determinant(g) != ring.one:
            raise ValueError("generators must be SL_2 matrices over Z/m")

    # subgroup closure
    group = {one.key(): one}
    frontier = deque([one])
    gen_list = gens + [mat_inv(g) for g in gens]
    while frontier:
        g = frontier.popleft()
        for s in gen_list:
            h = g * s
            if h.key() not in group:
                group[h.key()] = h
                frontier.append(h)

    def pack(mat: SqMatrix) -> int:
        (a, b), (c, d) = mat.key()
        return ((a * m + b) * m + c) * m + d

    gamma = np.array(sorted(pack(g) for g in group.values()), dtype=np.int64)

    def unpack_array(arr: np.ndarray) -> np.ndarray:
        out = np.empty((arr.size, 4), dtype=np.int64)
        rest = arr.copy()
        for pos in range(3, -1, -1):
            out[:, pos] = rest % m
            rest //= m
        return out

    gamma_digits = unpack_array(gamma)

    # target congruence subgroup: SL_2 matrices = I mod target_level, packed
    if m % target_level != 0:
        raise ValueError("target_level must divide the modulus")
    targets = set()
    lv = target_level % m
    reach = range(0, m, lv) if lv else [0]
    for da in reach:
        for db in reach:
            for dc in reach:
                for dd in reach:
                    mat = SqMatrix.from_raw(ring, [[1 + da, db], [dc, 1 + dd]])
                    if determinant(mat) == ring.one:
                        targets.add(pack(mat))
    target_arr = np.array(sorted(targets), dtype=np.int64)

    powers = np.array([m**3, m**2, m, 1], dtype=np.int64)
    covered = np.zeros(m**4, dtype=bool)
    covered[gamma] = True
    frontier_idx = gamma.copy()
    sizes = [int(covered.sum())]
    covered_at = 1 if covered[target_arr].all() else None
    for l in range(2, max_terms + 1):
        if covered_at is not None:
            break
        fd = unpack_array(frontier_idx)
        new_chunks = []
        for gd in gamma_digits:
            summed = (fd + gd) % m
            new_chunks.append(summed @ powers)
        cand = np.unique(np.concatenate(new_chunks))
        fresh = cand[~covered[cand]]
        covered[fresh] = True
        frontier_idx = fresh
        sizes.append(int(covered.sum()))
        if covered[target_arr].all():
            covered_at = l
    return SumSetReport(
        m, len(group), tuple(sizes), covered_at, target_level, len(targets)
    )


# -- the explicit five-term identity ------------------------------------------


def _mat2(e11, e12, e21, e22):
    return ((e11, e12), (e21, e22))


def _add2(x, y):
    return tuple(tuple(a + b for a, b in zip(rx, ry)) for rx, ry in zip(x, y))


def verify_sum_identity(m: int, a: int, b: int, c: int, d: int):
    """Check the five-term decomposition of [[1+m^2 a, mb], [mc, 1+m^2 d]]
    as (2m^2-3) I plus four explicit subgroup elements; exact integers.

    Returns (equal, lhs, rhs) with both sides as 2x2 integer tuples.
    """
    lhs = _mat2(1 + m * m * a, m * b, m * c, 1 + m * m * d)
    k = 2 * m * m - 3
    terms = [
        _mat2(k, 0, 0, k),
        _mat2(1, m * (b - 2), 0, 1),
        _mat2(1, 0, m * (c - a - d + 4), 1),
        _mat2(1 + m * m * (a - 2), m, m * (a - 2), 1),
        _mat2(1, m, m * (d - 2), 1 + m * m * (d - 2)),
    ]
    rhs = terms[0]
    for t in terms[1:]:
        rhs = _add2(rhs, t)
    return rhs == lhs, lhs, rhs


def sum_identity_terms(m: int, a: int, b: int, c: int, d: int):
    """The five summands of verify_sum_identity, for term-by-term inspection."""
    return [
        _mat2(2 * m * m - 3, 0, 0, 2 * m * m - 3),
        _mat2(1, m * (b - 2), 0, 1),
        _mat2(1, 0, m * (c - a - d + 4), 1),
        _mat2(1 + m * m * (a - 2), m, m * (a - 2), 1),
        _mat2(1, m, m * (d - 2), 1 + m * m * (d - 2)),
    ]
