"""Reduction of non-central congruence matrices to prescribed elementary
positions with a certified operation and word-length budget.

A reduction trace records, step by step, transformations of the forms
g -> s g s^-1, g -> [g, s], g -> [s, g] with s drawn from the subgroup
generated by elementary matrices with entries in the ideal q.  The word
length of the current element (as a product of conjugates of the input and
its inverse) starts at 1, is preserved by conjugation, and doubles under
either commutator kind, so a trace of at most 9 steps certifies a word of
length at most 2**9 = 512.

Dimension 2 is served separately by a unit-conjugation shortcut whose
conjugators live in the full congruence subgroup; its traces additionally
use an "append" step (g -> g * s sigma^e s^-1) that adds one letter.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, replace

from .errors import (
    CentralInput,
    NoUnitFound,
    NotCongruent,
    NotSL,
    ReplayMismatch,
    SearchExhausted,
    TraceFormatError,
    TrivialInput,
    UnsupportedRing,
    ZeroIdeal,
)
from .factorization import ElemFactor, ElemFactorization, factorization_from_factors
from .matrices import (
    SqMatrix,
    determinant,
    elementary,
    embed_affine,
    format_matrix,
    identity,
    in_congruence_subgroup,
    is_central,
    mat_inv,
    parse_matrix,
)
from .rings import (
    KIND_POLY,
    KIND_Z,
    KIND_ZMOD,
    Ideal,
    RingElement,
    RingSpec,
    exact_div,
    format_element,
    is_unimodular,
    is_unit,
    parse_element,
    unit_check,
)

CONJUGATE = "Conjugate"
COMM_RIGHT = "CommRight"  # g -> [g, s]
COMM_LEFT = "CommLeft"  # g -> [s, g]
APPEND = "Append"  # g -> g * (s sigma^e s^-1)

MAX_STEPS = 9
MAX_WORD = 512
STAGE_BOUNDS = {"affine": 4, "translate": 1, "single": 1, "relocate": 3}


@dataclass(frozen=True)
class QOperation:
    """One trace transformation, with a membership witness for s.

    s_member "elem" means s carries an elementary factorization whose factors
    all have off-diagonal entry in the ideal; "congruence" means s is only
    certified to lie in the congruence subgroup (dimension-2 shortcut).
    """

    kind: str
    s: SqMatrix
    s_factors: ElemFactorization | None = None
    s_member: str = "elem"
    exp: int = 1  # Append only


@dataclass(frozen=True)
class TraceStep:
    op: QOperation
    result: SqMatrix
    word_length: int
    case: str


@dataclass(frozen=True)
class ReductionTrace:
    kind: str  # "reduce" | "sl2"
    input: SqMatrix
    ideal: Ideal
    target: object  # (i, j) for "reduce", "E12"/"E21" for "sl2"
    steps: tuple[TraceStep, ...]
    seed: int = 0

    @property
    def output(self) -> SqMatrix:
        return self.steps[-1].result if self.steps else self.input

    @property
    def word_length(self) -> int:
        return self.steps[-1].word_length if self.steps else 1

    def stage_counts(self) -> dict[str, int]:
        counts: dict[str, int] = {}
        for st in self.steps:
            stage = st.case.split(".", 1)[0]
            counts[stage] = counts.get(stage, 0) + 1
        return counts


def apply_qop(op: QOperation, g: SqMatrix, sigma: SqMatrix | None = None) -> SqMatrix:
    if op.kind == CONJUGATE:
        return op.s * g * mat_inv(op.s)
    if op.kind == COMM_RIGHT:
        return g * op.s * mat_inv(g) * mat_inv(op.s)
    if op.kind == COMM_LEFT:
        return op.s * g * mat_inv(op.s) * mat_inv(g)
    if op.kind == APPEND:
        if sigma is None:
            raise ValueError("append step needs the trace input")
        letter = op.s * (sigma ** op.exp) * mat_inv(op.s)
        return g * letter
    raise ValueError(f"unknown op kind {op.kind!r}")


def _next_word_length(kind: str, wl: int) -> int:
    if kind == CONJUGATE:
        return wl
    if kind in (COMM_RIGHT, COMM_LEFT):
        return 2 * wl
    if kind == APPEND:
        return wl + 1
    raise ValueError(f"unknown op kind {kind!r}")


def expand_trace_word(trace: ReductionTrace) -> list[tuple[SqMatrix, int]]:
    """Explicit word over conjugates of the input: a list of (s, exp) letters
    whose product s1 sigma^e1 s1^-1 * ... equals the trace output."""
    word: list[tuple[SqMatrix, int]] = [(identity(trace.input.ring, trace.input.n), 1)]
    for st in trace.steps:
        op = st.op
        if op.kind == CONJUGATE:
            word = [(op.s * c, e) for (c, e) in word]
        elif op.kind == COMM_RIGHT:
            word = word + [(op.s * c, -e) for (c, e) in reversed(word)]
        elif op.kind == COMM_LEFT:
            word = [(op.s * c, e) for (c, e) in word] + [(c, -e) for (c, e) in reversed(word)]
        elif op.kind == APPEND:
            word = word + [(op.s, op.exp)]
    return word


def word_product(trace: ReductionTrace) -> SqMatrix:
    out = identity(trace.input.ring, trace.input.n)
    sigma = trace.input
    for s, e in expand_trace_word(trace):
        out = out * (s * (sigma ** e) * mat_inv(s))
    return out


# -- trace validation ----------------------------------------------------------


def validate_trace(trace: ReductionTrace):
    """Replay a trace and check every certified invariant; raise on failure."""
    q = trace.ideal
    g = trace.input
    wl = 1
    for k, st in enumerate(trace.steps, start=1):
        op = st.op
        if op.s_member == "elem":
            if op.s_factors is None:
                raise ReplayMismatch(f"step {k}: missing elementary witness")
            if op.s_factors.product() != op.s:
                raise ReplayMismatch(f"step {k}: witness does not multiply to s")
            for f in op.s_factors.factors:
                if not q.contains(f.a) or f.a.is_zero:
                    raise ReplayMismatch(
                        f"step {k}: witness factor entry {format_element(f.a)} not a nonzero ideal element"
                    )
        elif op.s_member == "congruence":
            if not in_congruence_subgroup(op.s, q):
                raise ReplayMismatch(f"step {k}: s is not congruent to I mod the ideal")
        else:
            raise ReplayMismatch(f"step {k}: unknown membership tag {op.s_member!r}")
        g = apply_qop(op, g, trace.input)
        if g != st.result:
            raise ReplayMismatch(f"replay mismatch at step {k}")
        wl = _next_word_length(op.kind, wl)
        if wl != st.word_length:
            raise ReplayMismatch(f"step {k}: word-length ledger expected {wl}, recorded {st.word_length}")

    out = trace.output
    one = identity(out.ring, out.n)
    if trace.kind == "reduce":
        if len(trace.steps) > MAX_STEPS:
            raise ReplayMismatch(f"{len(trace.steps)} steps exceed the budget {MAX_STEPS}")
        if trace.word_length > MAX_WORD:
            raise ReplayMismatch(f"word length {trace.word_length} exceeds {MAX_WORD}")
        for stage, count in trace.stage_counts().items():
            if count > STAGE_BOUNDS.get(stage, 0):
                raise ReplayMismatch(f"stage {stage} used {count} operations")
        i, j = trace.target
        diff = out - one
        for r in range(1, out.n + 1):
            for c in range(1, out.n + 1):
                e = diff.e(r, c)
                if (r, c) == (i, j):
                    if e.is_zero or not q.contains(e):
                        raise ReplayMismatch("output entry is zero or outside the ideal")
                elif not e.is_zero:
                    raise ReplayMismatch(f"output has support off the target at ({r}, {c})")
    elif trace.kind == "sl2":
        if trace.word_length > 4:
            raise ReplayMismatch(f"word length {trace.word_length} exceeds 4")
        i, j = (1, 2) if trace.target == "E12" else (2, 1)
        diff = out - one
        for r in range(1, 3):
            for c in range(1, 3):
                e = diff.e(r, c)
                if (r, c) == (i, j):
                    if e.is_zero or not q.contains(e):
                        raise ReplayMismatch("output entry is zero or outside the ideal")
                elif not e.is_zero:
                    raise ReplayMismatch(f"output has support off {trace.target}")
    elif trace.kind != "partial":
        raise ReplayMismatch(f"unknown trace kind {trace.kind!r}")


# -- builder -------------------------------------------------------------------


class _Builder:
    def __init__(self, sigma: SqMatrix, q: Ideal, kind: str = "reduce", seed: int = 0):
        self.sigma = sigma
        self.q = q
        self.kind = kind
        self.seed = seed
        self.g = sigma
        self.wl = 1
        self.steps: list[TraceStep] = []

    def apply(self, kind: str, s: SqMatrix, factors, case: str, member: str = "elem", exp: int = 1):
        fac = None
        if member == "elem":
            fac = factorization_from_factors(s.ring, s.n, factors)
            assert fac.product() == s, "witness must multiply back to s"
        op = QOperation(kind, s, fac, member, exp)
        self.g = apply_qop(op, self.g, self.sigma)
        self.wl = _next_word_length(kind, self.wl)
        self.steps.append(TraceStep(op, self.g, self.wl, case))

    def trace(self, target) -> ReductionTrace:
        return ReductionTrace(self.kind, self.sigma, self.q, target, tuple(self.steps), self.seed)


# -- stable-range shift ----------------------------------------------------------


@dataclass(frozen=True)
class SRWitness:
    """A shift t with (a_1 + t_1 a_n^2, ..., a_{n-1} + t_{n-1} a_n^2) unimodular."""

    t: tuple[RingElement, ...]
    shifted: tuple[RingElement, ...]
    bezout: tuple[RingElement, ...]


def _shell_elements(ring: RingSpec, shell: int) -> list[RingElement]:
    """Elements newly available at a given search shell, deterministic order."""
    k = ring.kind
    if shell == 0:
        return [ring.zero]
    if k == KIND_Z:
        return [ring.el(shell), ring.el(-shell)]
    if k == KIND_ZMOD:
        return [ring.el(shell)] if shell < ring.modulus else []
    if k == KIND_POLY:
        digits = []
        s = shell
        while s:
            digits.append(s % ring.prime)
            s //= ring.prime
        return [ring.el(digits)]
    out = []
    for kk in range(-2, 3):
        out.append(ring.el((shell, kk)))
        out.append(ring.el((-shell, kk)))
    return out


def unimodular_square_shift(alpha: list[RingElement], bound: int = 10**4) -> SRWitness:
    """Find t with the first n-1 coordinates of alpha, each shifted by
    t_i * a_n^2, unimodular; certified by an extended-gcd Bezout witness."""
    ring = alpha[0].ring
    n = len(alpha)
    prefix = list(alpha[: n - 1])
    an2 = alpha[n - 1] * alpha[n - 1]
    ok, coeffs = is_unimodular(prefix)
    if ok:
        zero = tuple(ring.zero for _ in range(n - 1))
        return SRWitness(zero, tuple(prefix), tuple(coeffs))

    tried = 0
    pool: list[RingElement] = []
    shell = 0
    while tried < bound:
        new = _shell_elements(ring, shell)
        if not new and shell > 0 and ring.kind == KIND_ZMOD and shell >= ring.modulus:
            break
        pool.extend(new)
        # tuples whose maximal shell is the current one
        for t in _tuples_with_max_shell(pool, new, n - 1):
            tried += 1
            shifted = tuple(p + ti * an2 for p, ti in zip(prefix, t))
            ok, coeffs = is_unimodular(list(shifted))
            if ok:
                return SRWitness(tuple(t), shifted, tuple(coeffs))
            if tried >= bound:
                break
        shell += 1
    raise SearchExhausted("no unimodular shift found", bound)


def _tuples_with_max_shell(pool, new, width):
    """All width-tuples over pool using at least one element of new."""
    if not new:
        return
    new_keys = {id(x) for x in new}
    for combo in itertools.product(pool, repeat=width):
        if any(id(x) in new_keys for x in combo):
            yield combo


# -- block-form helpers ----------------------------------------------------------


def in_upper_affine(g: SqMatrix) -> bool:
    """Bottom row equals (0, ..., 0, 1)."""
    n = g.n
    ring = g.ring
    last = g.row(n)
    return all(
        last[c] == (ring.one if c == n - 1 else ring.zero) for c in range(n)
    )


def in_lower_affine(g: SqMatrix) -> bool:
    """First column equals (1, 0, ..., 0)."""
    n = g.n
    ring = g.ring
    col = g.column(1)
    return all(col[r] == (ring.one if r == 0 else ring.zero) for r in range(n))


def _upper_blocks(g: SqMatrix) -> tuple[SqMatrix, list[RingElement]]:
    n = g.n
    gamma = SqMatrix(g.ring, n - 1, tuple(tuple(g.rows[i][:n - 1]) for i in range(n - 1)))
    v = [g.rows[i][n - 1] for i in range(n - 1)]
    return gamma, v


def _lower_blocks(g: SqMatrix) -> tuple[SqMatrix, list[RingElement]]:
    n = g.n
    gamma = SqMatrix(g.ring, n - 1, tuple(tuple(g.rows[i][1:]) for i in range(1, n)))
    u = [g.rows[0][j] for j in range(1, n)]
    return gamma, u


def _commutes(a: SqMatrix, b: SqMatrix) -> bool:
    return a * b == b * a


def _embed_block(eps: SqMatrix) -> SqMatrix:
    """diag(1, eps) for an (n-1)-dimensional eps."""
    zeros = [eps.ring.zero] * eps.n
    return embed_affine(eps, zeros, "row", eps.n + 1)


# -- the four reduction stages -----------------------------------------------------


def _case1_finish(b: _Builder, tag: str) -> str:
    """From [g, tau] = I: g has first column u*e_1; one commutator with a
    block-embedded elementary lands in the lower affine copy."""
    g = b.g
    n = g.n
    ring = g.ring
    q0 = b.q.canonical
    u = g.e(1, 1)
    col = g.column(1)
    assert is_unit(u) and all(col[r].is_zero for r in range(1, n)), (
        "commuting case must pin the first column to a unit multiple of e_1"
    )
    sub = SqMatrix(ring, n - 1, tuple(tuple(g.rows[i][1:]) for i in range(1, n)))
    for i in range(1, n):
        for j in range(1, n):
            if i == j:
                continue
            eps = elementary(ring, n - 1, i, j, q0)
            if not _commutes(sub, eps):
                s = _embed_block(eps)
                b.apply(COMM_RIGHT, s, [(i + 1, j + 1, q0)], tag + ".block")
                assert in_lower_affine(b.g) and not is_central(b.g)
                return "lower"
    # sub is scalar t*I and the commuting relation forces t = u
    t = sub.e(1, 1)
    assert all(
        sub.e(i, j) == (t if i == j else ring.zero)
        for i in range(1, n)
        for j in range(1, n)
    )
    assert t == u, "commuting case forces matching corner units"
    v = [g.rows[0][j] for j in range(1, n)]
    j0 = next((idx for idx, e in enumerate(v) if not e.is_zero), None)
    if j0 is None:
        raise CentralInput("scalar matrix slipped through the central filter")
    k = 1 if j0 != 0 else 2
    eps = elementary(ring, n - 1, j0 + 1, k, q0)
    s = _embed_block(eps)
    b.apply(COMM_RIGHT, s, [(j0 + 2, k + 1, q0)], tag + ".scalar")
    assert in_lower_affine(b.g) and not is_central(b.g)
    return "lower"


def _affine_stage(b: _Builder) -> str:
    """Stage 1: at most 4 operations into one of the affine copies
    (bottom row e_n, "upper", or first column e_1, "lower")."""
    g = b.g
    n = g.n
    ring = g.ring
    q0 = b.q.canonical
    if in_upper_affine(g):
        return "upper"
    if in_lower_affine(g):
        return "lower"
    tau = elementary(ring, n, 1, 2, q0)
    tau_fac = [(1, 2, q0)]
    if _commutes(g, tau):
        return _case1_finish(b, "affine.commuting")

    alpha = list(g.column(1))
    ok, _ = is_unimodular(alpha[: n - 1])
    if not ok:
        wit = unimodular_square_shift(alpha)
        an = alpha[n - 1]
        coeffs = [an * ti for ti in wit.t]
        mu = identity(ring, n)
        fac = []
        for i, c in enumerate(coeffs):
            if not c.is_zero:
                mu = mu * elementary(ring, n, i + 1, n, c)
                fac.append((i + 1, n, c))
        b.apply(CONJUGATE, mu, fac, "affine.split.shift")
        alpha = list(b.g.column(1))
        ok, _ = is_unimodular(alpha[: n - 1])
        assert ok, "shift witness must leave a unimodular prefix"

    _, coeffs = is_unimodular(alpha[: n - 1])
    an = alpha[n - 1]
    lam_coeffs = [an * dk for dk in coeffs]
    b.apply(COMM_RIGHT, tau, tau_fac, "affine.split.comm")
    if any(not c.is_zero for c in lam_coeffs):
        lam_inv = identity(ring, n)
        fac = []
        for k, c in enumerate(lam_coeffs):
            if not c.is_zero:
                lam_inv = lam_inv * elementary(ring, n, n, k + 1, -c)
                fac.append((n, k + 1, -c))
        b.apply(CONJUGATE, lam_inv, fac, "affine.split.conj")
    rho = b.g
    assert not is_central(rho), "conjugated commutator must stay non-central"
    if _commutes(rho, tau):
        return _case1_finish(b, "affine.split.recommuting")
    b.apply(COMM_RIGHT, tau, tau_fac, "affine.split.comm2")
    assert in_upper_affine(b.g) and not is_central(b.g)
    return "upper"


def _translate_stage(b: _Builder, loc: str):
    """Stage 2: at most one commutator into pure translation block form."""
    g = b.g
    n = g.n
    ring = g.ring
    q0 = b.q.canonical
    one = identity(ring, n - 1)
    if loc == "upper":
        gamma, _ = _upper_blocks(g)
        if gamma == one:
            return
        k0 = next(
            idx
            for idx in range(n - 1)
            if any(gamma.rows[r][idx] != (ring.one if r == idx else ring.zero) for r in range(n - 1))
        )
        lam = elementary(ring, n, k0 + 1, n, q0)
        b.apply(COMM_RIGHT, lam, [(k0 + 1, n, q0)], "translate.col")
    elif loc == "lower":
        gamma, _ = _lower_blocks(g)
        if gamma == one:
            return
        ginv = mat_inv(gamma)
        k0 = next(
            idx
            for idx in range(n - 1)
            if any(ginv.rows[idx][c] != (ring.one if c == idx else ring.zero) for c in range(n - 1))
        )
        lam = elementary(ring, n, 1, k0 + 2, q0)
        b.apply(COMM_RIGHT, lam, [(1, k0 + 2, q0)], "translate.row")
    else:
        raise ValueError(f"unknown affine location {loc!r}")
    assert not is_central(b.g), "translation part must be nonzero"


def _support(g: SqMatrix) -> list[tuple[int, int]]:
    one = identity(g.ring, g.n)
    diff = g - one
    return [
        (i, j)
        for i in range(1, g.n + 1)
        for j in range(1, g.n + 1)
        if not diff.e(i, j).is_zero
    ]


def _single_stage(b: _Builder):
    """Stage 3: at most one commutator from translation form to a single
    off-diagonal entry at the canonical corner of the form ((1, n) for
    column and row translations, (n, 1) for bottom translations)."""
    g = b.g
    n = g.n
    ring = g.ring
    q0 = b.q.canonical
    sup = _support(g)
    if not sup:
        raise CentralInput("identity reached before the single-entry stage")
    if all(j == n and i < n for (i, j) in sup):
        if sup == [(1, n)]:
            return
        b0 = min(i for (i, _) in sup if i != 1)
        lam = elementary(ring, n, 1, b0, q0)
        b.apply(COMM_RIGHT, lam, [(1, b0, q0)], "single.col")
    elif all(i == 1 and j > 1 for (i, j) in sup):
        if sup == [(1, n)]:
            return
        j0 = min(j for (_, j) in sup if j != n)
        lam = elementary(ring, n, j0, n, q0)
        b.apply(COMM_RIGHT, lam, [(j0, n, q0)], "single.row")
    elif all(i == n and j < n for (i, j) in sup):
        if sup == [(n, 1)]:
            return
        a0 = min(j for (_, j) in sup if j != 1)
        lam = elementary(ring, n, a0, 1, q0)
        b.apply(COMM_RIGHT, lam, [(a0, 1, q0)], "single.bottom")
    else:
        raise ValueError("matrix is not in a translation block form")
    assert len(_support(b.g)) == 1, "single-entry stage must isolate one entry"


def _relocate_stage(b: _Builder, target: tuple[int, int]):
    """Stage 4: at most 3 commutators moving a single entry to the target."""
    n = b.g.n
    ring = b.g.ring
    q0 = b.q.canonical
    i, j = target
    guard = 0
    while True:
        sup = _support(b.g)
        if len(sup) != 1:
            raise TrivialInput("relocation needs a single nonzero entry")
        k, l = sup[0]
        if (k, l) == (i, j):
            return
        guard += 1
        assert guard <= 3, "relocation exceeded three moves"
        if j == l:
            s = elementary(ring, n, i, k, q0)
            b.apply(COMM_LEFT, s, [(i, k, q0)], "relocate.same-col")
        elif i == k:
            s = elementary(ring, n, l, j, q0)
            b.apply(COMM_RIGHT, s, [(l, j, q0)], "relocate.same-row")
        elif k != j:
            s = elementary(ring, n, l, j, q0)
            b.apply(COMM_RIGHT, s, [(l, j, q0)], "relocate.pivot")
        elif i != l:
            s = elementary(ring, n, i, k, q0)
            b.apply(COMM_LEFT, s, [(i, k, q0)], "relocate.corner.direct")
        else:
            h = next(x for x in range(1, n + 1) if x not in (k, l))
            s = elementary(ring, n, h, k, q0)
            b.apply(COMM_LEFT, s, [(h, k, q0)], "relocate.corner.detour")


# Public per-stage entry points: each returns a partial trace (kind
# "partial", validated for replay and witnesses but not for output support)
# plus stage-specific data.


def reduce_to_affine(sigma: SqMatrix, q: Ideal, seed: int = 0):
    """Stage 1 as a standalone call: returns (partial trace, location)."""
    _check_reduce_preconditions(sigma, q)
    b = _Builder(sigma, q, "partial", seed)
    loc = _affine_stage(b)
    return b.trace(("affine", loc)), loc


def strip_to_translation(g: SqMatrix, q: Ideal, loc: str, seed: int = 0) -> ReductionTrace:
    """Stage 2 as a standalone call on a matrix in an affine copy."""
    if is_central(g):
        raise CentralInput("translation stage needs a non-central input")
    b = _Builder(g, q, "partial", seed)
    _translate_stage(b, loc)
    return b.trace(("translate", loc))


def translation_to_elementary(g: SqMatrix, q: Ideal, seed: int = 0) -> ReductionTrace:
    """Stage 3 as a standalone call on a translation-form matrix."""
    if is_central(g):
        raise CentralInput("single-entry stage needs a non-central input")
    b = _Builder(g, q, "partial", seed)
    _single_stage(b)
    return b.trace(("single",))


def relocate_elementary(g: SqMatrix, q: Ideal, target: tuple[int, int], seed: int = 0) -> ReductionTrace:
    """Stage 4 as a standalone call on a single-entry matrix."""
    b = _Builder(g, q, "partial", seed)
    _relocate_stage(b, target)
    return b.trace(("relocate", target))


def _check_reduce_preconditions(sigma: SqMatrix, q: Ideal):
    if sigma.n < 3:
        raise UnsupportedRing("the full reduction needs dimension >= 3")
    if not sigma.ring.is_domain:
        raise UnsupportedRing("the full reduction needs an integral domain")
    if q.is_zero:
        raise ZeroIdeal("reduction ideal must be nonzero")
    if determinant(sigma) != sigma.ring.one:
        raise NotSL("input must have determinant 1")
    if not in_congruence_subgroup(sigma, q):
        raise NotCongruent("input is not congruent to I modulo the ideal")
    if is_central(sigma):
        raise CentralInput("input is central")


def reduce_full(sigma: SqMatrix, q: Ideal, target: tuple[int, int], seed: int = 0) -> ReductionTrace:
    """Full pipeline: affine copy, translation form, single entry, relocation.

    Produces a replayable trace with at most 9 operations and certified word
    length at most 512 whose output is a nontrivial element supported exactly
    at the target position with entry in the ideal.
    """
    _check_reduce_preconditions(sigma, q)
    i, j = target
    if not (1 <= i <= sigma.n and 1 <= j <= sigma.n and i != j):
        raise ValueError(f"bad target {target}")
    b = _Builder(sigma, q, "reduce", seed)
    if len(_support(sigma)) == 1:
        _relocate_stage(b, target)
    else:
        loc = _affine_stage(b)
        _translate_stage(b, loc)
        _single_stage(b)
        _relocate_stage(b, target)
    trace = b.trace(target)
    validate_trace(trace)
    return trace


# -- dimension-2 unit shortcut ----------------------------------------------------


def _theta(m: SqMatrix) -> SqMatrix:
    """The inverse-transpose automorphism of SL_2; swaps E12 and E21."""
    a, bb = m.rows[0]
    c, d = m.rows[1]
    return SqMatrix(m.ring, 2, ((d, -c), (-bb, a)))


def _unit_candidates(ring: RingSpec, bound: int) -> list[RingElement]:
    k = ring.kind
    if k == KIND_Z:
        return [ring.one, ring.el(-1)]
    if k == KIND_ZMOD:
        return [r for r in ring.residues() if is_unit(r)]
    if k == KIND_POLY:
        return [ring.el([c]) for c in range(1, ring.prime)]
    out = [ring.one, ring.el((-1, 0))]
    for kk in range(1, bound + 1):
        out.extend(
            [ring.el((1, kk)), ring.el((-1, kk)), ring.el((1, -kk)), ring.el((-1, -kk))]
        )
    return out


def _z_candidates(q: Ideal, tries: int) -> list[RingElement]:
    q0 = q.canonical
    ring = q.ring
    out = [ring.zero]
    for k in range(1, tries + 1):
        out.append(q0 * ring.el(k))
        out.append(-(q0 * ring.el(k)))
    return out


def _try_upper_commutator(b: _Builder, q: Ideal, unit_bound: int, tries: int) -> bool:
    """sigma upper triangular: [sigma, eta] with eta upper triangular in the
    congruence subgroup lands in E12; entry a*u*(z(a - a^-1) + b(u^-1 - u))."""
    sigma = b.sigma
    ring = sigma.ring
    a, bb = sigma.rows[0]
    for u in _unit_candidates(ring, unit_bound):
        if not q.contains(u - ring.one):
            continue
        uinv = unit_check(u)
        for z in _z_candidates(q, tries):
            eta = SqMatrix(ring, 2, ((u, z), (ring.zero, uinv)))
            cand = b.g * eta * mat_inv(b.g) * mat_inv(eta)
            if cand.rows[1][0].is_zero and cand.rows[0][0] == ring.one and not cand.rows[0][1].is_zero:
                b.apply(COMM_RIGHT, eta, None, "sl2.comm-upper", member="congruence")
                return True
    return False


def _try_unit_conjugates(b: _Builder, q: Ideal, unit_bound: int, tries: int) -> bool:
    """The unit-conjugation path: two conjugates of sigma^{±1} multiply to
    an upper-triangular Y = [[u^-4, *], [0, u^4]]; if Y is not already in E12
    one further commutator with [[u^4, z], [0, u^-4]] lands there."""
    sigma = b.sigma
    ring = sigma.ring
    one = ring.one
    a = sigma.e(1, 1)
    c = sigma.e(2, 1)
    q0 = q.canonical
    for u in _unit_candidates(ring, unit_bound):
        if not q.contains(u - one):
            continue
        # u must be 1 mod c^2 A
        c2 = c * c
        if c.is_zero:
            if u != one:
                continue
            xs = [q0 * ring.el(k) for k in range(1, tries + 1)]
            xs += [-(x) for x in xs]
        else:
            c2_ideal = Ideal(ring, (c2,))
            if not c2_ideal.contains(u - one):
                continue
            w = exact_div(u - one, c2)
            u2 = u * u
            x = c * w * (u2 * u + u2 + u + one)
            xs = [x]
        for x in xs:
            t = a * x
            if not q.contains(t):
                continue
            wmat = SqMatrix(ring, 2, ((one, t), (ring.zero, one)))
            u2 = u * u
            u2inv = unit_check(u2)
            dmat = SqMatrix(ring, 2, ((u2, ring.zero), (ring.zero, u2inv)))
            emat = mat_inv(wmat) * dmat
            conj_s = wmat * mat_inv(sigma)
            y = conj_s * (emat * sigma * mat_inv(emat) * mat_inv(sigma)) * mat_inv(conj_s)
            if not y.rows[1][0].is_zero:
                continue  # the chosen x does not cancel the corner
            if y.is_identity:
                continue
            v = y.e(1, 1)
            if v == one:
                b.apply(COMM_LEFT, emat, None, "sl2.unit", member="congruence")
                b.apply(CONJUGATE, conj_s, None, "sl2.unit.conj", member="congruence")
                return True
            vinv = unit_check(v)
            if vinv is None or v * v == one:
                continue
            qprime = y.e(1, 2)
            for z in _z_candidates(q, tries):
                w_out = (z + qprime) * (v - vinv)
                if w_out.is_zero:
                    continue
                b.apply(COMM_LEFT, emat, None, "sl2.unit", member="congruence")
                b.apply(CONJUGATE, conj_s, None, "sl2.unit.conj", member="congruence")
                zmat = SqMatrix(ring, 2, ((vinv, z), (ring.zero, v)))
                b.apply(COMM_RIGHT, zmat, None, "sl2.unit.comm", member="congruence")
                return True
    return False


def _is_e12_nontrivial(m: SqMatrix) -> bool:
    ring = m.ring
    return (
        m.rows[1][0].is_zero
        and m.rows[0][0] == ring.one
        and m.rows[1][1] == ring.one
        and not m.rows[0][1].is_zero
    )


def _try_pair_search(b: _Builder, q: Ideal, budget: int, tries: int) -> bool:
    """Finite rings only: search short products of congruence-subgroup
    conjugates of sigma^{±1} that land in E12, shortest first.

    Phase A tries all two-letter products of class elements, phase B all
    three-letter products starting with sigma itself (up to a final
    conjugation into E12), and phase C upgrades a two-letter upper-triangular
    product by one further commutator (four letters).
    """
    sigma = b.sigma
    ring = sigma.ring
    if ring.kind != KIND_ZMOD:
        return False
    from .census import enumerate_sl  # noqa: PLC0415

    table = enumerate_sl(2, ring, budget=budget)
    conjugators = [s for s in table.elements if in_congruence_subgroup(s, q)]

    def class_of(base: SqMatrix) -> list[tuple[SqMatrix, SqMatrix]]:
        # (conjugate value, witness s) over congruence-subgroup conjugators
        seen = {}
        for s in conjugators:
            v = s * base * mat_inv(s)
            if v.key() not in seen:
                seen[v.key()] = (v, s)
        return list(seen.values())

    sig_inv = mat_inv(sigma)
    cls_pos = class_of(sigma)
    cls_neg = class_of(sig_inv)

    def emit_two(gx: SqMatrix, ex: int, gy: SqMatrix, ey: int):
        """Ops realizing (gx sigma^ex gx^-1)(gy sigma^ey gy^-1)."""
        eta = mat_inv(gx) * gy
        if ex == 1:
            if ey == -1:
                b.apply(COMM_RIGHT, eta, None, "sl2.pair", member="congruence")
            else:
                b.apply(APPEND, eta, None, "sl2.pair", member="congruence", exp=1)
        else:
            assert ey == 1, "(-1, -1) pairs are found through their inverses"
            b.apply(COMM_LEFT, eta, None, "sl2.pair", member="congruence")
            b.apply(CONJUGATE, gx * sig_inv, None, "sl2.pair.conj", member="congruence")
            return
        if not gx.is_identity:
            b.apply(CONJUGATE, gx, None, "sl2.pair.conj", member="congruence")

    # Phase A: two letters.  (-1,-1) products are inverses of (+1,+1) ones
    # and E12 is inversion-closed, so three sign patterns suffice.
    checked = 0
    for (xs, ex), (ys, ey) in (
        ((cls_pos, 1), (cls_neg, -1)),
        ((cls_pos, 1), (cls_pos, 1)),
        ((cls_neg, -1), (cls_pos, 1)),
    ):
        for xv, gx in xs:
            for yv, gy in ys:
                checked += 1
                if checked > budget:
                    return False
                if _is_e12_nontrivial(xv * yv):
                    emit_two(gx, ex, gy, ey)
                    assert _is_e12_nontrivial(b.g)
                    return True

    # Map: which elements can be conjugated into E12 \ {1}, with a witness.
    into_e12: dict = {}
    for a in ring.residues():
        if a.is_zero or not q.contains(a):
            continue
        t = elementary(ring, 2, 1, 2, a)
        for s in conjugators:
            z = mat_inv(s) * t * s
            into_e12.setdefault(z.key(), s)

    # Phase B: three letters sigma * Y2 * Y3, then conjugate into place.
    labeled = [(v, g, 1) for v, g in cls_pos] + [(v, g, -1) for v, g in cls_neg]
    for y2, g2, e2 in labeled:
        base = sigma * y2
        for y3, g3, e3 in labeled:
            checked += 1
            if checked > budget:
                return False
            w = base * y3
            s = into_e12.get(w.key())
            if s is None:
                continue
            b.apply(APPEND, g2, None, "sl2.pair.append", member="congruence", exp=e2)
            b.apply(APPEND, g3, None, "sl2.pair.append", member="congruence", exp=e3)
            if not s.is_identity:
                b.apply(CONJUGATE, s, None, "sl2.pair.conj", member="congruence")
            assert _is_e12_nontrivial(b.g)
            return True

    # Phase C: a two-letter upper-triangular product upgraded by one commutator.
    one = ring.one
    for xv, gx in cls_pos:
        for yv, gy in cls_neg:
            checked += 1
            if checked > budget:
                return False
            w = xv * yv
            if not w.rows[1][0].is_zero or w.is_identity:
                continue
            v = w.e(1, 1)
            vinv = unit_check(v)
            if vinv is None or v * v == one:
                continue
            qprime = w.e(1, 2)
            for z in _z_candidates(q, tries):
                w_out = (z + qprime) * (v - vinv)
                if w_out.is_zero:
                    continue
                zmat = SqMatrix(ring, 2, ((vinv, z), (ring.zero, v)))
                if not in_congruence_subgroup(zmat, q):
                    continue
                emit_two(gx, 1, gy, -1)
                b.apply(COMM_RIGHT, zmat, None, "sl2.pair.comm", member="congruence")
                assert _is_e12_nontrivial(b.g)
                return True
    return False


def sl2_unit_reduction(
    sigma: SqMatrix,
    q: Ideal,
    side: str = "E12",
    *,
    unit_bound: int = 8,
    tries: int = 8,
    pair_budget: int = 10**6,
    seed: int = 0,
) -> ReductionTrace:
    """Produce a nontrivial element of E12(q) (or E21(q)) as a product of at
    most 4 conjugates of sigma^{±1} by congruence-subgroup elements.

    Search spaces: units per ring kind (Z: {1,-1}; Z/m: the unit group;
    Z[1/p]: ±p^k for |k| <= unit_bound; F_p[x]: nonzero constants), with
    bounded auxiliary searches.  Exhaustion raises NoUnitFound.
    """
    if sigma.n != 2:
        raise UnsupportedRing("the unit shortcut is a dimension-2 tool")
    if side not in ("E12", "E21"):
        raise ValueError("side must be 'E12' or 'E21'")
    if q.is_zero:
        raise ZeroIdeal("ideal must be nonzero")
    if not in_congruence_subgroup(sigma, q):
        raise NotCongruent("input is not congruent to I modulo the ideal")
    if is_central(sigma):
        raise CentralInput("input is central")

    if side == "E21":
        inner = sl2_unit_reduction(
            _theta(sigma), q, "E12",
            unit_bound=unit_bound, tries=tries, pair_budget=pair_budget, seed=seed,
        )
        steps = []
        g = sigma
        wl = 1
        for st in inner.steps:
            op = replace(st.op, s=_theta(st.op.s))
            g = apply_qop(op, g, sigma)
            wl = _next_word_length(op.kind, wl)
            steps.append(TraceStep(op, g, wl, "sl2.mirror|" + st.case))
        trace = ReductionTrace("sl2", sigma, q, "E21", tuple(steps), seed)
        validate_trace(trace)
        return trace

    ring = sigma.ring
    one = ring.one
    b = _Builder(sigma, q, "sl2", seed)

    # Already a nontrivial element of E12(q): a one-letter word.
    if (
        sigma.e(2, 1).is_zero
        and sigma.e(1, 1) == one
        and sigma.e(2, 2) == one
        and not sigma.e(1, 2).is_zero
    ):
        trace = b.trace("E12")
        validate_trace(trace)
        return trace

    if sigma.e(2, 1).is_zero:
        if _try_upper_commutator(b, q, unit_bound, tries):
            trace = b.trace("E12")
            validate_trace(trace)
            return trace
    else:
        if _try_unit_conjugates(b, q, unit_bound, tries):
            trace = b.trace("E12")
            validate_trace(trace)
            return trace

    # sigma^2 can be a nontrivial E12 element (e.g. -I times a unipotent).
    sq = sigma * sigma
    if (
        sq.e(2, 1).is_zero
        and sq.e(1, 1) == one
        and sq.e(2, 2) == one
        and not sq.e(1, 2).is_zero
    ):
        b.apply(APPEND, identity(ring, 2), None, "sl2.square", member="congruence", exp=1)
        trace = b.trace("E12")
        validate_trace(trace)
        return trace

    if _try_pair_search(b, q, pair_budget, tries):
        trace = b.trace("E12")
        validate_trace(trace)
        return trace

    raise NoUnitFound(
        "no unit in the configured search space produces a nontrivial E12 element"
    )


# -- serialization -----------------------------------------------------------------


def serialize_trace(trace: ReductionTrace) -> str:
    if trace.kind not in ("reduce", "sl2"):
        raise ValueError("only full reduce/sl2 traces serialize")
    ids: list[SqMatrix] = [trace.input]
    lines = [
        "congwidth-trace v1",
        f"kind {trace.kind}",
        f"seed {trace.seed}",
        f"ring {trace.input.ring.descriptor()}",
        f"n {trace.input.n}",
        "ideal " + " ".join(format_element(g) for g in trace.ideal.generators),
        ("target " + (f"{trace.target[0]} {trace.target[1]}" if trace.kind == "reduce" else str(trace.target))),
        "input M0",
    ]
    for st in trace.steps:
        sid = len(ids)
        ids.append(st.op.s)
        rid = len(ids)
        ids.append(st.result)
        if st.op.s_member == "elem":
            fac = st.op.s_factors
            sfac = "|".join(
                f"{f.i},{f.j}:{format_element(f.a)}" for f in fac.factors
            ) or "-"
        else:
            sfac = "-"
        extra = f" exp={st.op.exp}" if st.op.kind == APPEND else ""
        lines.append(
            f"step kind={st.op.kind} s=M{sid} result=M{rid} len={st.word_length} "
            f"case={st.case} smem={st.op.s_member} sfac={sfac}{extra}"
        )
    out_id = len(ids) - 1 if trace.steps else 0
    lines.append(f"output M{out_id}")
    lines.append(f"matrices {len(ids)}")
    for k, m in enumerate(ids):
        lines.append(f"M{k}")
        lines.append(format_matrix(m).rstrip("\n"))
    lines.append("end")
    return "\n".join(lines) + "\n"


def parse_trace(text: str) -> ReductionTrace:
    lines = text.splitlines()
    pos = 0

    def take() -> str:
        nonlocal pos
        if pos >= len(lines):
            raise TraceFormatError("unexpected end of trace")
        ln = lines[pos]
        pos += 1
        return ln

    def expect_prefix(prefix: str) -> str:
        ln = take()
        if not ln.startswith(prefix):
            raise TraceFormatError(f"expected {prefix!r}, got {ln!r}")
        return ln[len(prefix):]

    if take() != "congwidth-trace v1":
        raise TraceFormatError("bad magic line")
    kind = expect_prefix("kind ")
    seed = int(expect_prefix("seed "))
    ring = RingSpec.parse(expect_prefix("ring "))
    n = int(expect_prefix("n "))
    gens = tuple(parse_element(ring, t) for t in expect_prefix("ideal ").split())
    ideal = Ideal(ring, gens)
    target_raw = expect_prefix("target ")
    if kind == "reduce":
        i, j = target_raw.split()
        target: object = (int(i), int(j))
    else:
        target = target_raw
    expect_prefix("input ")

    step_lines = []
    while lines[pos].startswith("step "):
        step_lines.append(take()[len("step "):])
    expect_prefix("output ")
    count = int(expect_prefix("matrices "))
    mats: list[SqMatrix] = []
    for k in range(count):
        label = take()
        if label != f"M{k}":
            raise TraceFormatError(f"expected matrix label M{k}, got {label!r}")
        block = [take() for _ in range(n + 1)]
        mats.append(parse_matrix("\n".join(block)))
    if take() != "end":
        raise TraceFormatError("missing end marker")

    steps = []
    for raw in step_lines:
        attrs = {}
        for tok in raw.split():
            key, _, val = tok.partition("=")
            attrs[key] = val
        s = mats[int(attrs["s"][1:])]
        result = mats[int(attrs["result"][1:])]
        member = attrs["smem"]
        fac = None
        if member == "elem":
            factors = []
            if attrs["sfac"] != "-":
                for part in attrs["sfac"].split("|"):
                    ij, _, a = part.partition(":")
                    fi, fj = ij.split(",")
                    factors.append(ElemFactor(int(fi), int(fj), parse_element(ring, a)))
            fac = ElemFactorization(tuple(factors), s)
        op = QOperation(attrs["kind"], s, fac, member, int(attrs.get("exp", 1)))
        steps.append(TraceStep(op, result, int(attrs["len"]), attrs["case"]))
    return ReductionTrace(kind, mats[0], ideal, target, tuple(steps), seed)


def replay_trace(text: str) -> ReductionTrace:
    """Parse and fully re-verify a serialized trace."""
    trace = parse_trace(text)
    validate_trace(trace)
    return trace
