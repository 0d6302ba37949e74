"""Factorization of SL_n matrices into elementary matrices.

The decomposition runs Euclidean row reduction (Z, F_p[x], and Z/m via lifts
to [0, m)), then clears the unit diagonal with 2x2 unit-diagonal identities.
No attempt is made to minimize the factor count.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import BudgetExceeded, NotSL, UnsupportedRing
from .matrices import SqMatrix, determinant, elementary, identity
from .rings import (
    KIND_POLY,
    KIND_Z,
    KIND_ZMOD,
    RingElement,
    RingSpec,
    unit_check,
)


@dataclass(frozen=True)
class ElemFactor:
    i: int
    j: int
    a: RingElement


@dataclass(frozen=True)
class ElemFactorization:
    """An ordered product of elementary matrices equal to target."""

    factors: tuple[ElemFactor, ...]
    target: SqMatrix

    @property
    def count(self) -> int:
        return len(self.factors)

    def product(self) -> SqMatrix:
        out = identity(self.target.ring, self.target.n)
        for f in self.factors:
            out = out * elementary(self.target.ring, self.target.n, f.i, f.j, f.a)
        return out

    def inverse_factors(self) -> tuple[ElemFactor, ...]:
        """Reversed, negated factor list; a factorization of target^-1."""
        return tuple(ElemFactor(f.i, f.j, -f.a) for f in reversed(self.factors))


def factorization_from_factors(ring: RingSpec, n: int, factors) -> ElemFactorization:
    """Build an ElemFactorization whose target is the product of the factors."""
    fs = tuple(ElemFactor(i, j, ring.el(a)) for (i, j, a) in factors)
    out = identity(ring, n)
    for f in fs:
        out = out * elementary(ring, n, f.i, f.j, f.a)
    return ElemFactorization(fs, out)


def _euclid_norm(e: RingElement) -> int:
    k = e.ring.kind
    if k == KIND_Z:
        return abs(e.payload)
    if k == KIND_ZMOD:
        return e.payload  # lift in [0, m)
    return len(e.payload)  # degree + 1, F_p[x]


def _euclid_quotient(e: RingElement, piv: RingElement) -> RingElement:
    """Quotient q with |e - q*piv| < |piv| in the ring's Euclidean norm."""
    ring = e.ring
    k = ring.kind
    if k == KIND_Z:
        return ring.el(e.payload // piv.payload)
    if k == KIND_ZMOD:
        return ring.el(e.payload // piv.payload)
    from .rings import _poly_divmod  # noqa: PLC0415

    q, _ = _poly_divmod(e.payload, piv.payload, ring.prime)
    return RingElement(ring, q)


class _RowReducer:
    """Mutable row-reduction state recording left multiplications."""

    def __init__(self, g: SqMatrix):
        self.ring = g.ring
        self.n = g.n
        self.rows = [list(r) for r in g.rows]
        self.ops: list[tuple[int, int, RingElement]] = []  # row_i += a * row_j

    def add_row(self, i: int, j: int, a: RingElement):
        if a.is_zero:
            return
        self.ops.append((i, j, a))
        ri, rj = self.rows[i], self.rows[j]
        for c in range(self.n):
            ri[c] = ri[c] + a * rj[c]

    def entry(self, i: int, j: int) -> RingElement:
        return self.rows[i][j]


def decompose_elementary(g: SqMatrix) -> ElemFactorization:
    """Factor g in SL_n over Z, F_p[x], or Z/m into elementary matrices.

    Left-multiplies g by elementary row operations until it reaches the
    identity; the inverses (reversed) then multiply back to g.  Pivot choice:
    smallest nonzero Euclidean norm in the working column, ties broken by
    lowest row index.
    """
    ring = g.ring
    if ring.kind not in (KIND_Z, KIND_ZMOD, KIND_POLY):
        raise UnsupportedRing(f"decomposition not supported over {ring.descriptor()}")
    if determinant(g) != ring.one:
        raise NotSL("decomposition requires determinant 1")
    n = g.n
    st = _RowReducer(g)

    # Clear below the diagonal, column by column, leaving unit pivots.
    for c in range(n - 1):
        while True:
            live = [r for r in range(c, n) if not st.entry(r, c).is_zero]
            if len(live) == 1:
                break
            piv = min(live, key=lambda r: (_euclid_norm(st.entry(r, c)), r))
            for r in live:
                if r == piv:
                    continue
                q = _euclid_quotient(st.entry(r, c), st.entry(piv, c))
                st.add_row(r, piv, -q)
        r = live[0]
        if r != c:
            st.add_row(c, r, ring.one)
            st.add_row(r, c, -ring.one)

    # Matrix is now upper triangular with unit diagonal; clear above pivots.
    for c in range(n - 1, 0, -1):
        pivinv = unit_check(st.entry(c, c))
        assert pivinv is not None, "pivot must be a unit in SL_n"
        for r in range(c):
            x = st.entry(r, c)
            if not x.is_zero:
                st.add_row(r, c, -(x * pivinv))

    # Reduce diag(u_1, ..., u_n) to I with embedded 2x2 unit-diagonal moves.
    for c in range(n - 1):
        u = st.entry(c, c)
        if u == ring.one:
            continue
        uinv = unit_check(u)
        assert uinv is not None
        # diag(u^-1, u) at rows (c, c+1) = w(u^-1) * w(-1), w(t) = E12(t)E21(-t^-1)E12(t)
        for (i, j, a) in reversed(
            [
                (c, c + 1, uinv),
                (c + 1, c, -u),
                (c, c + 1, uinv),
                (c, c + 1, -ring.one),
                (c + 1, c, ring.one),
                (c, c + 1, -ring.one),
            ]
        ):
            st.add_row(i, j, a)

    assert all(
        st.entry(i, j) == (ring.one if i == j else ring.zero)
        for i in range(n)
        for j in range(n)
    ), "row reduction did not reach the identity"

    # L_k ... L_1 g = I, hence g = L_1^-1 ... L_k^-1 (ops in original order).
    factors = tuple(ElemFactor(i + 1, j + 1, -a) for (i, j, a) in st.ops)
    return ElemFactorization(factors, g)


def factor_count_census(n: int, ring: RingSpec, budget: int = 10**6):
    """Decompose every element of SL_n(ring) and histogram the factor counts.

    Returns (histogram dict, max count, group order).
    """
    from .census import enumerate_sl  # noqa: PLC0415

    table = enumerate_sl(n, ring, budget=budget)
    if len(table.elements) > budget:
        raise BudgetExceeded(f"group order {len(table.elements)} over budget {budget}")
    hist: dict[int, int] = {}
    for g in table.elements:
        c = decompose_elementary(g).count
        hist[c] = hist.get(c, 0) + 1
    return hist, max(hist), len(table.elements)


def census_csv(hist: dict[int, int], max_count: int, order: int) -> str:
    lines = ["count,frequency"]
    for c in sorted(hist):
        lines.append(f"{c},{hist[c]}")
    lines.append(f"max={max_count} order={order}")
    return "\n".join(lines) + "\n"
