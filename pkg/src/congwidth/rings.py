"""Exact arithmetic in the supported commutative rings and their ideals.

Supported rings: Z, Z/m, F_p[x] for prime p, and Z[1/p].  Every element is
kept in a unique canonical form, so equality is structural and values hash
safely:

  Z       arbitrary-precision int
  Z/m     residue int in [0, m)
  F_p[x]  tuple of coefficients in [0, p), ascending degree, no trailing zeros
  Z[1/p]  pair (n, k) meaning n * p**k with p not dividing n; zero is (0, 0)

All four rings are principal ideal rings, so an ideal carries a cached
canonical generator and membership is a divisibility test.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from math import gcd

from .errors import MismatchedRings, UnsupportedRing

KIND_Z = "Z"
KIND_ZMOD = "Zmod"
KIND_POLY = "PolyFp"
KIND_ZINV = "ZinvP"

_DESCRIPTOR_RE = {
    "zmod": re.compile(r"^Z/(\d+)$"),
    "poly": re.compile(r"^F(\d+)\[x\]$"),
    "zinv": re.compile(r"^Z\[1/(\d+)\]$"),
}


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n < 4:
        return True
    if n % 2 == 0:
        return False
    f = 3
    while f * f <= n:
        if n % f == 0:
            return False
        f += 2
    return True


def _xgcd(a: int, b: int) -> tuple[int, int, int]:
    """Return (g, s, t) with g = gcd(a, b) >= 0 and g = s*a + t*b."""
    old_r, r = a, b
    old_s, s = 1, 0
    old_t, t = 0, 1
    while r != 0:
        q = old_r // r
        old_r, r = r, old_r - q * r
        old_s, s = s, old_s - q * s
        old_t, t = t, old_t - q * t
    if old_r < 0:
        old_r, old_s, old_t = -old_r, -old_s, -old_t
    return old_r, old_s, old_t


@dataclass(frozen=True, slots=True)
class RingSpec:
    """A concrete commutative ring with unit."""

    kind: str
    modulus: int = 0  # Z/m only
    prime: int = 0  # F_p[x] and Z[1/p]

    def __post_init__(self):
        if self.kind == KIND_Z:
            pass
        elif self.kind == KIND_ZMOD:
            if self.modulus < 2:
                raise ValueError("modulus must be >= 2")
        elif self.kind == KIND_POLY:
            if not is_prime(self.prime):
                raise ValueError("coefficient characteristic must be prime")
        elif self.kind == KIND_ZINV:
            if not is_prime(self.prime):
                raise ValueError("inverted integer must be prime")
        else:
            raise ValueError(f"unknown ring kind {self.kind!r}")

    # -- construction ------------------------------------------------------

    @staticmethod
    def integers() -> "RingSpec":
        return RingSpec(KIND_Z)

    @staticmethod
    def integers_mod(m: int) -> "RingSpec":
        return RingSpec(KIND_ZMOD, modulus=m)

    @staticmethod
    def poly_over_fp(p: int) -> "RingSpec":
        return RingSpec(KIND_POLY, prime=p)

    @staticmethod
    def localized_integers(p: int) -> "RingSpec":
        return RingSpec(KIND_ZINV, prime=p)

    @staticmethod
    def parse(text: str) -> "RingSpec":
        """Parse a ring descriptor: "Z" | "Z/<m>" | "F<p>[x]" | "Z[1/<p>]"."""
        if text == "Z":
            return RingSpec.integers()
        m = _DESCRIPTOR_RE["zmod"].match(text)
        if m:
            return RingSpec.integers_mod(int(m.group(1)))
        m = _DESCRIPTOR_RE["poly"].match(text)
        if m:
            return RingSpec.poly_over_fp(int(m.group(1)))
        m = _DESCRIPTOR_RE["zinv"].match(text)
        if m:
            return RingSpec.localized_integers(int(m.group(1)))
        raise ValueError(f"bad ring descriptor {text!r}")

    def descriptor(self) -> str:
        if self.kind == KIND_Z:
            return "Z"
        if self.kind == KIND_ZMOD:
            return f"Z/{self.modulus}"
        if self.kind == KIND_POLY:
            return f"F{self.prime}[x]"
        return f"Z[1/{self.prime}]"

    # -- structure predicates ---------------------------------------------

    @property
    def is_finite(self) -> bool:
        return self.kind == KIND_ZMOD

    @property
    def is_domain(self) -> bool:
        if self.kind == KIND_ZMOD:
            return is_prime(self.modulus)
        return True

    def residues(self):
        """All elements of a finite ring."""
        if self.kind != KIND_ZMOD:
            raise UnsupportedRing(f"{self.descriptor()} is not finite")
        return [RingElement(self, r) for r in range(self.modulus)]

    # -- element construction ----------------------------------------------

    @property
    def zero(self) -> "RingElement":
        return self.el(0)

    @property
    def one(self) -> "RingElement":
        return self.el(1)

    def el(self, raw) -> "RingElement":
        """Coerce an int, coefficient list, or (n, k) pair into this ring."""
        if isinstance(raw, RingElement):
            if raw.ring != self:
                raise MismatchedRings(f"{raw} not in {self.descriptor()}")
            return raw
        if self.kind == KIND_Z:
            return RingElement(self, int(raw))
        if self.kind == KIND_ZMOD:
            return RingElement(self, int(raw) % self.modulus)
        if self.kind == KIND_POLY:
            if isinstance(raw, int):
                raw = [raw]
            coeffs = [int(c) % self.prime for c in raw]
            while coeffs and coeffs[-1] == 0:
                coeffs.pop()
            return RingElement(self, tuple(coeffs))
        # Z[1/p]
        if isinstance(raw, tuple):
            n, k = raw
        else:
            n, k = int(raw), 0
        return RingElement(self, _zinv_normal(n, k, self.prime))

    def x(self) -> "RingElement":
        """The indeterminate of F_p[x]."""
        if self.kind != KIND_POLY:
            raise UnsupportedRing("x only exists in polynomial rings")
        return RingElement(self, (0, 1))


def _zinv_normal(n: int, k: int, p: int) -> tuple[int, int]:
    if n == 0:
        return (0, 0)
    while n % p == 0:
        n //= p
        k += 1
    return (n, k)


def _poly_add(a, b, p):
    n = max(len(a), len(b))
    out = [0] * n
    for i, c in enumerate(a):
        out[i] = c
    for i, c in enumerate(b):
        out[i] = (out[i] + c) % p
    while out and out[-1] == 0:
        out.pop()
    return tuple(out)


def _poly_neg(a, p):
    return tuple((-c) % p for c in a)


def _poly_mul(a, b, p):
    if not a or not b:
        return ()
    out = [0] * (len(a) + len(b) - 1)
    for i, ca in enumerate(a):
        if ca:
            for j, cb in enumerate(b):
                out[i + j] = (out[i + j] + ca * cb) % p
    while out and out[-1] == 0:
        out.pop()
    return tuple(out)


def _poly_divmod(a, b, p):
    if not b:
        raise ZeroDivisionError("polynomial division by zero")
    a = list(a)
    inv_lead = pow(b[-1], -1, p)
    q = [0] * max(0, len(a) - len(b) + 1)
    while len(a) >= len(b) and a:
        shift = len(a) - len(b)
        c = (a[-1] * inv_lead) % p
        q[shift] = c
        for i, cb in enumerate(b):
            a[shift + i] = (a[shift + i] - c * cb) % p
        while a and a[-1] == 0:
            a.pop()
    while q and q[-1] == 0:
        q.pop()
    return tuple(q), tuple(a)


@dataclass(frozen=True, slots=True)
class RingElement:
    """An element of a RingSpec in canonical form."""

    ring: RingSpec
    payload: object

    # -- arithmetic ---------------------------------------------------------

    def _check(self, other: "RingElement"):
        if not isinstance(other, RingElement) or other.ring != self.ring:
            raise MismatchedRings(f"cannot combine {self!r} with {other!r}")

    def __add__(self, other: "RingElement") -> "RingElement":
        self._check(other)
        k = self.ring.kind
        if k == KIND_Z:
            return RingElement(self.ring, self.payload + other.payload)
        if k == KIND_ZMOD:
            return RingElement(self.ring, (self.payload + other.payload) % self.ring.modulus)
        if k == KIND_POLY:
            return RingElement(self.ring, _poly_add(self.payload, other.payload, self.ring.prime))
        n1, k1 = self.payload
        n2, k2 = other.payload
        if n1 == 0:
            return other
        if n2 == 0:
            return self
        p = self.ring.prime
        k0 = min(k1, k2)
        s = n1 * p ** (k1 - k0) + n2 * p ** (k2 - k0)
        return RingElement(self.ring, _zinv_normal(s, k0, p))

    def __neg__(self) -> "RingElement":
        k = self.ring.kind
        if k == KIND_Z:
            return RingElement(self.ring, -self.payload)
        if k == KIND_ZMOD:
            return RingElement(self.ring, (-self.payload) % self.ring.modulus)
        if k == KIND_POLY:
            return RingElement(self.ring, _poly_neg(self.payload, self.ring.prime))
        n, kk = self.payload
        return RingElement(self.ring, (-n, kk) if n else (0, 0))

    def __sub__(self, other: "RingElement") -> "RingElement":
        return self + (-other)

    def __mul__(self, other: "RingElement") -> "RingElement":
        self._check(other)
        k = self.ring.kind
        if k == KIND_Z:
            return RingElement(self.ring, self.payload * other.payload)
        if k == KIND_ZMOD:
            return RingElement(self.ring, (self.payload * other.payload) % self.ring.modulus)
        if k == KIND_POLY:
            return RingElement(self.ring, _poly_mul(self.payload, other.payload, self.ring.prime))
        n1, k1 = self.payload
        n2, k2 = other.payload
        if n1 == 0 or n2 == 0:
            return self.ring.zero
        return RingElement(self.ring, (n1 * n2, k1 + k2))

    @property
    def is_zero(self) -> bool:
        k = self.ring.kind
        if k == KIND_POLY:
            return self.payload == ()
        if k == KIND_ZINV:
            return self.payload[0] == 0
        return self.payload == 0

    @property
    def is_one(self) -> bool:
        return self == self.ring.one

    def __repr__(self) -> str:
        return f"<{format_element(self)} in {self.ring.descriptor()}>"


def ring_arith(a: RingElement, b: RingElement, op: str) -> RingElement:
    """Apply one of {add, sub, mul} to two elements of the same ring."""
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a * b
    raise ValueError(f"unknown op {op!r}")


# -- serialization -----------------------------------------------------------


def format_element(e: RingElement) -> str:
    k = e.ring.kind
    if k in (KIND_Z, KIND_ZMOD):
        return str(e.payload)
    if k == KIND_POLY:
        if not e.payload:
            return "0"
        return ",".join(str(c) for c in e.payload)
    n, kk = e.payload
    return f"{n}*{e.ring.prime}^{kk}"


def parse_element(ring: RingSpec, text: str) -> RingElement:
    k = ring.kind
    if k == KIND_Z:
        return ring.el(int(text))
    if k == KIND_ZMOD:
        v = int(text)
        if not 0 <= v < ring.modulus:
            raise ValueError(f"residue {v} out of range for {ring.descriptor()}")
        return ring.el(v)
    if k == KIND_POLY:
        return ring.el([int(c) for c in text.split(",")])
    if re.match(r"^-?\d+$", text):  # plain integers are accepted on input
        return ring.el(int(text))
    m = re.match(r"^(-?\d+)\*(\d+)\^(-?\d+)$", text)
    if not m:
        raise ValueError(f"bad Z[1/p] literal {text!r}")
    n, p, kk = int(m.group(1)), int(m.group(2)), int(m.group(3))
    if p != ring.prime:
        raise ValueError(f"literal base {p} does not match ring prime {ring.prime}")
    return ring.el((n, kk))


# -- units, division, gcd ----------------------------------------------------


def unit_check(e: RingElement):
    """Return the inverse of e if e is a unit, else None."""
    ring = e.ring
    k = ring.kind
    if k == KIND_Z:
        return e if e.payload in (1, -1) else None
    if k == KIND_ZMOD:
        if gcd(e.payload, ring.modulus) != 1:
            return None
        return ring.el(pow(e.payload, -1, ring.modulus))
    if k == KIND_POLY:
        if len(e.payload) != 1:
            return None
        return ring.el([pow(e.payload[0], -1, ring.prime)])
    n, kk = e.payload
    if n in (1, -1):
        return RingElement(ring, (n, -kk))
    return None


def is_unit(e: RingElement) -> bool:
    return unit_check(e) is not None


def exact_div(a: RingElement, b: RingElement) -> RingElement:
    """Return a / b when b exactly divides a; raise ValueError otherwise."""
    a._check(b)
    ring = a.ring
    k = ring.kind
    if b.is_zero:
        raise ZeroDivisionError("division by ring zero")
    if k == KIND_Z:
        q, r = divmod(a.payload, b.payload)
        if r != 0:
            raise ValueError(f"{a!r} not divisible by {b!r}")
        return ring.el(q)
    if k == KIND_ZMOD:
        # solve q*b = a in Z/m; a solution exists iff gcd(b, m) | a
        m = ring.modulus
        g, s, _ = _xgcd(b.payload, m)
        if a.payload % g != 0:
            raise ValueError(f"{a!r} not divisible by {b!r}")
        return ring.el((a.payload // g) * s)
    if k == KIND_POLY:
        q, r = _poly_divmod(a.payload, b.payload, ring.prime)
        if r != ():
            raise ValueError(f"{a!r} not divisible by {b!r}")
        return RingElement(ring, q)
    na, ka = a.payload
    nb, kb = b.payload
    if na == 0:
        return ring.zero
    q, r = divmod(na, nb)
    if r != 0:
        raise ValueError(f"{a!r} not divisible by {b!r}")
    return ring.el((q, ka - kb))


def divides(b: RingElement, a: RingElement) -> bool:
    """True iff b divides a (b nonzero), or a = 0."""
    if a.is_zero:
        return True
    if b.is_zero:
        return False
    try:
        exact_div(a, b)
        return True
    except ValueError:
        return False


def extended_gcd(elems: list[RingElement]) -> tuple[RingElement, list[RingElement]]:
    """Return (g, coeffs) with g = sum coeffs[i]*elems[i] generating (elems).

    Supported for Z, Z/m, F_p[x] and Z[1/p]; raises UnsupportedRing otherwise.
    """
    if not elems:
        raise ValueError("extended_gcd needs a nonempty list")
    ring = elems[0].ring
    for e in elems:
        e._check(elems[0])
    k = ring.kind
    if k == KIND_Z:
        g, coeffs = 0, []
        for e in elems:
            gg, s, t = _xgcd(g, e.payload)
            coeffs = [c * s for c in coeffs] + [t]
            g = gg
        return ring.el(g), [ring.el(c) for c in coeffs]
    if k == KIND_ZMOD:
        g, coeffs = 0, []
        for e in elems:
            gg, s, t = _xgcd(g, e.payload)
            coeffs = [c * s for c in coeffs] + [t]
            g = gg
        return ring.el(g), [ring.el(c) for c in coeffs]
    if k == KIND_POLY:
        p = ring.prime
        g: tuple = ()
        coeffs: list[tuple] = []
        for e in elems:
            gg, s, t = _poly_xgcd(g, e.payload, p)
            coeffs = [_poly_mul(c, s, p) for c in coeffs] + [t]
            g = gg
        return RingElement(ring, g), [RingElement(ring, c) for c in coeffs]
    if k == KIND_ZINV:
        g, int_coeffs = 0, []
        for e in elems:
            n = e.payload[0]
            gg, s, t = _xgcd(g, n)
            int_coeffs = [c * s for c in int_coeffs] + [t]
            g = gg
        out = []
        for c, e in zip(int_coeffs, elems):
            kk = e.payload[1] if e.payload[0] != 0 else 0
            out.append(ring.el((c, -kk)))
        return ring.el(g), out
    raise UnsupportedRing(f"no gcd registered for {ring.descriptor()}")


def _poly_xgcd(a: tuple, b: tuple, p: int) -> tuple[tuple, tuple, tuple]:
    """Extended gcd in F_p[x] with monic g."""
    r0, r1 = a, b
    s0, s1 = (1,), ()
    t0, t1 = (), (1,)
    while r1:
        q, r = _poly_divmod(r0, r1, p)
        r0, r1 = r1, r
        s0, s1 = s1, _poly_add(s0, _poly_neg(_poly_mul(q, s1, p), p), p)
        t0, t1 = t1, _poly_add(t0, _poly_neg(_poly_mul(q, t1, p), p), p)
    if r0:
        inv_lead = ((pow(r0[-1], -1, p)),)
        r0 = _poly_mul(r0, inv_lead, p)
        s0 = _poly_mul(s0, inv_lead, p)
        t0 = _poly_mul(t0, inv_lead, p)
    return r0, s0, t0


def is_unimodular(elems: list[RingElement]) -> tuple[bool, list[RingElement] | None]:
    """Check that elems generate the unit ideal; return (flag, Bezout coeffs)."""
    g, coeffs = extended_gcd(elems)
    inv = unit_check(g)
    if inv is None:
        return False, None
    return True, [inv * c for c in coeffs]


# -- ideals -------------------------------------------------------------------


@dataclass(frozen=True)
class Ideal:
    """A finitely generated ideal, with a cached canonical generator.

    Every supported ring is a principal ideal ring, so the canonical
    generator always exists: gcd of the generators, further gcd'd with the
    modulus in Z/m.
    """

    ring: RingSpec
    generators: tuple[RingElement, ...]
    canonical: RingElement = field(init=False)

    def __post_init__(self):
        if not self.generators:
            raise ValueError("ideal needs at least one generator")
        for g in self.generators:
            if g.ring != self.ring:
                raise MismatchedRings("generator outside the parent ring")
        object.__setattr__(self, "canonical", self._canonical_generator())

    def _canonical_generator(self) -> RingElement:
        ring = self.ring
        k = ring.kind
        if k == KIND_ZMOD:
            g = ring.modulus
            for e in self.generators:
                g = gcd(g, e.payload)
            return ring.el(g)
        g, _ = extended_gcd(list(self.generators))
        if k == KIND_Z:
            return ring.el(abs(g.payload))
        if k == KIND_ZINV:
            n, _ = g.payload
            return ring.el((abs(n), 0))
        return g  # F_p[x]: already monic

    @staticmethod
    def of(ring: RingSpec, *raw) -> "Ideal":
        return Ideal(ring, tuple(ring.el(r) for r in raw))

    @property
    def is_zero(self) -> bool:
        return self.canonical.is_zero

    @property
    def is_unit_ideal(self) -> bool:
        return is_unit(self.canonical)

    def contains(self, e: RingElement) -> bool:
        """Ideal membership, decided via canonical-generator divisibility."""
        if e.ring != self.ring:
            raise MismatchedRings("element outside the ideal's ring")
        if self.is_zero:
            return e.is_zero
        return divides(self.canonical, e)

    def power_contains(self, e: RingElement, i: int) -> bool:
        """Membership in the i-th power of this ideal."""
        if i == 0:
            return True
        if self.is_zero:
            return e.is_zero
        ring = self.ring
        if ring.kind == KIND_ZMOD:
            m = ring.modulus
            di = gcd(pow(self.canonical.payload, i, m), m) % m
            if di == 0:
                return e.payload == 0
            return e.payload % di == 0
        d = self.canonical
        di = ring.one
        for _ in range(i):
            di = di * d
        return divides(di, e)

    def describe(self) -> str:
        return "(" + ", ".join(format_element(g) for g in self.generators) + ")"


def ideal_membership(e: RingElement, ideal: Ideal) -> bool:
    return ideal.contains(e)
