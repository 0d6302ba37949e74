import random
from fractions import Fraction

import pytest

from congwidth.errors import (
    BadTransversal,
    BudgetExceeded,
    CapAmbiguous,
    NoSmallVector,
    NotCentral,
)
from congwidth.matrices import SqMatrix, elementary, identity, in_congruence_subgroup
from congwidth.norms import (
    FiltrationChain,
    FiniteGroupDomain,
    IdealPairDomain,
    MatrixGroupDomain,
    NormEval,
    Unreached,
    axiom_harness,
    average_norm,
    bounded_transform,
    conjugation_closure,
    dirac_norm,
    element_p_abs,
    filtration_norm,
    padic_sup_norm,
    product_sum_norm,
    quotient_norm,
    shrink_ideal,
    singular_extension,
    word_norm,
    word_norm_eval,
    z2_mixed_norm,
)
from congwidth.rings import Ideal


def sl_domain(ring, n, radius=6):
    gens = [
        elementary(ring, n, i, j, 1)
        for i in range(1, n + 1)
        for j in range(1, n + 1)
        if i != j
    ]
    return MatrixGroupDomain(ring, n, gens, radius)


def gamma_domain(ring, n, q0, radius=6):
    gens = [
        elementary(ring, n, i, j, q0)
        for i in range(1, n + 1)
        for j in range(1, n + 1)
        if i != j
    ]
    return MatrixGroupDomain(ring, n, gens, radius)


# -- dirac ---------------------------------------------------------------------


def test_dirac_passes_harness(sl2_f3):
    norm = dirac_norm(FiniteGroupDomain(sl2_f3))
    report = axiom_harness(norm, 300, seed=1)
    assert report.passed


def test_planted_failure_is_reported(sl2_f3):
    dom = FiniteGroupDomain(sl2_f3)
    broken = NormEval(dom, lambda g: Fraction(0), "broken", dom.name)
    report = axiom_harness(broken, 200, seed=2)
    assert not report.passed
    assert report.violations["definiteness"] > 0
    assert "definiteness" in report.examples
    assert "axiom=definiteness" in report.render()


# -- filtration ------------------------------------------------------------------


def test_filtration_values(ring_z):
    dom = sl_domain(ring_z, 3)
    q = Ideal.of(ring_z, 2)
    norm = filtration_norm(FiltrationChain(dom, q))
    assert norm.value(identity(ring_z, 3)) == 0
    assert norm.value(elementary(ring_z, 3, 1, 2, 4)) == Fraction(1, 4)
    assert norm.value(elementary(ring_z, 3, 1, 2, 1)) == 1  # level 0


def test_filtration_conjugation_invariance(ring_z):
    rng = random.Random(3)
    dom = sl_domain(ring_z, 3)
    q = Ideal.of(ring_z, 2)
    norm = filtration_norm(FiltrationChain(dom, q))
    g = elementary(ring_z, 3, 1, 2, 4)
    from congwidth.matrices import mat_inv

    for _ in range(100):
        h = dom.sample(rng)
        assert norm.value(h * g * mat_inv(h)) == norm.value(g)


def test_filtration_harness(ring_z):
    dom = sl_domain(ring_z, 3)
    q = Ideal.of(ring_z, 2)
    norm = filtration_norm(FiltrationChain(dom, q))
    assert axiom_harness(norm, 300, seed=4).passed


def test_filtration_ultrametric_nesting(ring_z):
    rng = random.Random(5)
    q = Ideal.of(ring_z, 2)
    dom = gamma_domain(ring_z, 3, 4)  # samples inside the level-2 layer
    norm = filtration_norm(FiltrationChain(dom, q))
    for _ in range(100):
        g, h = dom.sample(rng), dom.sample(rng)
        assert norm.value(g * h) <= max(norm.value(g), norm.value(h))


def test_filtration_cap_raises(ring_z):
    dom = sl_domain(ring_z, 3)
    q = Ideal.of(ring_z, 2)
    norm = filtration_norm(FiltrationChain(dom, q, cap=8))
    with pytest.raises(CapAmbiguous):
        norm.value(elementary(ring_z, 3, 1, 2, 2**9))


def test_filtration_custom_values_must_decrease(ring_z):
    dom = sl_domain(ring_z, 3)
    q = Ideal.of(ring_z, 2)
    with pytest.raises(ValueError):
        FiltrationChain(dom, q, values=(Fraction(1), Fraction(1)))


# -- singular extension ------------------------------------------------------------


def test_singular_extension_values(ring_z):
    q = Ideal.of(ring_z, 2)
    inner_dom = gamma_domain(ring_z, 3, 2)
    inner = filtration_norm(FiltrationChain(inner_dom, q))
    ambient = sl_domain(ring_z, 3)
    member = lambda g: in_congruence_subgroup(g, q)
    norm = singular_extension(inner, ambient, member)
    g_in = elementary(ring_z, 3, 1, 2, 2)
    g_out = elementary(ring_z, 3, 1, 2, 1)
    assert norm.value(g_in) == inner.value(g_in) == Fraction(1, 2)
    assert norm.value(g_out) == 1  # constant off the subgroup
    assert axiom_harness(norm, 300, seed=6).passed


def test_singular_extension_triangle_across_boundary(ring_z):
    rng = random.Random(7)
    q = Ideal.of(ring_z, 2)
    inner = filtration_norm(FiltrationChain(gamma_domain(ring_z, 3, 2), q))
    ambient = sl_domain(ring_z, 3)
    norm = singular_extension(inner, ambient, lambda g: in_congruence_subgroup(g, q))
    inner_dom = inner.domain
    for _ in range(100):
        g = inner_dom.sample(rng)
        h = ambient.sample(rng)
        assert norm.value(g * h) <= norm.value(g) + norm.value(h)


# -- bounded transform ----------------------------------------------------------------


def test_bounded_transform_values(ring_z):
    dom = sl_domain(ring_z, 3)
    q = Ideal.of(ring_z, 2)
    norm = bounded_transform(filtration_norm(FiltrationChain(dom, q)))
    assert norm.value(identity(ring_z, 3)) == 0
    assert norm.value(elementary(ring_z, 3, 1, 2, 1)) == Fraction(1, 2)  # 1/(1+1)


def test_bounded_transform_monotone(ring_z):
    rng = random.Random(8)
    dom = sl_domain(ring_z, 3)
    q = Ideal.of(ring_z, 2)
    base = filtration_norm(FiltrationChain(dom, q))
    bnd = bounded_transform(base)
    for _ in range(100):
        g, h = dom.sample(rng), dom.sample(rng)
        a, b = base.value(g), base.value(h)
        fa, fb = bnd.value(g), bnd.value(h)
        assert (a < b) == (fa < fb) and (a == b) == (fa == fb)
        assert 0 <= fa < 1


# -- quotient ---------------------------------------------------------------------------


def test_quotient_by_trivial_subgroup(ring_z):
    dom = sl_domain(ring_z, 2)
    q = Ideal.of(ring_z, 3)
    base = filtration_norm(FiltrationChain(dom, q))
    quo = quotient_norm(base, [identity(ring_z, 2)])
    rng = random.Random(9)
    for _ in range(50):
        g = dom.sample(rng)
        assert quo.value(g) == base.value(g)


def test_quotient_by_center(ring_z):
    dom = sl_domain(ring_z, 2)
    q = Ideal.of(ring_z, 3)
    base = filtration_norm(FiltrationChain(dom, q))
    minus = SqMatrix.from_raw(ring_z, [[-1, 0], [0, -1]])
    quo = quotient_norm(base, [identity(ring_z, 2), minus])
    rng = random.Random(10)
    for _ in range(50):
        g = dom.sample(rng)
        assert quo.value(g) == min(base.value(g), base.value(g * minus))
    # -I maps to the quotient identity
    assert quo.value(minus) == 0
    assert quo.domain.is_identity(minus)
    assert axiom_harness(quo, 300, seed=11).passed
    # quotient of a bounded norm stays bounded by the same bound
    bquo = quotient_norm(bounded_transform(base), [identity(ring_z, 2), minus])
    for _ in range(50):
        assert bquo.value(dom.sample(rng)) < 1


def test_quotient_rejects_noncentral(ring_z):
    dom = sl_domain(ring_z, 2)
    q = Ideal.of(ring_z, 3)
    base = filtration_norm(FiltrationChain(dom, q))
    with pytest.raises(NotCentral):
        quotient_norm(base, [elementary(ring_z, 2, 1, 2, 1)])


# -- average ------------------------------------------------------------------------------


def _hamming_norm_on_gamma2(table, ring):
    """Entry-count norm on the congruence layer of SL_2(Z/4): N-invariant
    (the layer is abelian) but visibly not invariant under the full group."""
    q = Ideal.of(ring, 2)
    members = [g for g in table.elements if in_congruence_subgroup(g, q)]

    class _ListDomain:
        name = "Gamma(2) mod 4"

        def identity(self):
            return identity(ring, 2)

        def mul(self, a, b):
            return a * b

        def inv(self, a):
            from congwidth.matrices import mat_inv

            return mat_inv(a)

        def is_identity(self, a):
            return a == identity(ring, 2)

        def key(self, a):
            return a.key()

        def sample(self, rng):
            return members[rng.randrange(len(members))]

    dom = _ListDomain()

    def fn(g):
        diff = g - identity(ring, 2)
        weight = sum(0 if e.is_zero else 1 for r in diff.rows for e in r)
        return Fraction(weight, 4)

    return dom, NormEval(dom, fn, "hamming", dom.name), members


def test_average_norm_trivial_transversal(ring_z):
    dom = sl_domain(ring_z, 2)
    q = Ideal.of(ring_z, 3)
    base = filtration_norm(FiltrationChain(dom, q))
    avg = average_norm(base, [identity(ring_z, 2)], 1, lambda g: True)
    rng = random.Random(12)
    for _ in range(40):
        g = dom.sample(rng)
        assert avg.value(g) == base.value(g)


def test_average_norm_invariant_input_unchanged(sl2_f3):
    dom = FiniteGroupDomain(sl2_f3)
    base = dirac_norm(dom)
    reps = [sl2_f3.elements[k] for k in (0, 1, 2)]
    # Dirac is fully invariant, so averaging over any list of "reps" of the
    # whole group (member = in trivial subgroup) changes nothing
    avg = average_norm(base, reps, 3, lambda g: dom.is_identity(g))
    rng = random.Random(13)
    for _ in range(40):
        g = dom.sample(rng)
        assert avg.value(g) == base.value(g)


def test_average_norm_full_invariance(sl2_z4, ring_z4):
    dom, inner, members = _hamming_norm_on_gamma2(sl2_z4, ring_z4)
    q = Ideal.of(ring_z4, 2)
    member = lambda g: in_congruence_subgroup(g, q)
    # the inner norm is not invariant under the ambient group
    from congwidth.matrices import mat_inv

    broken = False
    for s in sl2_z4.elements:
        for n in members:
            if inner.value(s * n * mat_inv(s)) != inner.value(n):
                broken = True
                break
        if broken:
            break
    assert broken

    # transversal of the congruence layer inside SL_2(Z/4)
    reps = []
    for g in sl2_z4.elements:
        if all(not member(g * mat_inv(r)) for r in reps):
            reps.append(g)
    assert len(reps) == 6
    avg = average_norm(inner, reps, 6, member)
    # averaged norm is invariant under conjugation by the whole group
    for s in sl2_z4.elements:
        for n in members:
            assert avg.value(s * n * mat_inv(s)) == avg.value(n)
    assert axiom_harness(avg, 300, seed=14).passed


def test_average_norm_rejects_bad_transversal(sl2_z4, ring_z4):
    dom, inner, members = _hamming_norm_on_gamma2(sl2_z4, ring_z4)
    q = Ideal.of(ring_z4, 2)
    member = lambda g: in_congruence_subgroup(g, q)
    reps = [identity(ring_z4, 2), members[1]]  # same coset
    with pytest.raises(BadTransversal):
        average_norm(inner, reps, 2, member)


# -- product sum ----------------------------------------------------------------------------


def test_product_sum_values_and_harness(sl2_f3):
    dom = FiniteGroupDomain(sl2_f3)
    seeds = [
        sl2_f3.idx(elementary(sl2_f3.ring, 2, i, j, 1))
        for i, j in ((1, 2), (2, 1))
    ]
    closure = conjugation_closure(sl2_f3, seeds)
    left = word_norm_eval(sl2_f3, closure)
    right = dirac_norm(dom)
    norm = product_sum_norm(left, right)
    e = (dom.identity(), dom.identity())
    assert norm.value(e) == 0
    g = sl2_f3.elements[5]
    assert norm.value((g, dom.identity())) == left.value(g)
    assert axiom_harness(norm, 300, seed=15).passed


# -- word norms ------------------------------------------------------------------------------


def test_word_norm_examples(sl2_f3):
    ring = sl2_f3.ring
    seeds = [sl2_f3.idx(elementary(ring, 2, 1, 2, 1)), sl2_f3.idx(elementary(ring, 2, 2, 1, 1))]
    letters = conjugation_closure(sl2_f3, seeds)
    assert word_norm(sl2_f3, letters, identity(ring, 2)) == 0
    assert word_norm(sl2_f3, letters, elementary(ring, 2, 1, 2, 1)) == 1
    values = [
        word_norm(sl2_f3, letters, g) for g in sl2_f3.elements
    ]
    assert all(isinstance(v, int) for v in values)
    assert max(values) >= 2  # some element genuinely needs more than one letter


def test_word_norm_subadditive(sl2_f3):
    rng = random.Random(16)
    ring = sl2_f3.ring
    seeds = [sl2_f3.idx(elementary(ring, 2, 1, 2, 1)), sl2_f3.idx(elementary(ring, 2, 2, 1, 1))]
    letters = conjugation_closure(sl2_f3, seeds)
    dist = {g.key(): word_norm(sl2_f3, letters, g) for g in sl2_f3.elements}
    for _ in range(100):
        g = sl2_f3.elements[rng.randrange(24)]
        h = sl2_f3.elements[rng.randrange(24)]
        assert dist[(g * h).key()] <= dist[g.key()] + dist[h.key()]


def test_word_norm_unreached(sl2_f3):
    ring = sl2_f3.ring
    minus = SqMatrix.from_raw(ring, [[2, 0], [0, 2]])
    letters = conjugation_closure(sl2_f3, [sl2_f3.idx(minus)])
    res = word_norm(sl2_f3, letters, elementary(ring, 2, 1, 2, 1))
    assert isinstance(res, Unreached)
    assert res.explored == 2  # the center only


def test_word_norm_budget(sl2_f3):
    ring = sl2_f3.ring
    seeds = [sl2_f3.idx(elementary(ring, 2, 1, 2, 1)), sl2_f3.idx(elementary(ring, 2, 2, 1, 1))]
    letters = conjugation_closure(sl2_f3, seeds)
    with pytest.raises(BudgetExceeded):
        word_norm(sl2_f3, letters, SqMatrix.from_raw(ring, [[0, 1], [2, 0]]), budget=3)


def test_word_norm_eval_harness(sl2_f3):
    ring = sl2_f3.ring
    seeds = [sl2_f3.idx(elementary(ring, 2, 1, 2, 1)), sl2_f3.idx(elementary(ring, 2, 2, 1, 1))]
    norm = word_norm_eval(sl2_f3, conjugation_closure(sl2_f3, seeds))
    assert axiom_harness(norm, 300, seed=17).passed


# -- Z^2 mixed norm -----------------------------------------------------------------------------


def test_z2_mixed_values():
    norm = z2_mixed_norm(2)
    assert norm.value((0, 0)) == 0
    assert norm.value((2, 0)) == Fraction(1, 4)  # |2|_2 = 1/2, halved
    assert norm.value((0, 3)) == 3
    assert norm.value((3, 0)) == Fraction(1, 2)  # |3|_2 = 1


def test_z2_mixed_shear_invariance():
    rng = random.Random(18)
    norm = z2_mixed_norm(2)
    for _ in range(300):
        x, y = rng.randint(-500, 500), rng.randint(-500, 500)
        assert norm.value((x + y, y)) == norm.value((x, y))


def test_z2_mixed_harness():
    assert axiom_harness(z2_mixed_norm(2), 400, seed=19).passed


# -- p-adic sup norm and the shrinking step ----------------------------------------------------


def test_padic_sup_invariance_under_shears(ring_z):
    rng = random.Random(20)
    q = Ideal.of(ring_z, 2)
    norm = padic_sup_norm(q, 2)
    dom = norm.domain
    for _ in range(200):
        x, y = dom.sample(rng)
        z = ring_z.el(2 * rng.randint(-20, 20))
        # the two elementary shear actions preserve the sup norm exactly
        assert norm.value((x + z * y, y)) == norm.value((x, y))
        assert norm.value((x, y + z * x)) == norm.value((x, y))


def test_shear_difference_inequalities(ring_z):
    rng = random.Random(21)
    q = Ideal.of(ring_z, 2)
    norm = padic_sup_norm(q, 2)
    dom = norm.domain
    for _ in range(300):
        x, y = dom.sample(rng)
        z = ring_z.el(2 * rng.randint(-20, 20))
        v = norm.value((x, y))
        assert norm.value((z * y, ring_z.zero)) <= 2 * v
        assert norm.value((ring_z.zero, z * x)) <= 2 * v


def test_shrink_ideal_small_epsilons(ring_z):
    q = Ideal.of(ring_z, 2)
    norm = padic_sup_norm(q, 2)
    for eps in (Fraction(1, 4), Fraction(1, 16)):
        shrunk, (x, y), violations = shrink_ideal(norm, eps, seed=22)
        assert 6 * norm.value((x, y)) <= eps
        assert not shrunk.is_zero
        assert shrunk.contains(x * x * x)
        assert violations == 0


def test_shrink_ideal_immediate_witness(ring_z):
    q = Ideal.of(ring_z, 2)
    norm = padic_sup_norm(q, 2)
    # 6 * norm((2, 2)) = 3, so any epsilon >= 3 accepts the first candidates
    shrunk, (x, y), violations = shrink_ideal(norm, Fraction(3), seed=23)
    assert abs(x.payload) == 2
    assert violations == 0


def test_shrink_ideal_dirac_exhausts(ring_z):
    q = Ideal.of(ring_z, 2)
    dom = IdealPairDomain(q, box=64)
    dirac = NormEval(dom, lambda g: Fraction(0) if dom.is_identity(g) else Fraction(1), "dirac", dom.name)
    with pytest.raises(NoSmallVector):
        shrink_ideal(dirac, Fraction(1, 4), max_candidates=500)


def test_padic_sup_harness(ring_z):
    q = Ideal.of(ring_z, 2)
    assert axiom_harness(padic_sup_norm(q, 2), 300, seed=24).passed


def test_element_p_abs(ring_z):
    assert element_p_abs(ring_z.el(0), 2) == 0
    assert element_p_abs(ring_z.el(12), 2) == Fraction(1, 4)
    assert element_p_abs(ring_z.el(5), 2) == 1


def test_z2_mixed_nondiscrete_and_unbounded_at_scale():
    # values 2^-k / 2 march to zero along (2^k, 0); values |y| grow along (0, y)
    norm = z2_mixed_norm(2)
    values = [norm.value((2**k, 0)) for k in range(10)]
    assert all(values[i + 1] < values[i] for i in range(9))
    assert values[-1] == Fraction(1, 1024)
    assert norm.value((0, 10**6)) == 10**6


def test_filtration_custom_value_sequence(ring_z):
    dom = sl_domain(ring_z, 3)
    q = Ideal.of(ring_z, 2)
    vals = tuple(Fraction(1, 3**i) for i in range(6))
    norm = filtration_norm(FiltrationChain(dom, q, cap=5, values=vals))
    assert norm.value(elementary(ring_z, 3, 1, 2, 4)) == Fraction(1, 9)
    with pytest.raises(CapAmbiguous):
        norm.value(elementary(ring_z, 3, 1, 2, 2**40))
