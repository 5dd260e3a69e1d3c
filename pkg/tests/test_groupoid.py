import itertools
import time

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from transalg import groupoid as G


def coset_quotient(group_elems, op, subgroup, name=""):
    """Independent oracle: a finite group modulo a normal subgroup, by explicit cosets."""
    cosets = []
    for g in group_elems:
        c = frozenset(op(g, h) for h in subgroup)
        if c not in cosets:
            cosets.append(c)
    rep = {c: next(iter(sorted(c))) for c in cosets}

    def mul(a, b):
        x = op(rep[a], rep[b])
        return next(c for c in cosets if x in c)

    return G.FiniteGroup.from_elements(cosets, mul, name=name)


# -- groups and groupoids --------------------------------------------------------


def test_finite_group_validation():
    with pytest.raises(G.GroupoidError, match="identity"):
        G.FiniteGroup(np.zeros((2, 2), int))
    with pytest.raises(G.GroupoidError, match="range"):
        G.FiniteGroup(np.array([[0, 5], [1, 0]]))
    # a Latin square with identity 0 that is not associative
    bad = np.array([[0, 1, 2, 3, 4], [1, 0, 3, 4, 2], [2, 4, 0, 1, 3], [3, 2, 4, 0, 1], [4, 3, 1, 2, 0]])
    with pytest.raises(G.ConditionViolation) as err:
        G.FiniteGroup(bad)
    assert err.value.condition == "associativity"
    a, b, c = err.value.witness
    assert bad[bad[a, b], c] != bad[a, bad[b, c]]


def test_small_groups():
    s3 = G.symmetric3()
    assert s3.order == 6 and not s3.is_abelian()
    assert G.cyclic(5).is_abelian() and G.cyclic(5).inv(2) == 3
    assert G.direct_product(G.cyclic(2), G.cyclic(3)).order == 6
    assert sorted(G.perm_sign(p) for p in s3.labels) == [-1, -1, -1, 1, 1, 1]
    assert G.trivial_group().order == 1


def test_pair_groupoid_structure():
    g = G.pair_groupoid((1, 2, 3))
    assert g.n_arrows == 9 and g.n_objects == 3
    assert all(len(g.arrows_between(x, y)) == 1 for x in range(3) for y in range(3))
    i = g.arrows_between(0, 2)[0]
    assert g.compose(g.inverse(i), i) == g.unit(0)
    with pytest.raises(G.GroupoidError):
        g.compose(i, i)
    assert g.axiom_violations() == []


def test_groupoid_rejects_broken_tables():
    g = G.pair_groupoid((1, 2))
    i, j = np.argwhere(g.table >= 0)[0]
    table = g.table.copy()
    table[i, j] = -1
    with pytest.raises(G.GroupoidError, match="composable"):
        G.FiniteGroupoid(g.objects, g.labels, g.source, g.target, table)
    # swapping two products of a group keeps the table well-typed but breaks the axioms
    z3 = G.group_as_groupoid(G.cyclic(3))
    t = z3.table.copy()
    t[1, 1], t[1, 2] = t[1, 2], t[1, 1]
    with pytest.raises(G.ConditionViolation):
        G.FiniteGroupoid(z3.objects, z3.labels, z3.source, z3.target, t)


def test_groupoid_json_roundtrip():
    g = G.product_groupoid(G.pair_groupoid(("a", "b")), G.cyclic(2))
    h = G.FiniteGroupoid.from_json(g.to_json())
    assert h.labels == g.labels and np.array_equal(h.table, g.table)
    with pytest.raises(G.GroupoidError):
        G.FiniteGroupoid.from_json({**g.to_json(), "extra": 1})


# -- semi-direct products ------------------------------------------------------------


def test_semidirect_matches_textbook_semidirect_product():
    data = G.fixtures()["s3-z3-sign"]
    prod = data.product()
    assert prod.n_arrows == 18
    s3, z3 = G.symmetric3(), G.cyclic(3)
    sign = [G.perm_sign(p) for p in s3.labels]
    # (u, g)(u', g') = (u + sign(g) u', g g')
    elems = list(itertools.product(range(3), range(6)))
    textbook = G.FiniteGroup.from_elements(elems, lambda a, b: ((a[0] + sign[a[1]] * b[0]) % 3, s3(a[1], b[1])))
    assert G.is_isomorphic(prod, G.group_as_groupoid(textbook))
    assert not G.is_isomorphic(prod, G.group_as_groupoid(G.direct_product(z3, s3)))


def test_invalid_action_is_rejected():
    z2 = G.group_as_groupoid(G.cyclic(2))
    bundle = G.FiniteGroupBundle.constant(z2, G.cyclic(3))
    act = G.GroupoidAction.from_function(z2, bundle, lambda i, u: (u + i) % 3)  # not a homomorphism
    assert act.violations()
    with pytest.raises(G.ConditionViolation):
        G.semidirect(z2, bundle, act)


def test_non_normal_subgroupoid_is_rejected():
    s3 = G.group_as_groupoid(G.symmetric3())
    t = G.symmetric3().labels.index((1, 0, 2))
    with pytest.raises(G.ConditionViolation) as err:
        G.NormalSubgroupoid(s3, frozenset({0, t}))
    assert err.value.condition == "normal"
    pair = G.pair_groupoid((1, 2))
    with pytest.raises(G.ConditionViolation, match="loop"):
        G.NormalSubgroupoid(pair, frozenset(range(4)))


# -- embedding and quotient --------------------------------------------------------------


def test_z4_quotient_matches_coset_oracle():
    data = G.fixtures()["z4-L2-z2"]
    prod = data.product()
    q = G.quotient(prod, G.embed_L(prod, data), data)
    elems = list(itertools.product(range(4), range(2)))
    op = lambda a, b: ((a[0] + b[0]) % 4, (a[1] + b[1]) % 2)
    oracle = coset_quotient(elems, op, [(0, 0), (2, 1)])
    assert q.groupoid.n_arrows == 4
    assert G.is_isomorphic(q.groupoid, G.group_as_groupoid(oracle))
    assert G.is_isomorphic(q.groupoid, G.group_as_groupoid(G.cyclic(4)))
    assert not G.is_isomorphic(q.groupoid, G.group_as_groupoid(G.direct_product(G.cyclic(2), G.cyclic(2))))


@settings(max_examples=25)
@given(st.sampled_from([2, 3, 4, 6]), st.sampled_from([1, 2, 3, 4]), st.data())
def test_cyclic_quotients_match_coset_oracle(n, m, data):
    d = data.draw(st.sampled_from([k for k in range(1, n + 1) if n % k == 0]))
    L = {k for k in range(0, n, d)}
    # homomorphisms dZ_n -> Z_m are determined by the image of d, of order dividing n/d
    gens = [v for v in range(m) if (v * (n // d)) % m == 0]
    v = data.draw(st.sampled_from(gens))
    g = G.group_as_groupoid(G.cyclic(n))
    fix = G._fixture(g, G.cyclic(m), L_members=L, f_fn=lambda k: (v * (k // d)) % m)
    prod = fix.product()
    q = G.quotient(prod, G.embed_L(prod, fix), fix)
    assert q.groupoid.n_arrows == n * m // len(L)
    elems = list(itertools.product(range(n), range(m)))
    op = lambda a, b: ((a[0] + b[0]) % n, (a[1] + b[1]) % m)
    sub = [(k, (-v * (k // d)) % m) for k in sorted(L)]
    oracle = coset_quotient(elems, op, sub)
    assert G.is_isomorphic(q.groupoid, G.group_as_groupoid(oracle))


def test_pair_groupoid_quotient_counts():
    data = G.fixtures()["pair3xz2-L-z4"]
    r = G.run_fixture(data)
    assert r.passed and (r.product_arrows, r.quotient_arrows) == (72, 36)


def test_condition_a_counterexample():
    data = G.invalid_fixture()
    prod = data.product()
    with pytest.raises(G.ConditionViolation) as err:
        G.embed_L(prod, data)
    assert err.value.condition == "a"
    lam, u = err.value.witness
    U = data.bundle[0]
    fl = data.f(lam)
    assert data.action(lam, u) != U(U(fl, u), U.inv(fl))


def test_condition_b_counterexample():
    g = G.product_groupoid(G.pair_groupoid((1, 2)), G.cyclic(2))
    loops = [i for i in range(g.n_arrows) if g.source[i] == g.target[i]]
    # f is nontrivial over object 0 only, which is not invariant under the arrows 0 -> 1
    f_fn = lambda i: g.labels[i][1] if g.source[i] == 0 else 0
    data = G._fixture(g, G.cyclic(2), L_members=loops, f_fn=f_fn)
    assert data.f.condition_a(data.action) is None
    with pytest.raises(G.ConditionViolation) as err:
        G.embed_L(data.product(), data)
    assert err.value.condition == "b"


def test_non_homomorphic_f_is_rejected():
    z4 = G.group_as_groupoid(G.cyclic(4))
    data = G._fixture(z4, G.cyclic(4), L_members={0, 2}, f_fn=lambda k: 1 if k == 2 else 0)
    with pytest.raises(G.ConditionViolation):
        G.embed_L(data.product(), data)


def test_appendix_suite_passes_quickly():
    t0 = time.perf_counter()
    reports = G.appendix_suite()
    assert time.perf_counter() - t0 < 10
    assert all(r.passed for r in reports), [r for r in reports if not r.passed]
    assert {r.name for r in reports} >= set(G.fixtures()) | {"invalid-a"}


def test_fixture_json_roundtrip():
    for data in G.fixtures().values():
        back = G.semidirect_data_from_json(G.semidirect_data_to_json(data))
        assert G.run_fixture(back).passed
    with pytest.raises(G.GroupoidError):
        G.semidirect_data_from_json({"groupoid": G.pair_groupoid((1,)).to_json(), "fibers": [], "bogus": 1})


def test_isomorphism_search():
    a = G.group_as_groupoid(G.cyclic(6))
    b = G.group_as_groupoid(G.direct_product(G.cyclic(2), G.cyclic(3)))
    phi = G.find_isomorphism(a, b)
    assert phi is not None
    for i in range(6):
        for j in range(6):
            assert phi[a.compose(i, j)] == b.compose(phi[i], phi[j])
    assert not G.is_isomorphic(a, G.group_as_groupoid(G.symmetric3()))
    assert not G.is_isomorphic(G.pair_groupoid((1, 2)), G.group_as_groupoid(G.cyclic(4)))
    big = G.group_as_groupoid(G.cyclic(51))
    with pytest.raises(G.GroupoidError, match="capped"):
        G.find_isomorphism(big, big)
