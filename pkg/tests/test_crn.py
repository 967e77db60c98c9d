import pytest
from hypothesis import given, strategies as st

from kaemsim.crn import (Complex, CrnError, MassAction, Network, Reaction,
                         decompose_catalytic, stoichiometry)


def test_display_name_disambiguation():
    net = Network()
    a = net.add_species("A")
    b = net.add_species("A")
    c = net.add_species("A")
    assert a.display_name == "A"
    assert b.display_name == "A·1"
    assert c.display_name == "A·2"
    assert len({a.id, b.id, c.id}) == 3


def test_complex_addition_and_equality():
    net = Network()
    a = net.add_species("A")
    b = net.add_species("B")
    c1 = Complex({a.id: 1}) + Complex({a.id: 1, b.id: 2})
    assert c1 == Complex({a.id: 2, b.id: 2})
    assert Complex() .is_empty()
    assert hash(c1) == hash(Complex({b.id: 2, a.id: 2}))


def test_decomposition_examples():
    net = Network()
    a = net.add_species("A")
    b = net.add_species("B")
    c = net.add_species("C")
    # 2A+B -> A+C: one A is catalytic
    r = Reaction(Complex({a.id: 2, b.id: 1}), Complex({a.id: 1, c.id: 1}),
                 MassAction(1.0))
    d = decompose_catalytic(r)
    assert d.catalysts == Complex({a.id: 1})
    assert d.net_reagents == Complex({a.id: 1, b.id: 1})
    assert d.net_products == Complex({c.id: 1})
    # A -> B: disjoint, no catalysts
    d = decompose_catalytic(Reaction(Complex({a.id: 1}), Complex({b.id: 1}),
                                     MassAction(1.0)))
    assert d.catalysts.is_empty()
    # A+B -> A+B+C: A and B purely catalytic
    d = decompose_catalytic(Reaction(Complex({a.id: 1, b.id: 1}),
                                     Complex({a.id: 1, b.id: 1, c.id: 1}),
                                     MassAction(1.0)))
    assert d.catalysts == Complex({a.id: 1, b.id: 1})
    assert d.net_reagents.is_empty()
    assert d.net_products == Complex({c.id: 1})


@given(st.dictionaries(st.integers(0, 5), st.tuples(st.integers(0, 4),
                                                    st.integers(0, 4)),
                       max_size=6))
def test_decomposition_recomposes_and_is_disjoint(mults):
    reagents = Complex({k: r for k, (r, _) in mults.items() if r > 0})
    products = Complex({k: p for k, (_, p) in mults.items() if p > 0})
    r = Reaction(reagents, products, MassAction(1.0))
    d = decompose_catalytic(r)
    # recomposition
    assert d.catalysts + d.net_reagents == reagents
    assert d.catalysts + d.net_products == products
    # net sides are disjoint; catalyst multiplicity is the per-species min
    assert not (d.net_reagents.support() & d.net_products.support())
    for sid in reagents.support() | products.support():
        assert d.catalysts.get(sid) == min(reagents.get(sid), products.get(sid))


def test_stoichiometry_matrix():
    net = Network()
    a = net.add_species("A")
    b = net.add_species("B")
    net.add_reaction(Complex({a.id: 2}), Complex({b.id: 1}), MassAction(1.0))
    net.add_reaction(Complex({b.id: 1}), Complex(), MassAction(1.0))
    S = stoichiometry(net)
    assert S.tolist() == [[-2, 0], [1, -1]]


def test_reaction_validation():
    net = Network()
    a = net.add_species("A")
    with pytest.raises(CrnError):
        net.add_reaction(Complex(), Complex(), MassAction(1.0))  # ∅ -> ∅
    with pytest.raises(CrnError):
        net.add_reaction(Complex({a.id: 17}), Complex(), MassAction(1.0))
    with pytest.raises(CrnError):
        net.add_reaction(Complex({a.id + 999: 1}), Complex(), MassAction(1.0))
    with pytest.raises(CrnError):
        MassAction(-1.0)


def test_set_initial_rejects_unknown_species():
    net = Network()
    with pytest.raises(CrnError):
        net.set_initial(12345, 1.0)
