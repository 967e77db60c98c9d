import random
from pathlib import Path

import pytest

from kaemsim.config import RunConfig
from kaemsim.crn import MassAction, Network
from kaemsim.evaluator import EvalError, run_source

ROOT = Path(__file__).parent.parent
FIXTURES = Path(__file__).parent / "fixtures"

PREDATORIAL = (ROOT / "programs" / "predatorial.kae").read_text(encoding="utf-8")


def network_text(net: Network) -> str:
    """Stable textual form: species in creation order, one reaction per line
    with complexes sorted by display name."""
    name = {sp.id: sp.display_name for sp in net.species}

    def side(cx):
        if cx.is_empty():
            return "∅"
        parts = []
        for sid in sorted(cx.support(), key=lambda s: name[s]):
            m = cx.get(sid)
            parts.append(name[sid] if m == 1 else f"{m}*{name[sid]}")
        return " + ".join(parts)

    def rate(r):
        assert isinstance(r.rate, MassAction)
        k = r.rate.k
        return str(int(k)) if k == int(k) else repr(k)

    lines = ["species: " + ", ".join(name[sp.id] for sp in net.species)]
    for r in net.reactions:
        lines.append(f"{side(r.reagents)} -> {side(r.products)} {{{rate(r)}}}")
    return "\n".join(lines) + "\n"


def predatorial_source(n: int) -> str:
    assert "predatorial(5)" in PREDATORIAL
    src = PREDATORIAL.replace("predatorial(5)", f"predatorial({n})")
    # drop the simulation tail; the fixtures cover network generation only
    return src.replace("equilibrate 50\n", "")


@pytest.mark.parametrize("n", [1, 2])
def test_predatorial_matches_hand_expansion(n):
    trace = run_source(predatorial_source(n), RunConfig(check_only=True))
    expected = (FIXTURES / f"predatorial_n{n}.txt").read_text(encoding="utf-8")
    assert network_text(trace.network) == expected


def test_predatorial_counts_follow_induction():
    # 2n+1 species and 4n reactions by induction on the recursion
    for n in (0, 1, 2, 3, 5):
        trace = run_source(predatorial_source(n), RunConfig(check_only=True))
        assert len(trace.network.species) == 2 * n + 1
        assert len(trace.network.reactions) == 4 * n


def test_conditional_emission_on_random_programs():
    rng = random.Random(7)
    for _ in range(100):
        a, b = rng.randint(-20, 20), rng.randint(-20, 20)
        src = (f"species A @ 1\nspecies B @ 0\n"
               f"if {a} < {b} {{\n  A -> B {{1}}\n}} else {{\n"
               f"  A -> 2 * B {{1}}\n}}\n")
        net = run_source(src, RunConfig(check_only=True)).network
        assert len(net.reactions) == 1
        b_id = net.species[1].id
        expected_mult = 1 if a < b else 2
        assert net.reactions[0].products.get(b_id) == expected_mult


def test_alpha_renaming_gives_isomorphic_network():
    src = predatorial_source(3)
    renamed = (src.replace("predatorial", "build")
                  .replace("predator", "q")
                  .replace("prey", "w")
                  .replace("lower", "sub")
                  .replace("apex", "top"))
    n1 = run_source(src, RunConfig(check_only=True)).network
    n2 = run_source(renamed, RunConfig(check_only=True)).network
    # identical up to the species bijection given by creation order
    m1, m2 = network_text(n1), network_text(n2)
    pairs = {sp1.display_name: sp2.display_name
             for sp1, sp2 in zip(n1.species, n2.species)}
    for a in sorted(pairs, key=len, reverse=True):
        m1 = m1.replace(a, pairs[a])
    assert m1 == m2


def test_evaluation_is_deterministic():
    src = (ROOT / "programs" / "oscillator.kae").read_text(encoding="utf-8")
    t1 = run_source(src)
    t2 = run_source(src)
    assert t1.serialize() == t2.serialize()


def test_yield_returns_immediately():
    src = ("species A @ 0\n"
           "function f() {\n  yield 1\n  A -> ∅ {1}\n}\n"
           "let x = f()\n")
    trace = run_source(src, RunConfig(check_only=True))
    assert len(trace.network.reactions) == 0  # statement after yield unreached


def test_for_loop_is_half_open():
    src = "for i in 0 .. 3 {\n  species X @ i\n}\n"
    net = run_source(src, RunConfig(check_only=True)).network
    assert [sp.display_name for sp in net.species] == ["X", "X·1", "X·2"]


def test_recursion_limit():
    src = "function f(n) {\n  yield f(n + 1)\n}\nlet x = f(0)\n"
    with pytest.raises(EvalError) as e:
        run_source(src, RunConfig(check_only=True, recursion_limit=100))
    assert "recursion" in str(e.value)


def test_error_message_carries_position():
    with pytest.raises(EvalError) as e:
        run_source("let x = nope\n")
    assert str(e.value).startswith("1:9:")


def test_report_default_and_duplicate_labels():
    src = ("species A @ 1\nA -> ∅ {1}\nreport A\nreport A\nreport var(A)\n"
           "equilibrate 1\n")
    trace = run_source(src, RunConfig(lna=True))
    labels = trace.timecourses[0].observer_order
    assert labels == ["A", "A#2", "var(A)"]


def test_capture_drives_second_run():
    src = ("species X @ 0\n∅ -> X {1}\nreport X as \"drive\"\nequilibrate 5\n"
           "let d = capture(0)\n"
           "species Z @ 0\n∅ -> Z { rate d(\"drive\", t) }\n"
           "report Z as \"z\"\nequilibrate 5\n")
    trace = run_source(src)
    assert len(trace.timecourses) == 2
    z = trace.timecourses[1].observers["z"]
    assert z[-1] > 0


def test_species_are_lexically_scoped():
    src = ("sample s {\n  volume 1 uL\n  species A @ 1\n}\n"
           "report A\n")
    with pytest.raises(EvalError):
        run_source(src, RunConfig(check_only=True))


def test_emission_limit_guards_runaway_generators():
    src = ("species A @ 1\n"
           "for i in 0 .. 100 {\n  A -> ∅ {1}\n}\n")
    with pytest.raises(EvalError):
        run_source(src, RunConfig(check_only=True, emission_limit=50))
