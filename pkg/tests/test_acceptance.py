"""Acceptance gate: nine oracle-backed criteria, one test each.

Every test prints an `ACCEPTANCE <n> (<name>): PASS|FAIL` line (visible with
pytest -s and in captured output) and then asserts, so a plain pytest run
fails loudly on any criterion.
"""

import math
import random
import time
from pathlib import Path

import numpy as np
import pytest

from kaemsim.cli import main as cli_main
from kaemsim.config import DeviceConfig, RunConfig
from kaemsim.crn import Complex, MassAction, Network
from kaemsim.evaluator import run_source
from kaemsim.protocol import equilibrate, mix, new_sample, split
from kaemsim.score import invert_score, layout_score
from kaemsim.simulate import Observer, observe, simulate
from kaemsim.trace_check import check_trace_jsonl
from kaemsim import rate_expr

from test_device import bfs_swap_feasible, two_droplet_device, check_frames, frames_of
from test_evaluator import network_text, predatorial_source
from test_score import assert_same_structure, random_network

ROOT = Path(__file__).parent.parent
FIXTURES = Path(__file__).parent / "fixtures"
PROGRAMS = sorted((ROOT / "programs").glob("*.kae"))


def verdict(n, name, ok, detail=""):
    line = f"ACCEPTANCE {n} ({name}): {'PASS' if ok else 'FAIL'}"
    if detail:
        line += f"  [{detail}]"
    print(line)
    assert ok, line


def birth_death(k1=10.0, k2=1.0):
    net = Network()
    x = net.add_species("X")
    net.add_reaction(Complex(), Complex({x.id: 1}), MassAction(k1))
    net.add_reaction(Complex({x.id: 1}), Complex(), MassAction(k2))
    return net, x


def test_acceptance_1_lna_birth_death_poisson():
    t0 = time.perf_counter()
    net, x = birth_death()
    omega = 100.0
    tc = simulate(net, {x.id: 0.0}, 20.0, lna=True, omega=omega)
    mean = tc.means[-1, 0]
    fano = omega * tc.covs[-1, 0, 0] / mean
    elapsed = time.perf_counter() - t0
    ok = (abs(fano - 1.0) <= 0.02
          and abs(mean - 10.0) <= 0.001 * 10.0
          and elapsed < 1.0)
    verdict(1, "LNA birth-death Poisson",
            ok, f"mean={mean:.6f} fano={fano:.6f} {elapsed:.2f}s")


def test_acceptance_2_lna_vs_ssa():
    numba = pytest.importorskip("numba")

    @numba.njit(cache=True)
    def ssa_final_counts(birth, death, t_end, n_traj, seed):
        np.random.seed(seed)
        out = np.empty(n_traj, dtype=np.int64)
        for i in range(n_traj):
            t = 0.0
            n = 0
            while True:
                a0 = birth + death * n
                t += -np.log(np.random.random()) / a0
                if t > t_end:
                    break
                if np.random.random() * a0 < birth:
                    n += 1
                else:
                    n -= 1
            out[i] = n
        return out

    t0 = time.perf_counter()
    omega, k1, k2, t_end = 100.0, 10.0, 1.0, 5.0
    counts = ssa_final_counts(k1 * omega, k2, t_end, 100_000, 20240601)
    net, x = birth_death(k1, k2)
    tc = simulate(net, {x.id: 0.0}, t_end, lna=True, omega=omega)
    lna_count_var = omega ** 2 * tc.covs[-1, 0, 0]
    sample_var = counts.var(ddof=1)
    # standard error of the sample variance from the empirical 4th moment
    m = counts.mean()
    mu4 = np.mean((counts - m) ** 4)
    se = math.sqrt((mu4 - sample_var ** 2) / len(counts))
    elapsed = time.perf_counter() - t0
    ok = abs(lna_count_var - sample_var) <= 3 * se and elapsed < 60.0
    verdict(2, "LNA vs SSA variance", ok,
            f"lna={lna_count_var:.2f} ssa={sample_var:.2f} se={se:.2f} "
            f"{elapsed:.1f}s")


def test_acceptance_3_deterministic_kinetics():
    t0 = time.perf_counter()
    # Lotka-Volterra first integral
    net = Network()
    x = net.add_species("x")
    y = net.add_species("y")
    net.add_reaction(Complex({x.id: 1}), Complex({x.id: 2}), MassAction(1.0))
    net.add_reaction(Complex({x.id: 1, y.id: 1}), Complex({y.id: 2}),
                     MassAction(1.0))
    net.add_reaction(Complex({y.id: 1}), Complex(), MassAction(1.0))
    tc = simulate(net, {x.id: 2.0, y.id: 1.0}, 50.0, rtol=1e-8, atol=1e-10)
    V = tc.means[:, 0] - np.log(tc.means[:, 0]) \
        + tc.means[:, 1] - np.log(tc.means[:, 1])
    drift = float(np.max(np.abs(V - V[0])))
    # exponential decay
    dnet = Network()
    a = dnet.add_species("A")
    dnet.add_reaction(Complex({a.id: 1}), Complex(), MassAction(1.0))
    dtc = simulate(dnet, {a.id: 1.0}, 1.0)
    rel = abs(dtc.means[-1, 0] - math.exp(-1.0)) / math.exp(-1.0)
    elapsed = time.perf_counter() - t0
    ok = drift < 1e-4 and rel < 1e-6 and elapsed < 1.0
    verdict(3, "deterministic kinetics", ok,
            f"LV drift={drift:.2e} decay rel={rel:.2e} {elapsed:.2f}s")


def test_acceptance_4_generative_semantics():
    ok = True
    detail = []
    for n in (1, 2):
        trace = run_source(predatorial_source(n), RunConfig(check_only=True))
        expected = (FIXTURES / f"predatorial_n{n}.txt").read_text("utf-8")
        if network_text(trace.network) != expected:
            ok = False
            detail.append(f"n={n} mismatch")
    net5 = run_source(predatorial_source(5), RunConfig(check_only=True)).network
    if not (len(net5.species) == 11 and len(net5.reactions) == 20):
        ok = False
        detail.append("n=5 counts")
    rng = random.Random(99)
    for _ in range(100):
        a, b = rng.randint(-9, 9), rng.randint(-9, 9)
        src = (f"species A @ 1\nspecies B @ 0\n"
               f"if {a} <= {b} {{\n  A -> B {{1}}\n}}\n")
        net = run_source(src, RunConfig(check_only=True)).network
        if (len(net.reactions) == 1) != (a <= b):
            ok = False
            detail.append(f"conditional {a}<={b}")
            break
    verdict(4, "generative semantics", ok, "; ".join(detail) or "fixtures+counts+100 conditionals")


def test_acceptance_5_score_round_trip():
    t0 = time.perf_counter()
    rng = random.Random(2024)
    failures = 0
    for _ in range(1000):
        net = random_network(rng, max_species=6, max_reactions=10, max_mult=3)
        order = list(net.species)
        rng.shuffle(order)
        try:
            assert_same_structure(net, invert_score(layout_score(net, order)))
        except AssertionError:
            failures += 1
    elapsed = time.perf_counter() - t0
    ok = failures == 0 and elapsed < 10.0
    verdict(5, "score round trip", ok, f"failures={failures} {elapsed:.1f}s")


def test_acceptance_6_protocol_conservation():
    rng = random.Random(31)
    worst = 0.0
    for _ in range(200):
        live = [new_sample(f"s{i}", rng.uniform(0.5, 4.0)) for i in range(3)]
        for s in live:
            for sid in (1, 2):
                s.set_conc(sid, rng.uniform(0.0, 0.02))
        before = {sid: sum(s.volume_liters * s.conc.get(sid, 0.0) for s in live)
                  for sid in (1, 2)}
        for _ in range(rng.randint(1, 10)):
            if rng.random() < 0.5 and len(live) >= 2:
                a, b = rng.sample(live, 2)
                live.remove(a)
                live.remove(b)
                live.append(mix(a, b))
            else:
                s = rng.choice(live)
                live.remove(s)
                live.extend(split(s, rng.uniform(0.1, 0.9)))
        for sid, m0 in before.items():
            m1 = sum(s.volume_liters * s.conc.get(sid, 0.0) for s in live)
            if m0 > 0:
                worst = max(worst, abs(m1 - m0) / m0)
    # mix covariance closed form on random inputs
    cov_ok = True
    nprng = np.random.default_rng(8)
    for _ in range(50):
        va, vb = nprng.uniform(0.5, 5.0, size=2)
        A = nprng.normal(size=(2, 2))
        B = nprng.normal(size=(2, 2))
        Ca, Cb = A @ A.T, B @ B.T
        a = new_sample("a", va)
        b = new_sample("b", vb)
        for s in (a, b):
            s.set_conc(1, 0.001)
            s.set_conc(2, 0.002)
        a.cov, a.cov_species = Ca.copy(), [1, 2]
        b.cov, b.cov_species = Cb.copy(), [1, 2]
        c = mix(a, b)
        want = (va ** 2 * Ca + vb ** 2 * Cb) / (va + vb) ** 2
        if not np.allclose(c.cov, want, rtol=0, atol=1e-15):
            cov_ok = False
    ok = worst <= 1e-12 and cov_ok
    verdict(6, "protocol conservation", ok,
            f"worst rel mole drift={worst:.2e} cov_ok={cov_ok}")


def test_acceptance_7_device_safety_liveness(tmp_path):
    t0 = time.perf_counter()
    ok = True
    detail = []
    # all shipped protocols complete on the device with a clean trace
    for prog in PROGRAMS:
        out = tmp_path / prog.stem
        rc = cli_main(["run", str(prog), "--device", "--lna",
                       "-o", str(out), "--emit", "all"])
        if rc != 0:
            ok = False
            detail.append(f"{prog.name} rc={rc}")
            continue
        trace_path = out / "device.jsonl"
        if trace_path.exists() and trace_path.read_text().strip():
            rep = check_trace_jsonl(trace_path.read_text(), DeviceConfig())
            if not rep.ok:
                ok = False
                detail.append(f"{prog.name}: {rep.violations[0]}")
    # swap feasibility agrees with the joint-state BFS oracle
    w, h = 8, 4
    oracle = bfs_swap_feasible(w, h, [(0, 0), (w - 1, h - 1)],
                               [(w - 1, h - 1), (0, 0)])
    dev = two_droplet_device(w, h)
    try:
        dev.route_many({1: (w - 1, h - 1), 2: (0, 0)})
        routed = check_frames(frames_of(dev), dev.config).ok
    except Exception:
        routed = False
    if routed != oracle:
        ok = False
        detail.append(f"swap: router={routed} oracle={oracle}")
    elapsed = time.perf_counter() - t0
    if elapsed >= 30.0:
        ok = False
        detail.append(f"slow: {elapsed:.1f}s")
    verdict(7, "device safety & liveness", ok,
            "; ".join(detail) or f"{len(PROGRAMS)} programs {elapsed:.1f}s")


INTERLEAVED = """\
sample stock {
  volume 4 uL
  temperature 20 celsius
  species S @ 0.004
  species P @ 0
  S -> P {0.1}
}
split hot_part, rest = stock by 0.5
equilibrate hot_part 10 at 37 celsius
mix pot = hot_part, rest
equilibrate pot 5 at 20 celsius
"""


def test_acceptance_8_end_to_end_interleaving():
    final = {}
    for device_on in (False, True):
        trace = run_source(INTERLEAVED, RunConfig(
            device_enabled=device_on, device=DeviceConfig()))
        pot = trace.undisposed()[-1]
        final[device_on] = dict(pot.conc)
    # reference: the same plan straight through the protocol engine
    net = Network()
    s_sp = net.add_species("S")
    p_sp = net.add_species("P")
    net.add_reaction(Complex({s_sp.id: 1}), Complex({p_sp.id: 1}),
                     MassAction(0.1))
    stock = new_sample("stock", 4.0, 20 + 273.15)
    stock.set_conc(s_sp.id, 0.004)
    stock.set_conc(p_sp.id, 0.0)
    hot_part, rest = split(stock, 0.5)
    equilibrate(hot_part, net, 10.0, 37 + 273.15)
    pot = mix(hot_part, rest)
    equilibrate(pot, net, 5.0, 20 + 273.15)
    ref = {"S": pot.conc[s_sp.id], "P": pot.conc[p_sp.id]}

    def by_name(conc, trace_run):
        net_run = trace_run.network
        return {sp.display_name: conc.get(sp.id, 0.0) for sp in net_run.species}

    ok = True
    diffs = []
    for device_on in (False, True):
        trace = run_source(INTERLEAVED, RunConfig(
            device_enabled=device_on, device=DeviceConfig()))
        pot_run = trace.undisposed()[-1]
        got = by_name(pot_run.conc, trace)
        for name, want in ref.items():
            d = abs(got[name] - want)
            diffs.append(d)
            if d > 1e-6:
                ok = False
    verdict(8, "end-to-end interleaving", ok,
            f"max |Δconc|={max(diffs):.2e} (device on/off vs protocol math)")


def test_acceptance_9_determinism(tmp_path):
    snapshots = []
    for run in ("first", "second"):
        root = tmp_path / run
        for prog in PROGRAMS:
            out = root / prog.stem
            rc = cli_main(["run", str(prog), "--device", "--lna",
                           "-o", str(out), "--emit", "all"])
            assert rc == 0, prog.name
        snapshots.append({
            str(p.relative_to(root)): p.read_bytes()
            for p in sorted(root.rglob("*")) if p.is_file()})
    ok = snapshots[0] == snapshots[1]
    verdict(9, "artifact determinism", ok,
            f"{len(snapshots[0])} artifacts byte-compared")
