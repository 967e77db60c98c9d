"""ODE construction and integration for networks: means and LNA covariances.

Mean dynamics: dx/dt = S a(x, t). With LNA enabled the state is extended with
the upper triangle of the concentration covariance C, which follows
dC/dt = J C + C J^T + (1/Omega) S diag(a) S^T, J = S da/dx, Omega = V * N_A.
Only the upper triangle is integrated, so C is symmetric by construction.

The integrator is an adaptive embedded Runge-Kutta 5(4) pair (Dormand-Prince);
steps are clipped to land exactly on output-grid points and declared event
times, which also handles discontinuous input waveforms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from . import rate_expr
from .crn import General, MassAction, Network, Reaction, Species, stoichiometry

AVOGADRO = 6.02214076e23

DEFAULT_RTOL = 1e-6
DEFAULT_ATOL = 1e-8
DEFAULT_GRID = 1000


class SimulationError(Exception):
    pass


def mass_action_flux(r: Reaction, state: dict[int, float]) -> float:
    """k * prod state[s]^mult over reagents; constant influx when reagents empty."""
    if not isinstance(r.rate, MassAction):
        raise SimulationError("mass_action_flux requires a MassAction rate")
    flux = r.rate.k
    for sid, n in r.reagents.entries.items():
        flux *= state[sid] ** n
    return flux


@dataclass
class VectorField:
    dimension: int
    n_species: int
    species: list[Species]
    lna: bool
    omega: float
    rhs: Callable[[float, np.ndarray], np.ndarray]
    jacobian_mode: str  # "analytic" | "finite-difference"
    # indices of the (i, j) covariance slots, row-major upper triangle
    cov_slots: list[tuple[int, int]] = field(default_factory=list)

    def unpack_cov(self, y: np.ndarray) -> np.ndarray:
        n = self.n_species
        C = np.zeros((n, n))
        for k, (i, j) in enumerate(self.cov_slots):
            C[i, j] = y[n + k]
            C[j, i] = y[n + k]
        return C

    def pack(self, means: np.ndarray, cov: Optional[np.ndarray]) -> np.ndarray:
        if not self.lna:
            return np.asarray(means, dtype=float).copy()
        y = np.zeros(self.dimension)
        y[: self.n_species] = means
        if cov is not None:
            for k, (i, j) in enumerate(self.cov_slots):
                y[self.n_species + k] = cov[i, j]
        return y


def _propensity_fns(network: Network, temp: float):
    """Per-reaction flux evaluators over (x: ndarray by species index, t)."""
    idx = {sp.id: i for i, sp in enumerate(network.species)}
    fns = []
    for r in network.reactions:
        if isinstance(r.rate, MassAction):
            k = r.rate.k
            pairs = [(idx[sid], n) for sid, n in r.reagents.entries.items()]

            def fn(x, t, k=k, pairs=pairs):
                flux = k
                for i, n in pairs:
                    xi = x[i]
                    if xi < 0.0:
                        xi = 0.0
                    flux *= xi ** n
                return flux

        elif isinstance(r.rate, General):
            expr = r.rate.expr

            def fn(x, t, expr=expr, idx=idx):
                conc = _ConcView(x, idx)
                return expr.eval(conc, t, temp)

        else:
            raise SimulationError(f"unknown rate law {r.rate!r}")
        fns.append(fn)
    return fns


class _ConcView:
    """Maps species id -> concentration without building a dict per call."""

    __slots__ = ("x", "idx")

    def __init__(self, x, idx):
        self.x = x
        self.idx = idx

    def __getitem__(self, sid):
        return self.x[self.idx[sid]]


def _mass_action_jacobian_fns(network: Network):
    """Analytic da_r/dx_i closures; only valid when every rate is mass action."""
    idx = {sp.id: i for i, sp in enumerate(network.species)}
    rows = []
    for r in network.reactions:
        k = r.rate.k
        pairs = [(idx[sid], n) for sid, n in r.reagents.entries.items()]
        rows.append((k, pairs))

    def jac(x, t, out):
        # out: (n_reactions, n_species) da/dx
        out[:] = 0.0
        for rj, (k, pairs) in enumerate(rows):
            for di, dn in pairs:
                term = k * dn
                xi = max(x[di], 0.0)
                term *= xi ** (dn - 1)
                for oi, on in pairs:
                    if oi != di:
                        term *= max(x[oi], 0.0) ** on
                out[rj, di] = term

    return jac


def build_ode(
    network: Network,
    lna: bool = False,
    omega: float = 1.0,
    temperature: float = 293.15,
) -> VectorField:
    """Assemble the vector field for a network at fixed temperature.

    ``omega`` is the system size (volume in liters times Avogadro); it scales
    the LNA diffusion term and is irrelevant when lna is off.
    """
    n = len(network.species)
    m = len(network.reactions)
    S = stoichiometry(network).astype(float)
    prop = _propensity_fns(network, temperature)
    all_mass_action = all(isinstance(r.rate, MassAction) for r in network.reactions)

    a = np.zeros(m)

    def eval_prop(x, t):
        for j, fn in enumerate(prop):
            a[j] = fn(x, t)
        return a

    if not lna:
        def rhs(t, y):
            return S @ eval_prop(y, t)

        return VectorField(n, n, list(network.species), False, omega, rhs,
                           "analytic" if all_mass_action else "finite-difference")

    cov_slots = [(i, j) for i in range(n) for j in range(i, n)]
    slot_of = {(i, j): k for k, (i, j) in enumerate(cov_slots)}
    dim = n + len(cov_slots)
    dadx = np.zeros((m, n))

    if all_mass_action:
        jac_fn = _mass_action_jacobian_fns(network)

        def fill_dadx(x, t):
            jac_fn(x, t, dadx)
    else:
        def fill_dadx(x, t):
            base = eval_prop(x, t).copy()
            for i in range(n):
                h = 1e-7 * max(1.0, abs(x[i]))
                xp = x.copy()
                xp[i] += h
                xm = x.copy()
                xm[i] -= h
                ap = np.array([fn(xp, t) for fn in prop])
                am = np.array([fn(xm, t) for fn in prop])
                col = (ap - am) / (2 * h)
                if not np.all(np.isfinite(col)):
                    raise SimulationError(
                        "rate expression not differentiable at evaluation point "
                        f"(species {network.species[i].display_name})")
                dadx[:, i] = col

    def rhs(t, y):
        x = y[:n]
        av = eval_prop(x, t)
        dy = np.zeros(dim)
        dy[:n] = S @ av
        fill_dadx(x, t)
        J = S @ dadx
        C = np.zeros((n, n))
        for k, (i, j) in enumerate(cov_slots):
            C[i, j] = y[n + k]
            C[j, i] = y[n + k]
        D = (S * av) @ S.T / omega
        dC = J @ C + C @ J.T + D
        for k, (i, j) in enumerate(cov_slots):
            dy[n + k] = dC[i, j]
        return dy

    vf = VectorField(dim, n, list(network.species), True, omega, rhs,
                     "analytic" if all_mass_action else "finite-difference")
    vf.cov_slots = cov_slots
    return vf


@dataclass
class Timecourse:
    """Sampled trajectory: times, means per species, optional covariances."""

    times: np.ndarray
    species: list[Species]
    means: np.ndarray  # (T, n)
    covs: Optional[np.ndarray]  # (T, n, n) when LNA enabled
    omega: float = 1.0
    observers: dict[str, np.ndarray] = field(default_factory=dict)
    observer_order: list[str] = field(default_factory=list)

    def mean_of(self, sid: int) -> np.ndarray:
        return self.means[:, self._index(sid)]

    def cov_of(self, sid_a: int, sid_b: int) -> np.ndarray:
        if self.covs is None:
            raise SimulationError("covariances requested but LNA was not enabled")
        return self.covs[:, self._index(sid_a), self._index(sid_b)]

    def _index(self, sid: int) -> int:
        for i, sp in enumerate(self.species):
            if sp.id == sid:
                return i
        raise SimulationError(f"species id {sid} not in timecourse")

    def to_csv(self) -> str:
        from .export import timecourse_csv
        return timecourse_csv(self)


# Dormand-Prince 5(4) tableau
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640,
                -92097 / 339200, 187 / 2100, 1 / 40])


def integrate(
    vf: VectorField,
    y0: np.ndarray,
    t_end: float,
    rtol: float = DEFAULT_RTOL,
    atol: float = DEFAULT_ATOL,
    grid: Optional[Sequence[float]] = None,
    n_points: int = DEFAULT_GRID,
    t_start: float = 0.0,
    event_times: Sequence[float] = (),
) -> tuple[np.ndarray, np.ndarray]:
    """Integrate to t_end; returns (times, states) sampled on the output grid.

    The grid defaults to n_points+1 equally spaced times including both ends.
    Every grid point and event time is hit exactly (steps are clipped).
    """
    if t_end <= t_start:
        raise SimulationError(f"t_end must exceed t_start, got {t_start}..{t_end}")
    y = np.asarray(y0, dtype=float).copy()
    if y.shape != (vf.dimension,):
        raise SimulationError(f"state size {y.shape} does not match dimension {vf.dimension}")
    if not np.all(np.isfinite(y)):
        raise SimulationError("non-finite initial state")

    if grid is None:
        times = np.linspace(t_start, t_end, n_points + 1)
    else:
        times = np.asarray(grid, dtype=float)

    stops = sorted(set(list(times) + [t for t in event_times if t_start < t < t_end]))
    out = np.zeros((len(times), vf.dimension))
    out[0] = y
    grid_idx = {float(t): i for i, t in enumerate(times)}

    span = t_end - t_start
    t = t_start
    f = vf.rhs(t, y)
    dt = min(span / 100.0, _initial_step(vf, t, y, f, rtol, atol))
    K = np.zeros((7, vf.dimension))

    for stop in stops:
        if stop <= t:
            continue
        while t < stop - 1e-15 * span:
            hits_stop = dt >= stop - t
            if hits_stop:
                dt = stop - t
            if dt < 1e-14 * span:
                worst = int(np.argmax(np.abs(f[: vf.n_species])))
                raise SimulationError(
                    "step size underflow (stiffness?) near t="
                    f"{t:.6g}; fastest-changing species: {vf.species[worst].display_name}")
            K[0] = f
            failed = False
            for i in range(1, 7):
                yi = y + dt * sum(_A[i][j] * K[j] for j in range(i))
                K[i] = vf.rhs(t + _C[i] * dt, yi)
                if not np.all(np.isfinite(K[i])):
                    failed = True
                    break
            if not failed:
                y5 = y + dt * (_B5 @ K)
                err_vec = dt * ((_B5 - _B4) @ K)
                scale = atol + rtol * np.maximum(np.abs(y), np.abs(y5))
                err = float(np.sqrt(np.mean((err_vec / scale) ** 2)))
            if failed or not math.isfinite(err):
                dt *= 0.25
                continue
            means = y5[: vf.n_species]
            if np.any(means < -atol):
                dt *= 0.5
                continue
            if err <= 1.0:
                t = stop if hits_stop else t + dt
                clipped = bool(np.any(means < 0.0))
                np.clip(means, 0.0, None, out=means)
                y = y5
                # FSAL: K[6] is rhs at (t+dt, y5) unless we clipped undershoot
                f = vf.rhs(t, y) if clipped else K[6]
                out_i = grid_idx.get(float(t))
                if out_i is not None:
                    out[out_i] = y
            factor = 0.9 * (1.0 / err) ** 0.2 if err > 0 else 5.0
            dt = dt * min(5.0, max(0.2, factor))
    return times, out


def _initial_step(vf, t, y, f, rtol, atol) -> float:
    scale = atol + rtol * np.abs(y)
    d0 = float(np.sqrt(np.mean((y / scale) ** 2)))
    d1 = float(np.sqrt(np.mean((f / scale) ** 2)))
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    y1 = y + h0 * f
    f1 = vf.rhs(t + h0, y1)
    d2 = float(np.sqrt(np.mean(((f1 - f) / scale) ** 2))) / h0
    h1 = max(d1, d2)
    h1 = (0.01 / h1) ** 0.2 if h1 > 1e-15 else max(1e-6, h0 * 1e-3)
    return min(100 * h0, h1)


def simulate(
    network: Network,
    initial: dict[int, float],
    t_end: float,
    lna: bool = False,
    omega: float = 1.0,
    temperature: float = 293.15,
    initial_cov: Optional[np.ndarray] = None,
    rtol: float = DEFAULT_RTOL,
    atol: float = DEFAULT_ATOL,
    n_points: int = DEFAULT_GRID,
    event_times: Sequence[float] = (),
) -> Timecourse:
    """Integrate a network from given initial concentrations (mol/L)."""
    vf = build_ode(network, lna=lna, omega=omega, temperature=temperature)
    means0 = np.array([initial.get(sp.id, 0.0) for sp in network.species])
    y0 = vf.pack(means0, initial_cov)
    times, states = integrate(vf, y0, t_end, rtol=rtol, atol=atol,
                              n_points=n_points, event_times=event_times)
    n = vf.n_species
    means = states[:, :n]
    covs = None
    if lna:
        covs = np.zeros((len(times), n, n))
        for ti in range(len(times)):
            covs[ti] = vf.unpack_cov(states[ti])
        _warn_psd(covs, times)
    return Timecourse(times, list(network.species), means, covs, omega=omega)


def _warn_psd(covs: np.ndarray, times: np.ndarray, tol: float = 1e-9):
    # post-hoc PSD check at output points; warn only, never mutate
    import warnings
    for ti in range(0, len(times), max(1, len(times) // 20)):
        w = np.linalg.eigvalsh(covs[ti])
        if w.min() < -tol * max(1.0, w.max()):
            warnings.warn(
                f"covariance lost positive semidefiniteness at t={times[ti]:.6g} "
                f"(min eigenvalue {w.min():.3e})", stacklevel=2)
            break


# ---------------------------------------------------------------------------
# observers

class ObserverError(Exception):
    pass


@dataclass
class Observer:
    """A reported series: statistic of an expression over species."""

    kind: str  # mean | var | sd | cv | fano
    expr: rate_expr.Node
    label: str


def _linear_coeffs(expr: rate_expr.Node, species: list[Species]) -> np.ndarray:
    """Extract coefficients of a linear combination; error when nonlinear."""
    idx = {sp.id: i for i, sp in enumerate(species)}

    class V:
        def __init__(self, vec):
            self.vec = vec

        def __getitem__(self, sid):
            return self.vec[idx[sid]]

    n = len(species)
    zero = expr.eval(V(np.zeros(n)), 0.0, 293.15)
    coeffs = np.zeros(n)
    for i in range(n):
        e = np.zeros(n)
        e[i] = 1.0
        coeffs[i] = expr.eval(V(e), 0.0, 293.15) - zero
    # linearity check at an arbitrary point
    probe = np.linspace(0.3, 1.7, n) if n else np.zeros(0)
    got = expr.eval(V(probe), 0.0, 293.15)
    want = zero + float(coeffs @ probe)
    if abs(got - want) > 1e-9 * max(1.0, abs(want)):
        raise ObserverError("variance statistics require a linear combination of species")
    if abs(zero) > 1e-12:
        raise ObserverError("variance statistics require a combination without constant offset")
    return coeffs


def observe(tc: Timecourse, obs: Observer) -> np.ndarray:
    """Evaluate one observer over a timecourse.

    mean(expr) evaluates pointwise on the mean trajectory (any expression);
    var/sd/cv require a linear combination a'x and use a'Ca; fano is computed
    on the molecule-count scale, Omega * var / mean (Poisson -> 1).
    """
    idx = {sp.id: i for i, sp in enumerate(tc.species)}
    T = len(tc.times)

    if obs.kind == "mean":
        series = np.zeros(T)
        for ti in range(T):
            conc = _ConcView(tc.means[ti], idx)
            series[ti] = obs.expr.eval(conc, tc.times[ti], 293.15)
        return series

    if tc.covs is None:
        raise ObserverError(
            f"'{obs.kind}' requires noise statistics; enable LNA to compute them")
    a = _linear_coeffs(obs.expr, tc.species)
    var = np.einsum("i,tij,j->t", a, tc.covs, a)
    var = np.maximum(var, 0.0)
    if obs.kind == "var":
        return var
    if obs.kind == "sd":
        return np.sqrt(var)
    mean = tc.means @ a
    if obs.kind == "cv":
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(mean != 0.0, np.sqrt(var) / mean, np.nan)
    if obs.kind == "fano":
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(mean != 0.0, tc.omega * var / mean, np.nan)
    raise ObserverError(f"unknown observer kind {obs.kind}")


# ---------------------------------------------------------------------------
# symbolic export

@dataclass(frozen=True)
class _Sym(rate_expr.Node):
    name: str

    def eval(self, conc, t, temp):
        raise rate_expr.RateExprError("symbolic node")

    def diff(self, sid):
        return rate_expr.Const(0.0)

    def show(self, name_of):
        return self.name


def _propensity_node(r: Reaction) -> rate_expr.Node:
    if isinstance(r.rate, General):
        return r.rate.expr
    node: rate_expr.Node = rate_expr.Const(r.rate.k)
    for sid, n in sorted(r.reagents.entries.items()):
        node = rate_expr.mul(node, rate_expr.power(rate_expr.Conc(sid), rate_expr.Const(float(n))))
    return node


def symbolic_odes(network: Network, lna: bool = False) -> str:
    """Human-readable ODE system: mean equations, plus covariance equations
    for every unordered species pair when lna is set. Zero terms are dropped."""
    n = len(network.species)
    if n == 0:
        return ""
    S = stoichiometry(network)
    name_of = {sp.id: sp.display_name for sp in network.species}.__getitem__
    props = [_propensity_node(r) for r in network.reactions]
    lines = []
    for i, sp in enumerate(network.species):
        node: rate_expr.Node = rate_expr.Const(0.0)
        for j, p in enumerate(props):
            node = rate_expr.add(node, rate_expr.mul(rate_expr.Const(float(S[i, j])), p))
        lines.append(f"d[{sp.display_name}]/dt = {node.show(name_of)}")
    if lna:
        omega = _Sym("Omega")
        cov = {}
        for i in range(n):
            for j in range(n):
                lo, hi = min(i, j), max(i, j)
                cov[(i, j)] = _Sym(
                    f"Cov({network.species[lo].display_name},{network.species[hi].display_name})")
        # J[i][z] = sum_j S[i,j] * d a_j / d x_z
        J = [[rate_expr.Const(0.0) for _ in range(n)] for _ in range(n)]
        for i in range(n):
            for z in range(n):
                acc: rate_expr.Node = rate_expr.Const(0.0)
                zid = network.species[z].id
                for j, p in enumerate(props):
                    acc = rate_expr.add(
                        acc, rate_expr.mul(rate_expr.Const(float(S[i, j])), p.diff(zid)))
                J[i][z] = acc
        for i in range(n):
            for j in range(i, n):
                acc: rate_expr.Node = rate_expr.Const(0.0)
                for z in range(n):
                    acc = rate_expr.add(acc, rate_expr.mul(J[i][z], cov[(z, j)]))
                    acc = rate_expr.add(acc, rate_expr.mul(J[j][z], cov[(i, z)]))
                diff_term: rate_expr.Node = rate_expr.Const(0.0)
                for rj, p in enumerate(props):
                    diff_term = rate_expr.add(
                        diff_term,
                        rate_expr.mul(rate_expr.Const(float(S[i, rj] * S[j, rj])), p))
                if not (isinstance(diff_term, rate_expr.Const) and diff_term.value == 0.0):
                    acc = rate_expr.add(acc, rate_expr.div(diff_term, omega))
                a_name = network.species[i].display_name
                b_name = network.species[j].display_name
                lines.append(f"d Cov({a_name},{b_name})/dt = {acc.show(name_of)}")
    return "\n".join(lines) + "\n"
