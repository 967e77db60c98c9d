"""Liquid-handling semantics: samples, mix, split, equilibrate, dispose.

Samples are linear resources: every mix/split/dispose consumes its inputs,
and touching a consumed sample is an error. Noise state (the concentration
covariance) travels with the sample and is propagated through mixing under
the assumption that distinct compartments are independent:

    mix:   C = (Va^2 Ca + Vb^2 Cb) / (Va + Vb)^2   (block-lifted to the union)
    split: each part keeps C unchanged (deterministic-fraction rule)

The optional binomial partition-noise correction on split is off by default
(``binomial_split``), adding (1-f)/(f V N_A) diag(c) to each part.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .crn import Network, Species
from .simulate import AVOGADRO, Timecourse, simulate

DEFAULT_TEMPERATURE_K = 293.15  # 20 C
VESSEL_VOLUME_UL = 1000.0  # 1 mL


class ProtocolError(Exception):
    pass


_sample_counter = 0


def _next_sample_id() -> int:
    global _sample_counter
    _sample_counter += 1
    return _sample_counter


@dataclass
class Sample:
    """A compartment: volume (µL), temperature (K), concentrations (mol/L),
    and, when LNA is on, a covariance matrix over ``cov_species``."""

    id: int
    name: str
    volume_ul: float
    temperature_k: float
    conc: dict = field(default_factory=dict)  # species id -> mol/L
    cov: Optional[np.ndarray] = None
    cov_species: list = field(default_factory=list)  # species ids, matrix order
    consumed: bool = False
    consumed_by: Optional[str] = None

    @property
    def volume_liters(self) -> float:
        return self.volume_ul * 1e-6

    @property
    def omega(self) -> float:
        return self.volume_liters * AVOGADRO

    def require_live(self, op: str):
        if self.consumed:
            raise ProtocolError(
                f"sample '{self.name}' was already consumed by {self.consumed_by}; "
                f"cannot {op} it")

    def consume(self, by: str):
        self.require_live(by)
        self.consumed = True
        self.consumed_by = by

    def species_ids(self) -> list:
        return list(self.conc.keys())

    def ensure_cov(self):
        ids = self.species_ids()
        if self.cov is None:
            self.cov = np.zeros((len(ids), len(ids)))
            self.cov_species = ids
        elif self.cov_species != ids:
            self.cov = _lift(self.cov, self.cov_species, ids)
            self.cov_species = ids

    def set_conc(self, sid: int, value: float):
        if value < 0:
            raise ProtocolError(f"negative concentration {value} in sample '{self.name}'")
        had = sid in self.conc
        self.conc[sid] = float(value)
        if self.cov is not None and not had:
            self.ensure_cov()


def _lift(C: np.ndarray, old_ids: Sequence[int], new_ids: Sequence[int]) -> np.ndarray:
    """Embed a covariance block into a larger species basis (zeros elsewhere)."""
    out = np.zeros((len(new_ids), len(new_ids)))
    pos = {sid: i for i, sid in enumerate(new_ids)}
    for i, si in enumerate(old_ids):
        for j, sj in enumerate(old_ids):
            out[pos[si], pos[sj]] = C[i, j]
    return out


# --- protocol log ----------------------------------------------------------

@dataclass
class ProtocolStep:
    op: str  # new_sample | mix | split | dispose | equilibrate
    inputs: list  # sample ids
    outputs: list  # sample ids
    params: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {"op": self.op, "inputs": self.inputs,
                "outputs": self.outputs, "params": self.params}


def serialize_log(steps: Sequence[ProtocolStep]) -> str:
    return json.dumps([s.to_json() for s in steps], indent=2) + "\n"


def validate_linear_use(steps: Sequence[ProtocolStep]):
    """Static check over a protocol log: every sample id is consumed at most
    once. Raises before any device execution."""
    used: dict[int, str] = {}
    for step in steps:
        if step.op == "equilibrate":
            continue  # equilibrate reads and writes in place, not consuming
        for sid in step.inputs:
            if sid in used:
                raise ProtocolError(
                    f"sample id {sid} reused by step '{step.op}' "
                    f"(already consumed by '{used[sid]}')")
            used[sid] = step.op
    return True


# --- operations ------------------------------------------------------------

def new_sample(name: str, volume_ul: float,
               temperature_k: float = DEFAULT_TEMPERATURE_K,
               lna: bool = False) -> Sample:
    if volume_ul <= 0:
        raise ProtocolError(f"sample volume must be > 0, got {volume_ul} µL")
    s = Sample(_next_sample_id(), name, float(volume_ul), float(temperature_k))
    if lna:
        s.cov = np.zeros((0, 0))
        s.cov_species = []
    return s


def mix(a: Sample, b: Sample, name: Optional[str] = None) -> Sample:
    """Merge two samples; volume-weighted concentrations and temperature,
    independence-based covariance combination."""
    a.require_live("mix")
    b.require_live("mix")
    va, vb = a.volume_ul, b.volume_ul
    v = va + vb
    out = Sample(_next_sample_id(), name or f"mix({a.name},{b.name})", v,
                 (va * a.temperature_k + vb * b.temperature_k) / v)
    ids = list(a.conc.keys()) + [sid for sid in b.conc if sid not in a.conc]
    for sid in ids:
        out.conc[sid] = (va * a.conc.get(sid, 0.0) + vb * b.conc.get(sid, 0.0)) / v
    if a.cov is not None or b.cov is not None:
        ca = _lift(a.cov, a.cov_species, ids) if a.cov is not None else np.zeros((len(ids),) * 2)
        cb = _lift(b.cov, b.cov_species, ids) if b.cov is not None else np.zeros((len(ids),) * 2)
        out.cov = (va ** 2 * ca + vb ** 2 * cb) / v ** 2
        out.cov_species = ids
    a.consume("mix")
    b.consume("mix")
    return out


def split(s: Sample, p: float, names: tuple = (None, None),
          binomial_split: bool = False) -> tuple:
    s.require_live("split")
    if not (0.0 < p < 1.0):
        raise ProtocolError(f"split proportion must be in (0,1), got {p}")
    parts = []
    for frac, name in ((p, names[0]), (1.0 - p, names[1])):
        part = Sample(_next_sample_id(), name or f"{s.name}'", frac * s.volume_ul,
                      s.temperature_k)
        part.conc = dict(s.conc)
        if s.cov is not None:
            part.cov = s.cov.copy()
            part.cov_species = list(s.cov_species)
            if binomial_split:
                vl = part.volume_liters
                for i, sid in enumerate(part.cov_species):
                    part.cov[i, i] += (1.0 - frac) / (vl * AVOGADRO) * s.conc.get(sid, 0.0)
        parts.append(part)
    s.consume("split")
    return tuple(parts)


def dispose(s: Sample):
    s.consume("dispose")


def slice_network(network: Network, sids: Sequence[int]) -> Network:
    """Subnetwork induced by a species set: those species plus every reaction
    all of whose species are present."""
    sub = Network()
    keep = set(sids)
    for sp in network.species:
        if sp.id in keep:
            sub.adopt_species(sp)
    for r in network.reactions:
        if r.species_ids() <= keep:
            sub.reactions.append(r)
    return sub


def equilibrate(
    s: Sample,
    network: Network,
    duration: float,
    temperature_k: Optional[float] = None,
    lna: bool = False,
    rtol: float = 1e-6,
    atol: float = 1e-8,
    n_points: int = 1000,
) -> Timecourse:
    """Run the sample's network slice for `duration` seconds and write the
    end state (means and covariances) back into the sample."""
    s.require_live("equilibrate")
    if duration < 0:
        raise ProtocolError(f"negative equilibrate duration {duration}")
    if temperature_k is not None:
        s.temperature_k = float(temperature_k)
    sub = slice_network(network, s.species_ids())
    if duration == 0.0:
        return Timecourse(np.zeros(0), list(sub.species),
                          np.zeros((0, len(sub.species))),
                          np.zeros((0, len(sub.species), len(sub.species))) if lna else None,
                          omega=s.omega)
    init_cov = None
    if lna:
        s.ensure_cov()
        order = [sp.id for sp in sub.species]
        init_cov = _lift(s.cov, s.cov_species, order)
    try:
        tc = simulate(sub, dict(s.conc), duration, lna=lna, omega=s.omega,
                      temperature=s.temperature_k, initial_cov=init_cov,
                      rtol=rtol, atol=atol, n_points=n_points)
    except Exception as exc:
        raise ProtocolError(f"equilibrate of sample '{s.name}' failed: {exc}") from exc
    for i, sp in enumerate(sub.species):
        s.conc[sp.id] = float(tc.means[-1, i])
    if lna and tc.covs is not None:
        s.cov = tc.covs[-1].copy()
        s.cov_species = [sp.id for sp in sub.species]
        # species outside the slice keep zero covariance
        missing = [sid for sid in s.species_ids() if sid not in s.cov_species]
        if missing:
            full = s.cov_species + missing
            s.cov = _lift(s.cov, s.cov_species, full)
            s.cov_species = full
    return tc


def total_moles(samples: Sequence[Sample]) -> dict:
    """Per-species total moles over live samples (volume µL * mol/L * 1e-6)."""
    out: dict[int, float] = {}
    for s in samples:
        if s.consumed:
            continue
        for sid, c in s.conc.items():
            out[sid] = out.get(sid, 0.0) + s.volume_liters * c
    return out
