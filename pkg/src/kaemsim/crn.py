"""Core data model: species, complexes, reactions, networks.

Species identity is an integer id, never the name; two species created with
the same base name are distinct, and display names are disambiguated with a
middle-dot counter (``prey``, ``prey·1``, ``prey·2``, ...) at network level.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

MAX_MULTIPLICITY = 16


class CrnError(Exception):
    """Raised on malformed network construction."""


@dataclass(frozen=True)
class Species:
    id: int
    base_name: str
    display_name: str

    def __repr__(self):
        return f"Species({self.id}, {self.display_name!r})"


class Complex:
    """Multiset of species ids with positive multiplicities; empty = ∅."""

    __slots__ = ("entries",)

    def __init__(self, entries: Optional[dict[int, int]] = None):
        self.entries: dict[int, int] = {}
        if entries:
            for sid, n in entries.items():
                if n < 0:
                    raise CrnError(f"negative multiplicity {n} for species {sid}")
                if n > 0:
                    self.entries[sid] = int(n)

    @classmethod
    def of(cls, *species, **_):
        """Build from Species or (Species, multiplicity) pairs."""
        entries: dict[int, int] = {}
        for item in species:
            if isinstance(item, tuple):
                sp, n = item
            else:
                sp, n = item, 1
            sid = sp.id if isinstance(sp, Species) else int(sp)
            entries[sid] = entries.get(sid, 0) + n
        return cls(entries)

    def is_empty(self) -> bool:
        return not self.entries

    def get(self, sid: int) -> int:
        return self.entries.get(sid, 0)

    def support(self) -> set[int]:
        return set(self.entries)

    def __add__(self, other: "Complex") -> "Complex":
        out = dict(self.entries)
        for sid, n in other.entries.items():
            out[sid] = out.get(sid, 0) + n
        return Complex(out)

    def __eq__(self, other):
        return isinstance(other, Complex) and self.entries == other.entries

    def __hash__(self):
        return hash(frozenset(self.entries.items()))

    def __iter__(self):
        return iter(sorted(self.entries.items()))

    def __repr__(self):
        return f"Complex({self.entries})"


@dataclass(frozen=True)
class MassAction:
    k: float

    def __post_init__(self):
        if self.k < 0:
            raise CrnError(f"mass-action rate constant must be >= 0, got {self.k}")


@dataclass(frozen=True)
class General:
    """General flux expression over species concentrations, time, temperature.

    ``expr`` is a compiled rate expression (see rate_expr module).
    """

    expr: object


RateLaw = object  # MassAction | General


@dataclass
class Reaction:
    reagents: Complex
    products: Complex
    rate: RateLaw

    def species_ids(self) -> set[int]:
        return self.reagents.support() | self.products.support()


@dataclass
class CatalyticDecomposition:
    """Reaction recast as C, A0 -> B0 with catalysts factored out."""

    catalysts: Complex
    net_reagents: Complex
    net_products: Complex


class Network:
    """Ordered species + ordered reactions + initial concentrations (mol/L)."""

    def __init__(self):
        self.species: list[Species] = []
        self.reactions: list[Reaction] = []
        self.initial: dict[int, float] = {}
        self._by_id: dict[int, Species] = {}
        self._display_counts: dict[str, int] = {}

    def add_species(self, base_name: str, species_id: Optional[int] = None) -> Species:
        """Append a fresh species; display name disambiguated deterministically."""
        if species_id is None:
            species_id = _next_species_id()
        seen = self._display_counts.get(base_name, 0)
        display = base_name if seen == 0 else f"{base_name}·{seen}"
        self._display_counts[base_name] = seen + 1
        sp = Species(species_id, base_name, display)
        self.species.append(sp)
        self._by_id[sp.id] = sp
        return sp

    def adopt_species(self, sp: Species):
        """Append an existing species (used when slicing a network); keeps
        the original display name."""
        if sp.id in self._by_id:
            return
        self.species.append(sp)
        self._by_id[sp.id] = sp

    def species_by_id(self, sid: int) -> Species:
        return self._by_id[sid]

    def has_species(self, sid: int) -> bool:
        return sid in self._by_id

    def add_reaction(self, reagents: Complex, products: Complex, rate: RateLaw) -> int:
        for sid in sorted(reagents.support() | products.support()):
            if sid not in self._by_id:
                raise CrnError(f"reaction references unknown species id {sid}")
        for n in list(reagents.entries.values()) + list(products.entries.values()):
            if n > MAX_MULTIPLICITY:
                raise CrnError(f"multiplicity {n} exceeds maximum {MAX_MULTIPLICITY}")
        if reagents.is_empty() and products.is_empty():
            raise CrnError("reaction with empty reagents and empty products is not allowed")
        self.reactions.append(Reaction(reagents, products, rate))
        return len(self.reactions) - 1

    def set_initial(self, sid: int, conc: float):
        if not self.has_species(sid):
            raise CrnError(f"initial concentration for unknown species id {sid}")
        if conc < 0:
            raise CrnError(f"negative initial concentration {conc}")
        self.initial[sid] = float(conc)

    def index_of(self, sid: int) -> int:
        for i, sp in enumerate(self.species):
            if sp.id == sid:
                return i
        raise CrnError(f"species id {sid} not in network")


_species_counter = 0


def _next_species_id() -> int:
    global _species_counter
    _species_counter += 1
    return _species_counter


def decompose_catalytic(r: Reaction) -> CatalyticDecomposition:
    """Factor out min(reagent, product) multiplicity per species into catalysts.

    Recomposition holds exactly: reagents = C + A0 and products = C + B0.
    """
    cat: dict[int, int] = {}
    a0: dict[int, int] = {}
    b0: dict[int, int] = {}
    for sid in r.reagents.support() | r.products.support():
        n = r.reagents.get(sid)
        m = r.products.get(sid)
        c = min(n, m)
        if c:
            cat[sid] = c
        if n - c:
            a0[sid] = n - c
        if m - c:
            b0[sid] = m - c
    return CatalyticDecomposition(Complex(cat), Complex(a0), Complex(b0))


def stoichiometry(network: Network) -> np.ndarray:
    """Net-change matrix S, shape (n_species, n_reactions), integer entries."""
    n = len(network.species)
    m = len(network.reactions)
    idx = {sp.id: i for i, sp in enumerate(network.species)}
    S = np.zeros((n, m), dtype=np.int64)
    for j, r in enumerate(network.reactions):
        for sid, mult in r.products.entries.items():
            S[idx[sid], j] += mult
        for sid, mult in r.reagents.entries.items():
            S[idx[sid], j] -= mult
    return S
