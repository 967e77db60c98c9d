"""Reaction-score layout and rendering.

A network is drawn as horizontal species lines crossed by one vertical tile
per reaction. Each reaction is first decomposed into catalysts plus disjoint
net reagents/products; reagent connectors are blue blunt bars, products red
arrowheads, catalysts green circles attached to the tile's stem. The layout
is invertible: the reaction complexes can be recovered exactly from the
connectors (rates and initial conditions are not represented).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

from .crn import (Complex, MassAction, Network, Reaction, Species,
                  decompose_catalytic)


class ScoreError(Exception):
    pass


@dataclass
class Connector:
    line: int  # species line index
    kind: str  # reagent | product | catalyst
    multiplicity: int


@dataclass
class Tile:
    reaction_index: int
    column: int
    connectors: list  # Connector
    has_stem: bool
    empty_reagents: bool = False  # ∅ on the input side
    empty_products: bool = False


@dataclass
class ScoreModel:
    species_order: list  # Species per line index
    tiles: list  # Tile

    def __post_init__(self):
        for tile in self.tiles:
            _check_tile(tile)


def _check_tile(tile: Tile):
    kinds_per_line: dict[int, set] = {}
    for c in tile.connectors:
        kinds_per_line.setdefault(c.line, set()).add(c.kind)
        if c.multiplicity < 1:
            raise ScoreError(f"connector multiplicity must be >= 1, got {c.multiplicity}")
    for line, kinds in kinds_per_line.items():
        # A catalyst circle may share a line with a reagent bar or product
        # arrowhead (e.g. 2A+B -> A+C puts both a bar and a circle on A),
        # but net reagent and net product are disjoint by construction.
        if "reagent" in kinds and "product" in kinds:
            raise ScoreError(
                f"tile {tile.reaction_index}: line {line} has both a reagent and "
                "a product connector")


@dataclass
class ScoreStyle:
    line_spacing: float = 28.0
    tile_width: float = 44.0
    left_margin: float = 110.0
    top_margin: float = 24.0
    glyph_size: float = 7.0
    reagent_color: str = "#1f4fd6"   # blue, blunt bar
    product_color: str = "#d62728"   # red, sharp arrowhead
    catalyst_color: str = "#2ca02c"  # green, circle
    stem_color: str = "#444444"
    line_color: str = "#999999"
    font_size: float = 11.0

    def __post_init__(self):
        for name in ("line_spacing", "tile_width", "glyph_size", "font_size"):
            if getattr(self, name) <= 0:
                raise ScoreError(f"{name} must be positive")


def layout_score(network: Network,
                 order: Optional[Sequence[Species]] = None) -> ScoreModel:
    """One tile per reaction in network order; the optional species
    permutation reorders the horizontal lines."""
    if order is None:
        order = list(network.species)
    else:
        order = list(order)
        if sorted(sp.id for sp in order) != sorted(sp.id for sp in network.species):
            raise ScoreError("order must be a permutation of the network's species")
    line_of = {sp.id: i for i, sp in enumerate(order)}
    tiles = []
    for ri, r in enumerate(network.reactions):
        d = decompose_catalytic(r)
        connectors = []
        for sid, mult in d.net_reagents:
            connectors.append(Connector(line_of[sid], "reagent", mult))
        for sid, mult in d.net_products:
            connectors.append(Connector(line_of[sid], "product", mult))
        for sid, mult in d.catalysts:
            connectors.append(Connector(line_of[sid], "catalyst", mult))
        one_one = (len(d.net_reagents.entries) == 1
                   and len(d.net_products.entries) == 1
                   and all(m == 1 for _, m in d.net_reagents)
                   and all(m == 1 for _, m in d.net_products))
        tiles.append(Tile(
            reaction_index=ri,
            column=ri,
            connectors=connectors,
            has_stem=not one_one,
            empty_reagents=d.net_reagents.is_empty(),
            empty_products=d.net_products.is_empty(),
        ))
    return ScoreModel(order, tiles)


def invert_score(score: ScoreModel) -> Network:
    """Rebuild the network from connectors alone; every rate becomes a unit
    mass-action placeholder and initial conditions are absent."""
    net = Network()
    for sp in score.species_order:
        net.adopt_species(sp)
    for tile in score.tiles:
        _check_tile(tile)
        reagents: dict[int, int] = {}
        products: dict[int, int] = {}
        for c in tile.connectors:
            sid = score.species_order[c.line].id
            if c.kind == "reagent":
                reagents[sid] = reagents.get(sid, 0) + c.multiplicity
            elif c.kind == "product":
                products[sid] = products.get(sid, 0) + c.multiplicity
            elif c.kind == "catalyst":
                reagents[sid] = reagents.get(sid, 0) + c.multiplicity
                products[sid] = products.get(sid, 0) + c.multiplicity
            else:
                raise ScoreError(f"unknown connector kind {c.kind!r}")
        net.reactions.append(
            Reaction(Complex(reagents), Complex(products), MassAction(1.0)))
    # keep reactions in tile order regardless of tile column values
    return net


def barycenter_order(network: Network, rounds: int = 3) -> list:
    """Reorder species lines to shorten connector spans (barycenter heuristic)."""
    order = list(network.species)
    for _ in range(rounds):
        pos = {sp.id: i for i, sp in enumerate(order)}
        weight = {}
        for r in network.reactions:
            lines = [pos[sid] for sid in r.species_ids()]
            if not lines:
                continue
            center = sum(lines) / len(lines)
            for sid in r.species_ids():
                weight.setdefault(sid, []).append(center)
        def key(sp):
            w = weight.get(sp.id)
            return (sum(w) / len(w)) if w else pos[sp.id]
        order = sorted(order, key=lambda sp: (key(sp), pos[sp.id]))
    return order


# --- SVG -------------------------------------------------------------------

def render_svg(score: ScoreModel, style: Optional[ScoreStyle] = None) -> str:
    """Deterministic SVG. Species lines are <line> elements; stems and
    1-in/1-out links are <path>; glyphs are <rect>/<polygon>/<circle>."""
    style = style or ScoreStyle()
    n = len(score.species_order)
    m = len(score.tiles)
    width = style.left_margin + (m + 0.5) * style.tile_width + 20
    height = style.top_margin + (max(n - 1, 0)) * style.line_spacing + 40
    g = style.glyph_size

    def line_y(i: int) -> float:
        return style.top_margin + i * style.line_spacing

    def tile_x(col: int) -> float:
        return style.left_margin + (col + 0.5) * style.tile_width

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0f}" '
           f'height="{height:.0f}" viewBox="0 0 {width:.0f} {height:.0f}">',
           '<rect x="0" y="0" width="100%" height="100%" fill="white"/>']
    for i, sp in enumerate(score.species_order):
        y = line_y(i)
        out.append(f'<text x="{style.left_margin - 10:.1f}" y="{y + 4:.1f}" '
                   f'font-size="{style.font_size:.0f}" text-anchor="end">'
                   f'{_esc(sp.display_name)}</text>')
        out.append(f'<line x1="{style.left_margin:.1f}" y1="{y:.1f}" '
                   f'x2="{width - 12:.1f}" y2="{y:.1f}" '
                   f'stroke="{style.line_color}" stroke-width="1"/>')
    for tile in score.tiles:
        x = tile_x(tile.column)
        ys = [line_y(c.line) for c in tile.connectors]
        if not ys:
            continue
        y_lo, y_hi = min(ys), max(ys)
        if tile.has_stem or len(ys) > 1:
            out.append(f'<path d="M {x:.1f} {y_lo:.1f} L {x:.1f} {y_hi:.1f}" '
                       f'stroke="{style.stem_color}" stroke-width="2" fill="none"/>')
        if tile.empty_reagents or tile.empty_products:
            # source/sink glyph at the stem end keeps ∅ distinguishable
            y_end = y_lo - g * 1.6 if tile.empty_reagents else y_hi + g * 1.6
            y_att = y_lo if tile.empty_reagents else y_hi
            out.append(f'<path d="M {x:.1f} {y_att:.1f} L {x:.1f} {y_end:.1f}" '
                       f'stroke="{style.stem_color}" stroke-width="2" fill="none"/>')
            out.append(f'<path d="M {x - g:.1f} {y_end:.1f} L {x + g:.1f} {y_end:.1f}" '
                       f'stroke="{style.stem_color}" stroke-width="2" fill="none"/>')
        line_counts: dict[int, int] = {}
        for c in tile.connectors:
            line_counts[c.line] = line_counts.get(c.line, 0) + 1
        shared = {line for line, cnt in line_counts.items() if cnt > 1}
        for c in sorted(tile.connectors, key=lambda c: (c.line, c.kind)):
            y = line_y(c.line)
            # shift the catalyst circle aside when it shares a line with a
            # reagent/product glyph
            if c.kind == "catalyst" and c.line in shared:
                x_c = x - 2.4 * g
            else:
                x_c = x
            if c.kind == "reagent":
                out.append(f'<rect x="{x - g / 2:.1f}" y="{y - g:.1f}" '
                           f'width="{g:.1f}" height="{2 * g:.1f}" '
                           f'fill="{style.reagent_color}"/>')
            elif c.kind == "product":
                pts = f"{x - g:.1f},{y - g:.1f} {x + g:.1f},{y:.1f} {x - g:.1f},{y + g:.1f}"
                out.append(f'<polygon points="{pts}" fill="{style.product_color}"/>')
            else:
                out.append(f'<circle cx="{x_c:.1f}" cy="{y:.1f}" r="{g * 0.8:.1f}" '
                           f'fill="none" stroke="{style.catalyst_color}" '
                           'stroke-width="2"/>')
            if c.multiplicity > 1:
                out.append(f'<text x="{x + g + 2:.1f}" y="{y - 4:.1f}" '
                           f'font-size="{style.font_size - 2:.0f}" '
                           f'fill="#222">{c.multiplicity}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _esc(s: str) -> str:
    return s.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


# --- DOT -------------------------------------------------------------------

def export_dot(network: Network) -> str:
    """Bipartite multigraph: oval species, square reactions, catalytic edges
    drawn undirected in a distinct style."""
    lines = ["digraph crn {", "  rankdir=LR;"]
    for sp in network.species:
        lines.append(f'  s{sp.id} [shape=oval, label="{_dot_esc(sp.display_name)}"];')
    for ri, r in enumerate(network.reactions):
        d = decompose_catalytic(r)
        lines.append(f'  r{ri} [shape=square, label="r{ri}"];')
        for sid, mult in d.net_reagents:
            attr = f' [label="{mult}"]' if mult > 1 else ""
            lines.append(f"  s{sid} -> r{ri}{attr};")
        for sid, mult in d.net_products:
            attr = f' [label="{mult}"]' if mult > 1 else ""
            lines.append(f"  r{ri} -> s{sid}{attr};")
        for sid, mult in d.catalysts:
            label = f', label="{mult}"' if mult > 1 else ""
            lines.append(f'  s{sid} -> r{ri} [dir=none, style=dashed, '
                         f'color="#2ca02c"{label}];')
    lines.append("}")
    return "\n".join(lines) + "\n"


def _dot_esc(s: str) -> str:
    return s.replace("\\", "\\\\").replace('"', '\\"')
