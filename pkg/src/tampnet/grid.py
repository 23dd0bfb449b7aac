"""Grid environments: JSON loading, compilation to movement nets, rendering.

A grid world is a rows x cols board with blocked cells, labeled regions,
and agent start cells. Compilation produces one place per free cell (in
row-major order) and one transition per directed move between 4-adjacent
free cells, ordered by (source place, direction) with the direction order
up, right, down, left.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Iterable, Optional, Sequence, Tuple
from xml.sax.saxutils import escape

from .errors import ValidationError
from .petri import END, VISIT, Atom, Marking, PetriNet

Cell = Tuple[int, int]

# Direction order fixes transition numbering; keep stable.
DIRECTIONS: Tuple[Tuple[str, Tuple[int, int]], ...] = (
    ("up", (-1, 0)),
    ("right", (0, 1)),
    ("down", (1, 0)),
    ("left", (0, -1)),
)

_NAME_RE = re.compile(r"^[A-Za-z0-9_]+$")

_ENV_KEYS = {"grid", "obstacles", "regions", "agents", "move_cost"}
_REGION_KEYS = {"name", "cells", "trajectory_props", "final_props"}


@dataclass(frozen=True)
class Region:
    name: str
    cells: Tuple[Cell, ...]
    trajectory_props: frozenset
    final_props: frozenset


@dataclass(frozen=True)
class Environment:
    rows: int
    cols: int
    obstacles: frozenset
    regions: Tuple[Region, ...]
    agents: Tuple[Cell, ...]
    move_cost: Tuple[Fraction, Fraction, Fraction, Fraction]  # aligned with DIRECTIONS


@dataclass(frozen=True)
class Plan:
    """Result of a successful planning call.

    ``per_agent_paths`` holds one cell walk per agent, starting at the
    agent's start cell. ``team_sequence`` is the interleaved transition
    firing order in the movement net. ``satisfied_trace`` is the proposition
    word of the run (initial occupancy first, then one atom set per step).
    """

    total_cost: Fraction
    per_agent_paths: Tuple[Tuple[Cell, ...], ...]
    team_sequence: Tuple[int, ...]
    satisfied_trace: Tuple[frozenset, ...]


def load_env(path) -> Environment:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ValidationError(f"cannot read environment file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path} is not valid JSON: {exc}") from exc
    return parse_env(data, source=str(path))


def parse_env(data, source="<env>") -> Environment:
    """Validate a decoded environment dict; errors name the offending field."""
    if not isinstance(data, dict):
        raise ValidationError(f"{source}: environment must be a JSON object")
    unknown = set(data) - _ENV_KEYS
    if unknown:
        raise ValidationError(f"{source}: unknown keys {sorted(unknown)}")

    grid = data.get("grid")
    if not isinstance(grid, dict) or set(grid) != {"rows", "cols"}:
        raise ValidationError(f"{source}: grid must be an object with rows and cols")
    rows, cols = grid["rows"], grid["cols"]
    for label, v in (("rows", rows), ("cols", cols)):
        if not isinstance(v, int) or isinstance(v, bool) or v < 1:
            raise ValidationError(f"{source}: grid.{label} must be a positive integer")

    obstacles = set()
    for i, raw in enumerate(data.get("obstacles", [])):
        obstacles.add(_cell(raw, rows, cols, f"{source}: obstacles[{i}]"))

    regions = []
    seen_names = set()
    for i, raw in enumerate(data.get("regions", [])):
        where = f"{source}: regions[{i}]"
        if not isinstance(raw, dict):
            raise ValidationError(f"{where} must be an object")
        unknown = set(raw) - _REGION_KEYS
        if unknown:
            raise ValidationError(f"{where}: unknown keys {sorted(unknown)}")
        name = raw.get("name")
        if not isinstance(name, str) or not name:
            raise ValidationError(f"{where}: name must be a non-empty string")
        if name in seen_names:
            raise ValidationError(f"{where}: duplicate region name {name!r}")
        seen_names.add(name)
        cells_raw = raw.get("cells")
        if not isinstance(cells_raw, list) or not cells_raw:
            raise ValidationError(f"{where}: cells must be a non-empty list")
        cells = []
        for j, c in enumerate(cells_raw):
            cell = _cell(c, rows, cols, f"{where}.cells[{j}]")
            if cell in obstacles:
                raise ValidationError(f"{where}.cells[{j}]: {list(cell)} is an obstacle")
            cells.append(cell)
        regions.append(Region(
            name=name,
            cells=tuple(sorted(set(cells))),
            trajectory_props=_props(raw.get("trajectory_props", []), f"{where}.trajectory_props"),
            final_props=_props(raw.get("final_props", []), f"{where}.final_props"),
        ))

    agents_raw = data.get("agents")
    if not isinstance(agents_raw, list) or not agents_raw:
        raise ValidationError(f"{source}: agents must be a non-empty list of cells")
    agents = []
    for i, raw in enumerate(agents_raw):
        cell = _cell(raw, rows, cols, f"{source}: agents[{i}]")
        if cell in obstacles:
            raise ValidationError(f"{source}: agents[{i}]: start {list(cell)} is an obstacle")
        agents.append(cell)

    return Environment(
        rows=rows,
        cols=cols,
        obstacles=frozenset(obstacles),
        regions=tuple(regions),
        agents=tuple(agents),
        move_cost=_move_cost(data.get("move_cost", 1), source),
    )


def _cell(raw, rows, cols, where) -> Cell:
    ok = (isinstance(raw, (list, tuple)) and len(raw) == 2
          and all(isinstance(v, int) and not isinstance(v, bool) for v in raw))
    if not ok:
        raise ValidationError(f"{where}: expected a [row, col] pair, got {raw!r}")
    r, c = raw
    if not (0 <= r < rows and 0 <= c < cols):
        raise ValidationError(f"{where}: cell [{r}, {c}] is outside the {rows}x{cols} grid")
    return (r, c)


def _props(raw, where) -> frozenset:
    if not isinstance(raw, list):
        raise ValidationError(f"{where} must be a list of proposition names")
    out = set()
    for v in raw:
        if not isinstance(v, str) or not _NAME_RE.match(v):
            raise ValidationError(f"{where}: bad proposition name {v!r}")
        out.add(v)
    return frozenset(out)


def _one_cost(raw, where) -> Fraction:
    try:
        if isinstance(raw, bool):
            raise ValueError
        if isinstance(raw, int):
            value = Fraction(raw)
        elif isinstance(raw, float):
            value = Fraction(str(raw))
        elif isinstance(raw, str):
            value = Fraction(raw)
        else:
            raise ValueError
    except (ValueError, ZeroDivisionError):
        raise ValidationError(f"{where}: cost must be a number or 'p/q' string, got {raw!r}")
    if value <= 0:
        raise ValidationError(f"{where}: cost must be positive")
    return value


def _move_cost(raw, source) -> Tuple[Fraction, ...]:
    if isinstance(raw, dict):
        unknown = set(raw) - {name for name, _ in DIRECTIONS}
        if unknown:
            raise ValidationError(f"{source}: move_cost: unknown directions {sorted(unknown)}")
        return tuple(_one_cost(raw.get(name, 1), f"{source}: move_cost.{name}")
                     for name, _ in DIRECTIONS)
    value = _one_cost(raw, f"{source}: move_cost")
    return (value, value, value, value)


def free_cells(env: Environment) -> Tuple[Cell, ...]:
    """Free cells in row-major order; index = place id of the movement net."""
    return tuple((r, c) for r in range(env.rows) for c in range(env.cols)
                 if (r, c) not in env.obstacles)


def grid_index(env: Environment):
    """Return (cells, moves): place -> cell, and transition -> (src, dst, dir).

    ``moves[t]`` is (source place, target place, direction index into
    DIRECTIONS), listed per source place in direction order.
    """
    cells = free_cells(env)
    index = {cell: i for i, cell in enumerate(cells)}
    moves = []
    for src, (r, c) in enumerate(cells):
        for d, (_, (dr, dc)) in enumerate(DIRECTIONS):
            dst = index.get((r + dr, c + dc))
            if dst is not None:
                moves.append((src, dst, d))
    return cells, tuple(moves)


def cell_labels(env: Environment) -> Dict[Cell, frozenset]:
    """Atoms per cell; overlapping regions union their propositions."""
    out: Dict[Cell, set] = {}
    for region in env.regions:
        for cell in region.cells:
            atoms = out.setdefault(cell, set())
            atoms.update(Atom(VISIT, p) for p in region.trajectory_props)
            atoms.update(Atom(END, p) for p in region.final_props)
    return {cell: frozenset(atoms) for cell, atoms in out.items()}


def env_to_pn(env: Environment) -> PetriNet:
    """Compile the grid into its movement net."""
    cells, moves = grid_index(env)
    by_cell = cell_labels(env)
    counts = [0] * len(cells)
    index = {cell: i for i, cell in enumerate(cells)}
    for cell in env.agents:
        counts[index[cell]] += 1
    return PetriNet(
        num_places=len(cells),
        pre=tuple((src,) for src, _, _ in moves),
        post=tuple((dst,) for _, dst, _ in moves),
        cost=tuple(env.move_cost[d] for _, _, d in moves),
        labels=tuple(by_cell.get(cell, frozenset()) for cell in cells),
        initial_marking=tuple(counts),
    )


def cost_text(value: Fraction) -> str:
    value = Fraction(value)
    return str(value.numerator) if value.denominator == 1 else f"{value.numerator}/{value.denominator}"


def cost_json(value: Fraction):
    value = Fraction(value)
    return value.numerator if value.denominator == 1 else cost_text(value)


def plan_to_json(env: Environment, plan: Plan) -> dict:
    """Stable JSON form of a plan (see README for the schema)."""
    visited = frozenset().union(*plan.satisfied_trace) if plan.satisfied_trace else frozenset()
    by_cell = cell_labels(env)
    final_atoms = set()
    for path in plan.per_agent_paths:
        final_atoms.update(a for a in by_cell.get(path[-1], frozenset()) if a.kind == END)
    satisfied = sorted(a.text() for a in set(a for a in visited if a.kind == VISIT) | final_atoms)
    return {
        "total_cost": cost_json(plan.total_cost),
        "agents": [
            {"start": list(path[0]), "path": [list(cell) for cell in path]}
            for path in plan.per_agent_paths
        ],
        "team_sequence": list(plan.team_sequence),
        "satisfied_atoms": satisfied,
    }


def plan_json_text(env: Environment, plan: Plan) -> str:
    return json.dumps(plan_to_json(env, plan), sort_keys=True, separators=(",", ":")) + "\n"


_PALETTE = ("#4c78a8", "#f58518", "#54a24b", "#e45756", "#72b7b2",
            "#b279a2", "#eeca3b", "#9d755d", "#ff9da6", "#79706e")


def render(env: Environment, plan: Optional[Plan] = None, fmt: str = "ascii") -> str:
    if plan is not None:
        _check_plan(env, plan)
    if fmt == "ascii":
        return _render_ascii(env, plan)
    if fmt == "svg":
        return _render_svg(env, plan)
    raise ValueError(f"unknown render format {fmt!r}")


def _check_plan(env: Environment, plan: Plan) -> None:
    if len(plan.per_agent_paths) != len(env.agents):
        raise ValidationError("plan has a different agent count than the environment")
    for i, path in enumerate(plan.per_agent_paths):
        if not path:
            raise ValidationError(f"agent {i}: empty path")
        if path[0] != env.agents[i]:
            raise ValidationError(f"agent {i}: path does not start at its start cell")
        for r, c in path:
            if not (0 <= r < env.rows and 0 <= c < env.cols) or (r, c) in env.obstacles:
                raise ValidationError(f"agent {i}: path leaves the free grid at [{r}, {c}]")


def _base_glyphs(env: Environment):
    glyphs = [["." for _ in range(env.cols)] for _ in range(env.rows)]
    for i, region in enumerate(env.regions):
        mark = str((i + 1) % 10)
        for r, c in region.cells:
            if glyphs[r][c] == ".":
                glyphs[r][c] = mark
    for i, (r, c) in enumerate(env.agents):
        glyphs[r][c] = chr(ord("a") + i % 26)
    for r, c in env.obstacles:
        glyphs[r][c] = "#"
    return glyphs


def _render_ascii(env: Environment, plan: Optional[Plan]) -> str:
    lines = ["".join(row) for row in _base_glyphs(env)]
    if plan is None:
        return "\n".join(lines) + "\n"
    lines.append("")
    lines.append(f"cost={cost_text(plan.total_cost)}")
    for i, path in enumerate(plan.per_agent_paths):
        overlay = [["#" if (r, c) in env.obstacles else "."
                    for c in range(env.cols)] for r in range(env.rows)]
        for r, c in path:
            overlay[r][c] = "*"
        sr, sc = path[0]
        er, ec = path[-1]
        overlay[sr][sc] = "S"
        overlay[er][ec] = "E"
        lines.append("")
        lines.append(f"agent {i + 1}: " + " -> ".join(f"({r},{c})" for r, c in path))
        lines.extend("".join(row) for row in overlay)
    return "\n".join(lines) + "\n"


def _render_svg(env: Environment, plan: Optional[Plan]) -> str:
    side = 32
    width = env.cols * side
    height = env.rows * side + (20 if plan is not None else 0)
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="#ffffff"/>',
    ]
    for i, region in enumerate(env.regions):
        color = _PALETTE[i % len(_PALETTE)]
        for r, c in region.cells:
            parts.append(f'<rect x="{c * side}" y="{r * side}" width="{side}" height="{side}" '
                         f'fill="{color}" fill-opacity="0.45"/>')
        r0, c0 = region.cells[0]
        parts.append(f'<text x="{c0 * side + 3}" y="{r0 * side + 12}" font-size="9" '
                     f'fill="#333333">{escape(region.name)}</text>')
    for r, c in sorted(env.obstacles):
        parts.append(f'<rect x="{c * side}" y="{r * side}" width="{side}" height="{side}" '
                     f'fill="#3a3a3a"/>')
    for i in range(env.rows + 1):
        parts.append(f'<line x1="0" y1="{i * side}" x2="{env.cols * side}" y2="{i * side}" '
                     f'stroke="#999999" stroke-width="0.5"/>')
    for j in range(env.cols + 1):
        parts.append(f'<line x1="{j * side}" y1="0" x2="{j * side}" y2="{env.rows * side}" '
                     f'stroke="#999999" stroke-width="0.5"/>')
    for i, (r, c) in enumerate(env.agents):
        color = _PALETTE[(i + 3) % len(_PALETTE)]
        cx, cy = c * side + side // 2, r * side + side // 2
        parts.append(f'<circle cx="{cx}" cy="{cy}" r="{side // 4}" fill="{color}" '
                     f'stroke="#000000" stroke-width="1"/>')
        parts.append(f'<text x="{cx - 3}" y="{cy + 4}" font-size="10" fill="#ffffff">{i + 1}</text>')
    if plan is not None:
        for i, path in enumerate(plan.per_agent_paths):
            color = _PALETTE[(i + 3) % len(_PALETTE)]
            offset = (i % 4) * 3 - 4
            points = " ".join(
                f"{c * side + side // 2 + offset},{r * side + side // 2 + offset}"
                for r, c in path)
            parts.append(f'<polyline points="{points}" fill="none" stroke="{color}" '
                         f'stroke-width="2.5" stroke-linejoin="round"/>')
        parts.append(f'<text x="4" y="{env.rows * side + 14}" font-size="11" '
                     f'fill="#333333">cost={cost_text(plan.total_cost)}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
