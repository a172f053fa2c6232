"""Trace segmentation and dependency graphs.

A program is cut into straight-line *traces*: one starting at position 0,
plus, for every conditional jump, one starting at its target label and one
at its fall-through position.  Labels are never trace nodes (the entry
label is kept as an anchor) and unconditional jumps are threaded through.
Each trace becomes a :class:`Ddg`, a data-dependency graph over the
trace's instructions with conflict edges (one instruction writes a
resource another touches) restricted to trace order and then transitively
reduced, which is unique on a DAG.

Trace roles:

* ``START``    -- the trace from position 0
* ``HALT``     -- ends at HALT, runs off the end of the program, or ends at
  a conditional jump from which the program can terminate (one of the two
  continuations is an empty trace)
* ``INTERIOR`` -- everything else

Only traces that *literally* end the program (HALT / end of source) are
safe grounds for dead-code elimination; a conditional ending may loop back
into code with unknown future uses.  That distinction is
:attr:`Ddg.ends_program`, independent of the role.

The :class:`Cfg` at the bottom is a block-level control-flow view used for
visualization: runs of quantum-only and classical-only instructions become
parallel blocks between hybrid synchronization points.
"""

from __future__ import annotations

import enum
from collections import defaultdict
from dataclasses import dataclass
from typing import Iterable

from quilopt import ir
from quilopt.ir import QuilError


class GraphError(QuilError):
    """Raised for control flow we cannot trace (unconditional jump cycles)."""


class Role(enum.Enum):
    START = "start"
    INTERIOR = "interior"
    HALT = "halt"


def _trace(program: ir.Program, entry: int) -> tuple[list[int], str | None]:
    """Follow execution from ``entry``; return node positions and the
    entry label's name when the trace begins at a label."""
    labels = program.labels
    instructions = program.instructions
    path: list[int] = []
    anchor: str | None = None
    seen_jumps: set[int] = set()
    pos = entry
    while pos < len(instructions):
        instr = instructions[pos]
        if isinstance(instr, ir.Label):
            if pos == entry:
                anchor = instr.name
            pos += 1
            continue
        if isinstance(instr, ir.Jump):
            if pos in seen_jumps:
                raise GraphError(
                    f"unconditional jump cycle through position {pos}"
                )
            seen_jumps.add(pos)
            pos = labels[instr.target]
            continue
        path.append(pos)
        if isinstance(instr, (ir.Halt, ir.JumpWhen, ir.JumpUnless)):
            break
        pos += 1
    return path, anchor


def _conflict_edges(instructions: list[ir.Instruction]) -> set[tuple[int, int]]:
    """Index pairs (i, j), i < j, whose instructions touch a common
    resource with at least one side writing."""
    res = [ir.resources(x) for x in instructions]
    edges = set()
    for j in range(len(instructions)):
        for i in range(j):
            if ir.conflicts(res[i], res[j]):
                edges.add((i, j))
    return edges


def transitive_reduction(n: int, edges: set[tuple[int, int]]) -> set[tuple[int, int]]:
    """Unique transitive reduction of a DAG whose edges go low -> high."""
    succ: dict[int, set[int]] = defaultdict(set)
    for u, v in edges:
        succ[u].add(v)
    reach: list[set[int]] = [set() for _ in range(n)]
    for u in range(n - 1, -1, -1):
        for v in succ[u]:
            reach[u].add(v)
            reach[u] |= reach[v]
    reduced = set()
    for u in range(n):
        for v in succ[u]:
            if not any(v in reach[w] for w in succ[u] if w != v):
                reduced.add((u, v))
    return reduced


class Ddg:
    """Data-dependency graph of one trace.

    Nodes are source positions (``path``, in execution order); ``edges``
    are transitively reduced dependencies between positions.  The path
    order is always a valid topological order of the edges.
    """

    def __init__(
        self,
        program: ir.Program,
        ddg_id: str,
        role: Role,
        entry: int,
        anchor: str | None,
        path: Iterable[int],
        ends_program: bool,
    ):
        self.program = program
        self.id = ddg_id
        self.role = role
        self.entry = entry
        self.anchor = anchor
        self.path = tuple(path)
        self.ends_program = ends_program

        self._index = {pos: i for i, pos in enumerate(self.path)}
        instructions = [program.instructions[p] for p in self.path]
        raw = _conflict_edges(instructions)
        reduced = transitive_reduction(len(instructions), raw)
        self.edges = frozenset(
            (self.path[i], self.path[j]) for i, j in reduced
        )
        self.succ: dict[int, tuple[int, ...]] = {p: () for p in self.path}
        self.pred: dict[int, tuple[int, ...]] = {p: () for p in self.path}
        by_src: dict[int, list[int]] = defaultdict(list)
        by_dst: dict[int, list[int]] = defaultdict(list)
        for u, v in self.edges:
            by_src[u].append(v)
            by_dst[v].append(u)
        for p in self.path:
            self.succ[p] = tuple(sorted(by_src[p]))
            self.pred[p] = tuple(sorted(by_dst[p]))

    @property
    def instructions(self) -> tuple[ir.Instruction, ...]:
        return tuple(self.program.instructions[p] for p in self.path)

    def instruction_at(self, pos: int) -> ir.Instruction:
        return self.program.instructions[pos]

    def linearize(self) -> tuple[int, ...]:
        """Execution order of the nodes (a topological order by
        construction)."""
        return self.path

    def ancestors(self, pos: int) -> set[int]:
        """All positions ``pos`` transitively depends on."""
        out: set[int] = set()
        stack = list(self.pred[pos])
        while stack:
            p = stack.pop()
            if p not in out:
                out.add(p)
                stack.extend(self.pred[p])
        return out

    def descendants(self, pos: int) -> set[int]:
        out: set[int] = set()
        stack = list(self.succ[pos])
        while stack:
            p = stack.pop()
            if p not in out:
                out.add(p)
                stack.extend(self.succ[p])
        return out

    def class_counts(self) -> dict[ir.DeviceClass, int]:
        counts = {cls: 0 for cls in ir.DeviceClass}
        for instr in self.instructions:
            counts[ir.device_class(instr)] += 1
        return counts

    def __len__(self) -> int:
        return len(self.path)

    def __repr__(self) -> str:
        return f"Ddg({self.id!r}, role={self.role.value}, nodes={len(self)})"


class DdgSet:
    """All traces of a program, as Ddgs.

    Order: the start trace first, then the others by the source position
    where they enter.  Two jumps to the same label produce two (identical)
    graphs — each is scheduled independently.
    """

    def __init__(self, program: ir.Program, segments: list[Ddg]):
        self.program = program
        self.segments = segments

    def __iter__(self):
        return iter(self.segments)

    def __len__(self) -> int:
        return len(self.segments)

    def __getitem__(self, i: int) -> Ddg:
        return self.segments[i]

    @property
    def by_id(self) -> dict[str, Ddg]:
        return {d.id: d for d in self.segments}

    @property
    def start(self) -> Ddg:
        return self.segments[0]

    def halts(self) -> list[Ddg]:
        return [d for d in self.segments if d.role is Role.HALT]


def _classify_end(program: ir.Program, path: list[int]) -> tuple[Role, bool]:
    """Role (ignoring START) and whether the trace literally ends the
    program."""
    if not path:
        return Role.HALT, True
    last = program.instructions[path[-1]]
    if isinstance(last, ir.Halt):
        return Role.HALT, True
    if isinstance(last, (ir.JumpWhen, ir.JumpUnless)):
        fall, _ = _trace(program, path[-1] + 1)
        target, _ = _trace(program, program.labels[last.target])
        if not fall or not target:
            # The program can terminate at this jump.
            return Role.HALT, False
        return Role.INTERIOR, False
    return Role.HALT, True  # ran off the end of the program


def build_ddgs(program: ir.Program) -> DdgSet:
    """Segment a program into its traces and build one Ddg per trace."""
    start_path, start_anchor = _trace(program, 0)
    role, ends = _classify_end(program, start_path)
    segments = [
        Ddg(program, "start", Role.START, 0, start_anchor, start_path, ends)
    ]

    labels = program.labels
    entries: list[int] = []
    for pos, instr in enumerate(program.instructions):
        if isinstance(instr, (ir.JumpWhen, ir.JumpUnless)):
            entries.append(labels[instr.target])
            entries.append(pos + 1)

    traced = []
    for entry in entries:
        path, anchor = _trace(program, entry)
        if path:  # empty traces are dropped
            traced.append((entry, path, anchor))
    traced.sort(key=lambda t: t[0])

    counters = {Role.INTERIOR: 0, Role.HALT: 0}
    for entry, path, anchor in traced:
        role, ends = _classify_end(program, path)
        counters[role] += 1
        ddg_id = f"{role.value}{counters[role]}"
        segments.append(Ddg(program, ddg_id, role, entry, anchor, path, ends))
    return DdgSet(program, segments)


# ---------------------------------------------------------------------------
# Control-flow view (visualization only)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Block:
    id: str
    kind: str  # "quantum" | "classical" | "hybrid"
    positions: tuple[int, ...]


class Cfg:
    """Block-level control-flow graph.

    Between hybrid instructions, quantum-only and classical-only work is
    split into *parallel* blocks (they can run concurrently); hybrid
    instructions and control flow form their own blocks, split at labels
    and after jumps.
    """

    def __init__(self, program: ir.Program):
        self.program = program
        self.blocks: list[Block] = []
        self.edges: set[tuple[str, str]] = set()
        self._build()

    def _build(self) -> None:
        program = self.program
        n = len(program.instructions)

        # Cut into runs: a boundary before every label, after every jump
        # and after HALT.
        runs: list[list[int]] = []
        current: list[int] = []
        for pos in range(n):
            instr = program.instructions[pos]
            if isinstance(instr, ir.Label) and current:
                runs.append(current)
                current = []
            current.append(pos)
            if isinstance(instr, (ir.Jump, ir.JumpWhen, ir.JumpUnless, ir.Halt)):
                runs.append(current)
                current = []
        if current:
            runs.append(current)

        # Blocks per run: alternate hybrid / non-hybrid chunks, splitting
        # non-hybrid chunks into parallel quantum and classical blocks.
        run_chunks: list[list[list[int]]] = []  # run -> chunk -> block index
        for run in runs:
            chunks: list[list[int]] = []
            group: list[int] = []
            group_hybrid: bool | None = None
            body = [p for p in run if not isinstance(program.instructions[p], ir.Label)]
            for pos in body:
                is_hybrid = ir.device_class(program.instructions[pos]) is ir.DeviceClass.HYBRID
                if group and is_hybrid != group_hybrid:
                    chunks.append(self._emit_chunk(group, group_hybrid))
                    group = []
                group.append(pos)
                group_hybrid = is_hybrid
            if group:
                chunks.append(self._emit_chunk(group, group_hybrid))
            run_chunks.append(chunks)

        run_start = {run[0]: i for i, run in enumerate(runs)}

        def entry_blocks(run_index: int) -> list[int]:
            """First chunk of the first block-bearing run at/after
            run_index."""
            i = run_index
            while i < len(runs):
                if run_chunks[i]:
                    return run_chunks[i][0]
                i += 1
            return []

        def run_of_label(name: str) -> int:
            pos = self.program.labels[name]
            return run_start[pos]

        # Intra-run edges between consecutive chunks.
        for chunks in run_chunks:
            for a, b in zip(chunks, chunks[1:]):
                for u in a:
                    for v in b:
                        self._edge(u, v)

        # Run-to-run edges.
        for i, run in enumerate(runs):
            if not run_chunks[i]:
                continue
            last_chunk = run_chunks[i][-1]
            last_instr = program.instructions[run[-1]]
            targets: list[int] = []
            if isinstance(last_instr, ir.Halt):
                pass
            elif isinstance(last_instr, ir.Jump):
                targets = entry_blocks(run_of_label(last_instr.target))
            elif isinstance(last_instr, (ir.JumpWhen, ir.JumpUnless)):
                targets = entry_blocks(run_of_label(last_instr.target))
                targets = targets + entry_blocks(i + 1)
            else:
                targets = entry_blocks(i + 1)
            for u in last_chunk:
                for v in targets:
                    self._edge(u, v)

    def _emit_chunk(self, positions: list[int], hybrid: bool | None) -> list[int]:
        """Create the block(s) for one chunk; return their indices."""
        created: list[int] = []
        if hybrid:
            created.append(self._add_block("hybrid", positions))
        else:
            quantum = [
                p for p in positions
                if ir.device_class(self.program.instructions[p]) is ir.DeviceClass.QUANTUM
            ]
            classical = [
                p for p in positions
                if ir.device_class(self.program.instructions[p]) is ir.DeviceClass.CLASSICAL
            ]
            if quantum:
                created.append(self._add_block("quantum", quantum))
            if classical:
                created.append(self._add_block("classical", classical))
        return created

    def _add_block(self, kind: str, positions: list[int]) -> int:
        index = len(self.blocks)
        self.blocks.append(Block(f"b{index}", kind, tuple(positions)))
        return index

    def _edge(self, u: int, v: int) -> None:
        self.edges.add((self.blocks[u].id, self.blocks[v].id))


# ---------------------------------------------------------------------------
# DOT rendering
# ---------------------------------------------------------------------------

_CLASS_COLORS = {
    ir.DeviceClass.QUANTUM: "lightblue",
    ir.DeviceClass.CLASSICAL: "lightgoldenrod",
    ir.DeviceClass.HYBRID: "lightcoral",
}

_KIND_COLORS = {"quantum": "lightblue", "classical": "lightgoldenrod", "hybrid": "lightcoral"}


def _dot_escape(text: str) -> str:
    return text.replace("\\", "\\\\").replace('"', '\\"')


def ddg_to_dot(ddg: Ddg) -> str:
    """Render one Ddg as a GraphViz digraph."""
    lines = [f'digraph "{_dot_escape(ddg.id)}" {{', "  rankdir=TB;"]
    for pos in ddg.path:
        instr = ddg.instruction_at(pos)
        color = _CLASS_COLORS[ir.device_class(instr)]
        label = _dot_escape(f"{pos}: {ir.instruction_text(instr)}")
        lines.append(
            f'  n{pos} [label="{label}", style=filled, fillcolor={color}];'
        )
    for u, v in sorted(ddg.edges):
        lines.append(f"  n{u} -> n{v};")
    lines.append("}")
    return "\n".join(lines) + "\n"


def cfg_to_dot(cfg: Cfg) -> str:
    """Render the control-flow view as a GraphViz digraph."""
    lines = ['digraph "cfg" {', "  rankdir=TB;", "  node [shape=box];"]
    for block in cfg.blocks:
        body = "\\l".join(
            _dot_escape(ir.instruction_text(cfg.program.instructions[p]))
            for p in block.positions
        )
        label = f"{block.id} [{block.kind}]\\l{body}\\l"
        color = _KIND_COLORS[block.kind]
        lines.append(
            f'  {block.id} [label="{label}", style=filled, fillcolor={color}];'
        )
    for u, v in sorted(cfg.edges):
        lines.append(f"  {u} -> {v};")
    lines.append("}")
    return "\n".join(lines) + "\n"
