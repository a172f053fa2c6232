"""Segmentation, dependency-edge, and control-flow-view tests."""

import random

import pytest

from conftest import random_program
from quilopt import graphs, ir
from quilopt.fixtures import fixture_program
from quilopt.graphs import Role


def closure(n, edges):
    """Reachability sets of an index-based DAG (helper for reduction tests)."""
    succ = {i: set() for i in range(n)}
    for u, v in edges:
        succ[u].add(v)
    reach = {i: set() for i in range(n)}
    for u in range(n - 1, -1, -1):
        for v in succ[u]:
            reach[u] |= {v} | reach[v]
    return reach


class TestSegmentation:
    def test_teleportation_structure(self):
        ddgs = graphs.build_ddgs(fixture_program("teleportation"))
        assert [d.id for d in ddgs] == ["start", "halt1", "halt2"]
        assert [d.role for d in ddgs] == [Role.START, Role.HALT, Role.HALT]
        start, ft, tgt = ddgs
        assert start.path == (0, 1, 2, 3, 4, 5, 6, 7)
        assert ft.path == (8, 9)
        assert tgt.path == (11, 12)  # the label itself is not a node
        assert tgt.anchor == "fix" and ft.anchor is None
        assert ft.ends_program and tgt.ends_program
        assert not start.ends_program

    def test_rus_structure(self):
        ddgs = graphs.build_ddgs(fixture_program("rus"))
        assert [len(d) for d in ddgs] == [12, 11, 10, 7]
        assert [d.role for d in ddgs] == [
            Role.START, Role.HALT, Role.HALT, Role.HALT,
        ]
        # Conditional endings: none of these traces literally ends the
        # program, even though the program can stop at each of them.
        assert [d.ends_program for d in ddgs] == [False, False, False, False]
        assert [d.entry for d in ddgs] == [0, 12, 13, 17]
        assert [d.anchor for d in ddgs] == [None, None, "retry", "done"]

    def test_unconditional_jumps_are_threaded(self):
        p = ir.parse("X 0\nJUMP @end\nY 0\nLABEL @end\nZ 0\n")
        ddgs = graphs.build_ddgs(p)
        assert len(ddgs) == 1
        assert ddgs.start.path == (0, 4)  # jump and label are not nodes

    def test_jump_cycle_is_an_error(self):
        p = ir.parse("LABEL @a\nJUMP @a\n")
        with pytest.raises(graphs.GraphError):
            graphs.build_ddgs(p)

    def test_duplicate_targets_make_duplicate_graphs(self):
        text = (
            "DECLARE c BIT\n"
            "JUMP-WHEN @l c\n"
            "JUMP-WHEN @l c\n"
            "X 0\n"
            "LABEL @l\n"
            "Y 0\n"
        )
        ddgs = graphs.build_ddgs(ir.parse(text))
        assert [d.id for d in ddgs] == [
            "start", "interior1", "halt1", "halt2", "halt3",
        ]
        paths = [d.path for d in ddgs]
        assert paths == [(0, 1), (2,), (3, 5), (5,), (5,)]
        # two jumps to the same label: two identical graphs, both kept

    def test_conditional_jump_ends_its_trace(self):
        p = ir.parse("DECLARE c BIT\nJUMP-WHEN @l c\nX 0\nLABEL @l\n")
        ddgs = graphs.build_ddgs(p)
        assert ddgs.start.path == (0, 1)
        last = ddgs.start.instruction_at(ddgs.start.path[-1])
        assert isinstance(last, ir.JumpWhen)

    def test_extended_halt_when_fall_through_is_empty(self):
        # The trace ends at a conditional jump, and falling through would
        # leave the program: that trace is a halt trace.
        p = ir.parse("DECLARE c BIT\nLABEL @top\nX 0\nJUMP-WHEN @top c\n")
        ddgs = graphs.build_ddgs(p)
        assert [d.id for d in ddgs] == ["start", "halt1"]
        assert ddgs.by_id["halt1"].role is Role.HALT
        assert not ddgs.by_id["halt1"].ends_program

    def test_interior_when_both_continuations_exist(self):
        text = (
            "DECLARE c BIT\n"
            "JUMP-WHEN @l c\n"
            "X 0\n"
            "LABEL @l\n"
            "Y 0\n"
        )
        ddgs = graphs.build_ddgs(ir.parse(text))
        # trace from the fall-through of the *first* jump ends the program
        assert ddgs.by_id["halt1"].path == (2, 4)
        assert ddgs.start.role is Role.START

    def test_empty_program(self):
        ddgs = graphs.build_ddgs(ir.Program())
        assert len(ddgs) == 1
        assert ddgs.start.path == ()
        assert ddgs.start.role is Role.START

    def test_halt_role_numbering_by_entry_position(self):
        ddgs = graphs.build_ddgs(fixture_program("rus"))
        assert [d.id for d in ddgs] == ["start", "halt1", "halt2", "halt3"]


class TestEdges:
    def test_chain_reduces_to_consecutive_edges(self):
        p = ir.parse("DECLARE a INTEGER\nMOVE a 1\nADD a 2\nADD a 3\n")
        ddg = graphs.build_ddgs(p).start
        assert ddg.edges == {(0, 1), (1, 2), (2, 3)}

    def test_independent_instructions_have_no_edge(self):
        p = ir.parse("X 0\nY 1\n")
        assert graphs.build_ddgs(p).start.edges == frozenset()

    def test_redundant_edges_are_removed(self):
        p = ir.parse("H 0\nH 1\nCNOT 0 1\nX 0\nY 1\n")
        ddg = graphs.build_ddgs(p).start
        assert ddg.edges == {(0, 2), (1, 2), (2, 3), (2, 4)}

    def test_teleportation_edges(self):
        ddg = graphs.build_ddgs(fixture_program("teleportation")).start
        assert (4, 5) in ddg.edges   # CNOT 0 1 -> MEASURE 1 m
        assert (5, 7) in ddg.edges   # MEASURE 1 m -> JUMP-WHEN ... m
        assert (0, 5) in ddg.edges   # DECLARE m -> MEASURE 1 m
        assert (1, 6) in ddg.edges   # DECLARE ro -> MEASURE 2 ro[0]
        assert (3, 5) not in ddg.edges  # subsumed via CNOT 0 1
        assert (0, 7) not in ddg.edges  # subsumed via MEASURE 1 m

    def test_ancestors_descendants(self):
        p = ir.parse("H 0\nH 1\nCNOT 0 1\nX 0\n")
        ddg = graphs.build_ddgs(p).start
        assert ddg.ancestors(3) == {0, 1, 2}
        assert ddg.descendants(0) == {2, 3}
        assert ddg.ancestors(0) == set()

    def test_transitive_reduction_unit(self):
        assert graphs.transitive_reduction(3, {(0, 1), (1, 2), (0, 2)}) == {
            (0, 1), (1, 2),
        }

    def test_linearize_is_path_order(self):
        ddg = graphs.build_ddgs(fixture_program("rus")).start
        assert ddg.linearize() == ddg.path

    def test_random_programs_edge_invariants(self):
        for seed in range(120):
            program = random_program(random.Random(seed))
            for ddg in graphs.build_ddgs(program):
                index = {p: i for i, p in enumerate(ddg.path)}
                res = {p: ir.resources(ddg.instruction_at(p)) for p in ddg.path}
                for u, v in ddg.edges:
                    # edges respect trace order and are true conflicts
                    assert index[u] < index[v]
                    assert ir.conflicts(res[u], res[v])
                # reduction preserves reachability of the full conflict graph
                instrs = list(ddg.instructions)
                raw = graphs._conflict_edges(instrs)
                reduced = {(index[u], index[v]) for u, v in ddg.edges}
                assert closure(len(instrs), raw) == closure(len(instrs), reduced)
                # and is itself irreducible
                assert graphs.transitive_reduction(len(instrs), reduced) == reduced


class TestCfg:
    def test_parallel_split(self):
        p = ir.parse("DECLARE a INTEGER\nMOVE a 1\nH 0\nX 0\nMEASURE 0\n")
        cfg = graphs.Cfg(p)
        kinds = [b.kind for b in cfg.blocks]
        assert kinds == ["quantum", "classical", "hybrid"]
        q, c, h = cfg.blocks
        assert q.positions == (2, 3)
        assert c.positions == (0, 1)
        assert h.positions == (4,)
        assert cfg.edges == {(q.id, h.id), (c.id, h.id)}

    def test_jump_edges(self):
        p = ir.parse("DECLARE c BIT\nJUMP-WHEN @l c\nX 0\nLABEL @l\nY 0\n")
        cfg = graphs.Cfg(p)
        by_kind = {}
        for b in cfg.blocks:
            by_kind.setdefault(b.kind, []).append(b)
        (hyb,) = by_kind["hybrid"]
        x_block = next(b for b in cfg.blocks if b.positions == (2,))
        y_block = next(b for b in cfg.blocks if b.positions == (4,))
        assert (hyb.id, x_block.id) in cfg.edges  # fall-through
        assert (hyb.id, y_block.id) in cfg.edges  # jump target
        assert (x_block.id, y_block.id) in cfg.edges

    def test_halt_has_no_successors(self):
        p = ir.parse("H 0\nHALT\nX 0\n")
        cfg = graphs.Cfg(p)
        halt_block = next(b for b in cfg.blocks if b.positions == (1,))
        assert not any(u == halt_block.id for u, _ in cfg.edges)

    def test_every_instruction_lands_in_one_block(self):
        for seed in range(60):
            program = random_program(random.Random(seed))
            cfg = graphs.Cfg(program)
            seen = [p for b in cfg.blocks for p in b.positions]
            expected = [
                pos for pos, instr in enumerate(program.instructions)
                if not isinstance(instr, ir.Label)
            ]
            assert sorted(seen) == expected
            ids = {b.id for b in cfg.blocks}
            assert all(u in ids and v in ids for u, v in cfg.edges)


class TestDot:
    def test_ddg_dot(self):
        ddg = graphs.build_ddgs(fixture_program("teleportation")).start
        dot = graphs.ddg_to_dot(ddg)
        assert dot.startswith('digraph "start" {')
        for pos in ddg.path:
            assert f"n{pos} [" in dot
        for u, v in ddg.edges:
            assert f"n{u} -> n{v};" in dot
        assert dot.rstrip().endswith("}")

    def test_cfg_dot(self):
        cfg = graphs.Cfg(fixture_program("teleportation"))
        dot = graphs.cfg_to_dot(cfg)
        assert dot.startswith('digraph "cfg" {')
        for block in cfg.blocks:
            assert block.id in dot
        assert dot.count("->") == len(cfg.edges)
