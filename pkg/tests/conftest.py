"""Shared test helpers, chiefly a seeded random-program generator.

The generator only emits forward jumps, so every generated program
terminates and can be run through the reference simulator.  Classical ops
are kind-aware (no bitwise ops on REAL cells, DIV only by nonzero
literals) so that folding and simulation are both well defined.
"""

from __future__ import annotations

import random

from quilopt import ir

REGION_POOL = [
    ("ro", "BIT", 2),
    ("m", "BIT", 3),
    ("acc", "INTEGER", 2),
    ("theta", "REAL", 2),
    ("scratch", "OCTET", 2),
]

_1Q_GATES = ["I", "X", "Y", "Z", "H", "S", "T"]
_ROTATIONS = ["RX", "RY", "RZ", "PHASE"]
_2Q_GATES = ["CNOT", "CZ", "SWAP"]

_INT_OPS = ["ADD", "SUB", "MUL", "AND", "IOR", "XOR"]
_REAL_OPS = ["ADD", "SUB", "MUL"]


def _random_classical(rng: random.Random, declares: list[ir.Declare]) -> ir.Classical:
    decl = rng.choice(declares)
    dest = ir.MemoryRef(decl.name, rng.randrange(decl.size))
    kind = decl.kind

    roll = rng.random()
    if roll < 0.15:
        return ir.Classical("NOT" if kind != "REAL" else "NEG", (dest,))
    if roll < 0.30 and decl.size > 1:
        other = ir.MemoryRef(decl.name, rng.randrange(decl.size))
        return ir.Classical("EXCHANGE", (dest, other))
    if roll < 0.50:
        if kind == "BIT":
            src = rng.randint(0, 1)
        elif kind == "REAL":
            src = round(rng.uniform(-4.0, 4.0), 3)
        else:
            src = rng.randint(0, 20)
        return ir.Classical("MOVE", (dest, src))

    if kind == "REAL":
        op = rng.choice(_REAL_OPS + ["DIV"])
        if op == "DIV":
            src = round(rng.uniform(0.5, 4.0), 3)
        elif rng.random() < 0.5:
            src = round(rng.uniform(-4.0, 4.0), 3)
        else:
            src = ir.MemoryRef(decl.name, rng.randrange(decl.size))
    elif kind == "BIT":
        op = rng.choice(["AND", "IOR", "XOR", "ADD"])
        src = rng.randint(0, 1)
    else:
        op = rng.choice(_INT_OPS + ["DIV"])
        if op == "DIV":
            src = rng.randint(1, 6)
        elif rng.random() < 0.6:
            src = rng.randint(0, 20)
        else:
            src = ir.MemoryRef(decl.name, rng.randrange(decl.size))
    return ir.Classical(op, (dest, src))


def _random_instruction(
    rng: random.Random, n_qubits: int, declares: list[ir.Declare]
) -> ir.Instruction:
    angle_regions = [d for d in declares if d.kind in ("REAL", "INTEGER")]
    bit_regions = [d for d in declares if d.kind == "BIT"]
    roll = rng.random()

    if roll < 0.30:
        return ir.Gate(rng.choice(_1Q_GATES), (), (rng.randrange(n_qubits),))
    if roll < 0.40 and n_qubits >= 2:
        qubits = tuple(rng.sample(range(n_qubits), 2))
        return ir.Gate(rng.choice(_2Q_GATES), (), qubits)
    if roll < 0.48:
        angle = round(rng.uniform(-3.14, 3.14), 3)
        return ir.Gate(rng.choice(_ROTATIONS), (angle,), (rng.randrange(n_qubits),))
    if roll < 0.56 and angle_regions:
        decl = rng.choice(angle_regions)
        ref = ir.MemoryRef(decl.name, rng.randrange(decl.size))
        return ir.ParamGate(rng.choice(_ROTATIONS), (ref,), (rng.randrange(n_qubits),))
    if roll < 0.62:
        if rng.random() < 0.85:
            return ir.Reset(rng.randrange(n_qubits))
        return ir.Reset(None)
    if roll < 0.78:
        qubit = rng.randrange(n_qubits)
        if bit_regions and rng.random() < 0.7:
            decl = rng.choice(bit_regions)
            return ir.Measure(qubit, ir.MemoryRef(decl.name, rng.randrange(decl.size)))
        return ir.Measure(qubit)
    return _random_classical(rng, declares)


def random_program(rng: random.Random, max_jumps: int = 2) -> ir.Program:
    """A small, valid, terminating program; structure varies with the seed."""
    n_extra = rng.randint(0, len(REGION_POOL) - 1)
    chosen = [REGION_POOL[0]] + rng.sample(REGION_POOL[1:], n_extra)
    declares = [ir.Declare(name, kind, size) for name, kind, size in chosen]
    n_qubits = rng.randint(1, 4)

    body: list[ir.Instruction] = []
    for _ in range(rng.randint(3, 26)):
        body.append(_random_instruction(rng, n_qubits, declares))
    if rng.random() < 0.6:
        body.append(ir.Measure(rng.randrange(n_qubits), ir.MemoryRef("ro", 0)))

    bit_cells = [
        ir.MemoryRef(d.name, i)
        for d in declares
        if d.kind == "BIT"
        for i in range(d.size)
    ]
    for k in range(rng.randint(0, max_jumps)):
        # Insert a forward jump: the label always lands after the jump.
        jump_at = rng.randrange(len(body))
        label_at = rng.randint(jump_at + 1, len(body))
        name = f"L{k}"
        kind = rng.random()
        if kind < 0.25:
            jump: ir.Instruction = ir.Jump(name)
        elif kind < 0.65:
            jump = ir.JumpWhen(name, rng.choice(bit_cells))
        else:
            jump = ir.JumpUnless(name, rng.choice(bit_cells))
        body.insert(label_at, ir.Label(name))
        body.insert(jump_at, jump)

    if rng.random() < 0.3:
        body.append(ir.Halt())

    program = ir.Program(tuple(declares) + tuple(body))
    ir.validate(program)
    return program
