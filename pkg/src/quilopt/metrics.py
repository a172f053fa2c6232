"""Schedule metrics for hybrid programs under a unit-cost two-device model.

Three metrics, all computed per :class:`~quilopt.graphs.DdgSet`:

* **wall time** -- makespan of each trace when the CPU and QPU run their
  own instructions in parallel and synchronize at hybrid instructions,
  every instruction costing one time unit (labels cost nothing).  Summed
  over all traces for program-level comparison.
* **QIN** -- quantum instruction number: quantum plus hybrid instructions,
  summed over all traces (duplicated traces count every time).
* **QCT** -- quantum calculation time: how long the QPU must keep qubits
  coherent, assuming it starts as late as possible before the first
  synchronization and stops as early as possible after the last.  It is
  reported as ``n_q_before + delta_t_between + n_q_after``: quantum work
  before the first hybrid instruction, the synchronized span between the
  first and last hybrid instruction (through every middle trace in full),
  and quantum work after the last hybrid instruction, taking the
  worst-case (longest) choice of final trace.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

from quilopt import graphs, ir
from quilopt.graphs import Ddg, DdgSet


@dataclass(frozen=True)
class SegmentSchedule:
    """Two-clock simulation summary for one instruction sequence."""

    wall: int
    classical_before_first_hybrid: int
    quantum_before_first_hybrid: int
    end_of_last_hybrid: int
    quantum_after_last_hybrid: int
    has_hybrid: bool

    @property
    def quantum_tail(self) -> int:
        """Quantum instructions after the last hybrid; all of them when
        the sequence has no hybrid at all."""
        if self.has_hybrid:
            return self.quantum_after_last_hybrid
        return self.quantum_before_first_hybrid


def simulate(sequence: Iterable[ir.Instruction]) -> SegmentSchedule:
    """Run the two-clock model over a linearized sequence.

    Classical instructions advance the CPU clock, quantum instructions the
    QPU clock; a hybrid instruction waits for both devices and moves both
    clocks to max(cpu, qpu) + 1.  Labels are free.
    """
    cpu = qpu = 0
    seen_hybrid = False
    classical_prefix = quantum_prefix = 0
    end_last_hybrid = 0
    quantum_tail = 0
    for instr in sequence:
        if isinstance(instr, ir.Label):
            continue
        cls = ir.device_class(instr)
        if cls is ir.DeviceClass.CLASSICAL:
            cpu += 1
            if not seen_hybrid:
                classical_prefix += 1
        elif cls is ir.DeviceClass.QUANTUM:
            qpu += 1
            if not seen_hybrid:
                quantum_prefix += 1
            else:
                quantum_tail += 1
        else:
            cpu = qpu = max(cpu, qpu) + 1
            seen_hybrid = True
            end_last_hybrid = cpu
            quantum_tail = 0
    return SegmentSchedule(
        wall=max(cpu, qpu),
        classical_before_first_hybrid=classical_prefix,
        quantum_before_first_hybrid=quantum_prefix,
        end_of_last_hybrid=end_last_hybrid,
        quantum_after_last_hybrid=quantum_tail,
        has_hybrid=seen_hybrid,
    )


def wall_time(sequence: Iterable[ir.Instruction]) -> int:
    return simulate(sequence).wall


def qin(ddgs: DdgSet) -> int:
    total = 0
    for ddg in ddgs:
        counts = ddg.class_counts()
        total += counts[ir.DeviceClass.QUANTUM] + counts[ir.DeviceClass.HYBRID]
    return total


def _quantum_count(ddg: Ddg) -> int:
    return ddg.class_counts()[ir.DeviceClass.QUANTUM]


def qct_breakdown(ddgs: DdgSet) -> dict:
    """QCT with its three components and the chosen final trace.

    Returns a dict with keys ``n_q_before``, ``delta_t_between``,
    ``n_q_after``, ``total``, and ``final_ddg``.
    """
    start = ddgs.start
    start_schedule = simulate(start.instructions)

    if len(ddgs) == 1:
        if not start_schedule.has_hybrid:
            # No synchronization anywhere: the QPU is busy exactly for its
            # own instructions.
            n_q = _quantum_count(start)
            return {
                "n_q_before": n_q,
                "delta_t_between": 0,
                "n_q_after": 0,
                "total": n_q,
                "final_ddg": start.id,
            }
        anchor = min(
            start_schedule.classical_before_first_hybrid,
            start_schedule.quantum_before_first_hybrid,
        )
        delta = start_schedule.end_of_last_hybrid - anchor
        n_q_before = start_schedule.quantum_before_first_hybrid
        n_q_after = start_schedule.quantum_after_last_hybrid
        return {
            "n_q_before": n_q_before,
            "delta_t_between": delta,
            "n_q_after": n_q_after,
            "total": n_q_before + delta + n_q_after,
            "final_ddg": start.id,
        }

    schedules = {ddg.id: simulate(ddg.instructions) for ddg in ddgs}
    anchor = min(
        start_schedule.classical_before_first_hybrid,
        start_schedule.quantum_before_first_hybrid,
    )
    start_span = schedules[start.id].wall - anchor
    n_q_before = start_schedule.quantum_before_first_hybrid

    candidates = ddgs.halts()
    if not candidates:
        candidates = list(ddgs)[1:]

    best: dict | None = None
    for halt in candidates:
        hs = schedules[halt.id]
        middle = sum(
            schedules[d.id].wall
            for d in ddgs
            if d is not start and d is not halt
        )
        delta = start_span + middle + hs.end_of_last_hybrid
        n_q_after = hs.quantum_tail
        total = n_q_before + delta + n_q_after
        if best is None or total > best["total"]:
            best = {
                "n_q_before": n_q_before,
                "delta_t_between": delta,
                "n_q_after": n_q_after,
                "total": total,
                "final_ddg": halt.id,
            }
    assert best is not None
    return best


def qct(ddgs: DdgSet) -> int:
    return qct_breakdown(ddgs)["total"]


@dataclass(frozen=True)
class SegmentMetrics:
    id: str
    role: str
    instr_count: int
    wall_time: int


@dataclass(frozen=True)
class MetricsReport:
    per_ddg: tuple[SegmentMetrics, ...]
    total_wall_time: int
    qin: int
    qct: int

    @property
    def instr_total(self) -> int:
        return sum(s.instr_count for s in self.per_ddg)

    @property
    def instr_profile(self) -> tuple[int, ...]:
        return tuple(s.instr_count for s in self.per_ddg)

    @property
    def wall_profile(self) -> tuple[int, ...]:
        return tuple(s.wall_time for s in self.per_ddg)

    def to_dict(self) -> dict:
        return {
            "per_ddg": [
                {
                    "id": s.id,
                    "role": s.role,
                    "instr_count": s.instr_count,
                    "wall_time": s.wall_time,
                }
                for s in self.per_ddg
            ],
            "total_wall_time": self.total_wall_time,
            "qin": self.qin,
            "qct": self.qct,
        }


def report_from_ddgs(ddgs: DdgSet) -> MetricsReport:
    segments = tuple(
        SegmentMetrics(
            id=ddg.id,
            role=ddg.role.value,
            instr_count=len(ddg),
            wall_time=wall_time(ddg.instructions),
        )
        for ddg in ddgs
    )
    return MetricsReport(
        per_ddg=segments,
        total_wall_time=sum(s.wall_time for s in segments),
        qin=qin(ddgs),
        qct=qct(ddgs),
    )


def report(program: ir.Program) -> MetricsReport:
    """Segment the program and evaluate all three metrics."""
    return report_from_ddgs(graphs.build_ddgs(program))
