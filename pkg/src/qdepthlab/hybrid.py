"""Executable hybrid circuit classes with strict depth-budget enforcement.

Four models are provided:

  - QNC: one quantum segment, a fixed (non-adaptive) op list, all qubits
    measured at the end.  Mid-circuit measurements are permitted but cannot
    influence later ops, which keeps them deferred-measurement equivalent.
  - QC:  one quantum segment with a classical part before every quantum
    round; classical parts see earlier outcomes and return the next round.
  - CQ:  up to m fully-measured QNC segments with classical parts between.
  - CQC: up to m QC segments chained classically.

Depth accounting: every gate layer and every parallel oracle round costs
exactly 1.  Evaluating a recursive oracle chain coherently must be spelled
out stage by stage (2d+1 rounds with uncomputation); it is never a single
black box.  Attempted budget violations raise BudgetExceeded *before* the
offending operation executes.

Classical parts interact with oracles only through logging handles, so they
can only ever produce classical bits and classical query-log entries.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    BudgetExceeded,
    IllegalQuantumQuery,
    ParameterError,
    SegmentOverflow,
)
from .oracles import ComposedOracle, LoggingOracle, QueryLog, RandomOracle, eval_composed
from .qsim import DepthCounter, GateLayer, OracleGate, StateVector, apply_layer, apply_oracle, measure, zero_state


@dataclass(frozen=True)
class DepthBudget:
    """Per-segment depth cap d, segment cap m, and the oracle-model allowance
    of one extra final processing layer (QNC and CQ only)."""

    d: int
    m: int = 1
    allow_final_layer: bool = False

    def __post_init__(self):
        if self.d < 0 or self.m < 1:
            raise ParameterError("budget requires d >= 0 and m >= 1")


# -- program ops ---------------------------------------------------------------


@dataclass
class Layer:
    layer: GateLayer

    cost = 1


@dataclass
class OracleRound:
    gates: tuple  # one or more OracleGate applied as a single parallel round

    cost = 1

    def __post_init__(self):
        if isinstance(self.gates, OracleGate):
            self.gates = (self.gates,)


@dataclass
class MeasureOp:
    qubits: tuple
    name: str = ""

    cost = 0


@dataclass
class QNCProgram:
    """A fixed list of ops on a fresh register; output = final full measurement."""

    num_qubits: int
    ops: list
    name: str = ""


@dataclass
class QuantumRound:
    """Ops returned by a QC classical part for the next adaptive round."""

    ops: list


@dataclass
class QCProgram:
    """One quantum segment with classical parts interleaved.

    Each entry of ``rounds`` is a callable ``ctx -> QuantumRound | None``;
    returning None ends the quantum segment early.  ``finalize`` maps the
    context to the classical output.
    """

    num_qubits: int
    rounds: list
    finalize: object = None
    name: str = ""


@dataclass
class Segment:
    """A CQ segment; CQ boundaries measure everything, so carrying qubits
    across is a structural error."""

    program: QNCProgram
    carry_qubits: tuple = ()


# -- run traces ----------------------------------------------------------------


@dataclass
class RunTrace:
    model: str
    segments: list = field(default_factory=list)  # DepthCounter per segment
    classical_log: QueryLog = field(default_factory=QueryLog)
    classical_transcripts: list = field(default_factory=list)
    outcomes: list = field(default_factory=list)  # (name, register, value)
    output: object = None  # int, or a tuple for merged parallel runs
    num_qubits: int = 0

    @property
    def depth(self) -> int:
        return max((s.depth for s in self.segments), default=0)

    @property
    def total_depth(self) -> int:
        return sum(s.depth for s in self.segments)

    def outcome(self, name: str) -> int:
        for label, _register, value in reversed(self.outcomes):
            if label == name:
                return value
        raise KeyError(name)

    def to_json(self) -> dict:
        return {
            "model": self.model,
            "segments": [s.snapshot() for s in self.segments],
            "classical_queries": len(self.classical_log),
            "query_labels": sorted({e.label for e in self.classical_log.entries}),
            "outcomes": [
                {"name": n, "register": list(r), "value_hex": f"{v:x}"}
                for n, r, v in self.outcomes
            ],
            "output_hex": f"{self.output:x}" if isinstance(self.output, int) else None,
            "num_qubits": self.num_qubits,
        }

    def to_json_str(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)


class BudgetMeter:
    """Charges depth against a budget, raising before any over-budget op."""

    def __init__(self, budget: DepthBudget, counter: DepthCounter):
        self.budget = budget
        self.counter = counter

    def precheck(self, cost: int, is_layer: bool, is_final: bool) -> None:
        if cost == 0:
            return
        limit = self.budget.d
        if self.budget.allow_final_layer and is_final and is_layer:
            limit += 1
        if self.counter.depth + cost > limit:
            raise BudgetExceeded(
                f"depth {self.counter.depth} + {cost} exceeds budget {limit}"
            )

    def charge(self, op, is_final_charging_op: bool) -> None:
        self.precheck(op.cost, isinstance(op, Layer), is_final_charging_op)


class ClassicalContext:
    """What a classical part may see: prior outcomes, logging oracle handles,
    randomness, and a place to append classical transcript entries."""

    def __init__(self, trace: RunTrace, handles: dict, rng: np.random.Generator):
        self.trace = trace
        self.oracles = handles
        self.rng = rng

    def outcome(self, name: str) -> int:
        return self.trace.outcome(name)

    def note(self, entry) -> None:
        self.trace.classical_transcripts.append(entry)

    def quantum_access(self, *_args, **_kwargs):
        raise IllegalQuantumQuery(
            "classical parts have classical oracle handles only"
        )


class _ComposedHandle:
    """Classical logging access to a recursive chain: one eval logs one entry
    per stage; individual stages are addressable too."""

    def __init__(self, chain: ComposedOracle, log: QueryLog, label: str):
        self.chain = chain
        self._log = log
        self._label = label

    def eval(self, x: int) -> int:
        return eval_composed(self.chain, x, self._log, label=self._label + ".stage")

    __call__ = eval

    def stage(self, i: int) -> LoggingOracle:
        return LoggingOracle(self.chain.stages[i], self._log, f"{self._label}.stage{i}")

    @property
    def d(self) -> int:
        return self.chain.d


def make_handles(oracles: dict | None, log: QueryLog) -> dict:
    handles = {}
    for name, oracle in (oracles or {}).items():
        if isinstance(oracle, ComposedOracle):
            handles[name] = _ComposedHandle(oracle, log, name)
        elif isinstance(oracle, RandomOracle):
            handles[name] = LoggingOracle(oracle, log, name)
        else:
            raise ParameterError(f"unsupported oracle type for {name!r}")
    return handles


# -- executors -----------------------------------------------------------------


def _last_charging_index(ops) -> int:
    for i in range(len(ops) - 1, -1, -1):
        if ops[i].cost:
            return i
    return -1


def _execute_ops(
    state: StateVector,
    ops,
    meter: BudgetMeter,
    trace: RunTrace,
    rng: np.random.Generator,
    final_charge_index: int,
    offset: int = 0,
) -> StateVector:
    for i, op in enumerate(ops):
        meter.charge(op, offset + i == final_charge_index)
        if isinstance(op, Layer):
            state = apply_layer(state, op.layer, meter.counter)
        elif isinstance(op, OracleRound):
            state = apply_oracle(state, op.gates, meter.counter)
        elif isinstance(op, MeasureOp):
            value, state = measure(state, op.qubits, rng)
            trace.outcomes.append((op.name or f"m{len(trace.outcomes)}", tuple(op.qubits), value))
        else:
            raise ParameterError(f"unknown op {op!r}")
    return state


def run_qnc(
    budget: DepthBudget,
    program: QNCProgram,
    rng: np.random.Generator,
    oracles: dict | None = None,
) -> RunTrace:
    """Execute a fixed-op quantum program; everything measured at the end."""
    trace = RunTrace(model="QNC", num_qubits=program.num_qubits)
    counter = DepthCounter()
    trace.segments.append(counter)
    meter = BudgetMeter(budget, counter)
    state = zero_state(program.num_qubits)
    state = _execute_ops(
        state, program.ops, meter, trace, rng, _last_charging_index(program.ops)
    )
    output, _ = measure(state, tuple(range(program.num_qubits)), rng)
    trace.output = output
    # handles are built for interface parity; a QNC run has no classical parts
    make_handles(oracles, trace.classical_log)
    return trace


def run_qc(
    budget: DepthBudget,
    program: QCProgram,
    rng: np.random.Generator,
    oracles: dict | None = None,
) -> RunTrace:
    """Execute one quantum segment with adaptive classical parts between rounds.

    Classical parts receive prior measurement outcomes plus classical logging
    handles and return the next round's ops; there is no final-layer
    allowance in this model.
    """
    trace = RunTrace(model="QC", num_qubits=program.num_qubits)
    counter = DepthCounter()
    trace.segments.append(counter)
    # the QC model grants no extra final processing layer
    meter = BudgetMeter(DepthBudget(budget.d, budget.m, False), counter)
    handles = make_handles(oracles, trace.classical_log)
    ctx = ClassicalContext(trace, handles, rng)
    state = zero_state(program.num_qubits)
    for round_fn in program.rounds:
        quantum_round = round_fn(ctx)
        if quantum_round is None:
            break
        state = _execute_ops(
            state, quantum_round.ops, meter, trace, rng, final_charge_index=-1
        )
    if program.finalize is not None:
        trace.output = program.finalize(ctx)
    else:
        output, _ = measure(state, tuple(range(program.num_qubits)), rng)
        trace.output = output
    return trace


def run_cq(
    budget: DepthBudget,
    segment_builders,
    rng: np.random.Generator,
    oracles: dict | None = None,
) -> RunTrace:
    """Execute up to m fully-measured quantum segments with classical glue.

    Each builder sees all previous outcomes and returns the next segment's
    fixed program (or None to stop).  A fresh statevector backs every
    segment; requesting qubits to survive a boundary is a structural error.
    """
    trace = RunTrace(model="CQ", num_qubits=0)
    handles = make_handles(oracles, trace.classical_log)
    ctx = ClassicalContext(trace, handles, rng)
    for index, builder in enumerate(segment_builders):
        built = builder(ctx)
        if built is None:
            break
        if index >= budget.m:
            raise SegmentOverflow(f"segment {index + 1} exceeds budget m={budget.m}")
        if isinstance(built, Segment):
            if built.carry_qubits:
                raise ParameterError(
                    "CQ segments are fully measured; qubits cannot cross the boundary"
                )
            program = built.program
        else:
            program = built
        counter = DepthCounter()
        trace.segments.append(counter)
        meter = BudgetMeter(budget, counter)
        state = zero_state(program.num_qubits)
        trace.num_qubits = max(trace.num_qubits, program.num_qubits)
        state = _execute_ops(
            state, program.ops, meter, trace, rng, _last_charging_index(program.ops)
        )
        value, _ = measure(state, tuple(range(program.num_qubits)), rng)
        trace.outcomes.append(
            (program.name or f"segment{index}", tuple(range(program.num_qubits)), value)
        )
        trace.output = value
    return trace


def run_cqc(
    budget: DepthBudget,
    qc_builders,
    rng: np.random.Generator,
    oracles: dict | None = None,
) -> RunTrace:
    """Chain up to m QC segments with classical glue between them."""
    trace = RunTrace(model="CQC", num_qubits=0)
    handles = make_handles(oracles, trace.classical_log)
    ctx = ClassicalContext(trace, handles, rng)
    for index, builder in enumerate(qc_builders):
        program = builder(ctx)
        if program is None:
            break
        if index >= budget.m:
            raise SegmentOverflow(f"segment {index + 1} exceeds budget m={budget.m}")
        sub = run_qc(DepthBudget(budget.d, 1), program, rng, oracles)
        # fold the sub-run into the outer trace
        trace.segments.extend(sub.segments)
        trace.classical_log.entries.extend(sub.classical_log.entries)
        trace.classical_transcripts.extend(sub.classical_transcripts)
        trace.outcomes.extend(sub.outcomes)
        trace.output = sub.output
        trace.num_qubits = max(trace.num_qubits, sub.num_qubits)
    return trace


# -- containment adapters and parallel composition ------------------------------


def qnc_as_qc(program: QNCProgram) -> QCProgram:
    """Any fixed quantum program runs under QC with vacuous classical parts."""
    rounds = [lambda _ctx, op=op: QuantumRound([op]) for op in program.ops]
    return QCProgram(program.num_qubits, rounds, name=program.name)


def qc_as_cqc(program: QCProgram):
    """A single QC segment is a CQC schedule with m = 1."""
    return [lambda _ctx: program]


def cq_as_cqc(segment_builders):
    """CQ embeds in CQC by making every segment a QC round with no classical
    parts inside the quantum part."""

    def wrap(builder):
        def make_qc(ctx):
            built = builder(ctx)
            if built is None:
                return None
            program = built.program if isinstance(built, Segment) else built
            qc = qnc_as_qc(program)

            def finalize(inner_ctx, prog=program):
                # full measurement outcome recorded by the last MeasureOp
                return inner_ctx.trace.outcomes[-1][2] if inner_ctx.trace.outcomes else None

            measure_all = MeasureOp(tuple(range(program.num_qubits)), name=program.name or "segment")
            qc.rounds.append(lambda _ctx, op=measure_all: QuantumRound([op]))
            qc.finalize = finalize
            return qc

        return make_qc

    return [wrap(b) for b in segment_builders]


def merge_parallel(traces, model: str) -> RunTrace:
    """Combine runs placed in disjoint registers of one circuit.

    Parallel repetitions cost the depth of the deepest one (layers and oracle
    rounds align round-by-round), while classical queries and outcomes
    accumulate.  This realizes the 'polynomially many parallel uses' reading
    without materializing a product statevector.
    """
    merged = RunTrace(model=model)
    num_segments = max(len(t.segments) for t in traces)
    for i in range(num_segments):
        counter = DepthCounter()
        counter.layers_applied = max(
            (t.segments[i].layers_applied for t in traces if i < len(t.segments)),
            default=0,
        )
        counter.oracle_calls = max(
            (t.segments[i].oracle_calls for t in traces if i < len(t.segments)),
            default=0,
        )
        merged.segments.append(counter)
    for t in traces:
        merged.classical_log.entries.extend(t.classical_log.entries)
        merged.classical_transcripts.extend(t.classical_transcripts)
        merged.outcomes.extend(t.outcomes)
        merged.num_qubits += t.num_qubits
    merged.output = tuple(t.output for t in traces)
    return merged
