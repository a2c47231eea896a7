"""Compressed phase-oracle simulation and the two-continuation extractor.

The oracle register holds a database of (input, value) pairs instead of a
2^n-entry truth table: pairs are kept sorted by input with unused slots
(the bottom symbol) trailing, and a query applies

    Decomp o CPhO' o Decomp o Increase

where Decomp (un)compresses the database at the queried input and CPhO'
applies the phase (-1)^(z . D(x)).  For boolean output this reproduces the
informal rules exactly: a z=1 query on a fresh input appends (x, |->) and a
second z=1 query removes it again, while z=0 queries do nothing.

The joint state is stored as {database basis -> amplitude vector over the
algorithm register}; at n <= 4 domain bits and a handful of queries this is
tiny, and an independent purified-oracle simulator (a full 2^(2^n) truth
table register) provides the ground truth for equivalence tests.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import CapExceeded, ParameterError
from .oracles import truth_table
from .problems import HCollisionInstance

BOT = None  # unused-slot marker, outside every input domain
_INV_SQRT2 = 1.0 / np.sqrt(2.0)

PRUNE_EPS = 1e-14


# -- database plumbing -----------------------------------------------------------


def validate_db(db: tuple) -> None:
    """Structural invariant: sorted real pairs first, bottom slots trailing."""
    xs = [x for x, _w in db if x is not BOT]
    if xs != sorted(xs) or len(set(xs)) != len(xs):
        raise AssertionError(f"database inputs out of order: {db}")
    tail = db[len(xs):]
    if any(x is not BOT or w != 0 for x, w in tail):
        raise AssertionError(f"bottom slots malformed: {db}")


def db_size(db: tuple) -> int:
    return sum(1 for x, _w in db if x is not BOT)


def db_lookup(db: tuple, x: int):
    for xi, w in db:
        if xi == x:
            return w
    return BOT


def db_insert(db: tuple, x: int, w: int) -> tuple:
    """Fill one bottom slot with (x, w), keeping the sort order."""
    real = [(xi, wi) for xi, wi in db if xi is not BOT]
    bots = len(db) - len(real)
    if bots == 0:
        raise AssertionError("no free slot to insert into")
    real.append((x, w))
    real.sort()
    return tuple(real) + ((BOT, 0),) * (bots - 1)


def db_remove(db: tuple, x: int) -> tuple:
    real = [(xi, wi) for xi, wi in db if xi is not BOT and xi != x]
    bots = len(db) - len(real)
    return tuple(real) + ((BOT, 0),) * bots


# -- joint state -----------------------------------------------------------------


@dataclass
class CompressedState:
    """Algorithm register (dense) tensored with a sparse database register.

    Layout of the algorithm basis index: work bits, then the n query bits,
    then the 1-bit phase register as the least significant bit.
    """

    n: int
    work_bits: int
    vectors: dict  # db tuple -> complex ndarray over the algorithm space

    @property
    def alg_bits(self) -> int:
        return self.work_bits + self.n + 1

    def norm(self) -> float:
        return float(
            np.sqrt(sum(np.sum(np.abs(v) ** 2) for v in self.vectors.values()))
        )

    def check(self) -> None:
        for db in self.vectors:
            validate_db(db)
        if abs(self.norm() - 1.0) > 1e-9:
            raise AssertionError(f"joint norm drifted: {self.norm()}")

    def prune(self) -> None:
        dead = [db for db, v in self.vectors.items() if np.max(np.abs(v)) < PRUNE_EPS]
        for db in dead:
            del self.vectors[db]


def initial_state(n: int, work_bits: int = 0) -> CompressedState:
    vec = np.zeros(1 << (work_bits + n + 1), dtype=complex)
    vec[0] = 1.0
    return CompressedState(n, work_bits, {(): vec})


def _x_of(a: int, n: int) -> int:
    return (a >> 1) & ((1 << n) - 1)


def _z_of(a: int) -> int:
    return a & 1


def increase(state: CompressedState) -> CompressedState:
    vectors = {db + ((BOT, 0),): v.copy() for db, v in state.vectors.items()}
    return CompressedState(state.n, state.work_bits, vectors)


def _decomp_entry(db: tuple, x: int):
    """Images of one database basis vector under Decomp_x: [(db', coeff)]."""
    w = db_lookup(db, x)
    if w is BOT:
        if db_size(db) < len(db):
            return [
                (db_insert(db, x, 0), _INV_SQRT2),
                (db_insert(db, x, 1), _INV_SQRT2),
            ]
        return [(db, 1.0)]
    out = [(db_remove(db, x), _INV_SQRT2)]
    for v in (0, 1):
        out.append((db_insert(db_remove(db, x), x, v), 0.5 * (-1.0) ** (w + v)))
    return out


def decomp_at(state: CompressedState, x: int) -> CompressedState:
    """Apply Decomp_x (an involution) to the database register."""
    vectors: dict = {}
    for db, vec in state.vectors.items():
        for db2, coeff in _decomp_entry(db, x):
            if db2 in vectors:
                vectors[db2] = vectors[db2] + coeff * vec
            else:
                vectors[db2] = coeff * vec
    out = CompressedState(state.n, state.work_bits, vectors)
    out.prune()
    return out


def _decomp_conditional(state: CompressedState) -> CompressedState:
    """Decomp conditioned on the query register: applies Decomp_x to the
    database for each algorithm basis state with query value x."""
    n = state.n
    vectors: dict = {}
    for db, vec in state.vectors.items():
        for a in np.nonzero(np.abs(vec) > PRUNE_EPS)[0]:
            amp = vec[a]
            for db2, coeff in _decomp_entry(db, _x_of(int(a), n)):
                tgt = vectors.get(db2)
                if tgt is None:
                    tgt = np.zeros_like(vec)
                    vectors[db2] = tgt
                tgt[a] += coeff * amp
    out = CompressedState(state.n, state.work_bits, vectors)
    out.prune()
    return out


def _cpho_prime(state: CompressedState) -> CompressedState:
    """Phase (-1)^(z . D(x)); after Decomp the pair at x always exists."""
    n = state.n
    vectors: dict = {}
    for db, vec in state.vectors.items():
        new = vec.copy()
        for a in np.nonzero(np.abs(vec) > PRUNE_EPS)[0]:
            if _z_of(int(a)):
                w = db_lookup(db, _x_of(int(a), n))
                if w is BOT:
                    raise AssertionError("query point missing after Decomp")
                if w:
                    new[a] = -new[a]
        vectors[db] = new
    return CompressedState(state.n, state.work_bits, vectors)


def cpho_query(state: CompressedState) -> CompressedState:
    """One compressed phase-oracle query: Decomp o CPhO' o Decomp o Increase."""
    state = increase(state)
    state = _decomp_conditional(state)
    state = _cpho_prime(state)
    state = _decomp_conditional(state)
    state.check()
    return state


def apply_alg_unitary(state: CompressedState, matrix: np.ndarray, qubits) -> CompressedState:
    """Unitary on algorithm qubits (qubit 0 = most significant work bit)."""
    from .qsim import _apply_unitary

    vectors = {
        db: _apply_unitary(vec, state.alg_bits, matrix, qubits)
        for db, vec in state.vectors.items()
    }
    return CompressedState(state.n, state.work_bits, vectors)


# -- algorithm descriptions and the two simulators --------------------------------


@dataclass
class OracleAlgorithm:
    """A fixed sequence of algorithm-register unitaries and oracle queries."""

    n: int
    work_bits: int
    steps: list  # ("u", matrix, qubits) | ("query",)

    @property
    def queries(self) -> int:
        return sum(1 for s in self.steps if s[0] == "query")


def run_compressed(alg: OracleAlgorithm) -> tuple[np.ndarray, dict]:
    """Exact output distribution plus database-size statistics.

    Caps: n <= 6 domain bits and <= 8 queries, where the purified comparison
    stays feasible.
    """
    if alg.n > 6 or alg.queries > 8:
        raise CapExceeded("compressed runs are capped at n <= 6, q <= 8")
    state = initial_state(alg.n, alg.work_bits)
    for step in alg.steps:
        if step[0] == "u":
            state = apply_alg_unitary(state, step[1], step[2])
        elif step[0] == "query":
            state = cpho_query(state)
        else:
            raise ParameterError(f"unknown step {step[0]!r}")
    probs = np.zeros(1 << state.alg_bits)
    size_mass: dict[int, float] = {}
    for db, vec in state.vectors.items():
        mass = np.abs(vec) ** 2
        probs += mass
        size_mass[db_size(db)] = size_mass.get(db_size(db), 0.0) + float(mass.sum())
    return probs, size_mass


def run_purified(alg: OracleAlgorithm) -> np.ndarray:
    """Ground-truth simulator purifying the oracle as a full truth-table
    register in uniform superposition."""
    if alg.n > 4:
        raise CapExceeded("purified runs are capped at n <= 4")
    from .qsim import _apply_unitary

    n = alg.n
    alg_bits = alg.work_bits + n + 1
    num_h = 1 << (1 << n)
    joint = np.zeros((1 << alg_bits, num_h), dtype=complex)
    joint[0, :] = 1.0 / np.sqrt(num_h)

    # sign[x][H] = (-1)^(bit x of H), with bit 0 of H the most significant
    h_axis = np.arange(num_h)
    signs = [
        1.0 - 2.0 * ((h_axis >> ((1 << n) - 1 - x)) & 1).astype(np.float64)
        for x in range(1 << n)
    ]

    for step in alg.steps:
        if step[0] == "u":
            for h in range(num_h):
                joint[:, h] = _apply_unitary(joint[:, h], alg_bits, step[1], step[2])
        elif step[0] == "query":
            for a in range(1 << alg_bits):
                if _z_of(a):
                    joint[a, :] *= signs[_x_of(a, n)]
        else:
            raise ParameterError(f"unknown step {step[0]!r}")
    return np.sum(np.abs(joint) ** 2, axis=1)


def total_variation(p: np.ndarray, q: np.ndarray) -> float:
    return 0.5 * float(np.abs(np.asarray(p) - np.asarray(q)).sum())


# -- collision extraction -----------------------------------------------------------


@dataclass
class ExtractorAlgorithm:
    """Interface the extractor drives: a solver for the single-copy problem
    whose chain queries are all classical.

    ``prefix(rng)`` runs everything up to and including the solver's chain
    queries and returns (snapshot, chain_query_inputs); the snapshot is a
    plain classical object because every quantum register has been measured
    by then (the equation query has an empty compressed database at this
    point, which is exactly why copying the snapshot is sound).

    ``continuation(snapshot, equation_phase, rng)`` resumes the run with the
    equation oracle replaced by ``equation_phase`` and returns the measured
    value of the equation-oracle query register, or None if the continuation
    never queries it.
    """

    prefix: object
    continuation: object
    remaining_queries: int = 1


def replaced_equation_oracle(inst: HCollisionInstance, y_tilde: int, c0: int, c1: int, h_y: int):
    """The reprogrammed oracle: constant phase c0 on preimages of y_tilde
    under G0, c1 on fresh preimages under G1, and the true oracle elsewhere;
    implemented in place at the cost of one evaluation of each G."""

    def phase(x: int) -> int:
        if inst.g0.eval(x) == y_tilde:
            return c0
        if inst.g1.eval(x) == y_tilde:
            return c1
        return inst.h_eq.eval(inst.eq_input(x, h_y))

    return phase


def honest_single_rep_algorithm(inst: HCollisionInstance) -> ExtractorAlgorithm:
    """One repetition of the adaptive honest solver, packaged for extraction."""
    lam = inst.lam
    tt0 = truth_table(inst.g0)
    tt1 = truth_table(inst.g1)
    pre0, pre1 = inst.preimages()

    def prefix(rng):
        joint = int(rng.integers(1 << (lam + 1)))
        b, x = joint >> lam, joint & ((1 << lam) - 1)
        y = (tt1 if b else tt0)[x]
        # classical chain walk; the final-stage input is the recorded query
        value = y
        for stage in inst.chain.stages[:-1]:
            value = stage.eval(value)
        h_y = inst.chain.stages[-1].eval(value)
        return {"y": y, "h_y": h_y}, [value]

    def continuation(snapshot, equation_phase, rng):
        y = snapshot["y"]
        branch = [x for x in pre0.get(y, ())] + [x for x in pre1.get(y, ())]
        if not branch:
            return None
        for x in branch:
            equation_phase(x)  # the query; phases cannot affect a basis readout
        return int(branch[int(rng.integers(len(branch)))])

    return ExtractorAlgorithm(prefix, continuation, remaining_queries=1)


def never_queries_algorithm(inst: HCollisionInstance) -> ExtractorAlgorithm:
    """Baseline that outputs a guess without ever querying the equation oracle."""

    def prefix(rng):
        y = int(rng.integers(1 << inst.lam))
        value = y
        for stage in inst.chain.stages[:-1]:
            value = stage.eval(value)
        return {"y": y}, [value]

    def continuation(_snapshot, _equation_phase, _rng):
        return None

    return ExtractorAlgorithm(prefix, continuation, remaining_queries=0)


def chain_preimages(inst: HCollisionInstance, final_stage_output: int) -> list:
    """h^(-1) of a chain output, by enumerating Sigma (tiny lambda only)."""
    if inst.lam > 8:
        raise CapExceeded("chain inversion is capped at lam <= 8")
    out = []
    for y in range(1 << inst.lam):
        value = y
        for stage in inst.chain.stages:
            value = stage.eval(value)
        if value == final_stage_output:
            out.append(y)
    return out


def extract_collision(
    inst: HCollisionInstance,
    algorithm: ExtractorAlgorithm,
    trials: int,
    rng: np.random.Generator,
) -> dict:
    """Two-continuation collision extraction against a classical-chain solver.

    Per trial: run the solver's classical prefix, pick the snapshot index
    (here the single chain query), invert the chain at the queried point,
    reprogram the equation oracle around a random member of that fiber with
    fresh constants for each continuation, run two independent continuations
    from the same snapshot, and measure both query registers.  Only pairs
    that re-verify as genuine collisions are reported.
    """
    if inst.lam > 5:
        raise CapExceeded("extraction demo is capped at lam <= 5")
    reports = []
    nonempty = 0
    for _t in range(trials):
        snapshot, queries = algorithm.prefix(rng)
        if algorithm.remaining_queries == 0 or not queries:
            continue
        z = queries[int(rng.integers(len(queries)))]
        fiber = chain_preimages(inst, inst.chain.stages[-1].eval(z))
        if not fiber:
            continue
        y_tilde = fiber[int(rng.integers(len(fiber)))]
        h_y = snapshot.get("h_y", 0)
        sides = []
        for _run in range(2):
            c0, c1 = int(rng.integers(2)), int(rng.integers(2))
            phase = replaced_equation_oracle(inst, y_tilde, c0, c1, h_y)
            sides.append(algorithm.continuation(dict(snapshot), phase, rng))
        x_a, x_b = sides
        if x_a is None or x_b is None or x_a == x_b:
            continue
        # exact post-filter: both must be preimages of y_tilde under some G
        hit_a = [b for b, g in ((0, inst.g0), (1, inst.g1)) if g.eval(x_a) == y_tilde]
        hit_b = [b for b, g in ((0, inst.g0), (1, inst.g1)) if g.eval(x_b) == y_tilde]
        if hit_a and hit_b:
            nonempty += 1
            reports.append(
                {
                    "y_tilde": y_tilde,
                    "pair": [[hit_a[0], x_a], [hit_b[0], x_b]],
                }
            )
    return {
        "trials": trials,
        "collisions": len(reports),
        "nonempty_rate": nonempty / trials if trials else 0.0,
        "reports": reports,
    }
