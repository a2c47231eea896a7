"""Dense statevector simulator with oracle gates and a quantum-depth ledger.

Conventions:
  - qubit 0 is the most significant bit of a basis index;
  - a register is an ordered tuple of qubit indices, register bit 0 (MSB)
    being the first qubit in the tuple;
  - depth = single-qubit/two-qubit gate layers + parallel oracle rounds,
    each oracle round costing exactly 1 regardless of how many disjoint
    copies it applies.

The simulator is exact (complex128); states renormalize only at measurement,
and every operation asserts the norm stays within 1e-9.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError, QubitClash

NORM_TOL = 1e-9

H2 = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
X2 = np.array([[0, 1], [1, 0]], dtype=complex)
Z2 = np.array([[1, 0], [0, -1]], dtype=complex)
I2 = np.eye(2, dtype=complex)


@dataclass
class StateVector:
    num_qubits: int
    amplitudes: np.ndarray

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def check_norm(self) -> None:
        if abs(self.norm() - 1.0) > NORM_TOL:
            raise AssertionError(f"statevector norm drifted: {self.norm()}")


def zero_state(num_qubits: int) -> StateVector:
    amps = np.zeros(1 << num_qubits, dtype=complex)
    amps[0] = 1.0
    return StateVector(num_qubits, amps)


def basis_state(num_qubits: int, index: int) -> StateVector:
    amps = np.zeros(1 << num_qubits, dtype=complex)
    amps[index] = 1.0
    return StateVector(num_qubits, amps)


def from_amplitudes(amps) -> StateVector:
    amps = np.asarray(amps, dtype=complex)
    n = int(amps.size).bit_length() - 1
    if 1 << n != amps.size:
        raise ParameterError("amplitude vector length must be a power of two")
    state = StateVector(n, amps / np.linalg.norm(amps))
    state.check_norm()
    return state


@dataclass
class DepthCounter:
    """Quantum-depth ledger: depth = layers + oracle rounds."""

    layers_applied: int = 0
    oracle_calls: int = 0

    @property
    def depth(self) -> int:
        return self.layers_applied + self.oracle_calls

    def snapshot(self) -> dict:
        return {
            "layers": self.layers_applied,
            "oracle_calls": self.oracle_calls,
            "depth": self.depth,
        }


def _is_unitary(matrix: np.ndarray) -> bool:
    d = matrix.shape[0]
    return (
        matrix.shape == (d, d)
        and np.max(np.abs(matrix @ matrix.conj().T - np.eye(d))) < 1e-9
    )


@dataclass
class GateLayer:
    """One parallel layer of 1- and 2-qubit unitaries on disjoint qubits."""

    gates: tuple

    def __post_init__(self):
        seen: set[int] = set()
        for matrix, qubits in self.gates:
            matrix = np.asarray(matrix, dtype=complex)
            if len(qubits) not in (1, 2) or matrix.shape != (1 << len(qubits),) * 2:
                raise ParameterError("layer gates must be 1- or 2-qubit unitaries")
            if not _is_unitary(matrix):
                raise ParameterError("gate matrix is not unitary within 1e-9")
            for q in qubits:
                if q in seen:
                    raise QubitClash(f"qubit {q} appears twice in one layer")
                seen.add(q)
        self.qubits = frozenset(seen)


def hadamard_layer(qubits) -> GateLayer:
    return GateLayer(tuple((H2, (q,)) for q in qubits))


def identity_layer(qubits) -> GateLayer:
    return GateLayer(tuple((I2, (q,)) for q in qubits))


@dataclass
class OracleGate:
    """Reversible oracle access for a function table.

    xor mode:    |x>|a>  ->  |x>|a ^ f(x)>          (a basis permutation)
    phase mode:  |x>|z>  ->  (-1)^(z . f(x)) |x>|z>  (diagonal, unit modulus)

    ``table[x]`` holds f(x).  In phase mode an empty response register means
    the phase bit is implicitly 1, i.e. the diagonal (-1)^f(x); the table must
    then be 0/1-valued.
    """

    mode: str
    table: tuple
    query_qubits: tuple
    response_qubits: tuple = ()
    label: str = ""

    def __post_init__(self):
        if self.mode not in ("xor", "phase"):
            raise ParameterError(f"unknown oracle mode {self.mode!r}")
        k = len(self.query_qubits)
        if len(self.table) != 1 << k:
            raise ParameterError("table length must be 2^len(query_qubits)")
        m = len(self.response_qubits)
        if self.mode == "xor":
            if m == 0:
                raise ParameterError("xor mode needs a response register")
            if any(v >> m for v in self.table):
                raise ParameterError("table value exceeds response width")
        else:
            if m == 0 and any(v not in (0, 1) for v in self.table):
                raise ParameterError("implicit phase mode requires a 0/1 table")
            if m > 0 and any(v >> m for v in self.table):
                raise ParameterError("table value exceeds phase-register width")
        overlap = set(self.query_qubits) & set(self.response_qubits)
        if overlap:
            raise QubitClash(f"query/response registers overlap: {overlap}")
        self.qubits = frozenset(self.query_qubits) | frozenset(self.response_qubits)


def _apply_unitary(amps: np.ndarray, n: int, matrix: np.ndarray, qubits) -> np.ndarray:
    k = len(qubits)
    mat = np.asarray(matrix, dtype=complex).reshape((2,) * (2 * k))
    t = amps.reshape((2,) * n)
    t = np.tensordot(mat, t, axes=(tuple(range(k, 2 * k)), tuple(qubits)))
    t = np.moveaxis(t, tuple(range(k)), tuple(qubits))
    return np.ascontiguousarray(t).reshape(-1)


def _front(amps: np.ndarray, n: int, qubits):
    """View with the given qubits moved to the leading axes (register order)."""
    t = amps.reshape((2,) * n)
    t = np.moveaxis(t, tuple(qubits), tuple(range(len(qubits))))
    return t, t.shape


def _unfront(t: np.ndarray, n: int, qubits) -> np.ndarray:
    t = t.reshape((2,) * n)
    t = np.moveaxis(t, tuple(range(len(qubits))), tuple(qubits))
    return np.ascontiguousarray(t).reshape(-1)


_POPCOUNT_PARITY_CACHE: dict[int, np.ndarray] = {}


def _parity_table(bits: int) -> np.ndarray:
    """parity[v] = popcount(v) mod 2 for v < 2^bits."""
    table = _POPCOUNT_PARITY_CACHE.get(bits)
    if table is None:
        v = np.arange(1 << bits, dtype=np.uint64)
        table = np.zeros(1 << bits, dtype=np.int8)
        while v.any():
            table ^= (v & 1).astype(np.int8)
            v >>= 1
        _POPCOUNT_PARITY_CACHE[bits] = table
    return table


def _apply_oracle_gate(amps: np.ndarray, n: int, gate: OracleGate) -> np.ndarray:
    k = len(gate.query_qubits)
    m = len(gate.response_qubits)
    table = np.asarray(gate.table, dtype=np.int64)
    if gate.mode == "xor":
        t, _ = _front(amps, n, gate.query_qubits + gate.response_qubits)
        t = t.reshape(1 << k, 1 << m, -1)
        # a ^ f(x) is an involution, so gathering at a ^ f(x) applies the gate
        idx = np.arange(1 << m)[None, :] ^ table[:, None]
        t = np.take_along_axis(t, idx[:, :, None], axis=1)
        return _unfront(t, n, gate.query_qubits + gate.response_qubits)
    if m == 0:
        t, _ = _front(amps, n, gate.query_qubits)
        t = t.reshape(1 << k, -1)
        sign = 1.0 - 2.0 * table.astype(np.float64)
        t = t * sign[:, None]
        return _unfront(t, n, gate.query_qubits)
    t, _ = _front(amps, n, gate.query_qubits + gate.response_qubits)
    t = t.reshape(1 << k, 1 << m, -1)
    parity = _parity_table(m)
    z = np.arange(1 << m)
    signs = 1.0 - 2.0 * parity[z[None, :] & table[:, None]]
    t = t * signs[:, :, None]
    return _unfront(t, n, gate.query_qubits + gate.response_qubits)


def apply_layer(
    state: StateVector, layer: GateLayer, counter: DepthCounter | None = None
) -> StateVector:
    """Apply one parallel gate layer; depth increases by 1."""
    amps = state.amplitudes
    for matrix, qubits in layer.gates:
        if max(qubits, default=0) >= state.num_qubits:
            raise ParameterError("gate qubit out of range")
        amps = _apply_unitary(amps, state.num_qubits, matrix, qubits)
    out = StateVector(state.num_qubits, amps)
    out.check_norm()
    if counter is not None:
        counter.layers_applied += 1
    return out


def apply_oracle(
    state: StateVector, gates, counter: DepthCounter | None = None
) -> StateVector:
    """Apply one parallel oracle round (one or more disjoint copies).

    All copies in the round are applied together and the round costs depth 1.
    """
    if isinstance(gates, OracleGate):
        gates = (gates,)
    seen: set[int] = set()
    for gate in gates:
        if seen & gate.qubits:
            raise QubitClash("parallel oracle copies share qubits")
        seen |= gate.qubits
    amps = state.amplitudes
    for gate in gates:
        if max(gate.qubits, default=0) >= state.num_qubits:
            raise ParameterError("oracle qubit out of range")
        amps = _apply_oracle_gate(amps, state.num_qubits, gate)
    out = StateVector(state.num_qubits, amps)
    out.check_norm()
    if counter is not None:
        counter.oracle_calls += 1
    return out


def measurement_probabilities(state: StateVector, qubits) -> np.ndarray:
    """Exact Born-rule distribution over the given register."""
    t, _ = _front(state.amplitudes, state.num_qubits, qubits)
    t = t.reshape(1 << len(qubits), -1)
    return np.sum(np.abs(t) ** 2, axis=1)


def measure(
    state: StateVector, qubits, rng: np.random.Generator
) -> tuple[int, StateVector]:
    """Measure a register in the computational basis; collapse and renormalize."""
    qubits = tuple(qubits)
    if not qubits:
        raise ParameterError("measurement register must be nonempty")
    raw = measurement_probabilities(state, qubits)
    probs = raw / raw.sum()
    outcome = int(rng.choice(probs.size, p=probs))
    t, shape = _front(state.amplitudes, state.num_qubits, qubits)
    t = t.reshape(1 << len(qubits), -1).copy()
    keep = t[outcome].copy()
    t[:] = 0.0
    t[outcome] = keep / np.sqrt(raw[outcome])
    out = StateVector(state.num_qubits, _unfront(t.reshape(shape), state.num_qubits, qubits))
    out.check_norm()
    return outcome, out


def hadamard_measure(
    state: StateVector,
    qubits,
    rng: np.random.Generator,
    counter: DepthCounter | None = None,
) -> tuple[int, StateVector]:
    """Hadamard layer on the register, then computational measurement.

    The Hadamard layer costs depth 1; the measurement itself is free.
    """
    rotated = apply_layer(state, hadamard_layer(qubits), counter)
    return measure(rotated, qubits, rng)


def gate_unitary(gate: OracleGate, num_qubits: int) -> np.ndarray:
    """Materialize the full 2^n x 2^n matrix of an oracle gate (small n only)."""
    dim = 1 << num_qubits
    if num_qubits > 12:
        raise ParameterError("gate_unitary supports at most 12 qubits")
    out = np.zeros((dim, dim), dtype=complex)
    for col in range(dim):
        amps = np.zeros(dim, dtype=complex)
        amps[col] = 1.0
        out[:, col] = _apply_oracle_gate(amps, num_qubits, gate)
    return out


def register_value(outcome_bits: int, register, qubits) -> int:
    """Extract a sub-register value from a full measurement outcome.

    ``outcome_bits`` indexes the measured qubits in ``qubits`` order (first
    qubit = MSB); ``register`` lists the qubits to extract, again MSB first.
    """
    qubits = tuple(qubits)
    width = len(qubits)
    value = 0
    for q in register:
        pos = qubits.index(q)
        bit = (outcome_bits >> (width - 1 - pos)) & 1
        value = (value << 1) | bit
    return value
