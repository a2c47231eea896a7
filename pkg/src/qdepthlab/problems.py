"""Problem instances, exact constants, relation verifiers, and lifting maps.

Two problem families are implemented end to end:

  - collision hashing: output lambda triples (y, m, r); on every index whose
    image y has exactly two preimages {z0, z1} under g, the parity equation
    m = r.(z0 xor z1) xor H'(z0) xor H'(z1) must hold on most indices;
  - its adaptive variant where the equation oracle takes the chained value
    h(y) as a second argument, forcing a classical evaluation of the chain
    between the image measurement and the equation query.

Plus a toy code-hashing problem (repetition code; brute-force solver only)
and the two lifting maps: the recursive lift replaces the designated
equation oracle by a chain of expanding stage oracles, and the serial lift
chains d+1 instances through transcript-salted oracles.

Verifiers are pure functions of (instance, solution) and use exhaustive
preimage counting, so they are capped at small lambda.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from fractions import Fraction
from functools import lru_cache

from .bounds import H_COLLISION_C
from .errors import CapExceeded, ParameterError, WidthMismatch
from .oracles import (
    ComposedOracle,
    QueryLog,
    RandomOracle,
    compose_recursive,
    derive_suboracle,
    eval_composed,
    salt_bytes,
    truth_table,
)

#: Exhaustive preimage search cap (domain bits).
BRUTE_FORCE_CAP_BITS = 16


# -- exact constants -------------------------------------------------------------


def c_exact(a: int, b: int) -> Fraction:
    """Exact probability that a uniformly chosen image point of a random
    function [a] -> [b] has exactly two preimages, conditioned on lying in
    the image:

        c(a, b) = [a (a-1) / 2 * (b-1)^(a-2)] / [b^a - (b-1)^a]
    """
    if a < 2 or b < 2:
        raise ParameterError("c_exact requires a >= 2 and b >= 2")
    numerator = a * (a - 1) // 2 * (b - 1) ** (a - 2)
    denominator = b**a - (b - 1) ** a
    return Fraction(numerator, denominator)


def c_limit(k: int) -> float:
    """Large-domain limit of c with a = k b:  k^2 / (2 (e^k - 1))."""
    if k < 1:
        raise ParameterError("k must be >= 1")
    return k * k / (2.0 * (math.exp(k) - 1.0))


# -- verdicts and solutions -------------------------------------------------------


@dataclass(frozen=True)
class Verdict:
    ok: bool
    reason: str | None = None
    details: dict | None = None

    def __bool__(self) -> bool:
        return self.ok


def accept(**details) -> Verdict:
    return Verdict(True, None, details or None)


def reject(reason: str, **details) -> Verdict:
    return Verdict(False, reason, details or None)


@dataclass(frozen=True)
class CollisionSolution:
    """lambda triples (y_i, m_i, r_i); |y| = lam, |m| = 1, |r| = lam + 1."""

    lam: int
    triples: tuple  # of (y, m, r)

    def validate(self) -> None:
        if len(self.triples) != self.lam:
            raise WidthMismatch(f"expected {self.lam} triples")
        for y, m, r in self.triples:
            if y >> self.lam or y < 0:
                raise WidthMismatch(f"y {y} exceeds {self.lam} bits")
            if m not in (0, 1):
                raise WidthMismatch(f"m {m} is not a bit")
            if r >> (self.lam + 1) or r < 0:
                raise WidthMismatch(f"r {r} exceeds {self.lam + 1} bits")


# -- oracle plumbing shared by the instances --------------------------------------


def base_oracle(seed: int, oracle_id: bytes = b"base") -> RandomOracle:
    """The single primitive oracle an instance derives everything from."""
    return RandomOracle(seed, oracle_id, in_bits=1, out_bits=1)


def equation_oracle_eval(hp, z: int, log: QueryLog | None = None) -> int:
    """Evaluate the equation oracle whether direct or lifted to a chain."""
    if isinstance(hp, ComposedOracle):
        return eval_composed(hp, z, log, label="hp.stage")
    if log is not None:
        value = hp.eval(z)
        log.record("hp", hp, z, value)
        return value
    return hp.eval(z)


def preimage_map(oracle: RandomOracle, cap_bits: int = BRUTE_FORCE_CAP_BITS) -> dict:
    """y -> sorted list of preimages, by exhaustive evaluation."""
    if oracle.in_bits > cap_bits:
        raise CapExceeded(
            f"preimage search over {oracle.in_bits}-bit domain exceeds cap {cap_bits}"
        )
    table = truth_table(oracle, cap_bits)
    out: dict[int, list[int]] = {}
    for x, y in enumerate(table):
        out.setdefault(y, []).append(x)
    return out


def _parity(v: int) -> int:
    return v.bit_count() & 1


# -- collision hashing -------------------------------------------------------------


@dataclass(frozen=True)
class CollisionInstance:
    """g: {0,1}^(lam+1) -> {0,1}^lam plus the 1-bit equation oracle H'.

    ``hp`` is a plain derived oracle for the base problem and a recursive
    chain after lifting (``lifted_d`` >= 0).  Both are split off one base
    oracle, so the whole instance replays from (seed, lam) alone.
    """

    lam: int
    g: RandomOracle
    hp: object  # RandomOracle | ComposedOracle
    lifted_d: int = -1  # -1 = unlifted

    @classmethod
    def create(cls, lam: int, base: RandomOracle) -> "CollisionInstance":
        if lam < 2:
            raise ParameterError("lam must be >= 2")
        g = derive_suboracle(base, b"g", lam + 1, lam)
        hp = derive_suboracle(base, b"H'", lam + 1, 1)
        return cls(lam, g, hp)

    @property
    def c(self) -> Fraction:
        return _cached_c(self.lam)

    def preimages(self) -> dict:
        return _cached_preimages(self.g)


@lru_cache(maxsize=64)
def _cached_c(lam: int) -> Fraction:
    return c_exact(1 << (lam + 1), 1 << lam)


@lru_cache(maxsize=64)
def _cached_preimages(g: RandomOracle) -> dict:
    return preimage_map(g)


def verify_collision_hashing(inst: CollisionInstance, sol: CollisionSolution) -> Verdict:
    """Exhaustive-preimage verifier for the triple relation.

    Accepts iff all images are distinct, more than 3c/4 of them (strictly)
    have exactly two preimages, and strictly more than 3/4 of those satisfy
    the parity equation.
    """
    sol.validate()
    ys = [y for y, _m, _r in sol.triples]
    if len(set(ys)) != len(ys):
        return reject("distinctness")
    pre = inst.preimages()
    two_pre = [
        (i, pre[y]) for i, (y, _m, _r) in enumerate(sol.triples) if len(pre.get(y, ())) == 2
    ]
    threshold = Fraction(3, 4) * inst.c
    if Fraction(len(two_pre), inst.lam) <= threshold:
        return reject(
            "two_preimage_threshold",
            hits=len(two_pre),
            required=float(threshold) * inst.lam,
        )
    wins = 0
    for i, (z0, z1) in two_pre:
        y, m, r = sol.triples[i]
        rhs = _parity(r & (z0 ^ z1)) ^ equation_oracle_eval(inst.hp, z0) ^ equation_oracle_eval(inst.hp, z1)
        wins += int(m == rhs)
    if Fraction(wins, len(two_pre)) <= Fraction(3, 4):
        return reject("equation_threshold", wins=wins, of=len(two_pre))
    return accept(hits=len(two_pre), wins=wins)


# -- adaptive (chained) collision hashing -------------------------------------------


@dataclass(frozen=True)
class HCollisionInstance:
    """G0, G1: {0,1}^lam -> {0,1}^lam, H: {0,1}^(2 lam) -> {0,1}, and the
    chain h: {0,1}^lam -> {0,1}^lam of d+1 stage oracles.

    The equation oracle H takes (x, h(y)) packed as x || h(y); solving
    honestly requires knowing h(y) before the equation query, which is what
    separates adaptive from non-adaptive low-depth solvers.
    """

    lam: int
    d: int
    g0: RandomOracle
    g1: RandomOracle
    h_eq: RandomOracle
    chain: ComposedOracle

    #: acceptance constant 1 / (2 (e^2 - 1))
    C = H_COLLISION_C

    @classmethod
    def create(cls, lam: int, d: int, base: RandomOracle) -> "HCollisionInstance":
        if lam < 2:
            raise ParameterError("lam must be >= 2")
        g0 = derive_suboracle(base, b"G0", lam, lam)
        g1 = derive_suboracle(base, b"G1", lam, lam)
        h_eq = derive_suboracle(base, b"H", 2 * lam, 1)
        chain = compose_recursive(base, lam, d, lam, tag=b"h")
        return cls(lam, d, g0, g1, h_eq, chain)

    def eq_input(self, x: int, h_of_y: int) -> int:
        return (x << self.lam) | h_of_y

    def preimages(self) -> tuple[dict, dict]:
        return _cached_preimages(self.g0), _cached_preimages(self.g1)


def two_to_one_set(g0: RandomOracle, g1: RandomOracle) -> frozenset:
    """Exact set of images with one preimage under each function."""
    pre0 = preimage_map(g0)
    pre1 = preimage_map(g1)
    return frozenset(
        y for y, xs in pre0.items() if len(xs) == 1 and len(pre1.get(y, ())) == 1
    )


def verify_h_collision(inst: HCollisionInstance, sol: CollisionSolution) -> Verdict:
    """Verifier for the adaptive variant.

    Accepts iff images are distinct, at least 3 C lambda / 4 of them lie in
    the two-to-one set, and at least 3/4 of those satisfy
    r.(x0 xor x1) xor H(x0, h(y)) xor H(x1, h(y)) = m.

    Thresholds here are non-strict (>=), unlike the base problem's strict
    ones; the asymmetry is intentional and preserved.
    """
    sol.validate()
    if any(r >> inst.lam for _y, _m, r in sol.triples):
        # r is a mask over lam-bit preimages in this variant
        raise WidthMismatch("r exceeds lam bits")
    ys = [y for y, _m, _r in sol.triples]
    if len(set(ys)) != len(ys):
        return reject("distinctness")
    pre0, pre1 = inst.preimages()
    hits = [
        i
        for i, y in enumerate(ys)
        if len(pre0.get(y, ())) == 1 and len(pre1.get(y, ())) == 1
    ]
    required = 0.75 * inst.C * inst.lam
    if len(hits) < required - 1e-12:
        return reject("two_to_one_threshold", hits=len(hits), required=required)
    wins = 0
    for i in hits:
        y, m, r = sol.triples[i]
        x0 = pre0[y][0]
        x1 = pre1[y][0]
        h_y = eval_composed(inst.chain, y)
        rhs = (
            _parity(r & (x0 ^ x1))
            ^ inst.h_eq.eval(inst.eq_input(x0, h_y))
            ^ inst.h_eq.eval(inst.eq_input(x1, h_y))
        )
        wins += int(m == rhs)
    if 4 * wins < 3 * len(hits):
        return reject("equation_threshold", wins=wins, of=len(hits))
    return accept(hits=len(hits), wins=wins)


# -- toy code hashing ----------------------------------------------------------------


@dataclass(frozen=True)
class RepetitionCode:
    """Toy linear code: n equal symbols over a 2^sym_bits alphabet."""

    n: int
    sym_bits: int

    def contains(self, word) -> bool:
        return len(word) == self.n and all(s == word[0] for s in word) and all(
            0 <= s < 1 << self.sym_bits for s in word
        )

    def codewords(self):
        for s in range(1 << self.sym_bits):
            yield (s,) * self.n


@dataclass(frozen=True)
class CodeHashingInstance:
    """Find a codeword whose i-th symbol hashes to 1 in output bit i.

    ``hasher`` maps a symbol to n bits (bit 0 = most significant); it is a
    derived oracle for the base problem and a recursive chain when lifted.
    """

    code: RepetitionCode
    hasher: object  # RandomOracle | ComposedOracle
    lifted_d: int = -1

    @classmethod
    def create(cls, n: int, sym_bits: int, base: RandomOracle) -> "CodeHashingInstance":
        hasher = derive_suboracle(base, b"code-hash", sym_bits, n)
        return cls(RepetitionCode(n, sym_bits), hasher)

    def hash_symbol(self, symbol: int, log: QueryLog | None = None) -> int:
        if isinstance(self.hasher, ComposedOracle):
            return eval_composed(self.hasher, symbol, log, label="code.stage")
        value = self.hasher.eval(symbol)
        if log is not None:
            log.record("code", self.hasher, symbol, value)
        return value


def verify_code_hashing(inst: CodeHashingInstance, word) -> Verdict:
    """Accept iff the word is a codeword and hash bit i of symbol i is 1."""
    if not inst.code.contains(tuple(word)):
        return reject("not_a_codeword")
    n = inst.code.n
    for i, symbol in enumerate(word):
        bits = inst.hash_symbol(symbol)
        if (bits >> (n - 1 - i)) & 1 != 1:
            return reject("hash_bit", index=i)
    return accept()


# -- lifting maps ---------------------------------------------------------------------


def lift_recursive(inst, d: int):
    """Replace the designated equation oracle with a fresh recursive chain.

    For the collision problem only the equation oracle is lifted; g stays a
    direct derived oracle (the image-sampling step needs no chain and this
    matches the adaptive variant's shape).  For code hashing the symbol
    hasher is lifted.  d = 0 keeps the relation and re-derives the oracle as
    a single-stage chain.
    """
    if d < 0:
        raise ParameterError("d must be >= 0")
    if isinstance(inst, CollisionInstance):
        # recover the pre-derivation base: g's tag is the outermost post segment
        base = RandomOracle(
            inst.g.seed, inst.g.oracle_id, 1, 1, pre=inst.g.pre, post=inst.g.post[1:]
        )
        chain = compose_recursive(base, inst.lam + 1, d, 1, tag=b"H'rec")
        return replace(inst, hp=chain, lifted_d=d)
    if isinstance(inst, CodeHashingInstance):
        hasher = inst.hasher
        base = RandomOracle(
            hasher.seed, hasher.oracle_id, 1, 1, pre=hasher.pre, post=hasher.post[1:]
        )
        chain = compose_recursive(
            base, inst.code.sym_bits, d, inst.code.n, tag=b"code-rec"
        )
        return replace(inst, hasher=chain, lifted_d=d)
    raise ParameterError(f"cannot lift {type(inst).__name__}")


def serialize_solution(sol: CollisionSolution) -> bytes:
    """Canonical transcript encoding of one step's solution."""
    parts = [f"{y:x}.{m:x}.{r:x}" for y, m, r in sol.triples]
    return ("[" + ",".join(parts) + "]").encode("ascii")


@dataclass(frozen=True)
class SerialInstance:
    """d+1 chained instances; step i's oracles are derived from the base
    oracle salted with the serialized transcript of solutions 0..i-1."""

    lam: int
    d: int
    base: RandomOracle

    @classmethod
    def create(cls, lam: int, d: int, base: RandomOracle) -> "SerialInstance":
        if d < 0:
            raise ParameterError("d must be >= 0")
        return cls(lam, d, base)

    def step_instance(self, prefix: tuple) -> CollisionInstance:
        """Instance for step len(prefix), given the solutions so far."""
        salted = self.base
        for sol in prefix:
            salted = salt_bytes(salted, serialize_solution(sol))
        return CollisionInstance.create(self.lam, salted)


def lift_serial(lam: int, d: int, base: RandomOracle) -> SerialInstance:
    return SerialInstance.create(lam, d, base)


def verify_serial(inst: SerialInstance, chain) -> Verdict:
    """Conjunction of the inner verifier over transcript-prefixed oracles;
    rejects at the first failing index."""
    chain = tuple(chain)
    if len(chain) != inst.d + 1:
        return reject("chain_length", expected=inst.d + 1, got=len(chain))
    for i in range(inst.d + 1):
        step = inst.step_instance(chain[:i])
        verdict = verify_collision_hashing(step, chain[i])
        if not verdict.ok:
            return reject("step_failed", index=i, inner=verdict.reason)
    return accept()


# -- brute-force reference solvers -----------------------------------------------------


def brute_force_solve(inst, cap_bits: int = BRUTE_FORCE_CAP_BITS):
    """Exhaustively construct an accepting solution, or return None.

    This is the independent reference path used to cross-check honest
    provers and verifiers; it never simulates quantum state.
    """
    if isinstance(inst, CollisionInstance):
        return _brute_force_collision(inst, cap_bits)
    if isinstance(inst, CodeHashingInstance):
        return _brute_force_code(inst, cap_bits)
    raise ParameterError(f"no brute-force solver for {type(inst).__name__}")


def _brute_force_collision(inst: CollisionInstance, cap_bits: int):
    if inst.lam + 1 > cap_bits:
        raise CapExceeded(f"lam {inst.lam} exceeds brute-force cap")
    pre = inst.preimages()
    good = sorted(y for y, xs in pre.items() if len(xs) == 2)
    filler = sorted(set(range(1 << inst.lam)) - set(good))
    ys = (good + filler)[: inst.lam]
    if len(ys) < inst.lam:
        return None
    triples = []
    for y in ys:
        xs = pre.get(y, ())
        if len(xs) == 2:
            z0, z1 = xs
            m = equation_oracle_eval(inst.hp, z0) ^ equation_oracle_eval(inst.hp, z1)
            triples.append((y, m, 0))
        else:
            triples.append((y, 0, 0))
    sol = CollisionSolution(inst.lam, tuple(triples))
    return sol if verify_collision_hashing(inst, sol).ok else None


def _brute_force_code(inst: CodeHashingInstance, cap_bits: int):
    if inst.code.sym_bits > cap_bits:
        raise CapExceeded("alphabet exceeds brute-force cap")
    for word in inst.code.codewords():
        if verify_code_hashing(inst, word).ok:
            return word
    return None
