"""Seeded random-oracle framework.

Everything in the lab derives from one primitive: a keyed pseudorandom bit
source indexed by (seed, oracle_id, input).  All other oracles are views of
it — sub-oracles obtained by domain splitting (a tag inserted after the
input), salted oracles (a public prefix inserted before the input), and
recursive chains of expanding stage oracles.

Bit strings are plain Python ints with an explicit width carried by the
oracle.  All concatenations entering the PRF are big-endian, byte-aligned and
length-prefixed, so ``x || tag`` can never collide with ``xtag || ""``.

The PRF is SHA-256 in counter mode: output bit ``i`` of an evaluation is bit
``i % 256`` of the digest for block ``i // 256``, and the 32-bit block index
enters the hash input as the trailing index segment.  Output bit 0 is the
most significant bit of the returned integer.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field, replace
from functools import lru_cache

from .errors import CapExceeded, ParameterError, WidthMismatch

#: SHA-256 digest width in bits; one PRF block.
_BLOCK_BITS = 256

#: Default cap on truth-table materialization (2^20 entries ~ 1M).
TRUTH_TABLE_CAP_BITS = 20

#: Cap on any single bit-string width handled by the oracle layer.
MAX_WIDTH_BITS = 4096


def _seg_bits(value: int, width: int) -> bytes:
    """Encode a width-`width` bit string as a self-delimiting segment."""
    if width < 0 or value < 0 or value >> width:
        raise WidthMismatch(f"value {value} does not fit in {width} bits")
    nbytes = (width + 7) // 8
    return b"\x01" + width.to_bytes(4, "big") + value.to_bytes(nbytes, "big")


def _seg_bytes(raw: bytes) -> bytes:
    """Encode a raw byte tag as a self-delimiting segment."""
    return b"\x02" + len(raw).to_bytes(4, "big") + raw


#: encoded index segment of PRF block 0, the common case
_BLOCK0_SEG = b"\x01" + (32).to_bytes(4, "big") + (0).to_bytes(4, "big")


@dataclass(frozen=True)
class RandomOracle:
    """A deterministic, uniformly-distributed function on bit strings.

    ``pre`` holds encoded segments hashed before the input (salt prefixes);
    ``post`` holds encoded segments hashed after the input (derivation tags).
    Oracles are immutable and safe to evaluate concurrently.
    """

    seed: int
    oracle_id: bytes
    in_bits: int
    out_bits: int
    pre: tuple[bytes, ...] = ()
    post: tuple[bytes, ...] = ()

    def __post_init__(self):
        if not (0 <= self.seed < 1 << 128):
            raise ParameterError("seed must be a 128-bit value")
        if self.in_bits < 1 or self.in_bits > MAX_WIDTH_BITS:
            raise ParameterError(f"in_bits out of range: {self.in_bits}")
        if self.out_bits < 1 or self.out_bits > MAX_WIDTH_BITS:
            raise ParameterError(f"out_bits out of range: {self.out_bits}")

    # -- internal PRF plumbing ------------------------------------------------

    def _base_hash(self):
        # The (seed, id, pre) prefix is constant per oracle; hashing it once
        # and copying the state makes bulk evaluation ~3x faster.
        cached = self.__dict__.get("_bh")
        if cached is None:
            cached = hashlib.sha256()
            cached.update(_seg_bits(self.seed, 128))
            cached.update(_seg_bytes(self.oracle_id))
            for seg in self.pre:
                cached.update(seg)
            object.__setattr__(self, "_bh", cached)
        return cached.copy()

    def _block(self, payload: bytes, block_index: int) -> int:
        h = self._base_hash()
        h.update(payload)
        h.update(_seg_bits(block_index, 32))
        return int.from_bytes(h.digest(), "big")

    def bit_at(self, segments: tuple, i: int) -> int:
        """Boolean view of this oracle at an extended input.

        ``segments`` concatenates (value, width) bit strings and raw byte
        tags; ``i`` is the output-bit index appended at the end.  ``eval`` is
        defined so that output bit ``i`` at input ``x`` equals
        ``bit_at(((x, in_bits),), i)``, and a derived sub-oracle's bit ``i``
        equals the parent's ``bit_at(((x, in_bits), tag), i)``.
        """
        payload = b"".join(
            _seg_bytes(s) if isinstance(s, bytes) else _seg_bits(*s) for s in segments
        )
        for seg in self.post:
            payload += seg
        block = self._block(payload, i // _BLOCK_BITS)
        return (block >> (_BLOCK_BITS - 1 - (i % _BLOCK_BITS))) & 1

    # -- public evaluation ----------------------------------------------------

    def _encoding(self):
        enc = self.__dict__.get("_enc")
        if enc is None:
            nbytes = (self.in_bits + 7) // 8
            head = b"\x01" + self.in_bits.to_bytes(4, "big")
            tail = b"".join(self.post)
            enc = (nbytes, head, tail)
            object.__setattr__(self, "_enc", enc)
        return enc

    def eval(self, x: int) -> int:
        """Evaluate the oracle; pure function of (seed, oracle_id, x)."""
        if x < 0 or x >> self.in_bits:
            raise WidthMismatch(
                f"input {x} does not fit oracle width {self.in_bits}"
            )
        nbytes, head, tail = self._encoding()
        if self.out_bits <= _BLOCK_BITS:
            h = self._base_hash()
            h.update(head + x.to_bytes(nbytes, "big") + tail + _BLOCK0_SEG)
            return int.from_bytes(h.digest(), "big") >> (_BLOCK_BITS - self.out_bits)
        payload = head + x.to_bytes(nbytes, "big") + tail
        out = 0
        remaining = self.out_bits
        block_index = 0
        while remaining > 0:
            take = min(remaining, _BLOCK_BITS)
            h = self._base_hash()
            h.update(payload + _seg_bits(block_index, 32))
            block = int.from_bytes(h.digest(), "big")
            out = (out << take) | (block >> (_BLOCK_BITS - take))
            remaining -= take
            block_index += 1
        return out

    def eval_many(self, values) -> list:
        """Bulk evaluation with the per-call overhead hoisted out."""
        if self.out_bits > _BLOCK_BITS:
            return [self.eval(x) for x in values]
        nbytes, head, tail = self._encoding()
        suffix = tail + _BLOCK0_SEG
        shift = _BLOCK_BITS - self.out_bits
        base = self._base_hash()
        width = self.in_bits
        from_bytes = int.from_bytes
        out = []
        for x in values:
            if x < 0 or x >> width:
                raise WidthMismatch(f"input {x} does not fit width {width}")
            h = base.copy()
            h.update(head + x.to_bytes(nbytes, "big") + suffix)
            out.append(from_bytes(h.digest(), "big") >> shift)
        return out

    def __call__(self, x: int) -> int:
        return self.eval(x)


def derive_suboracle(
    parent: RandomOracle, tag: bytes, in_bits: int, out_bits: int
) -> RandomOracle:
    """Split the parent's domain off into an independent derived oracle.

    Output bit ``i`` of the derived oracle at ``x`` equals the parent's
    boolean view at ``x || tag || <i>`` (see ``RandomOracle.bit_at``); oracles
    derived under distinct tags are therefore independent.
    """
    if out_bits < 1:
        raise ParameterError("out_bits must be >= 1")
    # Tags accumulate inside-out: derive(derive(P, t1), t2) probes P at
    # x || t2 || t1, matching F2(x) = F1(x || t2) with F1(u) = P(u || t1).
    return replace(
        parent,
        in_bits=in_bits,
        out_bits=out_bits,
        post=(_seg_bytes(tag),) + parent.post,
    )


def salt(oracle: RandomOracle, pk: int, pk_bits: int) -> RandomOracle:
    """Prefix every evaluation with a public value: the salted oracle
    evaluates the parent at ``pk || x``.  Salting twice concatenates
    prefixes in application order."""
    return replace(oracle, pre=oracle.pre + (_seg_bits(pk, pk_bits),))


def salt_bytes(oracle: RandomOracle, raw: bytes) -> RandomOracle:
    """Salt with an arbitrary byte tag (used for transcript prefixes)."""
    return replace(oracle, pre=oracle.pre + (_seg_bytes(raw),))


@lru_cache(maxsize=128)
def truth_table(
    oracle: RandomOracle, cap_bits: int = TRUTH_TABLE_CAP_BITS
) -> tuple[int, ...]:
    """Materialize ``table[i] = oracle.eval(i)`` for all inputs.

    Raises CapExceeded when ``in_bits`` exceeds the cap (default 20, about a
    million entries).
    """
    if oracle.in_bits > cap_bits:
        raise CapExceeded(
            f"truth table of {oracle.in_bits}-bit domain exceeds cap {cap_bits}"
        )
    return tuple(oracle.eval(x) for x in range(1 << oracle.in_bits))


# -- query logging -----------------------------------------------------------


@dataclass(frozen=True)
class QueryEntry:
    label: str
    in_bits: int
    x: int
    out_bits: int
    value: int
    index: int


@dataclass
class QueryLog:
    """Append-only record of classical queries in wall order."""

    entries: list[QueryEntry] = field(default_factory=list)

    def record(self, label: str, oracle: RandomOracle, x: int, value: int) -> None:
        self.entries.append(
            QueryEntry(label, oracle.in_bits, x, oracle.out_bits, value, len(self.entries))
        )

    def __len__(self) -> int:
        return len(self.entries)

    def count(self, label_prefix: str) -> int:
        return sum(1 for e in self.entries if e.label.startswith(label_prefix))


@dataclass(frozen=True)
class LoggingOracle:
    """Classical-access handle: evaluates the oracle and logs each query.

    This is the only oracle interface handed to classical parts of hybrid
    runs, so classical isolation is enforced by the type itself.
    """

    oracle: RandomOracle
    log: QueryLog
    label: str

    @property
    def in_bits(self) -> int:
        return self.oracle.in_bits

    @property
    def out_bits(self) -> int:
        return self.oracle.out_bits

    def eval(self, x: int) -> int:
        value = self.oracle.eval(x)
        self.log.record(self.label, self.oracle, x, value)
        return value

    def __call__(self, x: int) -> int:
        return self.eval(x)


# -- recursive composed oracle -----------------------------------------------


@dataclass(frozen=True)
class ComposedOracle:
    """The chain ``stage[d] o ... o stage[0]`` with expanding middle domains.

    Stage 0 maps ``sigma_bits -> sigma_bits * d_prime`` bits, stages 1..d-1
    keep that width, and stage d maps down to ``out_bits``; ``d_prime`` is
    pinned to ``2 d + 5``.  For ``d = 0`` the chain is the single stage
    ``sigma_bits -> out_bits``.
    """

    stages: tuple[RandomOracle, ...]
    sigma_bits: int
    d: int
    d_prime: int
    out_bits: int

    @property
    def wide_bits(self) -> int:
        return self.sigma_bits * self.d_prime

    def stage_in_bits(self, i: int) -> int:
        return self.sigma_bits if i == 0 else self.wide_bits


def compose_recursive(
    base: RandomOracle, sigma_bits: int, d: int, out_bits: int, tag: bytes = b"rec"
) -> ComposedOracle:
    """Build the depth-forcing chain of ``d + 1`` independent stage oracles."""
    if d < 0:
        raise ParameterError("d must be >= 0")
    d_prime = 2 * d + 5
    wide = sigma_bits * d_prime
    if wide > MAX_WIDTH_BITS:
        raise ParameterError(
            f"stage width {wide} exceeds bit-string cap {MAX_WIDTH_BITS}"
        )
    stages = []
    for i in range(d + 1):
        in_b = sigma_bits if i == 0 else wide
        out_b = out_bits if i == d else wide
        stages.append(derive_suboracle(base, tag + b"/%d" % i, in_b, out_b))
    return ComposedOracle(tuple(stages), sigma_bits, d, d_prime, out_bits)


def eval_composed(
    c: ComposedOracle, x: int, log: QueryLog | None = None, label: str = "stage"
) -> int:
    """Apply the chain stage by stage; logs d+1 entries when a log is given."""
    value = x
    for i, stage in enumerate(c.stages):
        if i == 0 and (value < 0 or value >> c.sigma_bits):
            raise WidthMismatch(f"input {value} does not fit {c.sigma_bits} bits")
        out = stage.eval(value)
        if log is not None:
            log.record(f"{label}{i}", stage, value, out)
        value = out
    return value


@dataclass(frozen=True)
class Path:
    """A forward chain of stage values: coords[j+1] = stage[start+j](coords[j])."""

    start_stage: int
    coords: tuple[int, ...]


def path_query(c: ComposedOracle, stage: int, x: int, log: QueryLog | None = None) -> Path:
    """Forward path query from a stage-``stage`` value through stage d.

    The default adversary interface is forward-only; backward links are
    available through ``full_paths`` when the Sigma domain is materialized.
    """
    if stage > c.d:
        raise ParameterError(f"stage {stage} exceeds chain depth {c.d}")
    coords = [x]
    for i in range(stage, c.d + 1):
        value = c.stages[i].eval(coords[-1])
        if log is not None:
            log.record(f"stage{i}", c.stages[i], coords[-1], value)
        coords.append(value)
    return Path(stage, tuple(coords))


@lru_cache(maxsize=32)
def full_paths(c: ComposedOracle, cap_bits: int = TRUTH_TABLE_CAP_BITS) -> tuple[Path, ...]:
    """Materialize the complete forward path of every Sigma element.

    This is the test-mode table that makes backward path extension possible
    at small sigma_bits; CapExceeded otherwise.
    """
    if c.sigma_bits > cap_bits:
        raise CapExceeded(
            f"path table over {c.sigma_bits}-bit Sigma exceeds cap {cap_bits}"
        )
    return tuple(path_query(c, 0, x) for x in range(1 << c.sigma_bits))


def backward_paths(c: ComposedOracle, stage: int, value: int) -> tuple[Path, ...]:
    """All materialized full paths passing through (stage, value)."""
    if stage > c.d + 1:
        raise ParameterError(f"stage {stage} exceeds chain depth {c.d}")
    return tuple(p for p in full_paths(c) if p.coords[stage] == value)
