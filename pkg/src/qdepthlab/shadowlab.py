"""Executable shadow-oracle gadgets with Monte-Carlo probability checks.

These are the proof devices that make domain hiding quantitative: sample a
random superset of the chain's reachable values ("base sets"), thin it row
by row into a matrix of nested sets, and block each row's sets in a shadow
copy of the chain that answers bottom there.  At tiny parameters everything
is stored explicitly, so the construction's size equalities hold exactly
and its probability claims can be measured directly:

  - the base-set construction aborts (a stage collided on the tracked sets)
    with frequency at most (d+1)/|Sigma|;
  - given row i-1, a fixed point lands in row i with probability at most
    1/|Sigma| (and poly/|Sigma| when queried paths are excluded);
  - a chain walk under the row-i shadow hits bottom at stage i for every
    Sigma input, so low-depth runs never see a final chain value.

A uniformly random superset of a mandatory set with fixed total size is
sampled as mandatory + uniform distinct extras from the complement, which
is exactly the uniform distribution over such supersets.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ParameterError
from .oracles import ComposedOracle

#: explicit-set regime cap: |Sigma| <= 16 and d <= 3
SIGMA_CAP_BITS = 4
DEPTH_CAP = 3


def _check_regime(c: ComposedOracle) -> None:
    if c.sigma_bits > SIGMA_CAP_BITS or c.d > DEPTH_CAP:
        raise ParameterError(
            f"shadow lab runs with sigma_bits <= {SIGMA_CAP_BITS} and d <= {DEPTH_CAP}"
        )
    if c.d < 1:
        raise ParameterError("shadow sets need d >= 1")


@dataclass(frozen=True)
class BaseSets:
    """Tracked supersets S0[i] (i = 1..d) of the chain's forward images
    sigma_images[i], plus the abort flag of the size conditions."""

    s0: tuple  # s0[i] for i in 1..d  (index 0 unused)
    sigma_images: tuple  # images of Sigma at stage depth i, same indexing
    aborted: bool

    def target_size(self, c: ComposedOracle) -> int:
        return (1 << c.sigma_bits) ** (c.d + 2)


def _sample_superset(
    mandatory: frozenset, universe_bits: int, size: int, rng: np.random.Generator
) -> frozenset:
    """mandatory + uniform distinct extras from the complement."""
    chosen = set(mandatory)
    if len(chosen) > size:
        raise ParameterError("mandatory set larger than the requested size")
    while len(chosen) < size:
        need = size - len(chosen)
        draw = rng.integers(0, 1 << universe_bits, size=2 * need + 8)
        for v in draw:
            v = int(v)
            if v not in chosen:
                chosen.add(v)
                if len(chosen) == size:
                    break
    return frozenset(chosen)


def gen_base_sets(c: ComposedOracle, rng: np.random.Generator) -> BaseSets:
    """Sample S0[1] containing the stage-0 image of Sigma and propagate it;
    abort when any tracked size degrades (a collision occurred)."""
    _check_regime(c)
    sigma = 1 << c.sigma_bits
    target = (sigma) ** (c.d + 2)

    images = [None, frozenset(c.stages[0].eval(x) for x in range(sigma))]
    s0 = [None, _sample_superset(images[1], c.wide_bits, target, rng)]
    for i in range(1, c.d):
        stage = c.stages[i]
        s0.append(frozenset(stage.eval(v) for v in s0[i]))
        images.append(frozenset(stage.eval(v) for v in images[i]))

    aborted = len(images[1]) != sigma or any(
        len(s0[i]) != target for i in range(1, c.d + 1)
    )
    return BaseSets(tuple(s0), tuple(images), aborted)


def gen_set_matrix(
    base: BaseSets, c: ComposedOracle, rng: np.random.Generator
) -> dict:
    """Thin the base sets into rows: row i samples a 1/|Sigma| fraction of
    the previous row's column i (keeping the Sigma image inside) and
    propagates it forward.  Returns {(i, k): set} for 1 <= i <= k <= d;
    empty on aborted bases."""
    _check_regime(c)
    if base.aborted:
        return {(i, k): frozenset() for i in range(1, c.d + 1) for k in range(1, c.d + 1)}
    sigma = 1 << c.sigma_bits
    rows: dict = {}
    prev_row = {k: base.s0[k] for k in range(1, c.d + 1)}
    for i in range(1, c.d + 1):
        size = len(prev_row[i]) // sigma
        extras_pool = sorted(prev_row[i] - base.sigma_images[i])
        mandatory = base.sigma_images[i]
        n_extra = size - len(mandatory)
        if n_extra < 0:
            raise ParameterError("row size below the mandatory Sigma image")
        picked = rng.choice(len(extras_pool), size=n_extra, replace=False)
        s_ii = frozenset(mandatory | {extras_pool[j] for j in picked})
        rows[(i, i)] = s_ii
        current = s_ii
        for k in range(i + 1, c.d + 1):
            current = frozenset(c.stages[k - 1].eval(v) for v in current)
            rows[(i, k)] = current
        for k in range(1, i):
            rows[(i, k)] = frozenset()
        prev_row = {k: rows[(i, k)] for k in range(1, c.d + 1)}
    return rows


def gen_set_matrix_qc(
    base: BaseSets,
    c: ComposedOracle,
    excluded: dict,
    rng: np.random.Generator,
) -> dict:
    """Variant that avoids classically queried paths: row i's diagonal is
    sampled inside (previous row's column i) minus excluded[i], mandatory
    part (Sigma image intersected with the pool) minus excluded[i]."""
    _check_regime(c)
    if base.aborted:
        return {(i, k): frozenset() for i in range(1, c.d + 1) for k in range(1, c.d + 1)}
    sigma = 1 << c.sigma_bits
    rows: dict = {}
    prev_row = {k: base.s0[k] for k in range(1, c.d + 1)}
    for i in range(1, c.d + 1):
        t_ii = frozenset(excluded.get(i, ()))
        pool = prev_row[i] - t_ii
        size = len(prev_row[i]) // sigma
        mandatory = (base.sigma_images[i] & prev_row[i]) - t_ii
        extras_pool = sorted(pool - mandatory)
        n_extra = size - len(mandatory)
        if n_extra < 0 or n_extra > len(extras_pool):
            raise ParameterError("excluded set too large for the row size")
        picked = rng.choice(len(extras_pool), size=n_extra, replace=False)
        s_ii = frozenset(mandatory | {extras_pool[j] for j in picked})
        rows[(i, i)] = s_ii
        current = s_ii
        for k in range(i + 1, c.d + 1):
            current = frozenset(c.stages[k - 1].eval(v) for v in current)
            rows[(i, k)] = current
        for k in range(1, i):
            rows[(i, k)] = frozenset()
        prev_row = {k: rows[(i, k)] for k in range(1, c.d + 1)}
    return rows


@dataclass(frozen=True)
class ShadowOracle:
    """A view of the chain answering bottom (None) on the blocked sets.

    ``blocked[j]`` guards stage j for j in 1..d; stage 0 is never blocked
    (its domain is public anyway).
    """

    chain: ComposedOracle
    blocked: dict  # stage index -> frozenset

    def stage_query(self, i: int, x: int):
        if i > self.chain.d:
            raise ParameterError(f"stage {i} exceeds chain depth {self.chain.d}")
        if x in self.blocked.get(i, ()):
            return None
        return self.chain.stages[i].eval(x)

    def compose_query(self, x: int):
        """Walk the chain; None as soon as a blocked input is hit."""
        value = x
        for i in range(self.chain.d + 1):
            value = self.stage_query(i, value)
            if value is None:
                return None
        return value


def make_shadow(c: ComposedOracle, blocked_row: dict) -> ShadowOracle:
    for i, s in blocked_row.items():
        if i < 1 or i > c.d:
            raise ParameterError(f"blocked stage {i} out of range")
        _ = frozenset(s)
    return ShadowOracle(c, {i: frozenset(s) for i, s in blocked_row.items()})


def row_shadow(c: ComposedOracle, matrix: dict, i: int) -> ShadowOracle:
    """Shadow of the chain with respect to row i of the set matrix."""
    return make_shadow(c, {k: matrix[(i, k)] for k in range(1, c.d + 1)})
