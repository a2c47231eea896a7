"""Pre-committed probability bounds, computed from first principles.

Every statistical acceptance threshold used by the experiment harnesses and
the test suite is derived here, by exact combinatorics or explicit
Chernoff/Hoeffding tails, never tuned against the simulators.  The model
underneath: one instance fixes the oracle, each repetition samples an input
uniformly, and repetition successes are treated as independent Bernoulli
draws at the exact marginal rate.  (Sharing one oracle across repetitions
adds a small overdispersion; every consumer leaves explicit sigma-level slack
for it.)

Rate facts used below, for a uniformly random g: A -> B with |A| = 2|B|:

  - the image of a uniform input has exactly two preimages with probability
    (|A|-1) (|B|-1)^(|A|-2) / |B|^(|A|-1)            (size-biased rate);
  - a *fixed* point of B has exactly two preimages with probability
    C(|A|,2) (|B|-1)^(|A|-2) / |B|^|A|;
    with |A| = 2|B| the two rates coincide and tend to 2 e^-2;
  - for independent G0, G1: B -> B, a sampled image lies in the set of
    points with exactly one preimage under each with probability
    ((|B|-1)/|B|)^(2(|B|-1)), tending to e^-2.
"""

from __future__ import annotations

import math
from fractions import Fraction

# asymptotic constant of the two-to-one problem family: lim c / 4 with
# |A| = 2|B|, i.e. 1 / (2 (e^2 - 1))
H_COLLISION_C = 1.0 / (2.0 * (math.e**2 - 1.0))


# -- elementary exact rates ----------------------------------------------------


def two_preimage_rate(a: int, b: int) -> float:
    """P(the image of a uniform input has exactly 2 preimages), g: [a] -> [b]."""
    return math.exp(
        math.log(a - 1) + (a - 2) * math.log1p(-1.0 / b) - math.log(b)
    )


def fixed_two_preimage_rate(a: int, b: int) -> float:
    """P(a fixed codomain point has exactly 2 preimages), g: [a] -> [b]."""
    return math.exp(
        math.log(a) + math.log(a - 1) - math.log(2)
        + (a - 2) * math.log1p(-1.0 / b) - 2 * math.log(b)
    )


def two_to_one_rate(lam: int) -> float:
    """P(a sampled image has one preimage under each of two independent
    random functions on lambda bits)."""
    b = 1 << lam
    return math.exp(2 * (b - 1) * math.log1p(-1.0 / b))


def pair_collision_rate(a: int, b: int) -> float:
    """P(two independent uniform inputs share an image), g: [a] -> [b]."""
    return 1.0 / a + (1.0 - 1.0 / a) / b


def duplicate_prob_bound(k: int, a: int, b: int) -> float:
    """Union bound on any duplicate among k sampled images."""
    return min(1.0, k * (k - 1) / 2 * pair_collision_rate(a, b))


# -- exact binomial machinery ----------------------------------------------------


def binom_pmf(n: int, k: int, p: float) -> float:
    if k < 0 or k > n:
        return 0.0
    if p <= 0.0:
        return 1.0 if k == 0 else 0.0
    if p >= 1.0:
        return 1.0 if k == n else 0.0
    logpmf = (
        math.lgamma(n + 1) - math.lgamma(k + 1) - math.lgamma(n - k + 1)
        + k * math.log(p) + (n - k) * math.log1p(-p)
    )
    return math.exp(logpmf)


def binom_tail_ge(n: int, k: int, p: float) -> float:
    """P[Bin(n, p) >= k], exact sum."""
    return sum(binom_pmf(n, j, p) for j in range(max(k, 0), n + 1))


def binom_tail_le(n: int, k: int, p: float) -> float:
    """P[Bin(n, p) <= k], exact sum."""
    return sum(binom_pmf(n, j, p) for j in range(0, min(k, n) + 1))


def binom_tail_ge_exact(n: int, k: int, p: Fraction) -> Fraction:
    """Exact rational tail, for small n and rational p."""
    total = Fraction(0)
    for j in range(max(k, 0), n + 1):
        total += math.comb(n, j) * p**j * (1 - p) ** (n - j)
    return total


def hoeffding_le(n: int, k: int, p: float) -> float:
    """Hoeffding bound on P[Bin(n, p) <= k] for k/n < p."""
    t = p - k / n
    if t <= 0:
        return 1.0
    return math.exp(-2.0 * n * t * t)


def wilson_interval(successes: int, trials: int, z: float = 1.96) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if trials == 0:
        return (0.0, 1.0)
    phat = successes / trials
    denom = 1.0 + z * z / trials
    center = (phat + z * z / (2 * trials)) / denom
    spread = z * math.sqrt(phat * (1 - phat) / trials + z * z / (4 * trials**2)) / denom
    return (max(0.0, center - spread), min(1.0, center + spread))


def three_sigma(p: float, trials: int) -> float:
    return 3.0 * math.sqrt(max(p * (1.0 - p), 1e-12) / trials)


# -- threshold geometry of the collision problems --------------------------------


def collision_required_hits(lam: int, c) -> int:
    """Smallest |I| passing the strict |I|/lambda > 3c/4 check."""
    if isinstance(c, Fraction):
        threshold = Fraction(3, 4) * c * lam
        k = int(threshold) + 1  # floor + 1 realizes the strict inequality
    else:
        k = math.floor(0.75 * float(c) * lam) + 1
    return max(k, 1)


def h_collision_required_hits(lam: int) -> int:
    """Smallest |I| passing the non-strict |I| >= 3 C lambda / 4 check."""
    x = 0.75 * H_COLLISION_C * lam
    return max(int(math.ceil(x - 1e-12)), 1)


# -- acceptance floors and ceilings ----------------------------------------------


def honest_collision_model_rate(lam: int, c) -> float:
    """Model acceptance probability of the honest collision solver.

    Repetitions with a two-preimage image always satisfy the interference
    equation, so acceptance = (enough two-preimage hits) and (all sampled
    images distinct); the latter is folded in as an exact union bound.
    """
    a, b = 1 << (lam + 1), 1 << lam
    q2 = two_preimage_rate(a, b)
    k_star = collision_required_hits(lam, c)
    return max(
        0.0,
        binom_tail_ge(lam, k_star, q2) - duplicate_prob_bound(lam, a, b),
    )


def honest_collision_chernoff_floor(lam: int, c, trials: int) -> float:
    """Pre-computed Chernoff-style lower bound on the honest acceptance rate
    over `trials` runs (includes sampling slack)."""
    a, b = 1 << (lam + 1), 1 << lam
    q2 = two_preimage_rate(a, b)
    k_star = collision_required_hits(lam, c)
    floor = 1.0 - hoeffding_le(lam, k_star - 1, q2) - duplicate_prob_bound(lam, a, b)
    floor = max(0.0, floor)
    return max(0.0, floor - three_sigma(floor, trials))


def random_guess_accept_rate(lam: int, c) -> float:
    """Exact model acceptance probability of uniformly random triples.

    A random distinct image is two-preimage with the fixed-point rate; on
    those indices a uniform (m, r) satisfies the equation with probability
    exactly 1/2, so the win condition is a conditional binomial tail.
    """
    a, b = 1 << (lam + 1), 1 << lam
    r2 = fixed_two_preimage_rate(a, b)
    k_star = collision_required_hits(lam, c)
    total = 0.0
    for j in range(k_star, lam + 1):
        wins_needed = math.floor(3 * j / 4) + 1  # strict > 3/4
        total += binom_pmf(lam, j, r2) * binom_tail_ge(j, wins_needed, 0.5)
    return total


def honest_h_collision_model_rate(lam: int) -> float:
    """Model acceptance of the honest adaptive solver for the chained
    two-to-one problem (wins are automatic on two-to-one indices)."""
    a, b = 1 << (lam + 1), 1 << lam
    q = two_to_one_rate(lam)
    k_star = h_collision_required_hits(lam)
    return max(
        0.0, binom_tail_ge(lam, k_star, q) - duplicate_prob_bound(lam, a, b)
    )


def honest_h_collision_floor(lam: int, trials: int) -> float:
    a, b = 1 << (lam + 1), 1 << lam
    q = two_to_one_rate(lam)
    k_star = h_collision_required_hits(lam)
    floor = 1.0 - hoeffding_le(lam, k_star - 1, q) - duplicate_prob_bound(lam, a, b)
    floor = max(0.0, floor)
    return max(0.0, floor - three_sigma(floor, trials))


def serial_chernoff_floor(lam: int, d: int, c, trials: int) -> float:
    """Product of per-step Chernoff floors for a d+1-step serial chain."""
    a, b = 1 << (lam + 1), 1 << lam
    q2 = two_preimage_rate(a, b)
    k_star = collision_required_hits(lam, c)
    per_step = max(
        0.0,
        1.0 - hoeffding_le(lam, k_star - 1, q2) - duplicate_prob_bound(lam, a, b),
    )
    floor = per_step ** (d + 1)
    return max(0.0, floor - three_sigma(floor, trials))
