"""
Information leaked to a database by segmentation.

Picking Pr of P subpackets uniformly, a database learns how many of them
fell into each segment: the ordered count profile in Case1, and only the
multiset of counts in Case2 where segments are also permuted. The
probability of an ordered profile (k_1, ..., k_B) is the multivariate
hypergeometric prod_i C(P/B, k_i) / C(P, Pr).
"""
from dataclasses import dataclass
from typing import Dict, Iterator, List, Optional, Sequence, Tuple, Union

import mpmath
from sympy import Rational, binomial

from src.analytics.costs import (
    AnalyticsError,
    index_symbols,
    reading_cost,
    storage_counts,
    writing_cost,
)
from src.config.config import CONFIG
from src.model_domain.model import Rate, SchemeCase, as_rate
from src.utils.logger import get_logger

logger = get_logger(__name__)

Profile = Tuple[int, ...]


@dataclass(frozen=True)
class LeakageDistribution:
    support: Tuple[Profile, ...]
    probs: Tuple[Rational, ...]
    entropy_bits: float

    def as_dict(self) -> Dict[Profile, Rational]:
        return dict(zip(self.support, self.probs))


def _check(P: int, B: int, Pr: int) -> None:
    if B < 1 or P % B != 0:
        raise AnalyticsError(f"B must divide P (P={P}, B={B})")
    if not 0 <= Pr <= P:
        raise AnalyticsError(f"Pr must lie in 0..P (P={P}, Pr={Pr})")


def _profiles(B: int, cap: int, total: int) -> Iterator[Profile]:
    """Ordered B-tuples in 0..cap summing to total, lexicographically."""
    if B == 1:
        if total <= cap:
            yield (total,)
        return
    for first in range(max(0, total - cap * (B - 1)), min(cap, total) + 1):
        for rest in _profiles(B - 1, cap, total - first):
            yield (first,) + rest


def entropy(probs: Sequence[Rational], base: Optional[int] = None) -> float:
    """Shannon entropy of exact probabilities, in bits unless another base is given."""
    base = base or CONFIG["entropy_base"]
    with mpmath.workdps(50):
        total = mpmath.mpf(0)
        for p in probs:
            if p:
                value = mpmath.mpf(p.p) / p.q
                total += value * mpmath.log(1 / value, base)
        return float(total)


def leakage_case1(P: int, B: int, Pr: int, base: Optional[int] = None) -> LeakageDistribution:
    _check(P, B, Pr)
    size = P // B
    whole = binomial(P, Pr)
    support, probs = [], []
    for profile in _profiles(B, size, Pr):
        weight = 1
        for k in profile:
            weight *= binomial(size, k)
        support.append(profile)
        probs.append(Rational(weight, whole))

    if sum(probs) != 1:
        raise AnalyticsError(f"Profile probabilities do not sum to 1 for P={P}, B={B}, Pr={Pr}")
    return LeakageDistribution(tuple(support), tuple(probs), entropy(probs, base))


def leakage_case2(P: int, B: int, Pr: int, base: Optional[int] = None) -> LeakageDistribution:
    ordered = leakage_case1(P, B, Pr, base)
    merged: Dict[Profile, Rational] = {}
    for profile, p in zip(ordered.support, ordered.probs):
        key = tuple(sorted(profile))
        merged[key] = merged.get(key, Rational(0)) + p

    support = tuple(sorted(merged))
    probs = tuple(merged[key] for key in support)
    return LeakageDistribution(support, probs, entropy(probs, base))


def leakage_for_case(case: Union[SchemeCase, str, int], P: int, B: int, Pr: int) -> LeakageDistribution:
    if SchemeCase.parse(case) is SchemeCase.CASE1:
        return leakage_case1(P, B, Pr)
    return leakage_case2(P, B, Pr)


def leakage_sweep(P: int, Pr: int, Bs: Sequence[int]) -> List[Dict[str, object]]:
    rows = []
    for B in Bs:
        rows.append({
            "P": P,
            "Pr": Pr,
            "B": B,
            "case1_bits": leakage_case1(P, B, Pr).entropy_bits,
            "case2_bits": leakage_case2(P, B, Pr).entropy_bits,
        })
        logger.debug(f"Leakage at B={B}: {rows[-1]['case1_bits']:.6f} / {rows[-1]['case2_bits']:.6f} bits")
    return rows


def _sparse_count(P: int, r: Rate) -> int:
    count = P * as_rate(r)
    if count.denominator != 1:
        raise AnalyticsError(f"P*r must be an integer (P={P}, r={as_rate(r)})")
    return int(count)


def cost_table(
    P: int,
    N: int,
    r: Rate,
    r_prime: Rate,
    q: int,
    B: int = 1,
    cases: Sequence[Union[SchemeCase, str, int]] = (SchemeCase.CASE1, SchemeCase.CASE2),
) -> List[Dict[str, object]]:
    """One row per case with the reading, writing and storage costs and the leakage."""
    Pr = _sparse_count(P, r)
    rows = []
    for case in cases:
        case = SchemeCase.parse(case)
        ell = case.subpacketization(N)
        if ell < 1 or N != 2 * ell + case.database_overhead:
            raise AnalyticsError(f"N={N} is not a valid database count for {case.value}")
        rows.append({
            "case": case.number,
            "reading_cost": reading_cost(case, N, r_prime, P, q),
            "writing_cost": writing_cost(case, N, r, P, q),
            "index_symbols": index_symbols(P, q),
            "storage_symbols": storage_counts(P, B, ell, case).total_symbols,
            "leakage_bits": leakage_for_case(case, P, B, Pr).entropy_bits,
        })
    return rows


def tradeoff_table(P: int, Pr: int, Bs: Sequence[int], ell: int = 1) -> List[Dict[str, object]]:
    """Storage against leakage for every candidate number of segments."""
    rows = []
    for B in Bs:
        rows.append({
            "B": B,
            "case1_storage": storage_counts(P, B, ell, SchemeCase.CASE1).total_symbols,
            "case2_storage": storage_counts(P, B, ell, SchemeCase.CASE2).total_symbols,
            "case1_bits": leakage_case1(P, B, Pr).entropy_bits,
            "case2_bits": leakage_case2(P, B, Pr).entropy_bits,
        })
    return rows


def optimal_B(
    P: int,
    Pr: int,
    epsilon: float,
    case: Union[SchemeCase, str, int],
    candidate_Bs: Sequence[int],
    ell: int = 1,
) -> int:
    """
    The candidate B with the smallest per-database storage among those whose
    leakage stays strictly below epsilon. Ties go to the smaller B.

    Raises:
        AnalyticsError: if a candidate does not divide P or none is feasible.
    """
    case = SchemeCase.parse(case)
    feasible = []
    for B in candidate_Bs:
        if B < 1 or P % B != 0:
            raise AnalyticsError(f"Candidate B={B} does not divide P={P}")
        bits = leakage_for_case(case, P, B, Pr).entropy_bits
        if bits < epsilon:
            feasible.append((storage_counts(P, B, ell, case).total_symbols, B))
        else:
            logger.debug(f"B={B} rejected: leakage {bits:.6f} >= {epsilon}")

    if not feasible:
        logger.error(f"No candidate B in {list(candidate_Bs)} keeps leakage below {epsilon}")
        raise AnalyticsError(f"No candidate B keeps leakage below epsilon={epsilon}")
    return min(feasible)[1]
