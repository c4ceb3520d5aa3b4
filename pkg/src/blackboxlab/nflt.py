"""Exhaustive search-algorithm comparison on finite function classes.

A function on a finite domain of size m with r possible values is a vector
of value indices. Enumerating the full class (all r^m functions) and running
deterministic non-revisiting query policies over it gives exact, integer
trace statistics: on the full class every policy produces identical
statistics, while restricted classes (here: the nondecreasing functions)
separate policies that exploit the structure from those that do not.

Stochastic search maps into this setting by fixing its seed, which turns it
into a deterministic policy (see SeededShufflePolicy).
"""

from __future__ import annotations

import hashlib
import json
import time
from collections import Counter
from dataclasses import dataclass, field
from itertools import combinations_with_replacement, product
from math import comb

from .core import RngStream

__all__ = [
    "ClassTooLarge",
    "RevisitDetected",
    "DEFAULT_CAP",
    "FiniteProblem",
    "SearchPolicy",
    "LexicographicPolicy",
    "ReversePolicy",
    "MiddleOutPolicy",
    "SeededShufflePolicy",
    "HillClimbPolicy",
    "built_in_policies",
    "make_policy",
    "TraceHistogram",
    "enumerate_functions",
    "enumerate_monotone",
    "run_trace",
    "performance_histogram",
    "verify_nflt",
    "compare_on_class",
    "VerificationReport",
    "SuccessTable",
]

DEFAULT_CAP = 10**7
HISTOGRAM_REPORT_LIMIT = 4096


class ClassTooLarge(ValueError):
    """Requested enumeration exceeds the configured cap."""


class RevisitDetected(RuntimeError):
    """A policy asked for an already-queried index (policy bug)."""


@dataclass(frozen=True)
class FiniteProblem:
    """A function {0..m-1} -> {0..r-1} stored as its value vector."""

    m: int
    r: int
    values: tuple[int, ...]

    def __post_init__(self):
        if self.m < 1 or self.r < 1:
            raise ValueError("m and r must be positive")
        if len(self.values) != self.m:
            raise ValueError("values must have length m")
        if any(not 0 <= v < self.r for v in self.values):
            raise ValueError("values must lie in [0, r-1]")

    def __call__(self, index: int) -> int:
        return self.values[index]


class SearchPolicy:
    """Deterministic map from the observed (x-index, y-index) history to the
    next x-index; must never revisit (the runner enforces it)."""

    name = "policy"

    def next_index(self, history, m: int) -> int:
        raise NotImplementedError


class LexicographicPolicy(SearchPolicy):
    name = "lexicographic"

    def next_index(self, history, m):
        return len(history)


class ReversePolicy(SearchPolicy):
    """Queries from the top index down ("top-first" on ordered domains)."""

    name = "reverse"

    def next_index(self, history, m):
        return m - 1 - len(history)


class MiddleOutPolicy(SearchPolicy):
    """m//2 first, then alternating outward (+1, -1, +2, -2, ...)."""

    name = "middle-out"

    def __init__(self):
        self._orders: dict[int, tuple[int, ...]] = {}

    def _order(self, m: int) -> tuple[int, ...]:
        if m not in self._orders:
            mid = m // 2
            order = [mid]
            for offset in range(1, m):
                if mid + offset < m:
                    order.append(mid + offset)
                if mid - offset >= 0:
                    order.append(mid - offset)
            self._orders[m] = tuple(order)
        return self._orders[m]

    def next_index(self, history, m):
        return self._order(m)[len(history)]


class SeededShufflePolicy(SearchPolicy):
    """Fixed pseudo-random query order: a stochastic searcher with its seed
    frozen, which is exactly what makes it admissible here."""

    def __init__(self, seed: int = 0):
        self.seed = int(seed)
        self.name = f"shuffle:{self.seed}"
        self._orders: dict[int, tuple[int, ...]] = {}

    def _order(self, m: int) -> tuple[int, ...]:
        if m not in self._orders:
            perm = RngStream(self.seed).generator.permutation(m)
            self._orders[m] = tuple(int(i) for i in perm)
        return self._orders[m]

    def next_index(self, history, m):
        return self._order(m)[len(history)]


class HillClimbPolicy(SearchPolicy):
    """Greedy neighbor walk on the index line: query the unvisited index
    nearest to the best-observed one (ties: earliest observation, then the
    lower index). Starts at 0."""

    name = "hill-climb"

    def next_index(self, history, m):
        if not history:
            return 0
        visited = {x for x, _ in history}
        best_x, best_y = history[0]
        for x, y in history[1:]:
            if y > best_y:
                best_x, best_y = x, y
        for distance in range(1, m):
            for candidate in (best_x - distance, best_x + distance):
                if 0 <= candidate < m and candidate not in visited:
                    return candidate
        raise AssertionError("no unvisited index left")


def built_in_policies() -> list[SearchPolicy]:
    return [LexicographicPolicy(), ReversePolicy(), SeededShufflePolicy(0)]


def make_policy(spec: str) -> SearchPolicy:
    """Policy from a CLI name: lexicographic | reverse | middle-out |
    hill-climb | shuffle:SEED (plus aliases bottom-first, top-first)."""
    spec = spec.strip()
    if spec in ("lexicographic", "bottom-first"):
        return LexicographicPolicy()
    if spec in ("reverse", "top-first"):
        return ReversePolicy()
    if spec == "middle-out":
        return MiddleOutPolicy()
    if spec == "hill-climb":
        return HillClimbPolicy()
    if spec.startswith("shuffle:"):
        return SeededShufflePolicy(int(spec.split(":", 1)[1]))
    if spec == "shuffle":
        return SeededShufflePolicy(0)
    raise ValueError(f"unknown policy {spec!r}")


def enumerate_functions(m: int, r: int, cap: int = DEFAULT_CAP):
    """All r^m functions, lexicographic in the value vector."""
    size = r**m
    if size > cap:
        raise ClassTooLarge(f"|Y^X| = {r}^{m} = {size} exceeds cap {cap}")
    for values in product(range(r), repeat=m):
        yield FiniteProblem(m=m, r=r, values=values)


def enumerate_monotone(m: int, r: int, cap: int = DEFAULT_CAP):
    """All nondecreasing functions on the ordered domain; there are
    C(m+r-1, m) of them."""
    size = comb(m + r - 1, m)
    if size > cap:
        raise ClassTooLarge(f"monotone class size {size} exceeds cap {cap}")
    for values in combinations_with_replacement(range(r), m):
        yield FiniteProblem(m=m, r=r, values=values)


def class_size(class_name: str, m: int, r: int) -> int:
    if class_name == "full":
        return r**m
    if class_name == "monotone":
        return comb(m + r - 1, m)
    raise ValueError(f"unknown function class {class_name!r}")


def enumerate_class(class_name: str, m: int, r: int, cap: int = DEFAULT_CAP):
    if class_name == "full":
        return enumerate_functions(m, r, cap)
    if class_name == "monotone":
        return enumerate_monotone(m, r, cap)
    raise ValueError(f"unknown function class {class_name!r}")


def run_trace(policy: SearchPolicy, problem: FiniteProblem, k: int) -> tuple[int, ...]:
    """The y values seen by a policy over k queries of one function."""
    if not 1 <= k <= problem.m:
        raise ValueError(f"k must lie in [1, m={problem.m}]")
    history: list[tuple[int, int]] = []
    visited: set[int] = set()
    for _ in range(k):
        x = policy.next_index(history, problem.m)
        if not 0 <= x < problem.m:
            raise RevisitDetected(
                f"policy {policy.name} proposed out-of-range index {x}"
            )
        if x in visited:
            raise RevisitDetected(f"policy {policy.name} revisited index {x}")
        visited.add(x)
        history.append((x, problem.values[x]))
    return tuple(y for _, y in history)


@dataclass
class TraceHistogram:
    """Counts of y-traces over a function class; totals equal class size."""

    k: int
    counts: Counter = field(default_factory=Counter)
    total: int = 0

    def add(self, trace: tuple[int, ...]):
        self.counts[trace] += 1
        self.total += 1

    def prefix(self, j: int) -> Counter:
        """Histogram of the first j trace entries."""
        out: Counter = Counter()
        for trace, count in self.counts.items():
            out[trace[:j]] += count
        return out

    def best_so_far(self, j: int) -> Counter:
        """Histogram of max(trace[:j]): the best value found by step j."""
        out: Counter = Counter()
        for trace, count in self.counts.items():
            out[max(trace[:j])] += count
        return out


def performance_histogram(policy, m, r, k, functions) -> TraceHistogram:
    """Trace histogram of one policy over a stream of functions."""
    histogram = TraceHistogram(k=k)
    for problem in functions:
        histogram.add(run_trace(policy, problem, k))
    if histogram.total == 0:
        raise ValueError("function class is empty")
    return histogram


@dataclass
class SuccessTable:
    """Per policy and per step: on how many class members the function's own
    maximum value has been observed within the first j queries."""

    policy_names: list[str]
    class_size: int
    counts: dict[str, list[int]]

    def fraction(self, policy_name: str, step: int) -> float:
        return self.counts[policy_name][step - 1] / self.class_size


def compare_on_class(policies, functions, m, r, k) -> SuccessTable:
    """Single pass over the class, scoring every policy on every function."""
    names = [p.name for p in policies]
    if len(set(names)) != len(names):
        raise ValueError("policy names must be unique")
    counts = {name: [0] * k for name in names}
    size = 0
    for problem in functions:
        size += 1
        target = max(problem.values)
        for policy in policies:
            trace = run_trace(policy, problem, k)
            best = -1
            for j, y in enumerate(trace):
                if y > best:
                    best = y
                if best == target:
                    for jj in range(j, k):
                        counts[policy.name][jj] += 1
                    break
    if size == 0:
        raise ValueError("function class is empty")
    return SuccessTable(policy_names=names, class_size=size, counts=counts)


def _histogram_digest(counter: Counter) -> str:
    canonical = json.dumps(
        sorted((",".join(map(str, key)) if isinstance(key, tuple) else str(key), count)
               for key, count in counter.items())
    )
    return hashlib.sha256(canonical.encode()).hexdigest()[:16]


@dataclass
class VerificationReport:
    m: int
    r: int
    k: int
    class_name: str
    policy_names: list[str]
    class_size: int
    equal: bool
    first_difference: dict | None
    histograms: dict[str, TraceHistogram]
    success: SuccessTable
    wall_time_s: float

    @property
    def verdict(self) -> str:
        return "EQUAL" if self.equal else "UNEQUAL"

    def to_dict(self) -> dict:
        """JSON-ready report; explicit histograms only at desk scale, stable
        digests beyond that."""
        per_policy = {}
        for name, histogram in self.histograms.items():
            steps = {}
            for j in range(1, self.k + 1):
                prefix = histogram.prefix(j)
                entry = {
                    "distinct_traces": len(prefix),
                    "digest": _histogram_digest(prefix),
                    "best_so_far": {
                        str(value): count for value, count in sorted(histogram.best_so_far(j).items())
                    },
                    "success_count": self.success.counts[name][j - 1],
                }
                if len(prefix) <= HISTOGRAM_REPORT_LIMIT:
                    entry["traces"] = {
                        ",".join(map(str, key)): count for key, count in sorted(prefix.items())
                    }
                steps[str(j)] = entry
            per_policy[name] = steps
        return {
            "class": {"name": self.class_name, "m": self.m, "r": self.r, "size": self.class_size},
            "k": self.k,
            "policies": self.policy_names,
            "verdict": self.verdict,
            "first_difference": self.first_difference,
            "per_policy": per_policy,
            "wall_time_s": self.wall_time_s,
        }


def verify_nflt(
    policies, m: int, r: int, k: int, cap: int = DEFAULT_CAP, class_name: str = "full"
) -> VerificationReport:
    """Exact comparison of trace statistics over a whole function class.

    The verdict is EQUAL iff the y-trace histograms of all policies agree
    exactly (integer equality) at every step 1..k; the derived best-so-far
    and success statistics are reported alongside and checked too (on the
    full class they must follow suit, on restricted classes they are the
    interesting part).
    """
    if len(policies) < 2:
        raise ValueError("need at least two policies to compare")
    names = [p.name for p in policies]
    if len(set(names)) != len(names):
        raise ValueError("policy names must be unique")
    started = time.perf_counter()

    histograms = {p.name: TraceHistogram(k=k) for p in policies}
    counts = {name: [0] * k for name in names}
    size = 0
    for problem in enumerate_class(class_name, m, r, cap):
        size += 1
        target = max(problem.values)
        for policy in policies:
            trace = run_trace(policy, problem, k)
            histograms[policy.name].add(trace)
            best = -1
            for j, y in enumerate(trace):
                if y > best:
                    best = y
                if best == target:
                    for jj in range(j, k):
                        counts[policy.name][jj] += 1
                    break

    success = SuccessTable(policy_names=names, class_size=size, counts=counts)
    reference = policies[0].name
    equal, first_difference = True, None
    for j in range(1, k + 1):
        ref_prefix = histograms[reference].prefix(j)
        ref_best = histograms[reference].best_so_far(j)
        for name in names[1:]:
            if histograms[name].prefix(j) != ref_prefix:
                equal, first_difference = False, {
                    "step": j,
                    "statistic": "trace-histogram",
                    "policies": [reference, name],
                }
                break
            if histograms[name].best_so_far(j) != ref_best:
                equal, first_difference = False, {
                    "step": j,
                    "statistic": "best-so-far",
                    "policies": [reference, name],
                }
                break
            if counts[name][j - 1] != counts[reference][j - 1]:
                equal, first_difference = False, {
                    "step": j,
                    "statistic": "success-count",
                    "policies": [reference, name],
                    "counts": [counts[reference][j - 1], counts[name][j - 1]],
                    "class_size": size,
                }
                break
        if not equal:
            break

    return VerificationReport(
        m=m,
        r=r,
        k=k,
        class_name=class_name,
        policy_names=names,
        class_size=size,
        equal=equal,
        first_difference=first_difference,
        histograms=histograms,
        success=success,
        wall_time_s=time.perf_counter() - started,
    )
