"""Social-welfare-maximizing allocations.

The solver conditions on a *partition*: the number of buyers assigned to
each vendor tuple.  For a fixed partition the welfare-maximal assignment
is a min-cost max-flow on a small bipartite network, and the outer loop
enumerates every feasible partition.  A brute-force enumerator over whole
allocations serves as the independent oracle at desk scale.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Iterator, Mapping

from .flow import FlowNetwork, NetworkBuilder, min_cost_max_flow
from .model import (
    Allocation,
    Market,
    Money,
    VendorTuple,
    market_price_of_choice,
    triggered_tiers,
)

DEFAULT_PARTITION_CAP = 5_000_000
DEFAULT_ALLOCATION_CAP = 1_000_000


class BudgetExceeded(Exception):
    """The enumeration size exceeds the configured cap."""

    def __init__(self, needed: int, cap: int, what: str = "partitions") -> None:
        super().__init__(f"{needed} {what} exceed the configured cap of {cap}")
        self.needed = needed
        self.cap = cap


@dataclass(frozen=True, eq=False)
class Partition:
    """Buyer counts per vendor tuple; counts sum to the number of buyers."""

    counts: Mapping[VendorTuple, int]

    def count(self, choice: VendorTuple) -> int:
        return self.counts.get(choice, 0)


def partition_count(n_buyers: int, cells: int) -> int:
    """Number of ways to split ``n_buyers`` into ``cells`` ordered counts."""
    return math.comb(n_buyers + cells - 1, cells - 1)


def enumerate_partitions(n_buyers: int, cells: int) -> Iterator[tuple[int, ...]]:
    """All compositions of ``n_buyers`` into ``cells`` nonnegative parts.

    Yields each composition exactly once, first cell counting down from
    ``n_buyers`` (so ``(2, 0)`` precedes ``(1, 1)`` precedes ``(0, 2)``).
    """
    if n_buyers < 0 or cells < 1:
        raise ValueError("need n_buyers >= 0 and cells >= 1")
    counts = [n_buyers] + [0] * (cells - 1)
    while True:
        yield tuple(counts)
        # Move one unit from the rightmost nonempty non-final cell into the
        # cell after it, sweeping everything further right back onto it.
        j = -1
        for k in range(cells - 2, -1, -1):
            if counts[k] > 0:
                j = k
                break
        if j < 0:
            return
        carried = counts[cells - 1] + 1
        counts[j] -= 1
        counts[cells - 1] = 0
        counts[j + 1] = carried


def composition_at_index(n_buyers: int, cells: int, index: int) -> tuple[int, ...]:
    """The ``index``-th composition in ``enumerate_partitions`` order."""
    if not 0 <= index < partition_count(n_buyers, cells):
        raise IndexError(index)
    out: list[int] = []
    remaining = n_buyers
    for cell in range(cells - 1):
        tail = cells - cell - 1
        for head in range(remaining, -1, -1):
            block = math.comb(remaining - head + tail - 1, tail - 1)
            if index < block:
                out.append(head)
                remaining -= head
                break
            index -= block
    out.append(remaining)
    return tuple(out)


def _partition_of(market: Market, counts: tuple[int, ...]) -> Partition:
    return Partition(counts=dict(zip(market.vendor_tuples, counts)))


def assignment_network(market: Market, partition: Partition) -> FlowNetwork:
    """Bipartite network routing each buyer to a vendor-tuple slot.

    Source->buyer edges have unit capacity; buyer->tuple edges carry cost
    equal to the negated valuation; tuple->sink capacities are the
    partition's per-tuple counts.
    """
    builder = NetworkBuilder()
    source = builder.add_node()
    buyer_nodes = {b.id: builder.add_node() for b in market.buyers}
    tuple_nodes = {t: builder.add_node() for t in market.vendor_tuples}
    sink = builder.add_node()
    for buyer in market.buyers:
        builder.add_edge(source, buyer_nodes[buyer.id], 1, 0)
    for buyer in market.buyers:
        for choice in market.vendor_tuples:
            builder.add_edge(
                buyer_nodes[buyer.id],
                tuple_nodes[choice],
                1,
                -buyer.valuation(choice),
                tag=(buyer.id, choice),
            )
    for choice in market.vendor_tuples:
        builder.add_edge(tuple_nodes[choice], sink, partition.count(choice), 0)
    return builder.build(source, sink)


def _demand_of_partition(
    market: Market, partition: Partition
) -> dict[str, tuple[int, ...]]:
    demand: dict[str, list[int]] = {v.id: [0] * market.c for v in market.vendors}
    for choice, n in partition.counts.items():
        if n == 0:
            continue
        for k, vid in enumerate(choice):
            demand[vid][k] += n
    return {vid: tuple(d) for vid, d in demand.items()}


def total_price(market: Market, partition: Partition) -> Money:
    """Total buyer payments implied by the partition alone.

    Every assignment matching the counts produces the same demand vectors,
    hence the same triggered discounts and the same per-cell prices.
    """
    trig = triggered_tiers(market, _demand_of_partition(market, partition))
    total = 0
    for choice, n in partition.counts.items():
        if n:
            total += n * market_price_of_choice(market, choice, trig)
    return total


def best_allocation_for_partition(
    market: Market, partition: Partition
) -> tuple[Allocation, Money]:
    """Welfare-maximal allocation among those matching the partition."""
    flow = min_cost_max_flow(assignment_network(market, partition))
    n_buyers = len(market.buyers)
    if flow.value != n_buyers:
        raise RuntimeError(
            f"assignment flow routed {flow.value} of {n_buyers} buyers"
        )
    choice = {tag[0]: tag[1] for tag, f in flow.tagged() if f > 0}
    welfare = -flow.cost - total_price(market, partition)
    return Allocation(choice=choice), welfare


@dataclass(frozen=True, eq=False)
class SwmResult:
    allocation: Allocation
    social_welfare: Money
    partition: Partition
    partitions_total: int
    partitions_evaluated: int


class _PartitionSolver:
    """Per-market assignment solver reusing one network layout.

    Only the tuple->sink capacities change between partitions, so the node
    and edge layout (and therefore the deterministic augmentation order)
    is built once and matches ``assignment_network``.
    """

    def __init__(self, market: Market) -> None:
        self.market = market
        self.cells = market.vendor_tuples
        n = len(market.buyers)
        k = len(self.cells)
        self.n_buyers = n
        self.source = 0
        self.sink = 1 + n + k
        self.values = [
            [buyer.valuation(choice) for choice in self.cells]
            for buyer in market.buyers
        ]

    def solve(self, counts: tuple[int, ...]) -> tuple[dict, Money]:
        """Assignment and total valuation for one partition's counts."""
        market = self.market
        n, k = self.n_buyers, len(self.cells)
        builder = NetworkBuilder()
        for _ in range(2 + n + k):
            builder.add_node()
        for i in range(n):
            builder.add_edge(self.source, 1 + i, 1, 0)
        for i in range(n):
            row = self.values[i]
            for j in range(k):
                builder.add_edge(1 + i, 1 + n + j, 1, -row[j])
        for j in range(k):
            builder.add_edge(1 + n + j, self.sink, counts[j], 0)
        flow = min_cost_max_flow(builder.build(self.source, self.sink))
        if flow.value != n:
            raise RuntimeError(
                f"assignment flow routed {flow.value} of {n} buyers"
            )
        choice: dict = {}
        base = n  # buyer->tuple edges start after the n source edges
        for i in range(n):
            for j in range(k):
                if flow.edge_flows[base + i * k + j] > 0:
                    choice[market.buyers[i].id] = self.cells[j]
                    break
        return choice, -flow.cost


def solve_swm(
    market: Market,
    max_partitions: int = DEFAULT_PARTITION_CAP,
    jobs: int = 1,
    progress: Callable[[int, int], None] | None = None,
) -> SwmResult:
    """Exact welfare maximization by enumerating every feasible partition.

    Equal-welfare ties resolve to the lexicographically smallest partition;
    the per-partition assignment is deterministic, so results are
    reproducible run to run.
    """
    n = len(market.buyers)
    cells = len(market.vendor_tuples)
    total = partition_count(n, cells)
    if total > max_partitions:
        raise BudgetExceeded(total, max_partitions)

    if jobs > 1 and total > 1:
        best = _solve_parallel(market, total, jobs)
    else:
        solver = _PartitionSolver(market)
        best = None
        for i, counts in enumerate(enumerate_partitions(n, cells)):
            best = _consider(solver, counts, best)
            if progress is not None and (i + 1) % 1000 == 0:
                progress(i + 1, total)
    assert best is not None
    welfare, counts, choice = best
    partition = _partition_of(market, counts)
    return SwmResult(
        allocation=Allocation(choice=choice),
        social_welfare=welfare,
        partition=partition,
        partitions_total=total,
        partitions_evaluated=total,
    )


def _consider(solver, counts, best):
    choice, value = solver.solve(counts)
    welfare = value - total_price(solver.market, _partition_of(solver.market, counts))
    # Enumeration order is lexicographically descending, so replacing the
    # incumbent on equal welfare leaves the lexicographically smallest
    # partition as the winner.
    if best is None or welfare >= best[0]:
        return (welfare, counts, choice)
    return best


def _solve_slice(args) -> tuple:
    market, lo, hi = args
    n = len(market.buyers)
    cells = len(market.vendor_tuples)
    solver = _PartitionSolver(market)
    best = None
    current = list(composition_at_index(n, cells, lo))
    for _ in range(lo, hi):
        best = _consider(solver, tuple(current), best)
        j = -1
        for k in range(cells - 2, -1, -1):
            if current[k] > 0:
                j = k
                break
        if j < 0:
            break
        carried = current[cells - 1] + 1
        current[j] -= 1
        current[cells - 1] = 0
        current[j + 1] = carried
    return best


def _solve_parallel(market: Market, total: int, jobs: int):
    from concurrent.futures import ProcessPoolExecutor

    jobs = min(jobs, total)
    bounds = [total * i // jobs for i in range(jobs + 1)]
    slices = [
        (market, bounds[i], bounds[i + 1])
        for i in range(jobs)
        if bounds[i] < bounds[i + 1]
    ]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        results = list(pool.map(_solve_slice, slices))
    best = None
    # Merge in slice order: later slices hold lexicographically smaller
    # partitions, so >= keeps the same tie rule as the sequential path.
    for candidate in results:
        if candidate is None:
            continue
        if best is None or candidate[0] >= best[0]:
            best = candidate
    return best


def brute_force_swm(
    market: Market, max_allocations: int = DEFAULT_ALLOCATION_CAP
) -> tuple[Allocation, Money]:
    """Exact optimum by enumerating every allocation outright.

    Test oracle only: the count grows as (vendor count)^(c * buyers).
    """
    cells = market.vendor_tuples
    n = len(market.buyers)
    needed = len(cells) ** n
    if needed > max_allocations:
        raise BudgetExceeded(needed, max_allocations, what="allocations")

    values = [
        [buyer.valuation(choice) for choice in cells] for buyer in market.buyers
    ]
    price_cache: dict[tuple[int, ...], Money] = {}

    def price_of(assignment: tuple[int, ...]) -> Money:
        counts = [0] * len(cells)
        for j in assignment:
            counts[j] += 1
        key = tuple(counts)
        cached = price_cache.get(key)
        if cached is None:
            cached = total_price(market, _partition_of(market, key))
            price_cache[key] = cached
        return cached

    best_assignment: tuple[int, ...] | None = None
    best_welfare = 0
    for assignment in itertools.product(range(len(cells)), repeat=n):
        welfare = sum(values[i][j] for i, j in enumerate(assignment))
        welfare -= price_of(assignment)
        if best_assignment is None or welfare > best_welfare:
            best_assignment = assignment
            best_welfare = welfare
    assert best_assignment is not None
    choice = {
        market.buyers[i].id: cells[j] for i, j in enumerate(best_assignment)
    }
    return Allocation(choice=choice), best_welfare
