"""Independent certification of allocation/price pairs.

Every check re-derives surpluses, market prices and group structure from
the raw market and allocation instead of trusting solver intermediates, so
a certificate is meaningful for solutions produced elsewhere (or edited by
hand).  Failing checks always carry concrete witnesses with both sides of
the violated relation evaluated.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping

from .model import (
    Allocation,
    BuyerId,
    GroupPartition,
    Market,
    Money,
    all_surpluses,
    group_partition,
    triggered_vendors,
)
from .transfers import GroupTransfers, PriceVector, TransferMatrix

STANDARD_CHECKS = (
    "stable",
    "rational_prices",
    "fair",
    "p_consistent",
    "group_condition",
    "budget_balance",
)


@dataclass(frozen=True)
class CheckResult:
    passed: bool
    witnesses: tuple[str, ...] = ()


@dataclass(frozen=True, eq=False)
class CertificateReport:
    checks: Mapping[str, CheckResult]

    @property
    def all_passed(self) -> bool:
        return all(r.passed for r in self.checks.values())

    def to_jsonable(self) -> dict:
        return {
            "all_passed": self.all_passed,
            "checks": {
                name: {"passed": r.passed, "witnesses": list(r.witnesses)}
                for name, r in self.checks.items()
            },
        }


def _fail(witnesses: list[str]) -> CheckResult:
    return CheckResult(passed=not witnesses, witnesses=tuple(witnesses))


def check_stable(
    market: Market, alloc: Allocation, prices: PriceVector
) -> CheckResult:
    """No buyer can profit by walking away to base prices: for everyone the
    price increase stays within the surplus."""
    sigma = all_surpluses(market, alloc)
    witnesses = []
    for buyer in market.buyers:
        delta = prices.entries[buyer.id].delta
        if delta > sigma[buyer.id]:
            witnesses.append(
                f"buyer {buyer.id}: price delta {delta} exceeds surplus "
                f"{sigma[buyer.id]}"
            )
    return _fail(witnesses)


def check_rational_prices(
    market: Market, alloc: Allocation, prices: PriceVector
) -> CheckResult:
    """Premiums only from positive-surplus discounted bundle buyers, and
    only where somebody needing a subsidy buys from the same vendor."""
    sigma = all_surpluses(market, alloc)
    discount_vendors = triggered_vendors(market, alloc)
    witnesses = []
    for buyer in market.buyers:
        delta = prices.entries[buyer.id].delta
        if delta <= 0:
            continue
        who = f"buyer {buyer.id}: pays premium {delta}"
        if sigma[buyer.id] <= 0:
            witnesses.append(f"{who} with surplus {sigma[buyer.id]} <= 0")
            continue
        choice = alloc.choice[buyer.id]
        vendor = choice[0]
        if any(v != vendor for v in choice) or vendor not in discount_vendors:
            witnesses.append(f"{who} without a discounted bundle ({choice})")
            continue
        beneficiaries = [
            other.id
            for other in market.buyers
            if sigma[other.id] < 0 and vendor in alloc.choice[other.id]
        ]
        if not beneficiaries:
            witnesses.append(
                f"{who} but no negative-surplus buyer purchases from {vendor}"
            )
    return _fail(witnesses)


def check_fair(
    market: Market, alloc: Allocation, prices: PriceVector
) -> CheckResult:
    """Same-choice positive-surplus buyers pay premiums proportional to
    surplus (checked by cross-multiplication, never division)."""
    sigma = all_surpluses(market, alloc)
    witnesses = []
    eligible = [
        b.id for b in market.buyers if sigma[b.id] > 0
    ]
    for i, b in enumerate(eligible):
        for other in eligible[i + 1 :]:
            if alloc.choice[b] != alloc.choice[other]:
                continue
            lhs = prices.entries[b].delta * sigma[other]
            rhs = prices.entries[other].delta * sigma[b]
            if lhs != rhs:
                witnesses.append(
                    f"buyers {b},{other}: {prices.entries[b].delta}*"
                    f"{sigma[other]} != {prices.entries[other].delta}*{sigma[b]}"
                )
    return _fail(witnesses)


def check_group_condition(gp: GroupPartition, gt: GroupTransfers) -> CheckResult:
    """Budget per vendor, exact coverage per group, no cross transfers."""
    witnesses = []
    budget_use: dict[str, Money] = {}
    for (s, x), amount in gt.entries.items():
        if s in x:
            budget_use[s] = budget_use.get(s, 0) + amount
        elif amount > 0:
            witnesses.append(
                f"cross transfer: vendor {s} pays {amount} to group "
                f"{{{','.join(x)}}} it does not belong to"
            )
    for s, used in sorted(budget_use.items()):
        available = gp.positive_totals.get(s, 0)
        if used > available:
            witnesses.append(
                f"vendor {s}: transfers {used} exceed group surplus {available}"
            )
    groups = set(gp.negative_totals) | {x for (_, x) in gt.entries}
    for x in sorted(groups):
        needed = gp.negative_totals.get(x, 0)
        got = sum(a for (s, g), a in gt.entries.items() if g == x and s in g)
        if got != needed:
            witnesses.append(
                f"group {{{','.join(x)}}}: receives {got}, needs exactly {needed}"
            )
    return _fail(witnesses)


def check_p_consistent(prices: PriceVector, matrix: TransferMatrix) -> CheckResult:
    """Each buyer's price delta equals her net transfer outflow."""
    flows: dict[BuyerId, Fraction] = {b: Fraction(0) for b in prices.entries}
    witnesses = []
    for (payer, payee), amount in matrix.entries.items():
        for b in (payer, payee):
            if b not in flows:
                witnesses.append(f"transfer references unknown buyer {b}")
                return _fail(witnesses)
        flows[payer] += amount
        flows[payee] -= amount
    for b in sorted(prices.entries):
        delta = prices.entries[b].delta
        if delta != flows[b]:
            witnesses.append(
                f"buyer {b}: price delta {delta} != net transfer {flows[b]}"
            )
    return _fail(witnesses)


def check_budget_balance(prices: PriceVector) -> CheckResult:
    total = sum((e.delta for e in prices.entries.values()), Fraction(0))
    if total != 0:
        return _fail([f"price deltas sum to {total}, expected 0"])
    return _fail([])


def check_equivalent(gt: GroupTransfers, other: GroupTransfers) -> CheckResult:
    """Same per-vendor outgoing totals and per-group incoming totals."""
    witnesses = []
    a_out, b_out = gt.outgoing_totals(), other.outgoing_totals()
    for s in sorted(set(a_out) | set(b_out)):
        if a_out.get(s, 0) != b_out.get(s, 0):
            witnesses.append(
                f"vendor {s}: outgoing {a_out.get(s, 0)} != {b_out.get(s, 0)}"
            )
    a_in, b_in = gt.incoming_totals(), other.incoming_totals()
    for x in sorted(set(a_in) | set(b_in)):
        if a_in.get(x, 0) != b_in.get(x, 0):
            witnesses.append(
                f"group {{{','.join(x)}}}: incoming {a_in.get(x, 0)} != "
                f"{b_in.get(x, 0)}"
            )
    return _fail(witnesses)


def surplus_totals(market: Market, alloc: Allocation) -> tuple[Money, Money]:
    """(total surplus available, total subsidy needed) over all buyers."""
    sigma = all_surpluses(market, alloc)
    available = sum(v for v in sigma.values() if v > 0)
    needed = sum(-v for v in sigma.values() if v < 0)
    return available, needed


def certify(
    market: Market,
    alloc: Allocation,
    prices: PriceVector,
    gt: GroupTransfers,
    matrix: TransferMatrix,
    gp: GroupPartition | None = None,
) -> CertificateReport:
    """Run the full standard check set on one solution."""
    if gp is None:
        gp = group_partition(market, alloc)
    return CertificateReport(
        checks={
            "stable": check_stable(market, alloc, prices),
            "rational_prices": check_rational_prices(market, alloc, prices),
            "fair": check_fair(market, alloc, prices),
            "p_consistent": check_p_consistent(prices, matrix),
            "group_condition": check_group_condition(gp, gt),
            "budget_balance": check_budget_balance(prices),
        }
    )
