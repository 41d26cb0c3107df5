"""Acceptance suite: one test per release criterion, exact tolerances.

Run with ``pytest tests/test_acceptance.py -v -s`` to see one PASS line per
criterion.  Everything asserts exact integer/rational equality; the only
tolerances are the stated wall-clock budgets.
"""

import json
import math
import random
import time
from fractions import Fraction

import pytest

from gbb.cli import main
from gbb.flow import max_flow, min_cost_max_flow
from gbb.generate import generate_instance
from gbb.model import (
    Allocation,
    Buyer,
    DiscountTier,
    Market,
    Vendor,
    group_partition,
)
from gbb.swm import brute_force_swm, enumerate_partitions, partition_count, solve_swm
from gbb.transfers import (
    GroupTransfers,
    cross_transfer_graph,
    eliminate_cycles,
    fair_buyer_transfers,
    greedy_match,
    group_transfer_network,
    prices_from_transfers,
    solve_group_transfers,
    transfers_from_price_deltas,
)
from gbb.verify import certify, check_equivalent, check_fair, surplus_totals

from tests.test_flow import (
    min_cut_capacity,
    random_dag_network,
    random_integral_max_flow,
)
from tests.test_transfers import synthetic_partition


def report(criterion: int, text: str) -> None:
    print(f"\nACCEPTANCE C{criterion}: PASS ({text})")


# --- criterion 1: fixture end-to-end through the CLI ----------------------


def test_c1_fixture_end_to_end(fix_e1_path, fix_e2_path, tmp_path):
    out1 = tmp_path / "e1.json"
    started = time.perf_counter()
    assert main(["solve", fix_e1_path, "--out", str(out1)]) == 0
    elapsed1 = time.perf_counter() - started
    doc1 = json.loads(out1.read_text())
    assert doc1["social_welfare"] == 6
    assert doc1["buyers"]["b1"]["final_price"] == "6"
    assert doc1["buyers"]["b2"]["final_price"] == "4"
    assert doc1["group_transfers"] == [
        {"vendor": "s1", "group": ["s1"], "amount": 1}
    ]
    assert doc1["certificate"]["all_passed"] is True
    assert elapsed1 < 1.0

    out2 = tmp_path / "e2.json"
    started = time.perf_counter()
    assert main(["solve", fix_e2_path, "--out", str(out2)]) == 0
    elapsed2 = time.perf_counter() - started
    doc2 = json.loads(out2.read_text())
    assert doc2["social_welfare"] == 9
    assert {b: e["final_price"] for b, e in doc2["buyers"].items()} == {
        "b1": "5",
        "b2": "5",
        "b3": "5",
    }
    assert doc2["group_transfers"] == [
        {"vendor": "s1", "group": ["s1", "s2"], "amount": 2}
    ]
    assert doc2["transfers"] == [
        {"payer": "b1", "payee": "b3", "amount": "1"},
        {"payer": "b2", "payee": "b3", "amount": "1"},
    ]
    assert doc2["certificate"]["all_passed"] is True
    assert elapsed2 < 1.0
    report(1, f"fixtures solved and certified in {elapsed1:.3f}s / {elapsed2:.3f}s")


# --- criteria 2-5 share one 200-instance corpus ----------------------------


@pytest.fixture(scope="module")
def corpus():
    results = []
    started = time.perf_counter()
    for i in range(200):
        market = generate_instance(
            buyers=(i % 4) + 1,
            vendors=(i % 2) + 1,
            items=((i // 2) % 2) + 1,
            seed=31_000 + i,
            max_value=20,
        )
        solved = solve_swm(market)
        _, oracle_welfare = brute_force_swm(market)
        gp = group_partition(market, solved.allocation)
        gt = solve_group_transfers(market, solved.allocation)
        matrix = fair_buyer_transfers(market, solved.allocation, gp, gt)
        prices = prices_from_transfers(market, solved.allocation, matrix)
        results.append(
            {
                "market": market,
                "solved": solved,
                "oracle_welfare": oracle_welfare,
                "gp": gp,
                "gt": gt,
                "matrix": matrix,
                "prices": prices,
            }
        )
    return results, time.perf_counter() - started


def test_c2_oracle_equivalence(corpus):
    results, elapsed = corpus
    assert len(results) == 200
    for item in results:
        assert item["solved"].social_welfare == item["oracle_welfare"]
    assert elapsed < 60.0
    report(2, f"200 instances, solver == oracle everywhere, {elapsed:.1f}s total")


def test_c3_transfer_flow_saturates(corpus):
    results, _ = corpus
    discounted = 0
    for item in results:
        gp = item["gp"]
        net = group_transfer_network(item["market"], item["solved"].allocation, gp)
        needed = sum(gp.negative_totals.values())
        assert max_flow(net).value == needed
        if needed > 0:
            discounted += 1
    report(3, f"all 200 transfer flows saturate ({discounted} needed subsidy)")


def test_c4_surplus_covers_subsidy(corpus):
    results, _ = corpus
    for item in results:
        available, needed = surplus_totals(
            item["market"], item["solved"].allocation
        )
        assert available >= needed
    report(4, "positive surplus covers needed subsidy on every optimum")


def test_c5_fairness_identity(corpus):
    results, _ = corpus
    payers = 0
    for item in results:
        gp, gt, matrix = item["gp"], item["gt"], item["matrix"]
        outgoing = gt.outgoing_totals()
        for s, members in gp.positive_groups.items():
            share = Fraction(outgoing.get(s, 0), gp.positive_totals[s])
            for b in members:
                assert matrix.paid_by(b) == gp.surplus[b] * share
                payers += 1
        assert check_fair(
            item["market"], item["solved"].allocation, item["prices"]
        ).passed
    report(5, f"exact proportional payments for {payers} payers")


# --- criterion 6: price-delta round trip -----------------------------------


def test_c6_price_delta_round_trip():
    rng = random.Random(606)
    for _ in range(500):
        n = rng.randint(2, 10)
        deltas = {
            f"b{i}": Fraction(rng.randint(-60, 60), rng.randint(1, 12))
            for i in range(n - 1)
        }
        deltas[f"b{n - 1}"] = -sum(deltas.values())
        matrix = transfers_from_price_deltas(deltas)
        for buyer, delta in deltas.items():
            assert matrix.net_outflow(buyer) == delta
        for (payer, payee), amount in matrix.entries.items():
            assert amount > 0
            assert deltas[payer] > 0
            assert deltas[payee] < 0
    report(6, "500 zero-sum delta vectors reconstruct exactly, signs separated")


# --- criterion 7: cycle elimination -----------------------------------------


def test_c7_cycle_elimination():
    two = GroupTransfers(entries={("s1", ("s2",)): 3, ("s2", ("s1",)): 5})
    gp2 = synthetic_partition(
        positive={"s1": 3, "s2": 5}, negative={("s1",): 5, ("s2",): 3}
    )
    fixed2 = eliminate_cycles(two, gp2)
    assert check_equivalent(two, fixed2).passed
    assert cross_transfer_graph(fixed2).is_acyclic()

    three = GroupTransfers(
        entries={
            ("s1", ("s2",)): 2,
            ("s2", ("s3",)): 4,
            ("s3", ("s1",)): 3,
        }
    )
    gp3 = synthetic_partition(
        positive={"s1": 2, "s2": 4, "s3": 3},
        negative={("s1",): 3, ("s2",): 2, ("s3",): 4},
    )
    fixed3 = eliminate_cycles(three, gp3)
    assert check_equivalent(three, fixed3).passed
    assert cross_transfer_graph(fixed3).is_acyclic()

    synthetic = GroupTransfers(
        entries={("s1", ("s3", "s4")): 1, ("s2", ("s4",)): 1}
    )
    assert cross_transfer_graph(synthetic).edges == {
        ("s1", "s3"),
        ("s1", "s4"),
        ("s2", "s4"),
    }
    report(7, "2- and 3-cycles eliminated equivalently; edge set as defined")


# --- criterion 8: partition counting ----------------------------------------


def test_c8_partition_count_identity():
    checked = 0
    for n in range(0, 7):
        for cells in range(1, 10):
            produced = list(enumerate_partitions(n, cells))
            assert len(produced) == len(set(produced))
            assert len(produced) == math.comb(n + cells - 1, cells - 1)
            assert partition_count(n, cells) == len(produced)
            checked += 1
    report(8, f"iterator count equals binomial on {checked} (N, cells) pairs")


# --- criterion 9: flow engine vs brute force --------------------------------


def test_c9_flow_engine_oracles():
    rng = random.Random(909)
    sampled = 0
    for _ in range(50):
        net = random_dag_network(rng, max_nodes=12)
        flow = max_flow(net)
        assert flow.value == min_cut_capacity(net)
        best = min_cost_max_flow(net)
        assert best.value == flow.value
        for _ in range(4):
            value, cost = random_integral_max_flow(net, rng)
            assert value == best.value
            assert best.cost <= cost
            sampled += 1
    report(9, f"50 networks match min-cut; min cost beat {sampled} samples")


# --- criterion 10: post-optimization stages at scale -------------------------


def make_large_market():
    vendors = [
        Vendor("s1", (10, 10), (DiscountTier((350, 350), 12),)),
        Vendor("s2", (3, 3)),
        Vendor("s3", (4, 4)),
    ]
    buyers = []
    choice = {}
    for i in range(300):
        bid = f"a{i:03d}"
        buyers.append(Buyer(bid, {("s1", "s1"): 30}))
        choice[bid] = ("s1", "s1")
    for i in range(100):
        bid = f"b{i:03d}"
        buyers.append(Buyer(bid, {("s1", "s1"): 13, ("s2", "s2"): 8}))
        choice[bid] = ("s1", "s1")
    for i in range(100):
        bid = f"c{i:03d}"
        buyers.append(Buyer(bid, {("s1", "s2"): 12, ("s2", "s2"): 7}))
        choice[bid] = ("s1", "s2")
    return Market.build(c=2, vendors=vendors, buyers=buyers), Allocation(choice)


def test_c10_transfer_stage_scales():
    market, alloc = make_large_market()
    started = time.perf_counter()
    gp = group_partition(market, alloc)
    gt = solve_group_transfers(market, alloc)
    matrix = fair_buyer_transfers(market, alloc, gp, gt)
    prices = prices_from_transfers(market, alloc, matrix)
    elapsed = time.perf_counter() - started
    assert elapsed < 5.0

    assert gt.incoming_totals() == {("s1",): 100, ("s1", "s2"): 200}
    # every bundled payer gives 300/2400 = 1/8 of her surplus of 8
    assert prices.delta("a000") == 1
    assert prices.delta("b000") == Fraction(-1)
    assert prices.delta("c000") == Fraction(-2)
    assert sum(e.delta for e in prices.entries.values()) == 0

    checks = certify(market, alloc, prices, gt, matrix, gp=gp)
    assert checks.all_passed
    report(
        10,
        f"transfer + pricing stages for 500 buyers in {elapsed:.2f}s (< 5s)",
    )
