"""CLI commands, exit codes, reproducibility, generator output."""

import json

import pytest

from gbb.cli import main
from gbb.documents import instance_to_dict, load_instance, to_canonical_json
from gbb.generate import generate_instance
from gbb.model import validate_market
from tests.conftest import data_path


def run(capsys, argv):
    code = main(argv)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_solve_fix_e1(capsys, fix_e1_path):
    code, out, err = run(capsys, ["solve", fix_e1_path])
    assert code == 0
    doc = json.loads(out)
    assert doc["social_welfare"] == 6
    assert doc["buyers"]["b1"]["final_price"] == "6"
    assert doc["buyers"]["b2"]["final_price"] == "4"
    assert doc["group_transfers"] == [
        {"vendor": "s1", "group": ["s1"], "amount": 1}
    ]
    assert doc["certificate"]["all_passed"] is True
    assert doc["metadata"]["partition_count"] == 45


def test_solve_fix_e2(capsys, fix_e2_path):
    code, out, _ = run(capsys, ["solve", fix_e2_path])
    assert code == 0
    doc = json.loads(out)
    assert doc["social_welfare"] == 9
    assert {b: e["final_price"] for b, e in doc["buyers"].items()} == {
        "b1": "5",
        "b2": "5",
        "b3": "5",
    }
    assert doc["group_transfers"] == [
        {"vendor": "s1", "group": ["s1", "s2"], "amount": 2}
    ]
    assert doc["transfers"] == [
        {"payer": "b1", "payee": "b3", "amount": "1"},
        {"payer": "b2", "payee": "b3", "amount": "1"},
    ]


def test_solve_reproducible_bytes(fix_e2_path, tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert main(["solve", fix_e2_path, "--out", str(a)]) == 0
    assert main(["solve", fix_e2_path, "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_solve_invalid_instance(capsys, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(
        json.dumps(
            {
                "schema": "gbb-market/1",
                "item_types": 2,
                "vendors": [
                    {
                        "id": "s1",
                        "base_prices": [4, 4],
                        "discounts": [
                            {"thresholds": [2, 2], "bundle_price": 9}
                        ],
                    }
                ],
                "buyers": [],
            }
        )
    )
    code, _, err = run(capsys, ["solve", str(bad)])
    assert code == 2
    assert "invalid instance" in err
    assert "not strictly below" in err


def test_solve_parse_error(capsys, tmp_path):
    bad = tmp_path / "nonsense.json"
    bad.write_text("{]")
    code, _, err = run(capsys, ["solve", str(bad)])
    assert code == 2
    assert "invalid JSON" in err


def test_solve_budget_exceeded(capsys, fix_e2_path):
    code, _, err = run(capsys, ["solve", fix_e2_path, "--max-partitions", "5"])
    assert code == 3
    assert "exceed the configured cap" in err


def test_solve_unstabilizable_exit(capsys, fix_e1_path, monkeypatch):
    import gbb.cli as cli
    from gbb.model import Allocation
    from gbb.swm import SwmResult, Partition

    def fake_solve(market, max_partitions=0, jobs=1):
        alloc = Allocation({"b1": ("s2", "s2"), "b2": ("s1", "s1")})
        return SwmResult(
            allocation=alloc,
            social_welfare=0,
            partition=Partition({}),
            partitions_total=1,
            partitions_evaluated=1,
        )

    monkeypatch.setattr(cli, "solve_swm", fake_solve)
    code, _, err = run(capsys, ["solve", fix_e1_path])
    assert code == 4
    assert "cannot stabilize" in err


def test_solve_no_certify(capsys, fix_e1_path):
    code, out, _ = run(capsys, ["solve", fix_e1_path, "--no-certify"])
    assert code == 0
    assert json.loads(out)["certificate"] is None


def test_solve_timings_flag(capsys, fix_e1_path):
    code, out, _ = run(capsys, ["solve", fix_e1_path, "--timings"])
    assert code == 0
    timings = json.loads(out)["metadata"]["timings"]
    assert set(timings) == {"solve_s", "transfers_s", "total_s"}


def test_oracle_matches_solve(capsys, fix_e1_path, fix_e2_path):
    for path, expected in ((fix_e1_path, 6), (fix_e2_path, 9)):
        code, out, _ = run(capsys, ["oracle", path])
        assert code == 0
        doc = json.loads(out)
        assert doc["social_welfare"] == expected
        assert doc["metadata"]["solver"] == "exhaustive"


def test_oracle_budget(capsys, fix_e2_path):
    code, _, err = run(capsys, ["oracle", fix_e2_path, "--max-allocations", "10"])
    assert code == 3


def test_oracle_five_buyers_under_a_second(capsys, tmp_path):
    import time

    inst = tmp_path / "n5.json"
    run(
        capsys,
        ["gen", "--buyers", "5", "--vendors", "2", "--items", "2",
         "--seed", "11", "--out", str(inst)],
    )
    started = time.perf_counter()
    code, out, _ = run(capsys, ["oracle", str(inst)])
    assert code == 0
    assert time.perf_counter() - started < 1.0
    assert json.loads(out)["metadata"]["partition_count"] == 9**5


def test_gen_deterministic_and_valid(capsys, tmp_path):
    argv = ["gen", "--buyers", "4", "--vendors", "2", "--items", "2", "--seed", "7"]
    code1, out1, _ = run(capsys, argv)
    code2, out2, _ = run(capsys, argv)
    assert code1 == code2 == 0
    assert out1 == out2
    assert out1 == open(data_path("gen_b4_v2_c2_s7.json")).read()


def test_gen_sweep_validates():
    for seed in range(30):
        market = generate_instance(
            buyers=seed % 5,
            vendors=1 + seed % 3,
            items=1 + seed % 2,
            seed=seed,
            max_value=1 + seed % 20,
        )
        assert validate_market(market).ok, seed


def test_gen_zero_buyers_flows_through(capsys, tmp_path):
    inst = tmp_path / "empty.json"
    code, _, _ = run(
        capsys,
        ["gen", "--buyers", "0", "--vendors", "2", "--items", "2",
         "--seed", "3", "--out", str(inst)],
    )
    assert code == 0
    code, out, _ = run(capsys, ["solve", str(inst)])
    assert code == 0
    doc = json.loads(out)
    assert doc["social_welfare"] == 0
    assert doc["allocation"] == {}


def test_verify_round_trip(capsys, fix_e1_path, tmp_path):
    sol = tmp_path / "sol.json"
    assert main(["solve", fix_e1_path, "--out", str(sol)]) == 0
    code, out, _ = run(capsys, ["verify", fix_e1_path, str(sol)])
    assert code == 0
    assert out.count("PASS") == 6


def test_verify_detects_tampered_delta(capsys, fix_e1_path, tmp_path):
    sol = tmp_path / "sol.json"
    main(["solve", fix_e1_path, "--out", str(sol)])
    doc = json.loads(sol.read_text())
    doc["buyers"]["b1"]["delta"] = "2"
    sol.write_text(json.dumps(doc))
    code, out, _ = run(capsys, ["verify", fix_e1_path, str(sol)])
    assert code == 1
    assert "budget_balance: FAIL" in out
    assert "p_consistent: FAIL" in out
    assert "stable: PASS" in out
    assert "fair: PASS" in out


def test_verify_buyer_set_mismatch(capsys, fix_e1_path, fix_e2_path, tmp_path):
    sol = tmp_path / "sol.json"
    main(["solve", fix_e2_path, "--out", str(sol)])
    code, _, err = run(capsys, ["verify", fix_e1_path, str(sol)])
    assert code == 2
    assert "buyer set" in err


def test_partitions_command(capsys, fix_e2_path):
    code, out, _ = run(capsys, ["partitions", fix_e2_path])
    assert code == 0
    assert out.strip() == "buyers=3 cells=9 partitions=165"


def test_solve_jobs_flag_reproducible(fix_e2_path, tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert main(["solve", fix_e2_path, "--out", str(a)]) == 0
    assert main(["solve", fix_e2_path, "--jobs", "2", "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
