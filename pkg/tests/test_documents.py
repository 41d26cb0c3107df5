"""Document schemas: strictness, canonical round trips, rational strings."""

import json
from fractions import Fraction

import pytest

from gbb.documents import (
    DocumentError,
    instance_from_dict,
    instance_to_dict,
    load_instance,
    rational_from_str,
    rational_to_str,
    solution_from_dict,
    to_canonical_json,
)
from gbb.model import NULL_VENDOR, validate_market


def test_rational_strings():
    assert rational_to_str(Fraction(3, 4)) == "3/4"
    assert rational_to_str(Fraction(-1, 2)) == "-1/2"
    assert rational_to_str(Fraction(10, 2)) == "5"
    assert rational_to_str(5) == "5"
    assert rational_from_str("3/4") == Fraction(3, 4)
    assert rational_from_str("-7") == -7
    for bad in ("", "1/0", "1.5", "a/b", "1/-2", None, 3):
        with pytest.raises(DocumentError):
            rational_from_str(bad)


def test_instance_round_trip(fix_e1_path, fix_e2_path):
    for path in (fix_e1_path, fix_e2_path):
        market = load_instance(path)
        assert validate_market(market).ok
        once = to_canonical_json(instance_to_dict(market))
        again = to_canonical_json(instance_to_dict(instance_from_dict(json.loads(once))))
        assert once == again
        assert once == open(path).read()


def test_null_vendor_injected(fix_e1_path):
    market = load_instance(fix_e1_path)
    assert market.has_vendor(NULL_VENDOR)
    assert NULL_VENDOR not in {
        v["id"] for v in instance_to_dict(market)["vendors"]
    }


def base_doc():
    return {
        "schema": "gbb-market/1",
        "item_types": 1,
        "vendors": [{"id": "s1", "base_prices": [4], "discounts": []}],
        "buyers": [
            {"id": "b1", "valuations": [{"choice": ["s1"], "value": 6}]}
        ],
    }


def test_unknown_fields_rejected():
    doc = base_doc()
    doc["extra"] = 1
    with pytest.raises(DocumentError, match="unknown fields"):
        instance_from_dict(doc)
    doc = base_doc()
    doc["vendors"][0]["surprise"] = True
    with pytest.raises(DocumentError, match="unknown fields"):
        instance_from_dict(doc)
    doc = base_doc()
    doc["buyers"][0]["valuations"][0]["note"] = "hi"
    with pytest.raises(DocumentError, match="unknown fields"):
        instance_from_dict(doc)


def test_schema_and_type_errors():
    with pytest.raises(DocumentError, match="schema"):
        instance_from_dict({**base_doc(), "schema": "nope/9"})
    doc = base_doc()
    doc["item_types"] = 0
    with pytest.raises(DocumentError, match="must be >= 1"):
        instance_from_dict(doc)
    doc = base_doc()
    doc["vendors"][0]["base_prices"] = [True]
    with pytest.raises(DocumentError, match="expected an integer"):
        instance_from_dict(doc)
    doc = base_doc()
    doc["buyers"][0]["valuations"][0]["value"] = 2**63
    with pytest.raises(DocumentError, match="64-bit"):
        instance_from_dict(doc)
    doc = base_doc()
    doc["vendors"][0]["id"] = NULL_VENDOR
    with pytest.raises(DocumentError, match="reserved"):
        instance_from_dict(doc)
    doc = base_doc()
    doc["buyers"][0]["valuations"].append({"choice": ["s1"], "value": 1})
    with pytest.raises(DocumentError, match="duplicate choice"):
        instance_from_dict(doc)


def test_semantic_problems_left_to_validation():
    doc = base_doc()
    doc["vendors"].append({"id": "s1", "base_prices": [3], "discounts": []})
    market = instance_from_dict(doc)
    assert not validate_market(market).ok


def test_solution_round_trip(fix_e1, fix_e1_path, tmp_path):
    from gbb.cli import main

    out = tmp_path / "sol.json"
    assert main(["solve", fix_e1_path, "--out", str(out)]) == 0
    data = json.loads(out.read_text())
    parsed = solution_from_dict(data)
    assert parsed.social_welfare == 6
    assert parsed.allocation.choice == {
        "b1": ("s1", "s1"),
        "b2": ("s1", "s1"),
    }
    assert parsed.deltas == {"b1": Fraction(1), "b2": Fraction(-1)}
    assert dict(parsed.group_transfers.entries) == {("s1", ("s1",)): 1}
    assert parsed.matrix.entries == {("b1", "b2"): Fraction(1)}

    data["buyers"]["b1"]["mystery"] = 1
    with pytest.raises(DocumentError, match="unknown fields"):
        solution_from_dict(data)


def test_solution_rejects_bad_rational(fix_e1_path, tmp_path):
    from gbb.cli import main

    out = tmp_path / "sol.json"
    main(["solve", fix_e1_path, "--out", str(out)])
    data = json.loads(out.read_text())
    data["buyers"]["b1"]["delta"] = "0.5"
    with pytest.raises(DocumentError, match="rational"):
        solution_from_dict(data)
