import os

import pytest

from gbb.model import Buyer, DiscountTier, Market, Vendor

DATA_DIR = os.path.join(os.path.dirname(__file__), "data")


def data_path(name: str) -> str:
    return os.path.join(DATA_DIR, name)


def make_fix_e1() -> Market:
    """Two buyers, one discounting vendor; optimum puts both on the bundle."""
    return Market.build(
        c=2,
        vendors=[
            Vendor("s1", (4, 4), (DiscountTier((2, 2), 5),)),
            Vendor("s2", (3, 3)),
        ],
        buyers=[
            Buyer("b1", {("s1", "s1"): 10, ("s2", "s2"): 6}),
            Buyer("b2", {("s1", "s1"): 6, ("s2", "s2"): 8}),
        ],
    )


def make_fix_e2() -> Market:
    """Three buyers; the optimum needs a mixed-vendor buyer to trigger the
    discount, so the transfer crosses a two-vendor group."""
    return Market.build(
        c=2,
        vendors=[
            Vendor("s1", (4, 4), (DiscountTier((3, 2), 4),)),
            Vendor("s2", (3, 3)),
        ],
        buyers=[
            Buyer("b1", {("s1", "s1"): 9}),
            Buyer("b2", {("s1", "s1"): 9}),
            Buyer("b3", {("s1", "s2"): 6, ("s2", "s2"): 7}),
        ],
    )


@pytest.fixture
def fix_e1() -> Market:
    return make_fix_e1()


@pytest.fixture
def fix_e2() -> Market:
    return make_fix_e2()


@pytest.fixture
def fix_e1_path() -> str:
    return data_path("fix_e1.json")


@pytest.fixture
def fix_e2_path() -> str:
    return data_path("fix_e2.json")
