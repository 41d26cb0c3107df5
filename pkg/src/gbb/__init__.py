"""Group-buying market solver with volume-triggered bundle discounts.

Computes welfare-maximizing allocations, rational and stabilizing group
transfers, fair per-buyer prices, and certifies the result.
"""

from .model import (
    Allocation,
    Buyer,
    BuyerId,
    DiscountTier,
    GroupPartition,
    ItemType,
    Market,
    Money,
    NULL_VENDOR,
    ValidationReport,
    Vendor,
    VendorId,
    VendorTuple,
    best_alternative,
    buyer_market_price,
    demand_vectors,
    group_partition,
    social_welfare,
    surplus,
    triggered,
    utility,
    validate_market,
)
from .flow import Flow, FlowNetwork, NetworkBuilder, max_flow, min_cost_max_flow
from .swm import (
    BudgetExceeded,
    Partition,
    SwmResult,
    brute_force_swm,
    enumerate_partitions,
    partition_count,
    solve_swm,
)
from .transfers import (
    CrossTransferGraph,
    GroupTransfers,
    NonZeroSum,
    PriceVector,
    SumMismatch,
    TransferMatrix,
    Unstabilizable,
    cross_transfer_graph,
    eliminate_cycles,
    fair_buyer_transfers,
    greedy_match,
    prices_from_transfers,
    solve_group_transfers,
    transfers_from_price_deltas,
)
from .verify import CertificateReport, certify, surplus_totals

__version__ = "0.1.0"
