"""The three microservice observability graphs used by the benchmark."""

from __future__ import annotations

from ..graph import CausalGraph

_M1 = dict(
    endogenous=["NewDeploy", "MemoryLeak", "MemUsageHigh", "ServiceCrash", "OutageIncident"],
    exogenous=["HeavyTraffic"],
    edges=[
        ("NewDeploy", "MemoryLeak"),
        ("MemoryLeak", "MemUsageHigh"),
        ("MemUsageHigh", "ServiceCrash"),
        ("ServiceCrash", "OutageIncident"),
        ("HeavyTraffic", "MemUsageHigh"),
        ("HeavyTraffic", "ServiceCrash"),
    ],
    target="OutageIncident",
)

_M2 = dict(
    endogenous=[
        "DB_Change",
        "DB_Latency",
        "MS-B_Latency",
        "MS-A_Latency",
        "MS-A_Threads",
        "MS-A_Crash",
        "MS-B_Error",
        "MS-A_Error",
        "OutageIncident",
    ],
    exogenous=["HeavyTraffic"],
    edges=[
        ("DB_Change", "DB_Latency"),
        ("DB_Latency", "MS-B_Latency"),
        ("MS-B_Latency", "MS-A_Latency"),
        ("MS-B_Latency", "MS-B_Error"),
        ("MS-A_Latency", "MS-A_Threads"),
        ("MS-A_Threads", "MS-A_Crash"),
        ("MS-A_Crash", "OutageIncident"),
        ("MS-B_Error", "MS-A_Error"),
        ("MS-A_Error", "OutageIncident"),
        ("HeavyTraffic", "MS-B_Latency"),
        ("HeavyTraffic", "MS-A_Latency"),
    ],
    target="OutageIncident",
)

_M3 = dict(
    endogenous=[
        "ProductDB",
        "OrderDB",
        "ShippingCostService",
        "CachingService",
        "AuthService",
        "ProductService",
        "OrderService",
        "API",
        "www",
        "Website",
    ],
    exogenous=["CustomerDB"],
    edges=[
        ("ProductDB", "CachingService"),
        ("CachingService", "ProductService"),
        ("ShippingCostService", "ProductService"),
        ("ProductService", "API"),
        ("AuthService", "API"),
        ("OrderService", "API"),
        ("API", "www"),
        ("AuthService", "www"),
        ("www", "Website"),
        ("OrderDB", "OrderService"),
        ("CustomerDB", "AuthService"),
        ("CustomerDB", "ProductService"),
    ],
    target="Website",
)

MODELS = {"M1": _M1, "M2": _M2, "M3": _M3}


def model(model_id: str) -> CausalGraph:
    try:
        spec = MODELS[model_id]
    except KeyError:
        raise ValueError(f"unknown model {model_id!r}; choose from {', '.join(MODELS)}") from None
    return CausalGraph.from_edges(spec["endogenous"], spec["exogenous"], spec["edges"])


def target(model_id: str) -> str:
    return MODELS[model_id]["target"]
