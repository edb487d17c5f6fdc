from .entities import (
    Driver,
    FleetError,
    TaskKind,
    TaskStop,
    Trip,
    TripState,
    TripStatistics,
    StopStatus,
    UnknownEntityError,
    Vehicle,
)
from .service import FleetService, RerouteProposal

__all__ = [
    "Driver",
    "FleetError",
    "FleetService",
    "RerouteProposal",
    "StopStatus",
    "TaskKind",
    "TaskStop",
    "Trip",
    "TripState",
    "TripStatistics",
    "UnknownEntityError",
    "Vehicle",
]
