"""Discrete-time agent simulation of semi-on-demand runs.

Vehicles execute run schedules stop by stop, traveling on fastest paths,
holding for early arrivals, and dwelling for boardings. The operator assigns
each incoming request by exhaustively enumerating pickup/dropoff insertions
across all candidate runs and committing the feasible minimum-objective one.
"""

from .plans import (FeasibilityFlags, ObjectiveCoeffs, PlanStop, Projection,
                    RiderInfo, RunPlan, plan_objective, project)
from .insertion import InsertionCandidate, enumerate_insertions, insert_request, snap_request
from .engine import ServiceSettings, SimResult, Simulation, run_replication
from .records import RunRecord, TripRecord, VehicleRecord, write_run_csv, write_trip_csv, write_vehicle_csv

__all__ = [
    "FeasibilityFlags", "ObjectiveCoeffs", "PlanStop", "Projection", "RiderInfo",
    "RunPlan", "plan_objective", "project",
    "InsertionCandidate", "enumerate_insertions", "insert_request", "snap_request",
    "ServiceSettings", "SimResult", "Simulation", "run_replication",
    "RunRecord", "TripRecord", "VehicleRecord",
    "write_run_csv", "write_trip_csv", "write_vehicle_csv",
]
