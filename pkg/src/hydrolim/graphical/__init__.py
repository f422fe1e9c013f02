"""Graphical construction: event streams, evolution, coupling and currents."""

from .evolution import (
    CoupledTrajectory,
    CurrentRecord,
    Observer,
    RunStats,
    Trajectory,
    couple,
    coupled_trajectory,
    current,
    evolve,
    simulate,
    write_currents_csv,
    write_snapshots_csv,
)
from .stream import EventBatch, EventStream, generate_events, shift_stream

__all__ = [
    "CoupledTrajectory",
    "CurrentRecord",
    "EventBatch",
    "EventStream",
    "Observer",
    "RunStats",
    "Trajectory",
    "couple",
    "coupled_trajectory",
    "current",
    "evolve",
    "generate_events",
    "shift_stream",
    "simulate",
    "write_currents_csv",
    "write_snapshots_csv",
]
