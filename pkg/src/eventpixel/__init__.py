"""Simulation and analysis of event-pixel streams under constant illumination.

Submodules:

* ``specfun``: erfi, Dawson and 2F2 evaluations used by the closed forms
* ``photovoltage``: photon-to-voltage front end and the filtered OU voltage
* ``ou_exit``: OU exit problem, closed forms, backward-equation solver, samplers
* ``event_stream``: the reference-voltage chain and event streams
* ``dynamics``: deterministic recursion, fixed points, cobweb traces
* ``analysis``: ISI histograms, summary table, KDE
"""
from importlib.metadata import PackageNotFoundError, version

from .event_stream import (
    EventStream,
    ModelParams,
    Polarity,
    SigmaAlphaMode,
    simulate_event_stream,
    simulate_reference_chain,
)
from .ou_exit import ExitProblem, ExitTimeCache, expected_exit_time, exit_side_probs

try:
    __version__ = version("artifact")
except PackageNotFoundError:  # pragma: no cover
    __version__ = "0.1.0"

__all__ = [
    "EventStream",
    "ExitProblem",
    "ExitTimeCache",
    "ModelParams",
    "Polarity",
    "SigmaAlphaMode",
    "exit_side_probs",
    "expected_exit_time",
    "simulate_event_stream",
    "simulate_reference_chain",
    "__version__",
]
