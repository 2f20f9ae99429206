"""Deterministic scenario driver, service stubs, orchestration, verification."""

from parktwin.sim.scenario import GroundTruth, ScenarioConfig, ScriptedEvent, Simulator
from parktwin.sim.stack import TwinStack
from parktwin.sim.stubs import BulbStub, WeatherStub
from parktwin.sim.verify import ConformanceReport, verify

__all__ = [
    "GroundTruth",
    "ScenarioConfig",
    "ScriptedEvent",
    "Simulator",
    "TwinStack",
    "BulbStub",
    "WeatherStub",
    "ConformanceReport",
    "verify",
]
