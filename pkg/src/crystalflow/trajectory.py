"""Sampled states and the event log shared by both flows."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any, Optional

import numpy as np

from .geometry import Polyrectangle

EVENT_KINDS = ("Break", "Vanish", "Recompose", "Pin", "Unpin", "NonUniqueBranch",
               "CalibrabilityMarginal", "Extinction", "Regime")


@dataclass
class FlowEvent:
    time: float
    kind: str
    payload: dict = field(default_factory=dict)
    seq: int = -1

    def to_dict(self) -> dict:
        return {"seq": self.seq, "time": self.time, "kind": self.kind, "payload": _plain(self.payload)}


@dataclass
class Sample:
    t: float
    vertices: np.ndarray
    statuses: list

    @property
    def polyrectangle(self) -> Polyrectangle:
        return Polyrectangle(self.vertices)

    def to_dict(self) -> dict:
        return {"t": self.t, "vertices": self.vertices.tolist(), "statuses": list(self.statuses)}


class _EventLog(list):
    def append(self, ev: FlowEvent) -> None:
        ev.seq = len(self)
        super().append(ev)


@dataclass
class FlowTrajectory:
    samples: list
    events: list
    final_time: float = 0.0
    final_vertices: Optional[np.ndarray] = None

    def __post_init__(self):
        self.events = _EventLog(self.events)

    def record(self, t: float, vertices: np.ndarray, statuses) -> None:
        self.samples.append(Sample(float(t), np.array(vertices, float), list(statuses)))

    @property
    def times(self) -> np.ndarray:
        return np.array([s.t for s in self.samples])

    def kinds(self) -> list[str]:
        return [e.kind for e in self.events]

    def count(self, kind: str) -> int:
        return sum(e.kind == kind for e in self.events)

    @property
    def extinct(self) -> bool:
        return any(e.kind == "Extinction" for e in self.events)

    def jsonl(self) -> str:
        return "".join(json.dumps(s.to_dict(), sort_keys=True) + "\n" for s in self.samples)

    def events_json(self) -> str:
        return json.dumps([e.to_dict() for e in self.events], indent=1, sort_keys=True)


def _plain(x: Any):
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, np.ndarray):
        return _plain(x.tolist())
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.floating):
        return float(x)
    return x
