"""Cycle ledgers and a resource-calendar scheduler.

Simulated time is an integer cycle count. A phase occupies a set of named
hardware resources over the half-open interval ``[start, end)``. The
scheduler places each phase at the earliest cycle where all of its
resources are simultaneously free and its data dependencies have resolved.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable


@dataclass(frozen=True)
class Phase:
    name: str
    resources: tuple[str, ...]
    start: int
    end: int
    matrix: int = 0

    @property
    def duration(self) -> int:
        return self.end - self.start

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "resources": list(self.resources),
            "start": self.start,
            "end": self.end,
            "matrix": self.matrix,
        }


@dataclass(frozen=True)
class CycleLedger:
    phases: tuple[Phase, ...]
    latency: int
    period: int

    def __post_init__(self) -> None:
        if self.period > self.latency:
            raise ValueError(f"period {self.period} exceeds latency {self.latency}")

    def throughput_exact(self, clock_hz: float) -> Fraction:
        return Fraction(clock_hz).limit_denominator() / self.period

    def throughput_matrices_per_sec(self, clock_hz: float) -> float:
        return clock_hz / self.period

    @property
    def micro_matrices_per_cycle(self) -> float:
        return 1e6 / self.period

    def phases_named(self, prefix: str) -> list[Phase]:
        return [p for p in self.phases if p.name.startswith(prefix)]

    def for_matrix(self, k: int) -> list[Phase]:
        return [p for p in self.phases if p.matrix == k]

    def conflicts(self) -> list[tuple[Phase, Phase, str]]:
        """Pairs of phases that hold the same resource on the same cycle."""
        by_res: dict[str, list[Phase]] = {}
        for p in self.phases:
            for r in p.resources:
                by_res.setdefault(r, []).append(p)
        out = []
        for r, ps in by_res.items():
            ps = sorted(ps, key=lambda p: (p.start, p.end))
            for a, b in zip(ps, ps[1:]):
                if b.start < a.end:
                    out.append((a, b, r))
        return out

    def to_dict(self) -> dict:
        return {
            "latency": self.latency,
            "period": self.period,
            "phases": [p.to_dict() for p in self.phases],
        }


@dataclass
class Scheduler:
    busy: dict[str, list[tuple[int, int]]] = field(default_factory=dict)
    phases: list[Phase] = field(default_factory=list)

    def _blocking_end(self, resource: str, start: int, end: int) -> int | None:
        for s, e in self.busy.get(resource, ()):
            if s < end and start < e:
                return e
        return None

    def earliest(self, resources: Iterable[str], ready: int, duration: int) -> int:
        resources = tuple(resources)
        t = ready
        while True:
            moved = False
            for r in resources:
                e = self._blocking_end(r, t, t + duration)
                if e is not None:
                    t = e
                    moved = True
            if not moved:
                return t

    def place(self, name: str, resources: Iterable[str], start: int, duration: int, matrix: int = 0) -> Phase:
        resources = tuple(resources)
        end = start + duration
        for r in resources:
            if self._blocking_end(r, start, end) is not None:
                raise RuntimeError(f"{name}: resource {r} already taken in [{start}, {end})")
            self.busy.setdefault(r, []).append((start, end))
        phase = Phase(name, resources, start, end, matrix)
        self.phases.append(phase)
        return phase

    def schedule(self, name: str, resources: Iterable[str], ready: int, duration: int, matrix: int = 0) -> Phase:
        resources = tuple(resources)
        return self.place(name, resources, self.earliest(resources, ready, duration), duration, matrix)
