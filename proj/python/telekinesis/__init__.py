"""Python access to the telekinesis engine.

The compiled core speaks JSON text; these helpers hand back plain dicts.
"""

import json

from . import _core
from ._core import (
    CalibrationError,
    DegenerateDataError,
    Error,
    FrameOrderError,
    IoError,
    ParseError,
    UsageError,
    ValidationError,
    condition_label,
    f_upper_tail,
    manipulation_step,
    parse_condition,
)

__all__ = [
    "CalibrationError",
    "DegenerateDataError",
    "Engine",
    "Error",
    "FrameOrderError",
    "IoError",
    "ParseError",
    "Session",
    "UsageError",
    "ValidationError",
    "anova",
    "art_anova",
    "calibrate",
    "condition_label",
    "default_config",
    "f_upper_tail",
    "manipulation_step",
    "parse_condition",
    "synthesize_calibration",
    "synthesize_operator",
]


def _dump(value):
    if value is None or isinstance(value, str):
        return value
    return json.dumps(value)


def _condition(value):
    if isinstance(value, str):
        return parse_condition(value)
    return tuple(bool(v) for v in value)


def default_config():
    return json.loads(_core.default_config())


def synthesize_operator(condition, seed, config=None, calibration=None):
    """Frames (dicts) of the model operator performing the stacking task."""
    lines = _core.synthesize_operator(_condition(condition), seed, _dump(config), _dump(calibration))
    return [json.loads(line) for line in lines]


def synthesize_calibration(seed, duration=90.0, config=None):
    return [json.loads(line) for line in _core.synthesize_calibration(seed, duration, _dump(config))]


def calibrate(frames, config=None):
    return json.loads(_core.calibrate([_dump(f) for f in frames], _dump(config)))


def _csv(rows):
    if isinstance(rows, str):
        return rows
    lines = ["participant,concentration,strain,energy,response"]
    yn = lambda b: "yes" if b else "no"
    for r in rows:
        lines.append(
            f"{r['participant']},{yn(r['concentration'])},{yn(r['strain'])},{yn(r['energy'])},{r['response']!r}"
        )
    return "\n".join(lines) + "\n"


def anova(rows):
    """Fixed-effects three-way ANOVA; rows are dicts or CSV text."""
    return json.loads(_core.anova(_csv(rows)))


def art_anova(rows):
    """Aligned rank transform ANOVA; rows are dicts or CSV text."""
    return json.loads(_core.art_anova(_csv(rows)))


class Engine:
    def __init__(self, condition=(False, False, False), config=None, calibration=None):
        self._engine = _core.Engine(_dump(config), _condition(condition), _dump(calibration))

    def tick(self, frame):
        return json.loads(self._engine.tick(_dump(frame)))

    def replay(self, frames):
        return [json.loads(s) for s in self._engine.replay([_dump(f) for f in frames])]

    def report(self):
        return json.loads(self._engine.report())

    @property
    def ticks(self):
        return self._engine.ticks


class Session:
    """Live session: feed client messages, tick, read server messages."""

    def __init__(self, config=None, seed=1):
        self._session = _core.Session(_dump(config), seed)

    def handle(self, message):
        return [json.loads(m) for m in self._session.handle(_dump(message))]

    def tick(self):
        return [json.loads(m) for m in self._session.tick()]

    @property
    def configured(self):
        return self._session.configured

    @property
    def closed(self):
        return self._session.closed

    def frames(self):
        return [json.loads(f) for f in self._session.frames()]
