"""Brushed-ESC pulse interpretation: forward, brake, re-arm, reverse.

Brushed RC speed controllers refuse to reverse straight from forward
drive: a low pulse first brakes, the stick must return to neutral to
re-arm, and only the next low pulse engages reverse. The same double-tap
applies from a cold start. The machine below models exactly that:

    state        pulse < 1480      1480..1520 (deadband)   pulse > 1520
    ------------ ----------------- ----------------------- ------------
    NEUTRAL      BRAKING (0)       NEUTRAL (0)             FORWARD (+)
    FORWARD      BRAKING (0)       NEUTRAL (0)             FORWARD (+)
    BRAKING      BRAKING (0)       REVERSE_ARMED (0)       FORWARD (+)
    REVERSE_ARMED REVERSE (-)      REVERSE_ARMED (0)       FORWARD (+)
    REVERSE      REVERSE (-)       REVERSE_ARMED (0)       FORWARD (+)

REVERSE_ARMED is a neutral-output state; it only remembers that braking
completed, which is what makes reverse reachable.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

DEADBAND_LOW_US = 1480.0
DEADBAND_HIGH_US = 1520.0
PULSE_MIN_US = 1000.0
PULSE_MAX_US = 2000.0
_FORWARD_SPAN = PULSE_MAX_US - DEADBAND_HIGH_US   # 480 us
_REVERSE_SPAN = DEADBAND_LOW_US - PULSE_MIN_US    # 480 us


class EscMode(enum.Enum):
    NEUTRAL = "neutral"
    FORWARD = "forward"
    BRAKING = "braking"
    REVERSE_ARMED = "reverse_armed"
    REVERSE = "reverse"


@dataclass(frozen=True)
class EscState:
    mode: EscMode = EscMode.NEUTRAL
    last_pulse_us: float = 1500.0


def esc_step(
    state: EscState, pulse_us: float, dt: float, max_speed: float = 2.0
) -> tuple[EscState, float]:
    """Advance the ESC one tick; returns (new state, target speed m/s).

    dt is accepted for interface symmetry with the simulator step; the
    transition itself is instantaneous.
    """
    if not (PULSE_MIN_US <= pulse_us <= PULSE_MAX_US):
        raise ValueError(f"pulse {pulse_us} us outside [{PULSE_MIN_US}, {PULSE_MAX_US}]")

    mode = state.mode
    if pulse_us > DEADBAND_HIGH_US:
        new_mode = EscMode.FORWARD
        target = max_speed * (pulse_us - DEADBAND_HIGH_US) / _FORWARD_SPAN
    elif pulse_us < DEADBAND_LOW_US:
        if mode in (EscMode.REVERSE_ARMED, EscMode.REVERSE):
            new_mode = EscMode.REVERSE
            target = -max_speed * (DEADBAND_LOW_US - pulse_us) / _REVERSE_SPAN
        else:
            new_mode = EscMode.BRAKING
            target = 0.0
    else:  # deadband, inclusive
        if mode in (EscMode.BRAKING, EscMode.REVERSE_ARMED, EscMode.REVERSE):
            new_mode = EscMode.REVERSE_ARMED
        else:
            new_mode = EscMode.NEUTRAL
        target = 0.0
    return EscState(mode=new_mode, last_pulse_us=pulse_us), target


def detect_stop(tick_history: list[int], window: int) -> bool:
    """True iff the cumulative encoder count is flat over the last window samples."""
    if window < 2:
        raise ValueError("window must cover at least 2 samples")
    if len(tick_history) < window:
        return False
    tail = tick_history[-window:]
    return tail[-1] - tail[0] == 0 and all(b - a == 0 for a, b in zip(tail, tail[1:]))
