"""Normalized commands and their PCA9685-style PWM encoding.

Channel 0 drives the steering servo, channel 1 the ESC. Pulse widths use
the hobby-RC convention: 1000 us full negative, 1500 us center, 2000 us
full positive, generated at 60 Hz with 12-bit on-tick resolution.
"""

from __future__ import annotations

from dataclasses import dataclass

STEERING_CHANNEL = 0
THROTTLE_CHANNEL = 1

PULSE_MIN_US = 1000.0
PULSE_CENTER_US = 1500.0
PULSE_MAX_US = 2000.0


def clamp_unit(value: float) -> float:
    return min(1.0, max(-1.0, value))


@dataclass(frozen=True)
class NormalizedCommand:
    """Steering (+ = left) and throttle (+ = forward), both in [-1, 1].

    Values are clamped at construction, so any out-of-range input maps to
    the same command as its clamped value.
    """

    steering: float = 0.0
    throttle: float = 0.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "steering", clamp_unit(float(self.steering)))
        object.__setattr__(self, "throttle", clamp_unit(float(self.throttle)))


@dataclass(frozen=True)
class ActuationConfig:
    frequency_hz: float = 60.0
    steering_trim_us: float = 0.0
    throttle_trim_us: float = 0.0


@dataclass(frozen=True)
class PwmCommand:
    channel: int
    pulse_us: float
    on_ticks: int
    frequency_hz: float


def pulse_to_ticks(pulse_us: float, frequency_hz: float) -> int:
    """12-bit on-time: round(pulse_us * frequency * 4096 / 1e6)."""
    return int(pulse_us * frequency_hz * 4096.0 / 1e6 + 0.5)


def ticks_to_pulse(on_ticks: int, frequency_hz: float) -> float:
    """Inverse of pulse_to_ticks up to quantization (<= 1e6/(4096*f) us)."""
    return on_ticks * 1e6 / (4096.0 * frequency_hz)


def _value_to_pulse(value: float, trim_us: float) -> float:
    pulse = PULSE_CENTER_US + value * (PULSE_MAX_US - PULSE_CENTER_US) + trim_us
    return min(PULSE_MAX_US, max(PULSE_MIN_US, pulse))


def command_to_pwm(
    cmd: NormalizedCommand, cfg: ActuationConfig = ActuationConfig()
) -> tuple[PwmCommand, PwmCommand]:
    """Map a command to (steering, throttle) PWM register values."""
    out = []
    for channel, value, trim in (
        (STEERING_CHANNEL, cmd.steering, cfg.steering_trim_us),
        (THROTTLE_CHANNEL, cmd.throttle, cfg.throttle_trim_us),
    ):
        pulse = _value_to_pulse(value, trim)
        out.append(
            PwmCommand(
                channel=channel,
                pulse_us=pulse,
                on_ticks=pulse_to_ticks(pulse, cfg.frequency_hz),
                frequency_hz=cfg.frequency_hz,
            )
        )
    return out[0], out[1]


# ---------------------------------------------------------------------------
# calibration file: plain key/value text
# ---------------------------------------------------------------------------

def save_calibration(cfg: ActuationConfig, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"steering_trim_us {cfg.steering_trim_us}\n")
        fh.write(f"throttle_trim_us {cfg.throttle_trim_us}\n")
        fh.write(f"frequency_hz {cfg.frequency_hz}\n")


def load_calibration(path: str) -> ActuationConfig:
    values: dict[str, float] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, _, raw = line.partition(" ")
            try:
                values[key] = float(raw)
            except ValueError as exc:
                raise ValueError(f"bad calibration line {line!r} in {path}") from exc
    return ActuationConfig(
        frequency_hz=values.get("frequency_hz", 60.0),
        steering_trim_us=values.get("steering_trim_us", 0.0),
        throttle_trim_us=values.get("throttle_trim_us", 0.0),
    )
