"""Drive controller regimes, including the double-tap reverse interlock."""

import itertools

import pytest

from autorc.esc import EscMode, EscState, esc_step, detect_stop
from autorc.pwm import ActuationConfig, NormalizedCommand, command_to_pwm
from autorc.sim import SimConfig, VehicleState, step_dynamics

DT = 0.05

# one representative pulse per regime, plus the exact deadband edges
PULSES = (1000.0, 1479.0, 1480.0, 1500.0, 1520.0, 1521.0, 1800.0, 2000.0)

LOW = lambda p: p < 1480.0
BAND = lambda p: 1480.0 <= p <= 1520.0
HIGH = lambda p: p > 1520.0


def drive(pulses, state=None):
    state = state or EscState()
    trace = []
    for p in pulses:
        state, target = esc_step(state, p, DT)
        trace.append((state.mode, target))
    return state, trace


def test_deadband_edges_inclusive():
    for pulse in (1480.0, 1500.0, 1520.0):
        state, target = esc_step(EscState(), pulse, DT)
        assert state.mode is EscMode.NEUTRAL
        assert target == 0.0


def test_forward_target_proportional():
    _, t1 = esc_step(EscState(), 1520.0 + 240.0, DT)
    _, t2 = esc_step(EscState(), 2000.0, DT)
    assert t1 == pytest.approx(1.0)  # half span at max_speed 2.0
    assert t2 == pytest.approx(2.0)


def test_reverse_needs_double_tap():
    # low from neutral only brakes
    state, trace = drive([1000.0, 1000.0, 1000.0])
    assert all(mode is EscMode.BRAKING for mode, _ in trace)
    assert all(target == 0.0 for _, target in trace)

    # brake, release to deadband, low again: reverse engages
    state, trace = drive([1000.0, 1500.0, 1000.0])
    assert [m for m, _ in trace] == [EscMode.BRAKING, EscMode.REVERSE_ARMED,
                                     EscMode.REVERSE]
    assert trace[-1][1] == pytest.approx(-2.0)


def test_reverse_unreachable_in_all_three_step_sequences():
    """Exhaustive: from rest, REVERSE iff some brake -> deadband -> low chain ran."""
    for seq in itertools.product(PULSES, repeat=3):
        _, trace = drive(seq)
        modes = [m for m, _ in trace]
        hit_reverse = any(m is EscMode.REVERSE for m in modes)
        armed_path = LOW(seq[0]) and BAND(seq[1]) and LOW(seq[2])
        if hit_reverse:
            assert armed_path, f"reverse leaked on {seq}: {modes}"
        if armed_path:
            assert modes[-1] is EscMode.REVERSE, f"double tap failed on {seq}"


def test_forward_pulse_disarms():
    state, trace = drive([1000.0, 1500.0, 2000.0, 1000.0])
    # the forward pulse cancels the armed state; the final low brakes again
    assert trace[-1][0] is EscMode.BRAKING


def test_pulse_out_of_range_rejected():
    with pytest.raises(ValueError):
        esc_step(EscState(), 900.0, DT)
    with pytest.raises(ValueError):
        esc_step(EscState(), 2100.0, DT)


def test_brake_to_stop_shows_encoder_plateau():
    """Full stack: forward cruise, then brake until the tick count flattens."""
    from autorc.sim import EncoderModel

    cfg = SimConfig()
    act = ActuationConfig()
    encoder = EncoderModel(cfg.ticks_per_meter)
    state = VehicleState()
    esc = EscState()
    history = []

    def apply(throttle, ticks):
        nonlocal state, esc
        for _ in range(ticks):
            _, throttle_pwm = command_to_pwm(NormalizedCommand(0.0, throttle), act)
            esc, target = esc_step(esc, throttle_pwm.pulse_us, cfg.dt)
            new = step_dynamics(state, 0.0, target, cfg)
            encoder.advance(abs(new.speed) * cfg.dt, 1.0 if new.speed >= 0 else -1.0)
            history.append(encoder.total_signed)
            state = new

    apply(0.5, 40)   # spin up
    assert state.speed > 0.9
    assert not detect_stop(history, window=6)
    apply(-1.0, 60)  # hold the brake
    assert abs(state.speed) < 1e-3
    assert detect_stop(history, window=6)


def test_detect_stop_needs_full_window():
    assert not detect_stop([5, 5, 5], window=4)
    assert detect_stop([3, 5, 5, 5, 5], window=4)
    assert not detect_stop([3, 5, 5, 6, 6], window=4)
    with pytest.raises(ValueError):
        detect_stop([1, 2], window=1)
