"""Command-line entry points.

One multiplexed binary with subcommands:

    drive       run the vehicle loop (teleop/expert/auto, optional HTTP service)
    collect     expert-drive until N records are captured into a tub
    train       fit a model on a tub, write a weight file + CSV report
    eval        closed-loop evaluation against the reference lines
    calibrate   inspect or persist the PWM calibration table
    tub stats   summarize a dataset directory
    sensorlink  dump a captured sensor byte stream as CSV

Option precedence is flags > config file (--config, a flat JSON object
keyed by option name) > built-in defaults; the effective configuration
is printed to stderr at startup. Exit codes: 0 ok, 2 usage, 3 scenario,
4 model, 5 port busy, 6 tub, 7 expert blocked.
"""

from __future__ import annotations

import argparse
import errno
import json
import sys
from dataclasses import asdict
from pathlib import Path

from .evaluate import EvalError, evaluate
from .loop import DriveLoop, LoopConfig, LoopError
from .nn.container import WeightsError, load_model, save_weights
from .nn.models import LinearCnnModel, RnnModel
from .nn.training import TrainConfig, TrainingError, train
from .pilots import ExpertConfig
from .pwm import ActuationConfig, NormalizedCommand, command_to_pwm, load_calibration, save_calibration
from .sensorlink import frames_to_csv, parse_stream
from .sim import SimConfig
from .track import ScenarioError, resolve_scenario
from .tub import Tub, TubError, load_split, tub_stats

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_SCENARIO = 3
EXIT_MODEL = 4
EXIT_PORT = 5
EXIT_TUB = 6
EXIT_BLOCKED = 7


class _Options:
    """flags > config file > defaults, with a printable trace."""

    def __init__(self, args: argparse.Namespace, config_path: str | None):
        self._args = args
        self._file: dict = {}
        if config_path:
            with open(config_path, encoding="utf-8") as f:
                loaded = json.load(f)
            if not isinstance(loaded, dict):
                raise ValueError("config file must hold a JSON object")
            self._file = loaded
        self.trace: list[str] = []

    def pick(self, name: str, default):
        flag = getattr(self._args, name, None)
        if flag is not None:
            value, source = flag, "flag"
        elif name in self._file:
            value, source = self._file[name], "config"
        else:
            value, source = default, "default"
        self.trace.append(f"{name}={value} ({source})")
        return value

    def announce(self, command: str) -> None:
        print(f"[{command}] " + "  ".join(self.trace), file=sys.stderr)


def _load_model_checked(path: str, expected_type: str | None):
    model = load_model(path)
    if expected_type is not None:
        tag = {"linear": "linear_cnn", "rnn": "rnn"}[expected_type]
        if model.arch_tag != tag:
            raise WeightsError(
                f"{path} holds a {model.arch_tag} model, --type asked for {tag}"
            )
    return model


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_drive(args) -> int:
    opts = _Options(args, args.config)
    scenario_name = opts.pick("scenario", "default")
    obstacles = opts.pick("obstacles", False)
    mode = opts.pick("mode", "user")
    seed = opts.pick("seed", 0)
    rate_hz = opts.pick("rate_hz", 20.0)
    ticks = opts.pick("ticks", None)
    laps = opts.pick("laps", None)
    serve = opts.pick("serve", False)
    host = opts.pick("host", "127.0.0.1")
    port = opts.pick("port", 8887)
    opts.announce("drive")

    if mode == "auto" and not args.model:
        print("drive: --mode auto requires --model", file=sys.stderr)
        return EXIT_USAGE
    if not serve and ticks is None and laps is None:
        print("drive: need --ticks or --laps unless --serve is set", file=sys.stderr)
        return EXIT_USAGE

    try:
        scenario = resolve_scenario(scenario_name, with_obstacles=obstacles)
    except (ScenarioError, OSError) as exc:
        print(f"drive: scenario error: {exc}", file=sys.stderr)
        return EXIT_SCENARIO

    model = None
    if args.model:
        try:
            model = _load_model_checked(args.model, args.type)
        except (WeightsError, OSError) as exc:
            print(f"drive: model error: {exc}", file=sys.stderr)
            return EXIT_MODEL

    sim_cfg = SimConfig(dt=1.0 / rate_hz, seed=seed)
    loop_cfg = LoopConfig(rate_hz=rate_hz, wall_clock=bool(serve))
    tub = None
    if args.record:
        try:
            tub = Tub.create(args.record, sim_config=asdict(sim_cfg), rate_hz=rate_hz)
        except TubError as exc:
            print(f"drive: tub error: {exc}", file=sys.stderr)
            return EXIT_TUB

    loop = DriveLoop(scenario, sim_cfg=sim_cfg, loop_cfg=loop_cfg, model=model,
                     tub=tub, jitter_seed=seed)
    try:
        loop.set_mode(mode)
    except LoopError as exc:
        print(f"drive: {exc}", file=sys.stderr)
        return EXIT_MODEL
    if tub is not None:
        loop.set_recording(True)

    server = None
    if serve:
        from .server import TelemetryServer

        try:
            server = TelemetryServer(loop, host=host, port=port, ui_dir=args.ui_dir)
        except OSError as exc:
            if exc.errno == errno.EADDRINUSE:
                print(f"drive: port {port} busy: {exc}", file=sys.stderr)
                return EXIT_PORT
            raise
        server.start()
        print(f"serving on http://{server.address[0]}:{server.address[1]}",
              file=sys.stderr)

    try:
        if ticks is None and laps is None:
            while True:
                loop.run(ticks=1000)
        else:
            loop.run(ticks=ticks, laps=laps)
    except KeyboardInterrupt:
        pass
    finally:
        if server is not None:
            server.stop()
        if tub is not None:
            tub.close()

    print(f"drove {loop.frame_id} ticks, {loop.lap} laps, "
          f"{loop.overruns} overruns")
    for i, lap_s in enumerate(loop.lap_times, start=1):
        print(f"  lap {i}: {lap_s:.2f} s")
    if tub is not None:
        print(f"recorded {len(tub)} records to {tub.path}")
    return EXIT_OK


def cmd_collect(args) -> int:
    opts = _Options(args, args.config)
    scenario_name = opts.pick("scenario", "default")
    obstacles = opts.pick("obstacles", False)
    frames = opts.pick("frames", 10000)
    seed = opts.pick("seed", 0)
    jitter = opts.pick("jitter", 0.05)
    opts.announce("collect")

    if frames < 1:
        print("collect: --frames must be >= 1", file=sys.stderr)
        return EXIT_USAGE
    try:
        scenario = resolve_scenario(scenario_name, with_obstacles=obstacles)
    except (ScenarioError, OSError) as exc:
        print(f"collect: scenario error: {exc}", file=sys.stderr)
        return EXIT_SCENARIO

    sim_cfg = SimConfig(seed=seed)
    try:
        tub = Tub.create(args.record, sim_config=asdict(sim_cfg))
    except TubError as exc:
        print(f"collect: tub error: {exc}", file=sys.stderr)
        return EXIT_TUB

    loop = DriveLoop(scenario, sim_cfg=sim_cfg, tub=tub,
                     jitter_std=jitter, jitter_seed=seed)
    loop.set_mode("expert")
    loop.set_recording(True)

    code = EXIT_OK
    try:
        while len(tub) < frames:
            snap = loop.tick()
            if snap.blocked:
                print(
                    f"collect: expert blocked at frame {snap.frame_id}; "
                    f"keeping partial tub ({len(tub)} records)",
                    file=sys.stderr,
                )
                code = EXIT_BLOCKED
                break
    finally:
        tub.close()

    stats = tub_stats(Tub.open(tub.path))
    print(json.dumps(stats, indent=2, sort_keys=True))
    return code


def cmd_train(args) -> int:
    opts = _Options(args, args.config)
    model_type = opts.pick("type", "linear")
    epochs = opts.pick("epochs", 60)
    batch_size = opts.pick("batch_size", 64)
    lr = opts.pick("lr", 1e-3)
    val_fraction = opts.pick("val_fraction", 0.15)
    seed = opts.pick("seed", 0)
    sequence_len = opts.pick("sequence_len", 3)
    early = not opts.pick("no_early_stop", False)
    joint = opts.pick("joint_head", False)
    opts.announce("train")

    try:
        tub = Tub.open(args.tub)
        train_view, val_view = load_split(tub, val_fraction, seed)
    except (TubError, ValueError, OSError) as exc:
        print(f"train: tub error: {exc}", file=sys.stderr)
        return EXIT_TUB
    if train_view.skipped:
        print(f"train: skipped {train_view.skipped} unreadable records",
              file=sys.stderr)

    if model_type == "linear":
        model = LinearCnnModel(joint_head=joint, seed=seed)
    else:
        model = RnnModel(sequence_len=sequence_len, seed=seed)

    cfg = TrainConfig(epochs=epochs, batch_size=batch_size, learning_rate=lr,
                      early_stopping=early, seed=seed)
    try:
        report = train(model, train_view, val_view, cfg,
                       log=lambda line: print(line, file=sys.stderr))
    except (TrainingError, TubError) as exc:
        print(f"train: {exc}", file=sys.stderr)
        return EXIT_MODEL

    save_weights(model, args.out)
    report_path = args.report or (str(args.out) + ".csv")
    report.write_csv(report_path)
    print(
        f"trained {model.arch_tag} ({model.param_count} params): "
        f"best epoch {report.best_epoch}, val mse {report.best_val_mse:.6e}, "
        f"{report.wall_seconds:.1f}s; weights -> {args.out}, report -> {report_path}"
    )
    return EXIT_OK


def cmd_eval(args) -> int:
    opts = _Options(args, args.config)
    scenario_name = opts.pick("scenario", "default")
    obstacles = opts.pick("obstacles", False)
    laps = opts.pick("laps", 3)
    seed = opts.pick("seed", 0)
    fmt = opts.pick("format", "text")
    opts.announce("eval")

    try:
        scenario = resolve_scenario(scenario_name, with_obstacles=obstacles)
    except (ScenarioError, OSError) as exc:
        print(f"eval: scenario error: {exc}", file=sys.stderr)
        return EXIT_SCENARIO

    model = None
    if args.model:
        try:
            model = _load_model_checked(args.model, args.type)
        except (WeightsError, OSError) as exc:
            print(f"eval: model error: {exc}", file=sys.stderr)
            return EXIT_MODEL

    try:
        report = evaluate(scenario, laps=laps, model=model,
                          sim_cfg=SimConfig(seed=seed))
    except EvalError as exc:
        print(f"eval: {exc}", file=sys.stderr)
        return EXIT_SCENARIO

    if args.out:
        report.write_csv(args.out)
    if fmt == "json":
        doc = {
            "scenario": report.scenario,
            "pilot": report.pilot,
            "laps_requested": report.laps_requested,
            "laps_completed": report.laps_completed,
            "laps": [
                {"index": l.index, "seconds": l.seconds, "distance": l.distance,
                 "mean_speed": l.mean_speed}
                for l in report.lap_stats
            ],
            "total_seconds": report.total_seconds,
            "total_distance": report.total_distance,
            "mean_speed": report.mean_speed,
            "off_track_events": report.off_track_events,
            "collisions": report.collisions,
            "aborted": report.aborted,
        }
        print(json.dumps(doc, indent=2, sort_keys=True))
    else:
        print(report.summary())
    if report.aborted == "blocked":
        return EXIT_BLOCKED
    return EXIT_OK


def cmd_calibrate(args) -> int:
    opts = _Options(args, args.config)
    frequency = opts.pick("frequency", 60.0)
    steering_trim = opts.pick("steering_trim", 0.0)
    throttle_trim = opts.pick("throttle_trim", 0.0)
    fmt = opts.pick("format", "text")
    opts.announce("calibrate")

    if args.load:
        cfg = load_calibration(args.load)
    else:
        cfg = ActuationConfig(frequency_hz=frequency, steering_trim_us=steering_trim,
                              throttle_trim_us=throttle_trim)

    rows = []
    for value in (-1.0, -0.5, 0.0, 0.5, 1.0):
        steering, throttle = command_to_pwm(NormalizedCommand(value, value), cfg)
        rows.append({
            "value": value,
            "steering_pulse_us": steering.pulse_us,
            "steering_ticks": steering.on_ticks,
            "throttle_pulse_us": throttle.pulse_us,
            "throttle_ticks": throttle.on_ticks,
        })
    if fmt == "json":
        print(json.dumps({"frequency_hz": cfg.frequency_hz, "rows": rows}, indent=2))
    else:
        print(f"frequency {cfg.frequency_hz} Hz, trims: steering "
              f"{cfg.steering_trim_us} us, throttle {cfg.throttle_trim_us} us")
        print(f"{'value':>6} {'steer us':>9} {'ticks':>6} {'thr us':>8} {'ticks':>6}")
        for r in rows:
            print(f"{r['value']:>6} {r['steering_pulse_us']:>9.1f} "
                  f"{r['steering_ticks']:>6} {r['throttle_pulse_us']:>8.1f} "
                  f"{r['throttle_ticks']:>6}")
    if args.save:
        save_calibration(cfg, args.save)
        print(f"calibration saved to {args.save}", file=sys.stderr)
    return EXIT_OK


def cmd_tub_stats(args) -> int:
    opts = _Options(args, args.config)
    fmt = opts.pick("format", "text")
    opts.announce("tub stats")
    try:
        tub = Tub.open(args.dir)
    except TubError as exc:
        print(f"tub stats: {exc}", file=sys.stderr)
        return EXIT_TUB
    stats = tub_stats(tub)
    if stats["records"] == 0:
        print(f"tub stats: {args.dir} holds no records", file=sys.stderr)
        return EXIT_TUB
    if fmt == "json":
        print(json.dumps(stats, indent=2, sort_keys=True))
    else:
        print(f"{stats['records']} records over {stats['runs']} run(s), "
              f"max lap {stats['laps']}")
        for mode_name, count in stats["by_mode"].items():
            print(f"  {mode_name}: {count}")
        print(f"  steering mean {stats['steering_mean']:+.3f} "
              f"std {stats['steering_std']:.3f}")
        print(f"  throttle mean {stats['throttle_mean']:+.3f} "
              f"std {stats['throttle_std']:.3f}")
        if stats["recovered_torn_line"]:
            print("  note: a torn trailing manifest line was ignored")
    return EXIT_OK


def cmd_sensorlink_dump(args) -> int:
    try:
        data = Path(args.file).read_bytes()
    except OSError as exc:
        print(f"sensorlink dump: {exc}", file=sys.stderr)
        return EXIT_USAGE
    frames, diags = parse_stream(data)
    sys.stdout.write(frames_to_csv(frames))
    print(
        f"{len(frames)} frames; resyncs {diags.resyncs}, "
        f"crc failures {diags.crc_failures}, truncated {diags.truncated}",
        file=sys.stderr,
    )
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="autorc",
        description="Simulated RC car: drive, collect, train, evaluate.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", help="JSON config file (flags override it)")
        p.add_argument("--seed", type=int, help="deterministic run seed")

    p = sub.add_parser("drive", help="run the vehicle loop")
    common(p)
    p.add_argument("--scenario", help="builtin name or scenario file path")
    p.add_argument("--obstacles", action="store_const", const=True,
                   help="add the builtin obstacles")
    p.add_argument("--model", help="weight file for auto mode")
    p.add_argument("--type", choices=("linear", "rnn"),
                   help="expected model architecture")
    p.add_argument("--mode", choices=("user", "expert", "auto"))
    p.add_argument("--ticks", type=int, help="stop after N ticks")
    p.add_argument("--laps", type=int, help="stop after N laps")
    p.add_argument("--rate-hz", dest="rate_hz", type=float)
    p.add_argument("--record", help="create a tub at this directory and record")
    p.add_argument("--serve", action="store_const", const=True,
                   help="start the telemetry HTTP service (wall clock)")
    p.add_argument("--host")
    p.add_argument("--port", type=int)
    p.add_argument("--ui-dir", dest="ui_dir", help="static web UI directory")
    p.set_defaults(func=cmd_drive)

    p = sub.add_parser("collect", help="expert-drive and record a dataset")
    common(p)
    p.add_argument("--scenario")
    p.add_argument("--obstacles", action="store_const", const=True)
    p.add_argument("--frames", type=int, help="records to capture")
    p.add_argument("--record", required=True, help="tub directory to create")
    p.add_argument("--jitter", type=float,
                   help="steering noise std for state coverage")
    p.set_defaults(func=cmd_collect)

    p = sub.add_parser("train", help="fit a model on a tub")
    common(p)
    p.add_argument("--tub", required=True)
    p.add_argument("--type", choices=("linear", "rnn"))
    p.add_argument("--out", required=True, help="weight file to write")
    p.add_argument("--epochs", type=int)
    p.add_argument("--batch-size", dest="batch_size", type=int)
    p.add_argument("--lr", type=float)
    p.add_argument("--val-fraction", dest="val_fraction", type=float)
    p.add_argument("--sequence-len", dest="sequence_len", type=int)
    p.add_argument("--no-early-stop", dest="no_early_stop",
                   action="store_const", const=True)
    p.add_argument("--joint-head", dest="joint_head", action="store_const",
                   const=True, help="one 2-unit head instead of two 1-unit heads")
    p.add_argument("--report", help="training CSV path (default <out>.csv)")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="closed-loop lap evaluation")
    common(p)
    p.add_argument("--scenario")
    p.add_argument("--obstacles", action="store_const", const=True)
    p.add_argument("--model", help="weight file; omit to evaluate the expert")
    p.add_argument("--type", choices=("linear", "rnn"))
    p.add_argument("--laps", type=int)
    p.add_argument("--out", help="write per-lap CSV here")
    p.add_argument("--format", choices=("text", "json"))
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("calibrate", help="PWM calibration table")
    common(p)
    p.add_argument("--frequency", type=float)
    p.add_argument("--steering-trim", dest="steering_trim", type=float)
    p.add_argument("--throttle-trim", dest="throttle_trim", type=float)
    p.add_argument("--save", help="write calibration file")
    p.add_argument("--load", help="read calibration file instead of flags")
    p.add_argument("--format", choices=("text", "json"))
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("tub", help="dataset inspection")
    tub_sub = p.add_subparsers(dest="tub_command", required=True)
    ps = tub_sub.add_parser("stats", help="summarize a tub directory")
    common(ps)
    ps.add_argument("dir")
    ps.add_argument("--format", choices=("text", "json"))
    ps.set_defaults(func=cmd_tub_stats)

    p = sub.add_parser("sensorlink", help="sensor wire-format tools")
    sl_sub = p.add_subparsers(dest="sensorlink_command", required=True)
    pd = sl_sub.add_parser("dump", help="parse a captured byte stream to CSV")
    pd.add_argument("file")
    pd.set_defaults(func=cmd_sensorlink_dump)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"{args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
