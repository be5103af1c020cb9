import { ApiClient, ApiError } from "./api.js";
import { Backoff } from "./backoff.js";
import { JoystickInput, KeyboardInput, clamp } from "./input.js";
import { Readouts, renderSnapshot } from "./render.js";
import type { ControlRequest, Mode, Snapshot } from "./types.js";

/** Minimal EventSource surface, so tests can swap in a fake. */
export interface StreamSource {
  onopen: ((ev: unknown) => void) | null;
  onmessage: ((ev: { data: string }) => void) | null;
  onerror: ((ev: unknown) => void) | null;
  close(): void;
}

export type StreamCtor = new (url: string) => StreamSource;

export interface CockpitOptions {
  sendHz?: number;
  staleMs?: number;
}

const MODES: Mode[] = ["user", "expert", "auto"];

/**
 * Wires the page together: one snapshot stream in, teleop and control
 * commands out. Teleop goes only in user mode, at a fixed cadence,
 * with at most one POST in flight (the newest command replaces any
 * queued one). A dropped stream reconnects on an exponential backoff,
 * never more than one attempt per window.
 */
export class Cockpit {
  readonly keyboard = new KeyboardInput();
  readonly joystick = new JoystickInput();
  private readonly backoff = new Backoff();

  private els!: Readouts;
  private fpv!: HTMLImageElement;
  private saliency!: HTMLImageElement;
  private saliencyHint!: HTMLElement;
  private staleBadge!: HTMLElement;
  private banner!: HTMLElement;
  private panes!: HTMLElement;
  private modeButtons = new Map<Mode, HTMLButtonElement>();
  private recordButton!: HTMLButtonElement;

  private stream: StreamSource | null = null;
  private reconnectTimer: ReturnType<typeof setTimeout> | null = null;
  private snapshot: Snapshot | null = null;
  private snapshotAt = 0;
  private recordCount = 0;
  private lastCountedFrame = -1;

  private inFlight = false;
  private queued: ControlRequest | null = null;
  private teleopWasActive = false;

  private readonly sendIntervalMs: number;
  private readonly staleMs: number;

  constructor(
    private readonly doc: Document,
    private readonly api: ApiClient,
    private readonly streamCtor: StreamCtor,
    opts: CockpitOptions = {},
  ) {
    this.sendIntervalMs = 1000 / (opts.sendHz ?? 20);
    this.staleMs = opts.staleMs ?? 2000;
  }

  start(): void {
    const byId = <T extends HTMLElement>(id: string): T => {
      const el = this.doc.getElementById(id);
      if (!el) throw new Error(`cockpit: missing #${id}`);
      return el as T;
    };
    this.els = {
      speed: byId("ro-speed"),
      steering: byId("ro-steering"),
      throttle: byId("ro-throttle"),
      mode: byId("ro-mode"),
      lap: byId("ro-lap"),
      lapTime: byId("ro-laptime"),
      recording: byId("ro-recording"),
      records: byId("ro-records"),
      progress: byId("ro-progress"),
      flags: byId("ro-flags"),
    };
    this.fpv = byId<HTMLImageElement>("fpv");
    this.saliency = byId<HTMLImageElement>("saliency");
    this.saliencyHint = byId("saliency-hint");
    this.staleBadge = byId("badge-stale");
    this.banner = byId("banner-disconnected");
    this.panes = byId("panes");

    for (const mode of MODES) {
      const btn = byId<HTMLButtonElement>(`btn-${mode}`);
      this.modeButtons.set(mode, btn);
      btn.addEventListener("click", () => this.enqueue({ mode }));
    }
    this.recordButton = byId<HTMLButtonElement>("btn-record");
    this.recordButton.addEventListener("click", () => {
      this.enqueue({ recording: !(this.snapshot?.recording ?? false) });
    });

    this.keyboard.attach(this.doc);
    this.joystick.attach(byId("pad"), this.doc.getElementById("knob"));

    this.fpv.src = this.api.videoUrl;
    this.snapshotAt = Date.now();
    this.openStream();
    setInterval(() => this.teleopTick(), this.sendIntervalMs);
    setInterval(() => this.staleTick(), 250);
  }

  // -- stream ----------------------------------------------------------

  private openStream(): void {
    if (this.stream) {
      this.stream.close();
    }
    const es = new this.streamCtor(this.api.streamUrl);
    this.stream = es;
    es.onopen = () => {
      this.backoff.reset();
      this.setDisconnected(false);
    };
    es.onmessage = (ev) => {
      this.backoff.reset();
      this.setDisconnected(false);
      this.onSnapshot(JSON.parse(ev.data) as Snapshot);
    };
    es.onerror = () => {
      es.close();
      this.setDisconnected(true);
      this.scheduleReconnect();
    };
  }

  private scheduleReconnect(): void {
    if (this.reconnectTimer !== null) return; // one attempt per window
    this.reconnectTimer = setTimeout(() => {
      this.reconnectTimer = null;
      this.openStream();
    }, this.backoff.next());
  }

  private onSnapshot(snap: Snapshot): void {
    this.snapshot = snap;
    this.snapshotAt = Date.now();
    if (snap.recording && snap.frame_id !== this.lastCountedFrame) {
      this.recordCount += 1;
      this.lastCountedFrame = snap.frame_id;
    }
    renderSnapshot(this.els, snap, this.recordCount);
    for (const [mode, btn] of this.modeButtons) {
      btn.classList.toggle("active", snap.mode === mode);
    }
    this.updateSaliency(snap.mode);
    this.staleTick();
  }

  private updateSaliency(mode: Mode): void {
    if (mode === "auto") {
      if (!this.saliency.getAttribute("src")) {
        this.saliency.src = this.api.saliencyUrl;
      }
      this.saliency.classList.remove("disabled");
      this.saliencyHint.hidden = true;
    } else {
      if (this.saliency.getAttribute("src")) {
        this.saliency.removeAttribute("src");
      }
      this.saliency.classList.add("disabled");
      this.saliencyHint.hidden = false;
    }
  }

  // -- teleop ----------------------------------------------------------

  private teleopTick(): void {
    if (this.snapshot?.mode !== "user") {
      // never send teleop outside user mode; drop any held state too
      this.teleopWasActive = false;
      return;
    }
    const source = this.joystick.active ? this.joystick : this.keyboard;
    const active = this.joystick.active || this.keyboard.active;
    if (active) {
      const cmd = source.command();
      this.enqueue({
        teleop: { steering: clamp(cmd.steering), throttle: clamp(cmd.throttle) },
      });
      this.teleopWasActive = true;
    } else if (this.teleopWasActive) {
      this.enqueue({ teleop: { steering: 0, throttle: 0 } });
      this.teleopWasActive = false;
    }
  }

  // -- control sending -------------------------------------------------

  private enqueue(body: ControlRequest): void {
    if (this.inFlight) {
      this.queued = body; // newest wins, nothing is buffered behind it
      return;
    }
    this.dispatch(body);
  }

  private dispatch(body: ControlRequest): void {
    this.inFlight = true;
    this.api.control(body).then(
      () => {
        this.inFlight = false;
        this.setDisconnected(false);
        const next = this.queued;
        this.queued = null;
        if (next) this.dispatch(next);
      },
      (err) => {
        this.inFlight = false;
        this.queued = null;
        if (!(err instanceof ApiError)) {
          // the server did not answer at all
          this.setDisconnected(true);
        }
      },
    );
  }

  // -- status chrome ----------------------------------------------------

  private staleTick(): void {
    const stale = Date.now() - this.snapshotAt > this.staleMs;
    this.staleBadge.hidden = !stale;
    this.panes.classList.toggle("stale", stale);
  }

  private setDisconnected(down: boolean): void {
    this.banner.hidden = !down;
  }
}
