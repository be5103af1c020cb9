import { vi } from "vitest";
import type { Snapshot } from "../src/types.js";

/** Scriptable stand-in for the browser EventSource. */
export class FakeEventSource {
  static instances: FakeEventSource[] = [];

  onopen: ((ev: unknown) => void) | null = null;
  onmessage: ((ev: { data: string }) => void) | null = null;
  onerror: ((ev: unknown) => void) | null = null;
  closed = false;

  constructor(readonly url: string) {
    FakeEventSource.instances.push(this);
  }

  close(): void {
    this.closed = true;
  }

  open(): void {
    this.onopen?.({});
  }

  emit(snap: Snapshot): void {
    this.onmessage?.({ data: JSON.stringify(snap) });
  }

  fail(): void {
    this.onerror?.({});
  }

  static get last(): FakeEventSource {
    return this.instances[this.instances.length - 1];
  }

  static reset(): void {
    this.instances = [];
  }
}

export function makeSnapshot(overrides: Partial<Snapshot> = {}): Snapshot {
  return {
    timestamp: 1.0,
    frame_id: 1,
    mode: "user",
    steering: 0.0,
    throttle: 0.0,
    speed: 0.0,
    encoder_ticks: 0,
    yaw_rate: 0.0,
    lap: 0,
    lap_time: 0.0,
    overruns: 0,
    recording: false,
    x: 0.0,
    y: 0.0,
    heading: 0.0,
    progress: 0.0,
    lateral: 0.0,
    off_track: false,
    blocked: false,
    ...overrides,
  };
}

/** The element ids the cockpit wires itself to, as in index.html. */
export const FIXTURE_HTML = `
  <div id="banner-disconnected" hidden></div>
  <div id="badge-stale" hidden></div>
  <div id="panes">
    <img id="fpv">
    <img id="saliency">
    <div id="saliency-hint" title="saliency needs auto mode" hidden></div>
  </div>
  <button id="btn-user"></button>
  <button id="btn-expert"></button>
  <button id="btn-auto"></button>
  <button id="btn-record"></button>
  <div id="pad"><div id="knob"></div></div>
  <table>
    <tr><td id="ro-speed"></td></tr>
    <tr><td id="ro-steering"></td></tr>
    <tr><td id="ro-throttle"></td></tr>
    <tr><td id="ro-mode"></td></tr>
    <tr><td id="ro-lap"></td></tr>
    <tr><td id="ro-laptime"></td></tr>
    <tr><td id="ro-recording"></td></tr>
    <tr><td id="ro-records"></td></tr>
    <tr><td id="ro-progress"></td></tr>
    <tr><td id="ro-flags"></td></tr>
  </table>
`;

export function okResponse(body: unknown): Response {
  return {
    ok: true,
    status: 200,
    json: async () => body,
  } as unknown as Response;
}

export function errorResponse(status: number): Response {
  return {
    ok: false,
    status,
    json: async () => ({ error: "refused" }),
  } as unknown as Response;
}

export function ackFetch() {
  return vi.fn(async () => okResponse({ mode: "user", recording: false }));
}

export function stubRect(el: HTMLElement, size = 100): void {
  el.getBoundingClientRect = () =>
    ({
      left: 0,
      top: 0,
      width: size,
      height: size,
      right: size,
      bottom: size,
      x: 0,
      y: 0,
      toJSON: () => ({}),
    }) as DOMRect;
}
