import type { Snapshot } from "./types.js";

/** Readout elements the cockpit fills in, looked up once at startup. */
export interface Readouts {
  speed: HTMLElement;
  steering: HTMLElement;
  throttle: HTMLElement;
  mode: HTMLElement;
  lap: HTMLElement;
  lapTime: HTMLElement;
  recording: HTMLElement;
  records: HTMLElement;
  progress: HTMLElement;
  flags: HTMLElement;
}

export const fmt = {
  speed: (v: number): string => `${v.toFixed(2)} m/s`,
  axis: (v: number): string => v.toFixed(2),
  seconds: (v: number): string => `${v.toFixed(1)} s`,
  meters: (v: number): string => `${v.toFixed(1)} m`,
};

/**
 * Paint the latest snapshot into the readouts. Values come straight
 * from the snapshot: no smoothing, no client-side physics.
 */
export function renderSnapshot(
  els: Readouts,
  snap: Snapshot,
  recordCount: number,
): void {
  els.speed.textContent = fmt.speed(snap.speed);
  els.steering.textContent = fmt.axis(snap.steering);
  els.throttle.textContent = fmt.axis(snap.throttle);
  els.mode.textContent = snap.mode;
  els.lap.textContent = String(snap.lap);
  els.lapTime.textContent = fmt.seconds(snap.lap_time);
  els.recording.textContent = snap.recording ? "on" : "off";
  els.records.textContent = String(recordCount);
  els.progress.textContent = fmt.meters(snap.progress);
  const flags: string[] = [];
  if (snap.off_track) flags.push("off track");
  if (snap.blocked) flags.push("blocked");
  els.flags.textContent = flags.join(", ");
}
