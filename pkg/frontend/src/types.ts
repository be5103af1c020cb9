/** Wire types, mirroring the telemetry service exactly. */

export type Mode = "user" | "expert" | "auto";

/** One drive-loop telemetry snapshot as served by /api/state and /api/stream. */
export interface Snapshot {
  timestamp: number;
  frame_id: number;
  mode: Mode;
  steering: number;
  throttle: number;
  speed: number;
  encoder_ticks: number;
  yaw_rate: number;
  lap: number;
  lap_time: number;
  overruns: number;
  recording: boolean;
  x: number;
  y: number;
  heading: number;
  progress: number;
  lateral: number;
  off_track: boolean;
  blocked: boolean;
}

export interface TeleopCommand {
  steering: number;
  throttle: number;
}

export interface ControlRequest {
  mode?: Mode;
  recording?: boolean;
  teleop?: TeleopCommand;
}

export interface ControlAck {
  mode: string;
  recording: boolean;
  teleop?: TeleopCommand;
  teleop_ignored?: string;
  recording_ignored?: string;
}
