import type { TeleopCommand } from "./types.js";

export function clamp(v: number): number {
  if (Number.isNaN(v)) return 0;
  return Math.min(1, Math.max(-1, v));
}

/**
 * Keyboard teleop: arrows or WASD held down map to full deflection.
 * Steering follows the vehicle convention (positive turns left), so
 * the left arrow sends +1; the on-screen labels say so.
 */
export class KeyboardInput {
  private down = new Set<string>();

  readonly handleKeyDown = (ev: KeyboardEvent): void => {
    if (AXIS_KEYS.has(ev.key)) {
      this.down.add(ev.key);
      ev.preventDefault();
    }
  };

  readonly handleKeyUp = (ev: KeyboardEvent): void => {
    this.down.delete(ev.key);
  };

  attach(target: EventTarget): void {
    target.addEventListener("keydown", this.handleKeyDown as EventListener);
    target.addEventListener("keyup", this.handleKeyUp as EventListener);
  }

  get active(): boolean {
    return this.down.size > 0;
  }

  command(): TeleopCommand {
    let steering = 0;
    let throttle = 0;
    if (this.down.has("ArrowLeft") || this.down.has("a")) steering += 1;
    if (this.down.has("ArrowRight") || this.down.has("d")) steering -= 1;
    if (this.down.has("ArrowUp") || this.down.has("w")) throttle += 1;
    if (this.down.has("ArrowDown") || this.down.has("s")) throttle -= 1;
    return { steering: clamp(steering), throttle: clamp(throttle) };
  }
}

const AXIS_KEYS = new Set([
  "ArrowLeft", "ArrowRight", "ArrowUp", "ArrowDown",
  "a", "d", "w", "s",
]);

/**
 * Pointer joystick over a square pad. Each axis is the pointer offset
 * from the pad center over the half-width, clamped per axis, so a 45
 * degree half-deflection reads 0.5 on both. Vertical drag up means
 * forward; horizontal drag left means positive steering, matching the
 * keyboard.
 */
export class JoystickInput {
  private pad: HTMLElement | null = null;
  private knob: HTMLElement | null = null;
  private current: TeleopCommand = { steering: 0, throttle: 0 };
  private pressed = false;

  attach(pad: HTMLElement, knob: HTMLElement | null = null): void {
    this.pad = pad;
    this.knob = knob;
    pad.addEventListener("pointerdown", this.handleDown as EventListener);
    pad.addEventListener("pointermove", this.handleMove as EventListener);
    pad.addEventListener("pointerup", this.handleUp as EventListener);
    pad.addEventListener("pointercancel", this.handleUp as EventListener);
    pad.addEventListener("pointerleave", this.handleUp as EventListener);
  }

  readonly handleDown = (ev: PointerEvent): void => {
    this.pressed = true;
    this.track(ev);
  };

  readonly handleMove = (ev: PointerEvent): void => {
    if (this.pressed) this.track(ev);
  };

  readonly handleUp = (): void => {
    this.pressed = false;
    this.current = { steering: 0, throttle: 0 };
    this.position(0, 0);
  };

  private track(ev: PointerEvent): void {
    if (!this.pad) return;
    const rect = this.pad.getBoundingClientRect();
    const hw = rect.width / 2;
    const hh = rect.height / 2;
    if (hw <= 0 || hh <= 0) return;
    const dx = ev.clientX - (rect.left + hw);
    const dy = ev.clientY - (rect.top + hh);
    // left of center = positive steering, above center = forward
    const steering = clamp(-dx / hw);
    const throttle = clamp(-dy / hh);
    this.current = { steering, throttle };
    this.position(clamp(dx / hw), clamp(dy / hh));
  }

  private position(nx: number, ny: number): void {
    if (this.knob) {
      this.knob.style.left = `${50 + nx * 50}%`;
      this.knob.style.top = `${50 + ny * 50}%`;
    }
  }

  get active(): boolean {
    return this.pressed;
  }

  command(): TeleopCommand {
    return { ...this.current };
  }
}
