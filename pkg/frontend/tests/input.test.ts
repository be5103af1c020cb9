import { describe, expect, it } from "vitest";
import { JoystickInput, KeyboardInput, clamp } from "../src/input.js";
import { stubRect } from "./helpers.js";

function key(type: "keydown" | "keyup", k: string): KeyboardEvent {
  return new KeyboardEvent(type, { key: k, cancelable: true });
}

function pointer(type: string, x: number, y: number): MouseEvent {
  return new MouseEvent(type, { clientX: x, clientY: y });
}

describe("clamp", () => {
  it("pins to [-1, 1] and maps NaN to 0", () => {
    expect(clamp(0.3)).toBe(0.3);
    expect(clamp(7)).toBe(1);
    expect(clamp(-2)).toBe(-1);
    expect(clamp(NaN)).toBe(0);
  });
});

describe("KeyboardInput", () => {
  it("maps arrows and WASD to full deflection, left is positive", () => {
    const kb = new KeyboardInput();
    const target = document.createElement("div");
    kb.attach(target);

    target.dispatchEvent(key("keydown", "ArrowLeft"));
    target.dispatchEvent(key("keydown", "w"));
    expect(kb.active).toBe(true);
    expect(kb.command()).toEqual({ steering: 1, throttle: 1 });

    target.dispatchEvent(key("keyup", "ArrowLeft"));
    target.dispatchEvent(key("keydown", "ArrowRight"));
    target.dispatchEvent(key("keyup", "w"));
    target.dispatchEvent(key("keydown", "s"));
    expect(kb.command()).toEqual({ steering: -1, throttle: -1 });
  });

  it("opposing keys cancel and releasing everything goes idle", () => {
    const kb = new KeyboardInput();
    const target = document.createElement("div");
    kb.attach(target);

    target.dispatchEvent(key("keydown", "a"));
    target.dispatchEvent(key("keydown", "d"));
    expect(kb.command()).toEqual({ steering: 0, throttle: 0 });
    expect(kb.active).toBe(true);

    target.dispatchEvent(key("keyup", "a"));
    target.dispatchEvent(key("keyup", "d"));
    expect(kb.active).toBe(false);
    expect(kb.command()).toEqual({ steering: 0, throttle: 0 });
  });

  it("ignores unrelated keys", () => {
    const kb = new KeyboardInput();
    const target = document.createElement("div");
    kb.attach(target);
    target.dispatchEvent(key("keydown", "x"));
    expect(kb.active).toBe(false);
  });
});

describe("JoystickInput", () => {
  function makePad(): { pad: HTMLElement; joy: JoystickInput } {
    const pad = document.createElement("div");
    stubRect(pad, 100); // square pad, center (50, 50), half width 50
    const joy = new JoystickInput();
    joy.attach(pad);
    return { pad, joy };
  }

  it("half deflection at 45 degrees reads 0.5 on both axes", () => {
    const { pad, joy } = makePad();
    pad.dispatchEvent(pointer("pointerdown", 25, 25)); // up-left quadrant
    expect(joy.active).toBe(true);
    const cmd = joy.command();
    expect(cmd.steering).toBeCloseTo(0.5, 10);
    expect(cmd.throttle).toBeCloseTo(0.5, 10);
  });

  it("clamps per axis when dragged outside the pad", () => {
    const { pad, joy } = makePad();
    pad.dispatchEvent(pointer("pointerdown", 50, 50));
    pad.dispatchEvent(pointer("pointermove", 200, -80));
    expect(joy.command()).toEqual({ steering: -1, throttle: 1 });
  });

  it("ignores moves before a press and recenters on release", () => {
    const { pad, joy } = makePad();
    pad.dispatchEvent(pointer("pointermove", 10, 10));
    expect(joy.active).toBe(false);
    expect(joy.command()).toEqual({ steering: 0, throttle: 0 });

    pad.dispatchEvent(pointer("pointerdown", 10, 50));
    expect(joy.command().steering).toBeCloseTo(0.8, 10);
    pad.dispatchEvent(pointer("pointerup", 10, 50));
    expect(joy.active).toBe(false);
    expect(joy.command()).toEqual({ steering: 0, throttle: 0 });
  });
});
