import { describe, expect, it } from "vitest";
import { Backoff } from "../src/backoff.js";

describe("Backoff", () => {
  it("doubles from the base and caps at the ceiling", () => {
    const b = new Backoff(250, 5000);
    const seen = Array.from({ length: 7 }, () => b.next());
    expect(seen).toEqual([250, 500, 1000, 2000, 4000, 5000, 5000]);
  });

  it("reset starts the ladder over", () => {
    const b = new Backoff(250, 5000);
    b.next();
    b.next();
    b.reset();
    expect(b.next()).toBe(250);
    expect(b.attempts).toBe(1);
  });

  it("rejects an inverted window", () => {
    expect(() => new Backoff(0, 100)).toThrow();
    expect(() => new Backoff(500, 100)).toThrow();
  });
});
