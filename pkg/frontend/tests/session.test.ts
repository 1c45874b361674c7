import { describe, expect, it } from "vitest";

import { QuerySession } from "../src/session";
import { result } from "./helpers";

describe("QuerySession", () => {
  it("appends completed queries to the history in order", () => {
    const session = new QuerySession();
    session.begin("first");
    session.complete(result({ query: "first" }));
    session.begin("second");
    session.complete(result({ query: "second" }));
    expect(session.history.map((e) => e.query)).toEqual(["first", "second"]);
  });

  it("allows at most one pending query", () => {
    const session = new QuerySession();
    session.begin("first");
    expect(session.isPending).toBe(true);
    expect(() => session.begin("second")).toThrowError(/already pending/);
  });

  it("cancel aborts the in-flight signal and clears pending", () => {
    const session = new QuerySession();
    const signal = session.begin("first");
    expect(signal.aborted).toBe(false);
    session.cancel();
    expect(signal.aborted).toBe(true);
    expect(session.isPending).toBe(false);
    expect(session.history).toHaveLength(0); // cancelled queries never enter history
  });

  it("fail clears pending without touching history", () => {
    const session = new QuerySession();
    session.begin("first");
    session.fail();
    expect(session.isPending).toBe(false);
    expect(session.history).toHaveLength(0);
  });

  it("history survives later failures (append-only)", () => {
    const session = new QuerySession();
    session.begin("kept");
    const entry = session.complete(result({ query: "kept" }));
    session.begin("failing");
    session.fail();
    expect(session.history).toHaveLength(1);
    expect(session.history[0]).toBe(entry);
  });
});
