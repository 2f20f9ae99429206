import { beforeEach, describe, expect, it } from "vitest";

import { authHeader, clearSession, currentSession, setSession } from "../src/client/session.js";

describe("session store", () => {
  beforeEach(() => clearSession());

  it("holds the token in memory only", () => {
    setSession({ token: "t0ken", role: "supervisor", username: "sam", expiresAt: Date.now() + 1000 });
    expect(currentSession()?.role).toBe("supervisor");
    expect(authHeader()).toEqual({ Authorization: "Bearer t0ken" });
  });

  it("expires by the clock", () => {
    setSession({ token: "t", role: "general", username: "gus", expiresAt: 1000 });
    expect(currentSession(999)).not.toBeNull();
    expect(currentSession(1000)).toBeNull();
    expect(authHeader()).toEqual({});
  });

  it("clears on logout", () => {
    setSession({ token: "t", role: "admin", username: "alice", expiresAt: Date.now() + 1000 });
    clearSession();
    expect(currentSession()).toBeNull();
  });
});
