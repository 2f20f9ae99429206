/**
 * Steering loop against the real backend stack: a supervisor closes a spot
 * through the proxy and both the grid delta and the bulb command follow
 * within the repaint budget; a general user's attempt is denied and changes
 * nothing.
 */

import { spawn, ChildProcess } from "node:child_process";
import readline from "node:readline";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { Bridge } from "../src/bridge/server.js";
import { spotViewFrom } from "../src/shared/state.js";
import { connectSse, SseClient } from "./sse.js";

interface StackUrls {
  broker: string;
  agent: string;
  bulbs: string;
  identity: string;
  proxy: string;
}

let stack: ChildProcess;
let urls: StackUrls;
let bridge: Bridge;
let bridgeUrl: string;
let stream: SseClient;

async function login(username: string, password: string): Promise<string> {
  const response = await fetch(`${urls.identity}/oauth/token`, {
    method: "POST",
    headers: { "Content-Type": "application/x-www-form-urlencoded" },
    body: new URLSearchParams({ grant_type: "password", username, password }),
  });
  expect(response.status).toBe(200);
  return ((await response.json()) as { access_token: string }).access_token;
}

function patchSpot(token: string, spot: string, status: string): Promise<Response> {
  return fetch(`${urls.proxy}/v2/entities/spot:${spot}/attrs?options=keyValues`, {
    method: "PATCH",
    headers: { "Content-Type": "application/json", Authorization: `Bearer ${token}` },
    body: JSON.stringify({ status }),
  });
}

async function bulbColor(bulbId: string): Promise<string | undefined> {
  const bulbs = (await (await fetch(`${urls.bulbs}/state`)).json()) as {
    state: Record<string, string>;
  };
  return bulbs.state[bulbId];
}

/** The grid delta and the bulb command ride separate subscriptions, so
 * poll the bulb until the deadline instead of assuming an order. */
async function awaitBulbColor(bulbId: string, color: string, deadline: number): Promise<void> {
  for (;;) {
    if ((await bulbColor(bulbId)) === color) {
      return;
    }
    if (Date.now() >= deadline) {
      throw new Error(`bulb ${bulbId} did not turn ${color} in time`);
    }
    await new Promise((resolve) => setTimeout(resolve, 25));
  }
}

beforeAll(async () => {
  stack = spawn("python3", ["-m", "parktwin.sim.devstack"], { stdio: ["ignore", "pipe", "inherit"] });
  const lines = readline.createInterface({ input: stack.stdout! });
  urls = await new Promise<StackUrls>((resolve, reject) => {
    const timer = setTimeout(() => reject(new Error("backend stack did not boot")), 30000);
    lines.once("line", (line) => {
      clearTimeout(timer);
      resolve(JSON.parse(line));
    });
  });

  bridge = new Bridge({ brokerUrl: urls.broker, proxyUrl: urls.proxy, identityUrl: urls.identity });
  const port = await bridge.listen(0);
  bridgeUrl = `http://127.0.0.1:${port}`;
  await bridge.attach();
  stream = await connectSse(`${bridgeUrl}/ui/stream`);

  // park a car at spot 7 so there is something to steer
  const measure = await fetch(`${urls.agent}/iot/d?k=parking-sensors&i=sensor-7`, {
    method: "POST",
    headers: { "Content-Type": "text/plain" },
    body: "id|777001|t|car|p|7",
  });
  expect(measure.status).toBe(200);
  await stream.next((e) => e.kind === "entity" && e.doc.id === "spot:7" && e.doc.status === "occupied");
}, 60000);

afterAll(async () => {
  stream?.close();
  await bridge?.close();
  stack?.kill("SIGTERM");
  await new Promise((resolve) => stack?.once("exit", resolve));
});

describe("dashboard steering loop", () => {
  it("supervisor closes a spot: grid cell turns red and the bulb follows within 2 s", async () => {
    const token = await login("supervisor", "supervisor-secret");
    const started = Date.now();
    const response = await patchSpot(token, "7", "closed");
    expect(response.status).toBe(204);

    const delta = await stream.next(
      (e) => e.kind === "entity" && e.doc.id === "spot:7" && e.doc.status === "closed",
      2000,
    );
    expect(spotViewFrom(delta.doc)?.color).toBe("red");
    await awaitBulbColor("bulb:0007", "red", started + 2000);
    expect(Date.now() - started).toBeLessThan(2000);
  });

  it("general user's attempt is denied and the twin is unchanged", async () => {
    const token = await login("general", "general-secret");
    const response = await patchSpot(token, "7", "free");
    expect(response.status).toBe(403);

    const read = await fetch(`${urls.proxy}/v2/entities/spot:7?options=keyValues`, {
      headers: { Authorization: `Bearer ${token}` },
    });
    const doc = (await read.json()) as { status: string };
    expect(doc.status).toBe("closed");
    expect(await bulbColor("bulb:0007")).toBe("red");
  });

  it("reads for the grid flow through the proxy for every role", async () => {
    const token = await login("general", "general-secret");
    const response = await fetch(`${urls.proxy}/v2/entities?type=ParkingSpot&options=keyValues`, {
      headers: { Authorization: `Bearer ${token}` },
    });
    expect(response.status).toBe(200);
    const docs = (await response.json()) as Array<{ id: string }>;
    expect(docs.map((d) => d.id)).toContain("spot:7");
  });
});
