import express from "express";
import { AddressInfo } from "node:net";
import { afterEach, beforeEach, describe, expect, it } from "vitest";

import { Bridge } from "../src/bridge/server.js";
import { connectSse } from "./sse.js";

const SPOT_51 = {
  id: "spot:51",
  type: "ParkingSpot",
  name: "51",
  status: "occupied",
  refVehicle: "vehicle:501",
  refOffStreetParking: "parking:1",
};

interface FakeBroker {
  url: string;
  subscriptions: any[];
  close(): void;
}

function startFakeBroker(initialDocs: any[]): Promise<FakeBroker> {
  const app = express();
  app.use(express.json());
  const subscriptions: any[] = [];
  app.post("/v2/subscriptions", (req, res) => {
    subscriptions.push(req.body);
    res.status(201).json({ id: `sub-${subscriptions.length}` });
  });
  app.get("/v2/entities", (_req, res) => {
    res.json(initialDocs);
  });
  return new Promise((resolve) => {
    const server = app.listen(0, "127.0.0.1", () => {
      const port = (server.address() as AddressInfo).port;
      resolve({ url: `http://127.0.0.1:${port}`, subscriptions, close: () => server.close() });
    });
  });
}

describe("ui bridge", () => {
  let broker: FakeBroker;
  let bridge: Bridge;
  let bridgeUrl: string;

  beforeEach(async () => {
    broker = await startFakeBroker([{ id: "parking:1", type: "OffStreetParking", availableSpotNumber: 1450 }]);
    bridge = new Bridge({
      brokerUrl: broker.url,
      proxyUrl: "http://proxy.example:1027",
      identityUrl: "http://identity.example:3005",
    });
    const port = await bridge.listen(0);
    bridgeUrl = `http://127.0.0.1:${port}`;
    await bridge.attach();
  });

  afterEach(async () => {
    await bridge.close();
    broker.close();
  });

  it("subscribes to every change and pulls the initial snapshot", () => {
    expect(broker.subscriptions).toHaveLength(1);
    const sub = broker.subscriptions[0];
    expect(sub.subject.entities[0].idPattern).toBe(".*");
    expect(sub.notification.url).toContain("/notify");
    expect(bridge.snapshot().map((d) => d.id)).toEqual(["parking:1"]);
  });

  it("exposes proxy and identity addresses, never the broker's", async () => {
    const config = await (await fetch(`${bridgeUrl}/ui/config`)).json();
    expect(config).toEqual({
      proxyUrl: "http://proxy.example:1027",
      identityUrl: "http://identity.example:3005",
    });
    expect(JSON.stringify(config)).not.toContain(broker.url);
  });

  it("streams a snapshot first, then deltas as they arrive", async () => {
    const client = await connectSse(`${bridgeUrl}/ui/stream`);
    try {
      const snapshot = await client.next((e) => e.kind === "snapshot");
      expect(snapshot.docs.map((d: any) => d.id)).toEqual(["parking:1"]);

      await fetch(`${bridgeUrl}/notify`, {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify({ subscriptionId: "sub-1", data: [SPOT_51] }),
      });
      const delta = await client.next((e) => e.kind === "entity" && e.doc.id === "spot:51");
      expect(delta.doc.status).toBe("occupied");
    } finally {
      client.close();
    }
  });

  it("replays the latest state to late-joining clients", async () => {
    await fetch(`${bridgeUrl}/notify`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ subscriptionId: "sub-1", data: [SPOT_51] }),
    });
    const late = await connectSse(`${bridgeUrl}/ui/stream`);
    try {
      const snapshot = await late.next((e) => e.kind === "snapshot");
      const ids = snapshot.docs.map((d: any) => d.id).sort();
      expect(ids).toEqual(["parking:1", "spot:51"]);
    } finally {
      late.close();
    }
  });

  it("keeps only the latest document per entity", async () => {
    for (const status of ["occupied", "free"]) {
      await fetch(`${bridgeUrl}/notify`, {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify({ subscriptionId: "s", data: [{ ...SPOT_51, status }] }),
      });
    }
    const docs = bridge.snapshot().filter((d) => d.id === "spot:51");
    expect(docs).toHaveLength(1);
    expect(docs[0].status).toBe("free");
  });
});
