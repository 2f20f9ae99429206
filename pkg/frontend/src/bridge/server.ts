/**
 * UI bridge: subscribes to the broker on the browsers' behalf and fans
 * context changes out over a server-push channel (SSE).
 *
 * Broker notifications are server-to-server HTTP POSTs that browsers cannot
 * receive, so the bridge keeps the latest entity documents and replays a
 * snapshot to every new /ui/stream connection before streaming deltas.
 * Browsers never learn the broker address: their REST calls go to the
 * enforcement proxy named in /ui/config.
 */

import express, { Request, Response } from "express";
import http from "node:http";
import { AddressInfo } from "node:net";

import { EntityDoc } from "../shared/state.js";

export interface BridgeOptions {
  brokerUrl: string;
  proxyUrl: string;
  identityUrl: string;
  publicDir?: string;
}

interface StreamClient {
  res: Response;
  heartbeat: NodeJS.Timeout;
}

export class Bridge {
  private readonly options: BridgeOptions;
  private readonly cache = new Map<string, EntityDoc>();
  private readonly clients = new Set<StreamClient>();
  readonly app: express.Express;
  private server: http.Server | null = null;
  subscriptionId: string | null = null;

  constructor(options: BridgeOptions) {
    this.options = options;
    this.app = express();
    this.app.use(express.json());

    this.app.get("/ui/config", (_req, res) => {
      res.json({ proxyUrl: this.options.proxyUrl, identityUrl: this.options.identityUrl });
    });

    this.app.post("/notify", (req, res) => {
      const docs: EntityDoc[] = req.body?.data ?? [];
      for (const doc of docs) {
        this.ingest(doc);
      }
      res.status(200).json({ received: docs.length });
    });

    this.app.get("/ui/stream", (req, res) => this.openStream(req, res));

    if (options.publicDir) {
      this.app.use(express.static(options.publicDir));
    }
  }

  /** Latest documents, for snapshot replay and tests. */
  snapshot(): EntityDoc[] {
    return [...this.cache.values()];
  }

  private ingest(doc: EntityDoc): void {
    if (!doc || typeof doc.id !== "string") {
      return;
    }
    this.cache.set(doc.id, doc);
    this.broadcast({ kind: "entity", doc });
  }

  private openStream(req: Request, res: Response): void {
    res.writeHead(200, {
      "Content-Type": "text/event-stream",
      "Cache-Control": "no-cache",
      Connection: "keep-alive",
    });
    res.write(`data: ${JSON.stringify({ kind: "snapshot", docs: this.snapshot() })}\n\n`);
    const client: StreamClient = {
      res,
      heartbeat: setInterval(() => res.write(": ping\n\n"), 15000),
    };
    client.heartbeat.unref?.();
    this.clients.add(client);
    req.on("close", () => {
      clearInterval(client.heartbeat);
      this.clients.delete(client);
    });
  }

  private broadcast(event: object): void {
    const frame = `data: ${JSON.stringify(event)}\n\n`;
    for (const client of this.clients) {
      client.res.write(frame);
    }
  }

  /** Subscribe to every context change and pull the initial state. */
  async attach(): Promise<string> {
    if (this.server === null) {
      throw new Error("bridge must listen before attaching");
    }
    const port = (this.server.address() as AddressInfo).port;
    const subscription = {
      subject: { entities: [{ idPattern: ".*" }], condition: { attrs: [] } },
      notification: { url: `http://127.0.0.1:${port}/notify` },
      throttling: 0,
    };
    const created = await fetch(`${this.options.brokerUrl}/v2/subscriptions`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(subscription),
    });
    if (!created.ok) {
      throw new Error(`subscription failed: HTTP ${created.status}`);
    }
    this.subscriptionId = ((await created.json()) as { id: string }).id;

    const initial = await fetch(`${this.options.brokerUrl}/v2/entities?options=keyValues`);
    if (initial.ok) {
      for (const doc of (await initial.json()) as EntityDoc[]) {
        this.cache.set(doc.id, doc);
      }
    }
    return this.subscriptionId;
  }

  listen(port = 0): Promise<number> {
    return new Promise((resolve) => {
      this.server = this.app.listen(port, "127.0.0.1", () => {
        resolve((this.server!.address() as AddressInfo).port);
      });
    });
  }

  async close(): Promise<void> {
    for (const client of this.clients) {
      clearInterval(client.heartbeat);
      client.res.end();
    }
    this.clients.clear();
    if (this.server !== null) {
      await new Promise<void>((resolve) => this.server!.close(() => resolve()));
      this.server = null;
    }
  }
}
