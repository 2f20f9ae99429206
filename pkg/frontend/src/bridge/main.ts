import path from "node:path";
import { fileURLToPath } from "node:url";

import { Bridge } from "./server.js";

const here = path.dirname(fileURLToPath(import.meta.url));

const brokerUrl = process.env.BROKER_URL ?? "http://127.0.0.1:1026";
const proxyUrl = process.env.PROXY_URL ?? "http://127.0.0.1:1027";
const identityUrl = process.env.IDENTITY_URL ?? "http://127.0.0.1:3005";
const port = Number(process.env.PORT ?? 8080);

const bridge = new Bridge({
  brokerUrl,
  proxyUrl,
  identityUrl,
  publicDir: path.resolve(here, "../../public"),
});

const actualPort = await bridge.listen(port);
await bridge.attach();
console.log(`dashboard bridge on http://127.0.0.1:${actualPort} (broker: ${brokerUrl})`);
