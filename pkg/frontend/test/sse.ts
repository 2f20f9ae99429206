/** Minimal SSE consumer for tests (EventSource is a browser API). */

export interface SseClient {
  next(predicate: (event: any) => boolean, timeoutMs?: number): Promise<any>;
  events: any[];
  close(): void;
}

export async function connectSse(url: string): Promise<SseClient> {
  const controller = new AbortController();
  const response = await fetch(url, { signal: controller.signal });
  if (!response.ok || response.body === null) {
    throw new Error(`SSE connect failed: HTTP ${response.status}`);
  }
  const events: any[] = [];
  const waiters: Array<() => void> = [];
  const reader = response.body.getReader();
  const decoder = new TextDecoder();
  let buffer = "";

  (async () => {
    try {
      for (;;) {
        const { done, value } = await reader.read();
        if (done) {
          break;
        }
        buffer += decoder.decode(value, { stream: true });
        let index;
        while ((index = buffer.indexOf("\n\n")) >= 0) {
          const frame = buffer.slice(0, index);
          buffer = buffer.slice(index + 2);
          const data = frame
            .split("\n")
            .filter((line) => line.startsWith("data: "))
            .map((line) => line.slice(6))
            .join("");
          if (data) {
            events.push(JSON.parse(data));
            waiters.splice(0).forEach((wake) => wake());
          }
        }
      }
    } catch {
      // aborted on close()
    }
  })();

  return {
    events,
    close: () => controller.abort(),
    async next(predicate, timeoutMs = 5000) {
      const deadline = Date.now() + timeoutMs;
      let cursor = 0;
      for (;;) {
        while (cursor < events.length) {
          const event = events[cursor++];
          if (predicate(event)) {
            return event;
          }
        }
        const remaining = deadline - Date.now();
        if (remaining <= 0) {
          throw new Error(`no matching SSE event within ${timeoutMs} ms`);
        }
        await new Promise<void>((resolve) => {
          const timer = setTimeout(resolve, Math.min(remaining, 100));
          waiters.push(() => {
            clearTimeout(timer);
            resolve();
          });
        });
      }
    },
  };
}
