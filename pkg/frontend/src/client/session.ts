/**
 * In-memory session: the bearer token lives only in this module, is never
 * rendered into the page, and never touches storage or logs. A hard refresh
 * therefore requires a fresh login.
 */

export interface SessionState {
  token: string;
  role: string;
  username: string;
  expiresAt: number; // epoch ms
}

let session: SessionState | null = null;

export function setSession(next: SessionState): void {
  session = next;
}

export function clearSession(): void {
  session = null;
}

export function currentSession(now: number = Date.now()): SessionState | null {
  if (session !== null && now >= session.expiresAt) {
    session = null;
  }
  return session;
}

export function authHeader(): Record<string, string> {
  const active = currentSession();
  return active ? { Authorization: `Bearer ${active.token}` } : {};
}
