/**
 * In-memory session: the bearer token lives only in this module, is never
 * rendered into the page, and never touches storage or logs. A hard refresh
 * therefore requires a fresh login.
 */
let session = null;
export function setSession(next) {
    session = next;
}
export function clearSession() {
    session = null;
}
export function currentSession(now = Date.now()) {
    if (session !== null && now >= session.expiresAt) {
        session = null;
    }
    return session;
}
export function authHeader() {
    const active = currentSession();
    return active ? { Authorization: `Bearer ${active.token}` } : {};
}
