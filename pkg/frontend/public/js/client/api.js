/**
 * REST calls from the browser. Every context read and write goes to the
 * enforcement proxy; login and introspection go to the identity service.
 * The broker's own address never appears here.
 */
import { authHeader, setSession } from "./session.js";
export async function loadConfig() {
    const response = await fetch("/ui/config");
    return (await response.json());
}
export class ApiError extends Error {
    status;
    constructor(status, message) {
        super(message);
        this.status = status;
    }
}
export async function login(config, username, password) {
    const body = new URLSearchParams({ grant_type: "password", username, password });
    const response = await fetch(`${config.identityUrl}/oauth/token`, {
        method: "POST",
        headers: { "Content-Type": "application/x-www-form-urlencoded" },
        body,
    });
    if (!response.ok) {
        // one message for every credential failure, mirroring the identity API
        throw new ApiError(response.status, "login failed");
    }
    const grant = (await response.json());
    const who = await fetch(`${config.identityUrl}/oauth/introspect`, {
        method: "POST",
        headers: { "Content-Type": "application/x-www-form-urlencoded" },
        body: new URLSearchParams({ token: grant.access_token }),
    });
    const info = (await who.json());
    const session = {
        token: grant.access_token,
        role: info.roles?.[0] ?? "unknown",
        username: info.username ?? username,
        expiresAt: Date.now() + grant.expires_in * 1000,
    };
    setSession(session);
    return session;
}
export async function fetchEntities(config, type) {
    const response = await fetch(`${config.proxyUrl}/v2/entities?type=${encodeURIComponent(type)}&options=keyValues`, { headers: authHeader() });
    if (!response.ok) {
        throw new ApiError(response.status, `fetching ${type} failed`);
    }
    return (await response.json());
}
export async function setSpotStatus(config, spotName, status) {
    const response = await fetch(`${config.proxyUrl}/v2/entities/spot:${encodeURIComponent(spotName)}/attrs?options=keyValues`, {
        method: "PATCH",
        headers: { "Content-Type": "application/json", ...authHeader() },
        body: JSON.stringify({ status }),
    });
    if (!response.ok) {
        throw new ApiError(response.status, `updating spot ${spotName} failed`);
    }
}
