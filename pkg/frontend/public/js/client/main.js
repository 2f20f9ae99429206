/**
 * Operator dashboard client.
 *
 * Reads go through the enforcement proxy, live updates arrive from the
 * bridge's SSE stream, and both are folded through the shared reducer, so
 * a hard refresh reconstructs exactly the same grid from API reads.
 * Spot writes are never optimistic: a cell changes color only when the
 * change notification round-trips through the broker.
 */
import { ApiError, fetchEntities, loadConfig, login, setSpotStatus } from "./api.js";
import { clearSession, currentSession } from "./session.js";
import { applyEntityDoc, applyStreamEvent, emptyState, findSpotByPlate, plateOf, } from "../shared/state.js";
const app = document.querySelector("#app");
let config;
let state = emptyState();
let stream = null;
let gridBuilt = false;
let highlighted = null;
function show(html) {
    app.innerHTML = html;
}
function banner(text, kind = "error") {
    const el = document.querySelector("#banner");
    if (el) {
        el.textContent = text;
        el.className = `banner ${kind}`;
        el.style.display = text ? "block" : "none";
    }
}
// -- login ---------------------------------------------------------------
function renderLogin(message = "") {
    stream?.close();
    stream = null;
    gridBuilt = false;
    show(`
    <div class="login-box">
      <h1>Parking Twin</h1>
      <p class="error">${message}</p>
      <form id="login-form">
        <input id="username" placeholder="username" autocomplete="username" />
        <input id="password" type="password" placeholder="password" autocomplete="current-password" />
        <button type="submit">Sign in</button>
      </form>
    </div>
  `);
    document.querySelector("#login-form").addEventListener("submit", async (ev) => {
        ev.preventDefault();
        const username = document.querySelector("#username").value;
        const password = document.querySelector("#password").value;
        try {
            await login(config, username, password);
            await renderDashboard();
        }
        catch {
            renderLogin("Sign-in failed. Check your credentials.");
        }
    });
}
// -- dashboard -----------------------------------------------------------
async function renderDashboard() {
    const session = currentSession();
    if (session === null) {
        renderLogin("Session expired, sign in again.");
        return;
    }
    const canSteer = session.role === "supervisor" || session.role === "admin";
    show(`
    <header>
      <h1>Parking Twin</h1>
      <div class="stats">
        <span id="available">available: –</span>
        <span id="forecast">forecast: –</span>
      </div>
      <input id="plate-search" placeholder="find plate…" />
      <span class="who">${session.username} (${session.role})</span>
      <button id="logout">Sign out</button>
    </header>
    <div id="banner" class="banner" style="display:none"></div>
    <p class="hint">${canSteer ? "Click a spot to close or reopen it." : "Read-only view."}</p>
    <div id="grid" class="grid"></div>
  `);
    document.querySelector("#logout").addEventListener("click", () => {
        clearSession();
        renderLogin();
    });
    document.querySelector("#plate-search").addEventListener("input", (ev) => {
        searchPlate(ev.target.value.trim());
    });
    state = emptyState();
    openStream();
    try {
        for (const type of ["ParkingSpot", "Vehicle", "OffStreetParking", "OccupancyForecast"]) {
            for (const doc of await fetchEntities(config, type)) {
                applyEntityDoc(state, doc);
            }
        }
    }
    catch (err) {
        if (err instanceof ApiError && err.status === 401) {
            clearSession();
            renderLogin("Session expired, sign in again.");
            return;
        }
        banner("Failed to load the parking state.");
    }
    refreshAll();
}
function openStream() {
    stream?.close();
    stream = new EventSource("/ui/stream");
    stream.onmessage = (ev) => {
        const event = JSON.parse(ev.data);
        state = applyStreamEvent(state, event);
        if (event.kind === "snapshot") {
            refreshAll();
        }
        else if (event.doc.type === "ParkingSpot") {
            const name = typeof event.doc["name"] === "string"
                ? event.doc["name"]
                : event.doc.id.split(":").slice(1).join(":");
            refreshCell(name);
            refreshWidgets();
        }
        else {
            refreshWidgets();
        }
    };
}
function totalSpots() {
    const known = Object.keys(state.spots).map((n) => Number(n)).filter((n) => Number.isFinite(n));
    const seen = known.length ? Math.max(...known) : 0;
    return Math.max(seen, 100);
}
function refreshAll() {
    buildGrid();
    for (const name of Object.keys(state.spots)) {
        refreshCell(name);
    }
    refreshWidgets();
}
function buildGrid() {
    const grid = document.querySelector("#grid");
    if (!grid) {
        return;
    }
    const total = totalSpots();
    const cells = [];
    for (let n = 1; n <= total; n++) {
        cells.push(`<div class="cell green" id="spot-${n}" data-name="${n}" title="spot ${n}: free"></div>`);
    }
    grid.innerHTML = cells.join("");
    grid.addEventListener("click", onCellClick);
    gridBuilt = true;
}
function refreshCell(name) {
    if (!gridBuilt) {
        return;
    }
    const cell = document.querySelector(`#spot-${CSS.escape(name)}`);
    if (!cell) {
        return;
    }
    const view = state.spots[name];
    const color = view?.color ?? "green";
    cell.className = `cell ${color}` + (highlighted === name ? " highlight" : "");
    const plate = view ? plateOf(state, view) : null;
    cell.title = `spot ${name}: ${view?.status ?? "free"}` + (plate ? ` (plate ${plate})` : "");
}
function refreshWidgets() {
    const available = document.querySelector("#available");
    if (available) {
        available.textContent =
            state.availableSpotNumber === null ? "available: –" : `available: ${state.availableSpotNumber}`;
    }
    const forecast = document.querySelector("#forecast");
    if (forecast) {
        forecast.textContent = state.forecast
            ? `forecast ${String(state.forecast.forHour).padStart(2, "0")}:00 → ${Math.round(state.forecast.expectedOccupied)} occupied`
            : "forecast: –";
    }
}
async function onCellClick(ev) {
    const cell = ev.target.closest(".cell");
    if (!cell) {
        return;
    }
    const session = currentSession();
    if (session === null) {
        renderLogin("Session expired, sign in again.");
        return;
    }
    const name = cell.dataset["name"];
    const status = state.spots[name]?.status ?? "free";
    const next = status === "closed" ? "free" : "closed";
    banner("", "info");
    try {
        await setSpotStatus(config, name, next);
    }
    catch (err) {
        if (err instanceof ApiError && err.status === 403) {
            banner("Permission denied: your role may not change spot status.");
        }
        else if (err instanceof ApiError && err.status === 401) {
            clearSession();
            renderLogin("Session expired, sign in again.");
        }
        else {
            banner("Spot update failed.");
        }
    }
}
function searchPlate(plate) {
    if (highlighted !== null) {
        const previous = highlighted;
        highlighted = null;
        refreshCell(previous);
    }
    if (!plate) {
        return;
    }
    const found = findSpotByPlate(state, plate);
    if (found) {
        highlighted = found.spotName;
        refreshCell(found.spotName);
        document
            .querySelector(`#spot-${CSS.escape(found.spotName)}`)
            ?.scrollIntoView({ block: "center", behavior: "smooth" });
    }
}
// -- boot ------------------------------------------------------------------
loadConfig().then((loaded) => {
    config = loaded;
    renderLogin();
});
