/**
 * Twin state reducer shared by the bridge and the browser client.
 *
 * Both sides fold keyValues entity documents into the same structure, so a
 * snapshot replay and an incremental delta stream converge on identical
 * state: the UI never holds anything the broker does not.
 */
import { colorOf, isSpotStatus } from "./colors.js";
export function emptyState() {
    return { spots: {}, plates: {}, availableSpotNumber: null, forecast: null };
}
export function spotViewFrom(doc) {
    const status = doc["status"];
    if (!isSpotStatus(status)) {
        return null;
    }
    const name = typeof doc["name"] === "string" && doc["name"] !== ""
        ? doc["name"]
        : doc.id.split(":").slice(1).join(":");
    const view = { spotName: name, status, color: colorOf(status) };
    if (typeof doc["refVehicle"] === "string" && doc["refVehicle"] !== "") {
        view.refVehicle = doc["refVehicle"];
    }
    return view;
}
/** Fold one entity document into the state; unknown types are ignored. */
export function applyEntityDoc(state, doc) {
    switch (doc.type) {
        case "ParkingSpot": {
            const view = spotViewFrom(doc);
            if (view !== null) {
                state.spots[view.spotName] = view;
            }
            break;
        }
        case "Vehicle": {
            const plate = doc["vehiclePlateIdentifier"];
            if (typeof plate === "string") {
                state.plates[doc.id] = plate;
            }
            break;
        }
        case "OffStreetParking": {
            const available = doc["availableSpotNumber"];
            if (typeof available === "number") {
                state.availableSpotNumber = available;
            }
            break;
        }
        case "OccupancyForecast": {
            const expected = doc["expectedOccupied"];
            const hour = doc["forHour"];
            if (typeof expected === "number" && typeof hour === "number") {
                state.forecast = { expectedOccupied: expected, forHour: hour };
            }
            break;
        }
    }
    return state;
}
export function applyAll(state, docs) {
    for (const doc of docs) {
        applyEntityDoc(state, doc);
    }
    return state;
}
/** Plate shown in a spot's tooltip, when its vehicle is known. */
export function plateOf(state, spot) {
    if (!spot.refVehicle) {
        return null;
    }
    return state.plates[spot.refVehicle] ?? null;
}
/** Find the spot currently holding the given plate (customer search). */
export function findSpotByPlate(state, plate) {
    const vehicleId = Object.keys(state.plates).find((id) => state.plates[id] === plate);
    if (vehicleId === undefined) {
        return null;
    }
    for (const view of Object.values(state.spots)) {
        if (view.refVehicle === vehicleId && view.status === "occupied") {
            return view;
        }
    }
    return null;
}
export function applyStreamEvent(state, event) {
    if (event.kind === "snapshot") {
        const fresh = emptyState();
        applyAll(fresh, event.docs);
        return fresh;
    }
    return applyEntityDoc(state, event.doc);
}
