/**
 * Spot status to light color mapping.
 *
 * Must stay identical to the gateway's bulb command table: the grid cell
 * and the physical bulb always show the same color.
 */
export const STATUS_COLOR = {
    closed: "red",
    occupied: "yellow",
    free: "green",
};
export function isSpotStatus(value) {
    return value === "free" || value === "occupied" || value === "closed";
}
export function colorOf(status) {
    return STATUS_COLOR[status];
}
