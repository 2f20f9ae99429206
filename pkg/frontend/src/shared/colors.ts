/**
 * Spot status to light color mapping.
 *
 * Must stay identical to the gateway's bulb command table: the grid cell
 * and the physical bulb always show the same color.
 */

export type SpotStatus = "free" | "occupied" | "closed";
export type SpotColor = "green" | "yellow" | "red";

export const STATUS_COLOR: Record<SpotStatus, SpotColor> = {
  closed: "red",
  occupied: "yellow",
  free: "green",
};

export function isSpotStatus(value: unknown): value is SpotStatus {
  return value === "free" || value === "occupied" || value === "closed";
}

export function colorOf(status: SpotStatus): SpotColor {
  return STATUS_COLOR[status];
}
