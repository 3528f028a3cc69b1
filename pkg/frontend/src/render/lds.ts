import type { TrajectoryData } from "../api.js";

/**
 * The linear system is a one-step environment whose features equal the
 * control input, so a query renders as paired per-feature bars rather
 * than an animation.
 */
export function featureValues(traj: TrajectoryData): number[] {
  const final = traj.states[traj.states.length - 1];
  if (!final) throw new Error("trajectory has no states");
  return [...final];
}

const BAR_SCALE = 40;

function barRow(dimension: number, aValue: number, bValue: number): HTMLElement {
  const row = document.createElement("div");
  row.className = "lds-row";
  const label = document.createElement("span");
  label.className = "lds-label";
  label.textContent = `w${dimension}`;
  row.appendChild(label);
  for (const [side, value] of [["a", aValue], ["b", bValue]] as const) {
    const track = document.createElement("div");
    track.className = "lds-track";
    const bar = document.createElement("div");
    bar.className = `lds-bar side-${side} ${value < 0 ? "negative" : "positive"}`;
    bar.style.width = `${Math.min(Math.abs(value), 1) * BAR_SCALE}px`;
    bar.dataset.value = value.toFixed(3);
    track.appendChild(bar);
    row.appendChild(track);
  }
  return row;
}

export function renderLdsPair(container: HTMLElement, a: TrajectoryData, b: TrajectoryData): void {
  const aValues = featureValues(a);
  const bValues = featureValues(b);
  container.textContent = "";
  aValues.forEach((value, i) => {
    container.appendChild(barRow(i, value, bValues[i] ?? 0));
  });
}
