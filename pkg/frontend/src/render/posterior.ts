import type { PosteriorSummary } from "../api.js";

/** Per-dimension histogram mass; each must equal the sample count M. */
export function histogramSums(summary: PosteriorSummary): number[] {
  return summary.histograms.map((bins) => bins.reduce((acc, n) => acc + n, 0));
}

function meanBar(dimension: number, mean: number, std: number): HTMLElement {
  const row = document.createElement("div");
  row.className = "posterior-row";
  const label = document.createElement("span");
  label.className = "posterior-label";
  label.textContent = `w${dimension} = ${mean.toFixed(3)} ± ${std.toFixed(3)}`;
  const track = document.createElement("div");
  track.className = "posterior-track";
  const bar = document.createElement("div");
  bar.className = `posterior-bar ${mean < 0 ? "negative" : "positive"}`;
  bar.style.width = `${Math.min(Math.abs(mean), 1) * 50}%`;
  track.appendChild(bar);
  row.appendChild(label);
  row.appendChild(track);
  return row;
}

function histogramStrip(bins: number[]): HTMLElement {
  const strip = document.createElement("div");
  strip.className = "histogram";
  const peak = Math.max(...bins, 1);
  for (const count of bins) {
    const bar = document.createElement("div");
    bar.className = "histogram-bin";
    bar.style.height = `${(count / peak) * 100}%`;
    bar.dataset.count = String(count);
    strip.appendChild(bar);
  }
  strip.dataset.sum = String(bins.reduce((acc, n) => acc + n, 0));
  return strip;
}

export function renderPosterior(container: HTMLElement, summary: PosteriorSummary): void {
  container.textContent = "";
  const caption = document.createElement("div");
  caption.className = "posterior-caption";
  caption.textContent =
    `Posterior after ${summary.n_queries} answers (${summary.m} samples per histogram)`;
  container.appendChild(caption);
  summary.mean.forEach((mean, i) => {
    container.appendChild(meanBar(i, mean, summary.std[i] ?? 0));
    container.appendChild(histogramStrip(summary.histograms[i] ?? []));
  });
}
