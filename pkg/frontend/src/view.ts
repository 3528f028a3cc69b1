import type { EnvInfo, QueryPayload, TrajectoryData } from "./api.js";
import type { SessionStore } from "./state.js";
import { computeDriverFrames, DRIVER_VIEW, paintDriverFrame } from "./render/driver.js";
import { renderLdsPair } from "./render/lds.js";
import { Player } from "./render/playback.js";
import { computeTosserFrames, paintTosserFrame, TOSSER_VIEW } from "./render/tosser.js";
import { renderPosterior } from "./render/posterior.js";

const SIDE_COLORS = { a: "#d64545", b: "#3f9d4f" } as const;

/** One compact entry per query pair, in server order; the active one is marked. */
export function renderBatchStrip(container: HTMLElement, store: SessionStore): void {
  container.textContent = "";
  const batch = store.batch;
  if (!batch) return;
  for (const query of batch.queries) {
    const entry = document.createElement("div");
    entry.className = "pair";
    entry.dataset.queryId = query.query_id;
    const choice = store.choiceFor(query.query_id);
    if (choice) {
      entry.classList.add("answered");
      entry.textContent = choice;
    } else if (store.currentQuery?.query_id === query.query_id) {
      entry.classList.add("active");
      entry.textContent = "?";
    } else {
      entry.textContent = "·";
    }
    container.appendChild(entry);
  }
}

function showError(container: HTMLElement, message: string): void {
  container.textContent = "";
  const box = document.createElement("div");
  box.className = "render-error";
  box.textContent = `Cannot display this query: ${message}`;
  container.appendChild(box);
}

interface SidePlayback {
  player: Player;
  canvas: HTMLCanvasElement;
}

function animatedSide(
  traj: TrajectoryData,
  envInfo: EnvInfo,
  color: string,
): SidePlayback {
  const canvas = document.createElement("canvas");
  let paint: (i: number) => void = () => undefined;
  let frameCount = 0;
  if (envInfo.name === "driver2d") {
    const frames = computeDriverFrames(traj);
    frameCount = frames.length;
    canvas.width = DRIVER_VIEW.width;
    canvas.height = DRIVER_VIEW.height;
    const ctx = canvas.getContext("2d");
    if (ctx) paint = (i) => paintDriverFrame(ctx, frames[i]!, envInfo, color);
  } else {
    const frames = computeTosserFrames(traj);
    frameCount = frames.length;
    canvas.width = TOSSER_VIEW.width;
    canvas.height = TOSSER_VIEW.height;
    const ctx = canvas.getContext("2d");
    if (ctx) paint = (i) => paintTosserFrame(ctx, frames[i]!, envInfo, color);
  }
  return { player: new Player(frameCount, paint), canvas };
}

/**
 * The single active query: side-by-side playback (or bar pairs for the
 * one-step environment) plus the two choice buttons.
 */
export function renderActiveQuery(
  container: HTMLElement,
  query: QueryPayload,
  envInfo: EnvInfo,
  onChoice: (choice: "A" | "B") => void,
): void {
  container.textContent = "";
  const stage = document.createElement("div");
  stage.className = "stage";
  const players: Player[] = [];

  try {
    if (envInfo.name === "lds") {
      const panel = document.createElement("div");
      panel.className = "lds-panel";
      renderLdsPair(panel, query.a, query.b);
      stage.appendChild(panel);
    } else {
      for (const side of ["a", "b"] as const) {
        const wrap = document.createElement("figure");
        wrap.className = `side side-${side}`;
        const title = document.createElement("figcaption");
        title.textContent = side.toUpperCase();
        const playback = animatedSide(query[side], envInfo, SIDE_COLORS[side]);
        players.push(playback.player);
        wrap.appendChild(title);
        wrap.appendChild(playback.canvas);
        stage.appendChild(wrap);
      }
    }
  } catch (err) {
    showError(container, err instanceof Error ? err.message : String(err));
    return;
  }
  container.appendChild(stage);

  const controls = document.createElement("div");
  controls.className = "controls";
  if (players.length > 0) {
    const replay = document.createElement("button");
    replay.className = "replay";
    replay.textContent = "Replay";
    replay.addEventListener("click", () => players.forEach((p) => p.replay()));
    controls.appendChild(replay);
  }
  for (const choice of ["A", "B"] as const) {
    const button = document.createElement("button");
    button.className = `choose choose-${choice.toLowerCase()}`;
    button.textContent = `Prefer ${choice}`;
    button.addEventListener("click", () => onChoice(choice));
    controls.appendChild(button);
  }
  container.appendChild(controls);
  players.forEach((p) => p.replay());
}

export function renderApp(root: HTMLElement, store: SessionStore): void {
  root.textContent = "";

  const header = document.createElement("header");
  header.className = "session-header";
  const progress = store.batchProgress;
  header.textContent =
    store.phase === "loading"
      ? "Starting session…"
      : `Round ${store.round} · query ${Math.min(progress.done + 1, progress.size)}` +
        ` of ${progress.size} · ${store.answeredTotal} answered`;
  root.appendChild(header);

  const strip = document.createElement("nav");
  strip.className = "batch-strip";
  renderBatchStrip(strip, store);
  root.appendChild(strip);

  const main = document.createElement("main");
  main.className = "query-area";
  if (store.phase === "failed") {
    showError(main, store.error);
  } else if (store.retry) {
    const banner = document.createElement("div");
    banner.className = "retry-banner";
    const note = document.createElement("span");
    note.textContent = `Answer "${store.retry.choice}" not delivered (${store.retry.message}).`;
    const button = document.createElement("button");
    button.className = "retry";
    button.textContent = "Retry";
    button.addEventListener("click", () => void store.retrySubmit());
    banner.appendChild(note);
    banner.appendChild(button);
    main.appendChild(banner);
  } else if (store.exhausted) {
    const done = document.createElement("div");
    done.className = "exhausted";
    done.textContent = "Query pool exhausted. Thank you!";
    main.appendChild(done);
  } else if (store.currentQuery && store.envInfo) {
    renderActiveQuery(main, store.currentQuery, store.envInfo, (choice) => {
      void store.choose(choice);
    });
  }
  root.appendChild(main);

  const panel = document.createElement("aside");
  panel.className = "posterior-panel";
  if (store.posterior) {
    renderPosterior(panel, store.posterior);
  } else {
    panel.textContent = "Posterior appears after the first completed batch.";
  }
  root.appendChild(panel);
}
