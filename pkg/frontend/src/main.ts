import { SessionApi } from "./api.js";
import { SessionStore } from "./state.js";
import { renderApp } from "./view.js";

function intParam(params: URLSearchParams, name: string): number | undefined {
  const raw = params.get(name);
  if (raw === null) return undefined;
  const value = Number.parseInt(raw, 10);
  return Number.isFinite(value) ? value : undefined;
}

export function boot(root: HTMLElement, search: string): SessionStore {
  const params = new URLSearchParams(search);
  const store = new SessionStore(new SessionApi());
  store.subscribe(() => renderApp(root, store));
  void store.start(params.get("env") ?? "lds", {
    ...(intParam(params, "seed") !== undefined && { seed: intParam(params, "seed") }),
    ...(intParam(params, "b") !== undefined && { b: intParam(params, "b") }),
    ...(params.get("strategy") !== null && { strategy: params.get("strategy")! }),
  });
  renderApp(root, store);
  return store;
}

const root = document.getElementById("app");
if (root) boot(root, window.location.search);
