/** DOM wiring: one active session per tab, all mutation through the
 * service's serialized endpoints. */

import { ApiClient, ApiError, DomainInfo, SessionFlow } from "./api.js";
import {
  renderContextPicker,
  renderDiagnostics,
  renderDomainPicker,
  renderError,
  renderFinished,
  renderHistoryStrip,
  renderOptionCards,
  renderProgress,
} from "./ui.js";

const SOLVER_CUTOFF_S = 20;

function el(id: string): HTMLElement {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node;
}

export function boot(baseUrl: string): void {
  const client = new ApiClient(baseUrl);
  const flow = new SessionFlow(client);
  const root = el("app");
  let domains: DomainInfo[] = [];
  let currentDomain: DomainInfo | null = null;

  const fail = (err: unknown) => {
    const message =
      err instanceof ApiError && (err.status === 409 || err.status === 422)
        ? `${err.detail} — refreshing the session state`
        : err instanceof Error
          ? err.message
          : String(err);
    root.insertAdjacentHTML("afterbegin", renderError(message));
    if (err instanceof ApiError && err.status === 409) {
      void flow.refresh().then(render);
    }
  };

  function render(): void {
    const summary = flow.summary;
    if (!summary) {
      root.innerHTML = renderDomainPicker(domains);
      el("start-form").addEventListener("submit", (ev) => {
        ev.preventDefault();
        const domain = (el("domain") as HTMLSelectElement).value;
        const k = Number((el("k") as HTMLInputElement).value);
        const T = Number((el("T") as HTMLInputElement).value);
        currentDomain = domains.find((d) => d.id === domain) ?? null;
        flow.start(domain, k, T).then(render).catch(fail);
      });
      return;
    }
    if (summary.state === "finished") {
      root.innerHTML = renderFinished(summary, flow.history);
      return;
    }
    if (summary.state === "awaiting-context") {
      root.innerHTML =
        renderHistoryStrip(flow.history) +
        renderDiagnostics(flow.history) +
        (currentDomain ? renderContextPicker(currentDomain) : "");
      el("next-query").addEventListener("click", () => {
        const picked = Array.from(
          root.querySelectorAll<HTMLInputElement>(
            'input[name="must-visit"]:checked',
          ),
        ).map((i) => i.value);
        root.innerHTML = renderProgress(SOLVER_CUTOFF_S);
        flow
          .requestQuery(picked.length > 0 ? picked : undefined)
          .then(render)
          .catch(fail);
      });
      return;
    }
    // awaiting-choice
    root.innerHTML =
      renderHistoryStrip(flow.history) + renderOptionCards(summary);
    root.querySelectorAll<HTMLButtonElement>("button.choose").forEach((btn) => {
      btn.addEventListener("click", () => {
        const index = Number(btn.dataset.index);
        btn.disabled = true; // double clicks also covered by the idempotency key
        flow.submitChoice(index).then(render).catch(fail);
      });
    });
  }

  client
    .domains()
    .then((list) => {
      domains = list;
      render();
    })
    .catch((err) => {
      root.innerHTML = renderError(
        `cannot reach the session service at ${baseUrl}: ${
          err instanceof Error ? err.message : String(err)
        }`,
      );
    });
}

if (typeof document !== "undefined" && document.getElementById("app")) {
  boot(window.location.origin.replace(/\/$/, ""));
}
