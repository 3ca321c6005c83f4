/** Application wiring: batch view, card actions, dashboard refresh. */

import { ApiClient, ApiError } from "./api.js";
import { renderDashboard } from "./dashboard.js";
import { attachAnnotationShortcuts } from "./keyboard.js";
import { renderTaskCard, type CardHandle } from "./taskCard.js";
import type { CardDecision } from "./types.js";

export interface AppOptions {
  base?: string;
  annotator?: string;
  maxItems?: number;
}

export interface AppController {
  loadBatch(): Promise<void>;
  refreshDashboard(): Promise<void>;
  /** Resolves once every in-flight request has settled (test hook). */
  idle(): Promise<void>;
  readonly cards: CardHandle[];
  dispose(): void;
}

const PHASE_BANNERS: Record<string, string> = {
  collecting: "all tasks in this batch are leased elsewhere — refresh to retry",
  finished: "the run is finished — no more batches",
};

export function initApp(root: HTMLElement, options: AppOptions = {}): AppController {
  const doc = root.ownerDocument;
  const api = new ApiClient(options.base ?? "");
  const annotator = options.annotator ?? "annotator-1";
  const maxItems = options.maxItems ?? 10;

  root.textContent = "";
  const header = doc.createElement("header");
  const title = doc.createElement("h1");
  title.textContent = "slot annotation";
  const who = doc.createElement("span");
  who.className = "annotator-id";
  who.textContent = annotator;
  const refresh = doc.createElement("button");
  refresh.type = "button";
  refresh.className = "refresh";
  refresh.textContent = "refresh batch";
  header.append(title, who, refresh);
  const dashboard = doc.createElement("section");
  dashboard.id = "dashboard";
  const banner = doc.createElement("p");
  banner.id = "phase-banner";
  const batch = doc.createElement("section");
  batch.id = "batch";
  root.append(header, dashboard, banner, batch);

  let cards: CardHandle[] = [];
  let activeIndex = 0;
  let catalogNames: string[] = [];
  let inFlight = 0;
  const idleWaiters: (() => void)[] = [];

  const track = async <T>(work: Promise<T>): Promise<T> => {
    inFlight += 1;
    try {
      return await work;
    } finally {
      inFlight -= 1;
      if (inFlight === 0) {
        while (idleWaiters.length) idleWaiters.shift()!();
      }
    }
  };

  const setActive = (index: number) => {
    if (!cards.length) return;
    activeIndex = Math.max(0, Math.min(cards.length - 1, index));
    cards.forEach((card, i) => card.root.classList.toggle("active", i === activeIndex));
  };

  const refreshDashboard = () =>
    track(
      (async () => {
        const [progress, curve, slots] = await Promise.all([api.progress(), api.curve(), api.slots()]);
        catalogNames = slots.slots.map((s) => s.name);
        renderDashboard(dashboard, progress, curve.curve, slots);
      })().catch((error) => {
        banner.textContent = `cannot reach the service: ${describe(error)}`;
      }),
    );

  const decide = (card: CardHandle, decision: CardDecision) =>
    track(
      (async () => {
        try {
          if (decision.kind === "skip") {
            await api.skipTask(card.taskId, annotator);
            card.lock("skipped", "skipped — span returns to the pool");
          } else if (decision.kind === "existing") {
            await api.submitSlot(card.taskId, annotator, decision.slot);
            card.lock("completed", `labeled ${decision.slot}`);
          } else {
            // two-step contract: declare the slot, then submit the label
            await api.declareSlot(decision.name, decision.description);
            await api.submitSlot(card.taskId, annotator, decision.name);
            card.lock("completed", `minted + labeled ${decision.name}`);
          }
          await refreshDashboard();
          if (cards.every((c) => c.root.classList.contains("locked"))) {
            await loadBatch();
          }
        } catch (error) {
          if (error instanceof ApiError && error.status === 409) {
            card.lock("conflict", `already handled elsewhere: ${error.message}`);
          } else if (error instanceof ApiError && error.status === 404) {
            card.lock("expired", "task no longer exists — refresh");
          } else {
            card.showError(`${describe(error)} — retry`);
          }
        }
      })(),
    );

  const loadBatch = () =>
    track(
      (async () => {
        try {
          const response = await api.getBatch(annotator, maxItems);
          batch.textContent = "";
          cards = response.tasks.map((task) => {
            const card = renderTaskCard(doc, task, catalogNames, (decision) => void decide(card, decision));
            batch.appendChild(card.root);
            return card;
          });
          banner.textContent = response.tasks.length
            ? ""
            : (PHASE_BANNERS[response.phase] ?? `loop phase: ${response.phase}`);
          setActive(0);
        } catch (error) {
          banner.textContent = `batch fetch failed: ${describe(error)} — retry`;
        }
      })(),
    );

  refresh.addEventListener("click", () => void loadBatch());
  const detach = attachAnnotationShortcuts(doc, {
    selectSuggestion: (i) => cards[activeIndex]?.selectSuggestion(i),
    skip: () => cards[activeIndex]?.skip(),
    nextCard: () => setActive(activeIndex + 1),
    prevCard: () => setActive(activeIndex - 1),
    focusSearch: () => cards[activeIndex]?.focusSearch(),
    focusNewSlot: () => cards[activeIndex]?.focusNewSlot(),
  });

  // one tracked unit so idle() cannot resolve between the two startup calls
  void track(
    (async () => {
      await refreshDashboard();
      await loadBatch();
    })(),
  );

  return {
    loadBatch,
    refreshDashboard,
    idle: () =>
      inFlight === 0 ? Promise.resolve() : new Promise((resolve) => idleWaiters.push(resolve)),
    get cards() {
      return cards;
    },
    dispose: detach,
  };
}

function describe(error: unknown): string {
  return error instanceof Error ? error.message : String(error);
}

declare global {
  interface Window {
    slotdiscoveryApp?: AppController;
  }
}

// browser bootstrap; tests call initApp directly
if (typeof document !== "undefined" && document.getElementById("app")) {
  const params = new URLSearchParams(window.location.search);
  window.slotdiscoveryApp = initApp(document.getElementById("app")!, {
    annotator: params.get("annotator") ?? "annotator-1",
    maxItems: Number(params.get("max") ?? "10"),
  });
}
