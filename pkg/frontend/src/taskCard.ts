/** Task cards: span-in-context view, suggestions, slot picker, new-slot form. */

import type { CardDecision, TaskView } from "./types.js";

export interface TokenSegment {
  text: string;
  inSpan: boolean;
}

export function tokenSegments(task: TaskView): TokenSegment[] {
  const { start, len } = task.span;
  return task.tokens.map((text, i) => ({ text, inSpan: i >= start && i < start + len }));
}

export function formatProbability(p: number): string {
  return `${(p * 100).toFixed(1)}%`;
}

export function filterCatalog(names: string[], query: string): string[] {
  const needle = query.trim().toLowerCase();
  if (!needle) return names;
  return names.filter((n) => n.toLowerCase().includes(needle));
}

export type CardOutcome = "completed" | "skipped" | "conflict" | "expired";

export interface CardHandle {
  root: HTMLElement;
  readonly taskId: string;
  /** Disable every control and show a terminal state note. */
  lock(outcome: CardOutcome, note?: string): void;
  /** Show a transient error inline and re-enable controls. */
  showError(message: string): void;
  selectSuggestion(index: number): void;
  focusSearch(): void;
  focusNewSlot(): void;
  skip(): void;
}

export function renderTaskCard(
  doc: Document,
  task: TaskView,
  catalogNames: string[],
  onDecide: (decision: CardDecision) => void,
): CardHandle {
  const root = doc.createElement("article");
  root.className = "task-card";
  root.dataset.taskId = task.task_id;
  root.dataset.spanId = task.span_id;

  const utterance = doc.createElement("p");
  utterance.className = "utterance";
  for (const segment of tokenSegments(task)) {
    const el = doc.createElement(segment.inSpan ? "mark" : "span");
    el.textContent = segment.text;
    utterance.appendChild(el);
    utterance.appendChild(doc.createTextNode(" "));
  }
  root.appendChild(utterance);

  const meta = doc.createElement("div");
  meta.className = "card-meta";
  const chip = doc.createElement("span");
  chip.className = "weak-chip";
  chip.textContent = task.weak_label ?? "no weak label";
  meta.appendChild(chip);
  root.appendChild(meta);

  let decided = false;

  const setBusy = (busy: boolean) => {
    root.classList.toggle("busy", busy);
    const off = busy || decided;
    for (const el of root.querySelectorAll<HTMLButtonElement | HTMLInputElement>("button, input")) {
      el.disabled = off;
    }
  };

  const decide = (decision: CardDecision) => {
    if (decided) return;
    setBusy(true);
    onDecide(decision);
  };

  // top model suggestions, keyboard keys 1..3
  const suggestions = doc.createElement("div");
  suggestions.className = "suggestions";
  const suggestionButtons: HTMLButtonElement[] = [];
  task.suggestions.slice(0, 3).forEach((s, i) => {
    const button = doc.createElement("button");
    button.type = "button";
    button.className = "suggestion";
    button.dataset.slot = s.slot;
    button.textContent = `${i + 1}. ${s.slot} ${formatProbability(s.probability)}`;
    button.addEventListener("click", () => decide({ kind: "existing", slot: s.slot }));
    suggestions.appendChild(button);
    suggestionButtons.push(button);
  });
  root.appendChild(suggestions);

  // searchable picker over the full catalog
  const picker = doc.createElement("div");
  picker.className = "slot-picker";
  const search = doc.createElement("input");
  search.type = "search";
  search.placeholder = "search slots (/)";
  search.setAttribute("aria-label", "search slots");
  const matches = doc.createElement("ul");
  matches.className = "matches";
  const renderMatches = () => {
    matches.textContent = "";
    for (const name of filterCatalog(catalogNames, search.value).slice(0, 8)) {
      const item = doc.createElement("li");
      const button = doc.createElement("button");
      button.type = "button";
      button.dataset.slot = name;
      button.textContent = name;
      button.addEventListener("click", () => decide({ kind: "existing", slot: name }));
      item.appendChild(button);
      matches.appendChild(item);
    }
  };
  search.addEventListener("input", renderMatches);
  renderMatches();
  picker.appendChild(search);
  picker.appendChild(matches);
  root.appendChild(picker);

  // new-slot form (name, description)
  const form = doc.createElement("div");
  form.className = "new-slot";
  const name = doc.createElement("input");
  name.placeholder = "new slot name (n)";
  name.setAttribute("aria-label", "new slot name");
  const description = doc.createElement("input");
  description.placeholder = "description";
  description.setAttribute("aria-label", "new slot description");
  const mint = doc.createElement("button");
  mint.type = "button";
  mint.className = "mint";
  mint.textContent = "create + assign";
  mint.addEventListener("click", () => {
    if (name.value.trim()) {
      decide({ kind: "new", name: name.value.trim(), description: description.value.trim() });
    }
  });
  form.append(name, description, mint);
  root.appendChild(form);

  const skipButton = doc.createElement("button");
  skipButton.type = "button";
  skipButton.className = "skip";
  skipButton.textContent = "skip (s)";
  skipButton.addEventListener("click", () => decide({ kind: "skip" }));
  root.appendChild(skipButton);

  const note = doc.createElement("p");
  note.className = "card-note";
  root.appendChild(note);

  return {
    root,
    taskId: task.task_id,
    lock(outcome, text) {
      decided = true;
      setBusy(false);
      root.classList.add("locked", outcome);
      note.textContent = text ?? outcome;
    },
    showError(message) {
      note.textContent = message;
      setBusy(false);
    },
    selectSuggestion(index) {
      suggestionButtons[index]?.click();
    },
    focusSearch() {
      search.focus();
    },
    focusNewSlot() {
      name.focus();
    },
    skip() {
      skipButton.click();
    },
  };
}
