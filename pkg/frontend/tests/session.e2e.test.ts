/**
 * Scripted end-to-end session against a live service: lease the 5-span
 * batch, label four spans, mint one new slot, and verify the loop advanced.
 * jsdom plays the browser; the service runs as a real subprocess.
 */

import { spawn, execFileSync, type ChildProcess } from "node:child_process";
import { mkdtempSync, rmSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { initApp, type AppController } from "../src/app.js";

let child: ChildProcess | null = null;
let base = "";
let workdir = "";

async function waitForService(url: string, attempts = 100): Promise<void> {
  for (let i = 0; i < attempts; i++) {
    try {
      const response = await fetch(url + "/api/progress");
      if (response.ok) return;
    } catch {
      // not up yet
    }
    await new Promise((r) => setTimeout(r, 250));
  }
  throw new Error(`service at ${url} never became ready`);
}

beforeAll(async () => {
  workdir = mkdtempSync(join(tmpdir(), "slotdiscovery-ui-e2e-"));
  const corpus = join(workdir, "toy.jsonl");
  execFileSync("python3", [
    "-m", "slotdiscovery.cli", "generate",
    "--out", corpus,
    "--utterances", "50", "--slots", "4", "--new-slots", "1",
    "--new-slot-share", "0.1", "--seed", "0",
  ]);
  child = spawn("python3", [
    "-u", "-m", "slotdiscovery.cli", "serve",
    "--data", corpus,
    "--checkpoint", join(workdir, "run.npz"),
    "--port", "0",
    "--strategy", "margin",
    "--batch-fraction", "0.125",
    "--warmup-fraction", "0.05",
    "--budget", "0.9",
    "--learning-rate", "0.02",
    "--initial-epochs", "3",
    "--incremental-epochs", "1",
    "--encoder-dim", "12",
    "--projection-dim", "16",
    "--buckets", "256",
    "--seed", "0",
  ]);
  base = await new Promise<string>((resolve, reject) => {
    let buffer = "";
    const timer = setTimeout(() => reject(new Error(`no listen line, got: ${buffer}`)), 90_000);
    child!.stdout!.on("data", (chunk: Buffer) => {
      buffer += chunk.toString();
      const match = buffer.match(/listening on (http:\/\/[\d.]+:\d+)/);
      if (match) {
        clearTimeout(timer);
        resolve(match[1]);
      }
    });
    child!.on("exit", (code) => reject(new Error(`service exited early (${code}): ${buffer}`)));
  });
  await waitForService(base);
}, 120_000);

afterAll(() => {
  child?.kill("SIGTERM");
  if (workdir) rmSync(workdir, { recursive: true, force: true });
});

describe("annotation session", () => {
  it("completes a full 5-span batch including minting one new slot", { timeout: 120_000 }, async () => {
    const before = (await (await fetch(base + "/api/progress")).json()) as { iteration: number };
    expect(before.iteration).toBe(0);

    const root = document.createElement("main");
    document.body.appendChild(root);
    const app: AppController = initApp(root, { base, annotator: "e2e-session", maxItems: 10 });
    await app.idle();

    expect(app.cards).toHaveLength(5);
    expect(root.querySelectorAll(".task-card")).toHaveLength(5);
    // the dashboard renders straight from the service
    expect(root.querySelector("#dashboard")!.textContent).toContain("collecting");

    // card 1: mint a brand-new slot via the form (declare + label two-step)
    const first = app.cards[0];
    const inputs = first.root.querySelectorAll<HTMLInputElement>(".new-slot input");
    inputs[0].value = "roomstyle";
    inputs[1].value = "style of the room";
    first.root.querySelector<HTMLButtonElement>(".mint")!.click();
    await app.idle();
    expect(first.root.classList.contains("locked")).toBe(true);

    // remaining cards: accept the model's top suggestion
    for (const card of app.cards.slice(1)) {
      card.root.querySelector<HTMLButtonElement>(".suggestion, .matches button")!.click();
      await app.idle();
      expect(card.root.classList.contains("locked")).toBe(true);
    }

    const progress = (await (await fetch(base + "/api/progress")).json()) as {
      iteration: number;
      known_slot_count: number;
    };
    expect(progress.iteration).toBe(1);

    const slots = (await (await fetch(base + "/api/slots")).json()) as {
      slots: { name: string; known: boolean; discovered_iteration: number | null }[];
      pending: unknown[];
    };
    const minted = slots.slots.find((s) => s.name === "roomstyle");
    expect(minted).toBeDefined();
    expect(minted!.known).toBe(true);
    expect(minted!.discovered_iteration).toBe(1);
    expect(slots.pending).toHaveLength(0);

    // the app moved on to the next batch after completing this one
    await app.idle();
    expect(app.cards.length).toBeGreaterThan(0);
    expect(app.cards[0].root.classList.contains("locked")).toBe(false);
    app.dispose();
  });
});
