import { describe, expect, it } from "vitest";
import { Stats } from "../src/api.js";
import { ProgressPoller, ProgressView } from "../src/progress.js";
import { submitForm, FormModel } from "../src/form.js";

const FIGURE_STATS: Stats = {
  total_papers: 22,
  total_qas: 44,
  by_category: { knowledge: 26, method: 15, discussion: 3 },
};

function statsResponse(stats: Stats): Response {
  return new Response(JSON.stringify(stats), { status: 200 });
}

describe("ProgressPoller", () => {
  it("renders the server's counts verbatim", async () => {
    const views: ProgressView[] = [];
    const fetchFn = (async () => statsResponse(FIGURE_STATS)) as typeof fetch;
    const poller = new ProgressPoller((v) => views.push(v), fetchFn);
    await poller.refresh();
    expect(views[0].totalPapers).toBe(22);
    expect(views[0].totalQas).toBe(44);
    expect(views[0].byCategory).toEqual({ knowledge: 26, method: 15, discussion: 3 });
    expect(views[0].stale).toBe(false);
  });

  it("starts at all zeros and shows a zero store as zeros", async () => {
    const zero: Stats = {
      total_papers: 0,
      total_qas: 0,
      by_category: { knowledge: 0, method: 0, discussion: 0 },
    };
    const fetchFn = (async () => statsResponse(zero)) as typeof fetch;
    const poller = new ProgressPoller(() => undefined, fetchFn);
    expect(poller.view.totalQas).toBe(0);
    await poller.refresh();
    expect(poller.view.totalQas).toBe(0);
  });

  it("reflects increments across refreshes", async () => {
    let qas = 0;
    const fetchFn = (async () =>
      statsResponse({
        total_papers: 1,
        total_qas: qas,
        by_category: { knowledge: qas, method: 0, discussion: 0 },
      })) as typeof fetch;
    const poller = new ProgressPoller(() => undefined, fetchFn);
    await poller.refresh();
    qas += 2; // two quick submits land server-side
    await poller.refresh();
    expect(poller.view.totalQas).toBe(2);
  });

  it("marks the view stale after consecutive failures, then recovers", async () => {
    let failing = true;
    const fetchFn = (async () => {
      if (failing) throw new TypeError("unreachable");
      return statsResponse(FIGURE_STATS);
    }) as typeof fetch;
    const poller = new ProgressPoller(() => undefined, fetchFn);
    await poller.refresh();
    expect(poller.view.stale).toBe(false);
    await poller.refresh();
    expect(poller.view.stale).toBe(true);
    failing = false;
    await poller.refresh();
    expect(poller.view.stale).toBe(false);
    expect(poller.view.totalQas).toBe(44);
  });
});

describe("submission and progress flow", () => {
  function makeServer() {
    // minimal in-memory stand-in for the curation service
    const stored: Array<Record<string, string>> = [];
    const fetchFn = (async (url: RequestInfo | URL, init?: RequestInit) => {
      const path = String(url);
      if (path.endsWith("/api/qa") && init?.method === "POST") {
        const body = JSON.parse(String(init.body)) as Record<string, string>;
        if (!["knowledge", "method", "discussion"].includes(body.category)) {
          return new Response(JSON.stringify({ error: "UnknownCategory" }), {
            status: 400,
          });
        }
        stored.push(body);
        return new Response(JSON.stringify(body), { status: 201 });
      }
      const byCategory = { knowledge: 0, method: 0, discussion: 0 };
      for (const pair of stored) {
        byCategory[pair.category as keyof typeof byCategory] += 1;
      }
      return statsResponse({
        total_papers: new Set(stored.map((p) => p.pmid)).size,
        total_qas: stored.length,
        by_category: byCategory,
      });
    }) as typeof fetch;
    return { stored, fetchFn };
  }

  const model: FormModel = {
    question: "Q?",
    answer: "A.",
    pmid: "777",
    doi: "",
    category: "knowledge",
  };

  it("a submission appears in the store and in the next poll", async () => {
    const { stored, fetchFn } = makeServer();
    const poller = new ProgressPoller(() => undefined, fetchFn);
    await poller.refresh();
    const outcome = await submitForm(model, fetchFn);
    expect(outcome.result.kind).toBe("created");
    expect(stored).toHaveLength(1);
    await poller.refresh();
    expect(poller.view.totalQas).toBe(1);
    expect(poller.view.totalPapers).toBe(1);
  });

  it("a rejected submission changes no displayed count", async () => {
    const { fetchFn } = makeServer();
    const poller = new ProgressPoller(() => undefined, fetchFn);
    await submitForm(model, fetchFn);
    await poller.refresh();
    const before = poller.view;
    const outcome = await submitForm({ ...model, category: "opinion" }, fetchFn);
    expect(outcome.result.kind).toBe("rejected");
    await poller.refresh();
    expect(poller.view.totalQas).toBe(before.totalQas);
    expect(poller.view.byCategory).toEqual(before.byCategory);
  });
});
