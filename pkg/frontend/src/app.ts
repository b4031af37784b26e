import { CATEGORIES, FormModel, canSubmit, emptyForm, submitForm } from "./form.js";
import { ProgressPoller, ProgressView } from "./progress.js";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function readForm(): FormModel {
  return {
    question: el<HTMLTextAreaElement>("question").value,
    answer: el<HTMLTextAreaElement>("answer").value,
    pmid: el<HTMLInputElement>("pmid").value,
    doi: el<HTMLInputElement>("doi").value,
    category: el<HTMLSelectElement>("category").value,
  };
}

function writeForm(model: FormModel): void {
  el<HTMLTextAreaElement>("question").value = model.question;
  el<HTMLTextAreaElement>("answer").value = model.answer;
  el<HTMLInputElement>("pmid").value = model.pmid;
  el<HTMLInputElement>("doi").value = model.doi;
  el<HTMLSelectElement>("category").value = model.category;
}

function renderProgress(view: ProgressView): void {
  el("total-papers").textContent = String(view.totalPapers);
  el("total-qas").textContent = String(view.totalQas);
  for (const category of CATEGORIES) {
    el(`count-${category}`).textContent = String(view.byCategory[category] ?? 0);
  }
  el("stale-badge").hidden = !view.stale;
}

function setMessage(text: string, kind: "ok" | "error" | "banner" | ""): void {
  const node = el("message");
  node.textContent = text;
  node.className = kind;
}

export function initApp(): void {
  const poller = new ProgressPoller(renderProgress);
  const submitButton = el<HTMLButtonElement>("submit");

  const refreshEnabled = () => {
    submitButton.disabled = !canSubmit(readForm());
  };
  for (const id of ["question", "answer", "pmid", "doi", "category"]) {
    el(id).addEventListener("input", refreshEnabled);
    el(id).addEventListener("change", refreshEnabled);
  }
  refreshEnabled();

  el<HTMLFormElement>("qa-form").addEventListener("submit", async (event) => {
    event.preventDefault();
    submitButton.disabled = true;
    const outcome = await submitForm(readForm());
    writeForm(outcome.model);
    if (outcome.result.kind === "created") {
      setMessage("Submitted.", "ok");
      void poller.refresh();
    } else if (outcome.result.kind === "rejected") {
      setMessage(`Rejected: ${outcome.result.error.error}`, "error");
    } else {
      setMessage("Server unreachable; your entry was kept. Retry when back online.", "banner");
    }
    refreshEnabled();
  });

  poller.start();
}

if (typeof document !== "undefined" && document.getElementById("qa-form")) {
  initApp();
}
