import { QaSubmission, SubmitResult, submitQa } from "./api.js";

export const CATEGORIES = ["knowledge", "method", "discussion"] as const;

export interface FormModel {
  question: string;
  answer: string;
  pmid: string;
  doi: string;
  category: string;
}

export function emptyForm(): FormModel {
  return { question: "", answer: "", pmid: "", doi: "", category: "" };
}

/** Submit stays disabled until question, answer, and pmid are non-empty and a
 * category is chosen. */
export function canSubmit(model: FormModel): boolean {
  return (
    model.question.trim() !== "" &&
    model.answer.trim() !== "" &&
    model.pmid.trim() !== "" &&
    CATEGORIES.includes(model.category as (typeof CATEGORIES)[number])
  );
}

export interface SubmitOutcome {
  model: FormModel;
  result: SubmitResult;
}

/** On success, clear question/answer but keep pmid/doi/category so several
 * pairs can be entered for the same paper. On rejection or network failure
 * the form content is preserved. */
export async function submitForm(
  model: FormModel,
  fetchFn: typeof fetch = fetch,
): Promise<SubmitOutcome> {
  const body: QaSubmission = {
    question: model.question.trim(),
    answer: model.answer.trim(),
    pmid: model.pmid.trim(),
    doi: model.doi.trim(),
    category: model.category,
  };
  const result = await submitQa(body, fetchFn);
  if (result.kind === "created") {
    return { model: { ...model, question: "", answer: "" }, result };
  }
  return { model, result };
}
