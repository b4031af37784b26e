export interface QaSubmission {
  question: string;
  answer: string;
  pmid: string;
  doi: string;
  category: string;
}

export interface Stats {
  total_papers: number;
  total_qas: number;
  by_category: Record<string, number>;
}

export interface ApiError {
  error: string;
  detail?: string;
}

export type SubmitResult =
  | { kind: "created" }
  | { kind: "rejected"; error: ApiError }
  | { kind: "network"; message: string };

export async function submitQa(
  body: QaSubmission,
  fetchFn: typeof fetch = fetch,
): Promise<SubmitResult> {
  let resp: Response;
  try {
    resp = await fetchFn("/api/qa", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ ...body, origin: "human" }),
    });
  } catch (e) {
    return { kind: "network", message: String(e) };
  }
  if (resp.status === 201) {
    return { kind: "created" };
  }
  const error = (await resp.json().catch(() => ({ error: "Unknown" }))) as ApiError;
  return { kind: "rejected", error };
}

export async function fetchStats(fetchFn: typeof fetch = fetch): Promise<Stats> {
  const resp = await fetchFn("/api/stats");
  if (!resp.ok) {
    throw new Error(`stats request failed: ${resp.status}`);
  }
  return (await resp.json()) as Stats;
}
