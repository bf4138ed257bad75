// Typed client for the dialogue service HTTP API (schema version 1).

export interface SessionResponse {
  session_id: string;
  greeting: string;
  api_version: string;
}

export interface MasterAction {
  dia_act: string;
  query_slot: string;
  offer_bits: boolean[];
}

export interface SlotSummary {
  top_value: string;
  probability: number;
}

export interface BeliefSummary {
  slots: Record<string, SlotSummary>;
  requested: string[];
  matched_count: number | null;
  turn: number;
}

export interface UtteranceResponse {
  system_text: string;
  master_action: MasterAction;
  belief_summary: BeliefSummary;
  closed: boolean;
  turn: number;
}

export interface SessionInfo {
  session_id: string;
  status: 'open' | 'closed';
  turns: number;
  rated: boolean;
}

export interface Rating {
  success: boolean;
  quality: number;
}

export class ApiError extends Error {
  constructor(
    public status: number,
    message: string,
  ) {
    super(message);
  }
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

async function parse<T>(response: Response): Promise<T> {
  if (!response.ok) {
    let detail = response.statusText;
    try {
      const body = (await response.json()) as { detail?: string };
      if (body.detail) detail = body.detail;
    } catch {
      // non-JSON error body; keep the status text
    }
    throw new ApiError(response.status, detail);
  }
  return (await response.json()) as T;
}

export class ChatApi {
  constructor(
    private baseUrl: string = '',
    private fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private url(path: string): string {
    return this.baseUrl.replace(/\/$/, '') + path;
  }

  private post<T>(path: string, payload?: unknown): Promise<T> {
    return this.fetchFn(this.url(path), {
      method: 'POST',
      headers: { 'Content-Type': 'application/json' },
      body: JSON.stringify(payload ?? {}),
    }).then((r) => parse<T>(r));
  }

  createSession(): Promise<SessionResponse> {
    return this.post<SessionResponse>('/session');
  }

  getSession(sessionId: string): Promise<SessionInfo> {
    return this.fetchFn(this.url(`/session/${sessionId}`)).then((r) => parse<SessionInfo>(r));
  }

  sendUtterance(sessionId: string, text: string): Promise<UtteranceResponse> {
    return this.post<UtteranceResponse>(`/session/${sessionId}/utterance`, { text });
  }

  submitRating(sessionId: string, rating: Rating): Promise<{ stored: boolean }> {
    return this.post<{ stored: boolean }>(`/session/${sessionId}/rating`, rating);
  }
}
