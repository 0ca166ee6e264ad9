// Typed client for the orchestrator HTTP API. Every workbench action maps
// to exactly one call here; the server returns full session state so the UI
// can always re-render from scratch.

export type Role = "wizard" | "eval";

export interface PersonaOptions {
  personas: string[];
  topics: string[];
  topic_template: string;
}

export interface ResultOut {
  url: string;
  title: string;
  content: string;
  sentences: string[];
  news: boolean;
}

export interface SearchResponse {
  query: string;
  augment_news: boolean;
  engine_id: string;
  results: ResultOut[];
}

export interface SearchRecord {
  query: string;
  results: ResultOut[];
}

export interface Selection {
  doc_url: string;
  sentence: string;
}

export interface Annotation {
  consistent: boolean;
  engaging: boolean;
  knowledgeable: boolean;
  factually_incorrect: boolean;
}

export interface SessionMessage {
  speaker: "wizard" | "apprentice";
  text: string;
  searches: SearchRecord[];
  selected: Selection[];
  annotation: Annotation | null;
}

export interface SessionState {
  session_id: string;
  role: Role;
  persona_options: PersonaOptions;
  persona: string[];
  first_speaker: string;
  next_speaker: string;
  turn_limit: number;
  require_annotation: boolean;
  messages: SessionMessage[];
  pending: { searches: SearchRecord[]; selected: Selection[] };
  message_count: number;
  at_limit: boolean;
  needs_final_rating: boolean;
  final_rating: number | null;
}

export interface Aggregate {
  n_sessions: number;
  n_annotated_responses: number;
  pct_consistent: number;
  pct_engaging: number;
  pct_knowledgeable: number;
  pct_factually_incorrect: number;
  mean_final_rating: number;
  n_rated: number;
}

export class ApiError extends Error {
  constructor(
    public status: number,
    public code: string,
    message: string,
  ) {
    super(message);
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    private baseUrl: string = "",
    private fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(
    method: string,
    path: string,
    body?: unknown,
  ): Promise<T> {
    const init: RequestInit = { method, headers: {} };
    if (body !== undefined) {
      init.headers = { "Content-Type": "application/json" };
      init.body = JSON.stringify(body);
    }
    const resp = await this.fetchFn(this.baseUrl + path, init);
    const text = await resp.text();
    if (!resp.ok) {
      let code = String(resp.status);
      let message = text;
      try {
        const parsed = JSON.parse(text);
        code = parsed.code ?? code;
        message = parsed.message ?? message;
      } catch {
        // non-JSON error body; keep raw text
      }
      throw new ApiError(resp.status, code, message);
    }
    return (path.endsWith("/export") ? text : JSON.parse(text)) as T;
  }

  createSession(
    role: Role,
    options: {
      turn_limit?: number;
      require_annotation?: boolean;
      bot_first?: boolean;
    } = {},
  ): Promise<{
    session_id: string;
    role: Role;
    persona_options: PersonaOptions;
    state: SessionState;
  }> {
    return this.request("POST", "/api/session", { role, ...options });
  }

  getSession(id: string): Promise<SessionState> {
    return this.request("GET", `/api/session/${id}`);
  }

  setPersona(
    id: string,
    persona: string,
    refinement: string,
  ): Promise<SessionState> {
    return this.request("POST", `/api/session/${id}/persona`, {
      persona,
      refinement,
    });
  }

  search(
    id: string,
    query: string,
    augmentNews: boolean,
  ): Promise<SearchResponse> {
    return this.request("POST", `/api/session/${id}/search`, {
      query,
      augment_news: augmentNews,
    });
  }

  select(id: string, docUrl: string, sentence: string): Promise<SessionState> {
    return this.request("POST", `/api/session/${id}/select`, {
      doc_url: docUrl,
      sentence,
    });
  }

  sendMessage(id: string, text: string): Promise<SessionState> {
    return this.request("POST", `/api/session/${id}/message`, { text });
  }

  annotate(
    id: string,
    turnIndex: number,
    flags: Annotation,
  ): Promise<SessionState> {
    return this.request("POST", `/api/session/${id}/annotate`, {
      turn_index: turnIndex,
      ...flags,
    });
  }

  finalRating(id: string, rating: number): Promise<SessionState> {
    return this.request("POST", `/api/session/${id}/final_rating`, { rating });
  }

  exportSession(id: string): Promise<string> {
    return this.request("GET", `/api/session/${id}/export`);
  }

  aggregate(): Promise<Aggregate> {
    return this.request("GET", "/api/aggregate");
  }
}
