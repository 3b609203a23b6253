// Typed client for the GENCNIPPET generation service. The only network
// surface of the UI; every call targets the configured server URL.

export type LanguageName = "java" | "python";
export type GenerateMode = "zero_shot" | "few_shot";

export interface GenerateRequest {
  description: string;
  language: LanguageName;
  constraints?: string;
  mode?: GenerateMode;
}

export interface GenerateResponse {
  snippet: string;
  model_id: string;
  prompt_profile: string;
  latency_ms: number;
  request_id: string;
}

export interface HealthResponse {
  status: string;
  backend_kind: string;
  model_id: string;
}

/** Server-reported failure with the machine-readable error code. */
export class ApiError extends Error {
  readonly status: number;
  readonly code: string;
  readonly field?: string;

  constructor(status: number, code: string, message: string, field?: string) {
    super(message);
    this.name = "ApiError";
    this.status = status;
    this.code = code;
    this.field = field;
  }

  get retryable(): boolean {
    return this.status === 429 || this.status >= 500;
  }
}

/** Request exceeded the client-side deadline; always worth a retry. */
export class TimeoutError extends Error {
  constructor(timeoutMs: number) {
    super(`server did not answer within ${timeoutMs} ms`);
    this.name = "TimeoutError";
  }
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export interface ClientOptions {
  timeoutMs?: number;
  fetchImpl?: FetchLike;
}

const DEFAULT_TIMEOUT_MS = 30000;

async function errorFromResponse(response: Response): Promise<ApiError> {
  let code = "UNKNOWN";
  let message = `request failed with status ${response.status}`;
  let field: string | undefined;
  try {
    const body = (await response.json()) as {
      error?: { code?: string; message?: string; field?: string };
    };
    if (body.error) {
      code = body.error.code ?? code;
      message = body.error.message ?? message;
      field = body.error.field;
    }
  } catch {
    // Non-JSON error body; keep the status-based message.
  }
  return new ApiError(response.status, code, message, field);
}

export class GencnippetClient {
  readonly baseUrl: string;
  private readonly timeoutMs: number;
  private readonly fetchImpl: FetchLike;

  constructor(baseUrl: string, options: ClientOptions = {}) {
    this.baseUrl = baseUrl.replace(/\/+$/, "");
    this.timeoutMs = options.timeoutMs ?? DEFAULT_TIMEOUT_MS;
    this.fetchImpl = options.fetchImpl ?? ((input, init) => fetch(input, init));
  }

  private async request(path: string, init?: RequestInit): Promise<Response> {
    const controller = new AbortController();
    const timer = setTimeout(() => controller.abort(), this.timeoutMs);
    try {
      return await this.fetchImpl(`${this.baseUrl}${path}`, {
        ...init,
        signal: controller.signal,
      });
    } catch (error) {
      if (controller.signal.aborted) throw new TimeoutError(this.timeoutMs);
      throw error;
    } finally {
      clearTimeout(timer);
    }
  }

  async generate(request: GenerateRequest): Promise<GenerateResponse> {
    const response = await this.request("/api/v1/generate", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(request),
    });
    if (!response.ok) throw await errorFromResponse(response);
    return (await response.json()) as GenerateResponse;
  }

  async health(): Promise<HealthResponse> {
    const response = await this.request("/health");
    if (!response.ok && response.status !== 503) {
      throw await errorFromResponse(response);
    }
    return (await response.json()) as HealthResponse;
  }

  async config(): Promise<Record<string, unknown>> {
    const response = await this.request("/api/v1/config");
    if (!response.ok) throw await errorFromResponse(response);
    return (await response.json()) as Record<string, unknown>;
  }
}
