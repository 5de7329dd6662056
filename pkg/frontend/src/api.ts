/** Typed client for the sandbox service. Every number shown anywhere in the
 * UI comes through this module; nothing is computed client-side. */

import type {
  AttentionResponse,
  CounterfactualResponse,
  Health,
  HistoryEntry,
  Intervention,
  PredictResponse,
  RecommendResponse,
  Scenario,
  SensitivityResponse,
} from './types';

export class ServiceError extends Error {
  constructor(
    message: string,
    public readonly status: number | null,
    public readonly violations: string[] = [],
  ) {
    super(message);
  }
}

export class ApiClient {
  constructor(
    private readonly baseUrl: string = '',
    private readonly fetchFn: typeof fetch = fetch,
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    let resp: Response;
    try {
      resp = await this.fetchFn(`${this.baseUrl}${path}`, {
        method,
        headers: body !== undefined ? { 'Content-Type': 'application/json' } : undefined,
        body: body !== undefined ? JSON.stringify(body) : undefined,
      });
    } catch {
      throw new ServiceError('service unreachable', null);
    }
    if (!resp.ok) {
      let detail = `${resp.status}`;
      let violations: string[] = [];
      try {
        const payload = await resp.json();
        const d = payload.detail;
        detail = typeof d === 'string' ? d : (d?.detail ?? JSON.stringify(payload));
        violations = (typeof d === 'object' ? d?.violations : payload.violations) ?? [];
      } catch {
        /* non-JSON error body */
      }
      throw new ServiceError(detail, resp.status, violations);
    }
    return (await resp.json()) as T;
  }

  health(): Promise<Health> {
    return this.request('GET', '/healthz');
  }

  async createSession(template = 'default'): Promise<string> {
    const body = await this.request<{ session_id: string }>('POST', '/session', { template });
    return body.session_id;
  }

  getScenario(sessionId: string): Promise<Scenario> {
    return this.request('GET', `/session/${sessionId}/scenario`);
  }

  putScenario(sessionId: string, scenario: Scenario): Promise<unknown> {
    return this.request('PUT', `/session/${sessionId}/scenario`, scenario);
  }

  putIntervention(sessionId: string, w: Intervention): Promise<unknown> {
    return this.request('PUT', `/session/${sessionId}/intervention`, w);
  }

  predict(sessionId: string): Promise<PredictResponse> {
    return this.request('POST', `/session/${sessionId}/predict`);
  }

  counterfactual(sessionId: string, altW: Intervention): Promise<CounterfactualResponse> {
    return this.request('POST', `/session/${sessionId}/counterfactual`, { alt_w: altW });
  }

  sensitivity(
    sessionId: string,
    axes: { weapons?: number[]; paths?: number[]; structures?: string[] } = {},
  ): Promise<SensitivityResponse> {
    return this.request('POST', `/session/${sessionId}/sensitivity`, axes);
  }

  recommend(
    sessionId: string,
    candidates: { id: string; w: Intervention }[],
    objective: 'delay' | 'sdi' = 'delay',
  ): Promise<RecommendResponse> {
    return this.request('POST', `/session/${sessionId}/recommend`, { candidates, objective });
  }

  attention(sessionId: string): Promise<AttentionResponse> {
    return this.request('GET', `/session/${sessionId}/attention`);
  }

  history(sessionId: string): Promise<HistoryEntry[]> {
    return this.request('GET', `/session/${sessionId}/history`);
  }
}
