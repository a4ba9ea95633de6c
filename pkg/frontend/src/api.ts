// Typed client for the glyph server's three endpoints. All state lives in
// the browser; every request carries explicit style vectors.

export interface ModelInfo {
  num_classes: number;
  image_size: number;
  style_dim: number;
  checkpoint_id: string;
  class_labels: string[];
}

export interface GenerateResponse {
  style: number[];
  images: Record<string, string>; // class id -> base64 PNG
}

export interface InterpolateResponse {
  frames: string[]; // base64 PNGs
  class_id: number;
  steps: number;
}

export class ApiError extends Error {
  constructor(public status: number, message: string) {
    super(message);
  }
}

async function request<T>(url: string, init?: RequestInit): Promise<T> {
  let resp: Response;
  try {
    resp = await fetch(url, init);
  } catch (err) {
    throw new ApiError(0, `server unreachable: ${err}`);
  }
  if (!resp.ok) {
    throw new ApiError(resp.status, `${url} -> HTTP ${resp.status}`);
  }
  return (await resp.json()) as T;
}

export class ApiClient {
  constructor(private baseUrl: string) {}

  modelInfo(): Promise<ModelInfo> {
    return request<ModelInfo>(`${this.baseUrl}/model/info`);
  }

  generate(style: number[], classes?: number[]): Promise<GenerateResponse> {
    const body: Record<string, unknown> = { style };
    if (classes !== undefined) {
      body.classes = classes;
    }
    return request<GenerateResponse>(`${this.baseUrl}/generate`, {
      method: 'POST',
      headers: { 'Content-Type': 'application/json' },
      body: JSON.stringify(body),
    });
  }

  interpolate(
    anchors: number[][],
    steps: number,
    classId: number,
  ): Promise<InterpolateResponse> {
    return request<InterpolateResponse>(`${this.baseUrl}/interpolate`, {
      method: 'POST',
      headers: { 'Content-Type': 'application/json' },
      body: JSON.stringify({ anchors, steps, class_id: classId }),
    });
  }
}
