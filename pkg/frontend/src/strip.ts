// Interpolation strips with frame caching: scrubbing a slider over an
// already-fetched strip never refetches.

import { ApiClient } from './api.js';

function cacheKey(anchors: number[][], steps: number, classId: number): string {
  return JSON.stringify([anchors, steps, classId]);
}

export class StripCache {
  private cache = new Map<string, string[]>();
  fetchCount = 0;

  constructor(private api: ApiClient) {}

  async frames(
    anchors: number[][],
    steps: number,
    classId: number,
  ): Promise<string[]> {
    const key = cacheKey(anchors, steps, classId);
    const hit = this.cache.get(key);
    if (hit !== undefined) {
      return hit;
    }
    this.fetchCount += 1;
    const resp = await this.api.interpolate(anchors, steps, classId);
    this.cache.set(key, resp.frames);
    return resp.frames;
  }

  clear(): void {
    this.cache.clear();
  }
}
