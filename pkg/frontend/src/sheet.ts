// Glyph-sheet fetch orchestration, kept DOM-free so it is unit-testable.
// Each row is one style vector; concurrent fetches per row resolve
// last-write-wins, and any server failure raises the error banner instead
// of crashing the page.

import { ApiClient, ApiError } from './api.js';

export interface SheetRow {
  style: number[];
  images: Record<string, string>;
}

export interface SheetHooks {
  onRow(rowId: string, row: SheetRow): void;
  onBanner(message: string | null): void;
}

export class SheetController {
  private tokens = new Map<string, number>();

  constructor(
    private api: ApiClient,
    private hooks: SheetHooks,
  ) {}

  /** Fetch one row; stale responses (superseded by a newer request for the
   * same row) are dropped. Resolves true when the row was applied. */
  async refreshRow(
    rowId: string,
    style: number[],
    classes?: number[],
  ): Promise<boolean> {
    const token = (this.tokens.get(rowId) ?? 0) + 1;
    this.tokens.set(rowId, token);
    let resp;
    try {
      resp = await this.api.generate(style, classes);
    } catch (err) {
      if (this.tokens.get(rowId) === token) {
        const detail =
          err instanceof ApiError && err.status > 0
            ? `server error ${err.status}`
            : 'server unreachable';
        this.hooks.onBanner(`${detail} — check glyphforge serve and retry`);
      }
      return false;
    }
    if (this.tokens.get(rowId) !== token) {
      return false; // a newer request for this row already landed
    }
    this.hooks.onBanner(null);
    this.hooks.onRow(rowId, { style: resp.style, images: resp.images });
    return true;
  }
}
