/**
 * Lag gauge: running mean/max from stage lag records plus the server's
 * heartbeat backlog, so pressure is visible even when no stage fires.
 */

import { StageMessage } from "./protocol.js";

export class LagGauge {
  private lags: number[] = [];
  backlog = 0;
  pending = 0;

  ingestStage(stage: StageMessage): void {
    for (const entry of stage.lag) {
      this.lags.push(entry.depicted_ms - entry.event_ms);
    }
    if (this.lags.length > 2000) {
      this.lags = this.lags.slice(-1000); // keep the gauge bounded
    }
  }

  ingestHeartbeat(backlog: number, pending: number): void {
    this.backlog = backlog;
    this.pending = pending;
  }

  get count(): number {
    return this.lags.length;
  }

  get meanMs(): number | null {
    if (!this.lags.length) return null;
    return this.lags.reduce((a, b) => a + b, 0) / this.lags.length;
  }

  get maxMs(): number | null {
    return this.lags.length ? Math.max(...this.lags) : null;
  }

  describe(): string {
    if (this.meanMs === null) return `lag: - | backlog ${this.backlog}, pending ${this.pending}`;
    return (
      `lag: mean ${(this.meanMs / 1000).toFixed(2)}s, max ${((this.maxMs ?? 0) / 1000).toFixed(2)}s` +
      ` | backlog ${this.backlog}, pending ${this.pending}`
    );
  }
}
