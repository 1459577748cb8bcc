/**
 * Operator controls. The panel sends commands and waits: the UI state
 * flips only when the server's notice confirms the change (the server is
 * authoritative), and rejections surface the server's message verbatim.
 */

import { DashboardClient } from "./client.js";

export interface PanelState {
  strategy: string;
  t_i: number;
  n_events: number;
  paused: boolean;
  speed: number;
  lastNotice: string;
  rejected: string | null;
}

export class ControlPanel {
  state: PanelState = {
    strategy: "hybrid",
    t_i: 2000,
    n_events: 5,
    paused: false,
    speed: 1.0,
    lastNotice: "",
    rejected: null,
  };

  constructor(private client: DashboardClient,
              private onChange: (state: PanelState) => void = () => {}) {}

  requestStrategy(strategy: "time" | "event" | "hybrid"): void {
    this.client.sendControl({ command: "set_strategy", args: { strategy } });
  }

  requestThresholds(t_i?: number, n_events?: number): void {
    this.client.sendControl({ command: "set_thresholds", args: { t_i, n_events } });
  }

  requestPause(): void {
    this.client.sendControl({ command: "pause" });
  }

  requestResume(): void {
    this.client.sendControl({ command: "resume" });
  }

  requestSpeed(multiplier: number): void {
    this.client.sendControl({ command: "set_speed", args: { multiplier } });
  }

  /** Fold a server notice into panel state; returns true if it was a
   * control acknowledgement. */
  ingestNotice(text: string): boolean {
    this.state.lastNotice = text;
    this.state.rejected = null;
    let match: RegExpMatchArray | null;
    if ((match = text.match(/^StrategyChanged to (\w+)/))) {
      this.state.strategy = match[1];
    } else if ((match = text.match(/^ThresholdsChanged t_i=(\d+) n_events=(\d+)/))) {
      this.state.t_i = Number(match[1]);
      this.state.n_events = Number(match[2]);
    } else if (text.startsWith("Paused")) {
      this.state.paused = true;
    } else if (text.startsWith("Resumed")) {
      this.state.paused = false;
    } else if ((match = text.match(/^SpeedChanged to ([\d.eE+-]+)/))) {
      this.state.speed = Number(match[1]);
    } else if (text.startsWith("CommandRejected")) {
      this.state.rejected = text;
    } else {
      this.onChange(this.state);
      return false;
    }
    this.onChange(this.state);
    return true;
  }
}
