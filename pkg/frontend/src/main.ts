/**
 * Dashboard entry point. Connect with ?server=host:port (the replay
 * server's --ws-listen address); everything on screen is driven by the
 * broadcast messages.
 */

import { DashboardClient } from "./client.js";
import { ControlPanel } from "./controls.js";
import { LagGauge } from "./lag.js";
import { StagePlayer } from "./playback.js";
import { fitViewport, paint, planFrame } from "./render.js";
import { GraphView } from "./state.js";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function boot(): void {
  const params = new URLSearchParams(window.location.search);
  const server = params.get("server") ?? "127.0.0.1:8901";
  const canvas = el<HTMLCanvasElement>("graph");
  const ctx = canvas.getContext("2d")!;
  const banner = el<HTMLDivElement>("banner");
  const statusLabel = el<HTMLSpanElement>("status");
  const lagLabel = el<HTMLSpanElement>("lag");
  const stageLabel = el<HTMLSpanElement>("stage-info");
  const noticeLog = el<HTMLDivElement>("notices");

  const view = new GraphView();
  const player = new StagePlayer(view);
  const gauge = new LagGauge();

  const client = new DashboardClient(`ws://${server}`, {
    onMessage: (message) => {
      if (message.type === "stage") {
        player.enqueue(message);
        gauge.ingestStage(message);
        stageLabel.textContent =
          `stage ${message.stage_id} (${message.cause}, T_an=${message.timing.T_an} ms)` +
          (view.outOfOrder ? " [out-of-order seen]" : "");
      } else if (message.type === "heartbeat") {
        gauge.ingestHeartbeat(message.backlog, message.pending);
      } else if (message.type === "notice") {
        panel.ingestNotice(message.text);
        const line = document.createElement("div");
        line.textContent = message.text;
        noticeLog.prepend(line);
        while (noticeLog.childElementCount > 8) noticeLog.lastChild?.remove();
      }
    },
    onStatus: (status, detail) => {
      statusLabel.textContent = status + (detail ? `: ${detail}` : "");
      banner.style.display = status === "schema-mismatch" || status === "closed" ? "block" : "none";
      banner.textContent = status === "schema-mismatch"
        ? `Schema mismatch - ${detail ?? ""}. Stopped consuming.`
        : "Connection closed.";
    },
  });

  const panel = new ControlPanel(client, (state) => {
    el<HTMLSelectElement>("strategy").value = state.strategy;
    el<HTMLInputElement>("ti").value = String(state.t_i);
    el<HTMLInputElement>("nev").value = String(state.n_events);
    el<HTMLButtonElement>("pause").textContent = state.paused ? "resume" : "pause";
    el<HTMLSpanElement>("speed-label").textContent = `${state.speed}x`;
    if (state.rejected) {
      banner.style.display = "block";
      banner.textContent = state.rejected;
    }
  });

  el<HTMLSelectElement>("strategy").addEventListener("change", (event) => {
    panel.requestStrategy((event.target as HTMLSelectElement).value as never);
  });
  el<HTMLButtonElement>("apply-thresholds").addEventListener("click", () => {
    panel.requestThresholds(Number(el<HTMLInputElement>("ti").value),
                            Number(el<HTMLInputElement>("nev").value));
  });
  el<HTMLButtonElement>("pause").addEventListener("click", () => {
    if (panel.state.paused) panel.requestResume();
    else panel.requestPause();
  });
  el<HTMLInputElement>("speed").addEventListener("change", (event) => {
    panel.requestSpeed(Number((event.target as HTMLInputElement).value));
  });

  client.connect();

  const draw = (now: number) => {
    const frame = player.advance(now);
    const viewport = fitViewport(frame, canvas.width, canvas.height);
    paint(ctx, canvas.width, canvas.height, planFrame(frame, viewport));
    lagLabel.textContent = gauge.describe() + ` | queued stages ${player.pendingStages}`;
    requestAnimationFrame(draw);
  };
  requestAnimationFrame(draw);
}

window.addEventListener("load", boot);
