/**
 * Stage playback: a queue of stage messages rendered one at a time with
 * the message's own timing fields (the client never invents durations).
 * Sub-stage order is fixed: deletion, movement, addition, pause; a zero
 * t_d or t_a in the timing means the sub-stage was dropped server-side.
 */

import { StageMessage, edgeKey, isEdgeRef } from "./protocol.js";
import { GraphView, Point } from "./state.js";

export type Highlight = "none" | "delete-orange" | "add-blue";

export const HIGHLIGHT_FRACTION = 0.3;

export interface FrameNode {
  id: string;
  x: number;
  y: number;
  opacity: number;
  highlight: Highlight;
  labelOpacity: number;
}

export interface FrameEdge {
  a: string;
  b: string;
  opacity: number;
  highlight: Highlight;
}

export interface Frame {
  t: number;
  nodes: FrameNode[];
  edges: FrameEdge[];
}

/** Slow-in/slow-out cubic: 0 and 1 at the endpoints, 0.5 at the middle. */
export function easeSmooth(u: number): number {
  const clamped = Math.min(1, Math.max(0, u));
  return clamped * clamped * (3 - 2 * clamped);
}

interface PreState {
  nodes: Map<string, Point>;
  edges: Map<string, [string, string]>;
}

function rampDown(t: number, start: number, end: number): number {
  if (end <= start) return 0;
  return Math.min(1, Math.max(0, (end - t) / (end - start)));
}

function rampUp(t: number, start: number, end: number): number {
  if (end <= start) return 1;
  return Math.min(1, Math.max(0, (t - start) / (end - start)));
}

export function evaluateStageFrame(stage: StageMessage, pre: PreState, t: number): Frame {
  const { t_d, t_m, t_a, T_an } = stage.timing;
  const clamped = Math.min(Math.max(t, 0), T_an);
  const moveStart = t_d;
  const moveEnd = t_d + t_m;
  const addStart = moveEnd;
  const addEnd = moveEnd + t_a;
  const delFlashEnd = t_d * HIGHLIGHT_FRACTION;
  const addFlashEnd = addStart + t_a * HIGHLIGHT_FRACTION;

  let u = 0;
  if (clamped >= moveEnd) u = 1;
  else if (clamped > moveStart && t_m > 0) u = easeSmooth((clamped - moveStart) / t_m);

  const deletedNodes = new Set<string>();
  const deletedEdges = new Set<string>();
  for (const entity of stage.deletions) {
    if (isEdgeRef(entity)) deletedEdges.add(edgeKey(entity));
    else deletedNodes.add(entity);
  }
  const addedNodes = new Set<string>();
  const addedEdges: [string, string][] = [];
  for (const entity of stage.additions) {
    if (isEdgeRef(entity)) addedEdges.push(entity);
    else addedNodes.add(entity);
  }
  const moves = new Map(stage.moves.map((m) => [m.id, m]));

  const deletionOpacity =
    clamped < delFlashEnd ? 1 : clamped < t_d ? rampDown(clamped, delFlashEnd, t_d) : 0;
  const deletionHighlight: Highlight =
    t_d > 0 && clamped < delFlashEnd ? "delete-orange" : "none";
  const additionOpacity =
    clamped < addStart ? 0 : clamped < addEnd ? rampUp(clamped, addStart, addEnd) : 1;
  const additionHighlight: Highlight =
    t_a > 0 && clamped >= addStart && clamped < addFlashEnd ? "add-blue" : "none";

  const nodes: FrameNode[] = [];
  const positionOf = new Map<string, Point>();
  for (const [id, pos] of pre.nodes) {
    let point = pos;
    if (!deletedNodes.has(id)) {
      const move = moves.get(id);
      if (move) {
        point = {
          x: move.from[0] + u * (move.to[0] - move.from[0]),
          y: move.from[1] + u * (move.to[1] - move.from[1]),
        };
      }
    }
    positionOf.set(id, point);
    if (deletedNodes.has(id)) {
      const inMovement = clamped >= moveStart && clamped < moveEnd;
      nodes.push({
        id,
        x: point.x,
        y: point.y,
        opacity: deletionOpacity,
        highlight: deletionHighlight,
        labelOpacity: inMovement ? 0.5 : deletionOpacity, // labels linger
      });
    } else {
      nodes.push({ id, x: point.x, y: point.y, opacity: 1, highlight: "none", labelOpacity: 1 });
    }
  }
  for (const id of addedNodes) {
    const move = moves.get(id);
    const point = move ? { x: move.to[0], y: move.to[1] } : { x: 0, y: 0 };
    positionOf.set(id, point);
    nodes.push({
      id,
      x: point.x,
      y: point.y,
      opacity: additionOpacity,
      highlight: additionHighlight,
      labelOpacity: additionOpacity,
    });
  }

  const edges: FrameEdge[] = [];
  for (const [key, [a, b]] of pre.edges) {
    edges.push({
      a,
      b,
      opacity: deletedEdges.has(key) ? deletionOpacity : 1,
      highlight: deletedEdges.has(key) ? deletionHighlight : "none",
    });
  }
  for (const [a, b] of addedEdges) {
    edges.push({ a, b, opacity: additionOpacity, highlight: additionHighlight });
  }
  return { t: clamped, nodes, edges };
}

export function staticFrame(view: GraphView): Frame {
  return {
    t: 0,
    nodes: [...view.nodes].map(([id, p]) => ({
      id, x: p.x, y: p.y, opacity: 1, highlight: "none" as Highlight, labelOpacity: 1,
    })),
    edges: [...view.edges.values()].map(([a, b]) => ({
      a, b, opacity: 1, highlight: "none" as Highlight,
    })),
  };
}

/** Queue + cursor: stages play sequentially; each commits to the view
 * when its animation completes. */
export class StagePlayer {
  private queue: StageMessage[] = [];
  private active: { stage: StageMessage; pre: PreState; startedAt: number } | null = null;
  paused = false;

  constructor(private view: GraphView) {}

  get pendingStages(): number {
    return this.queue.length + (this.active ? 1 : 0);
  }

  get activeStage(): StageMessage | null {
    return this.active ? this.active.stage : null;
  }

  enqueue(stage: StageMessage): void {
    this.queue.push(stage);
  }

  /** Evaluate the playback at wall-clock `now` (ms). Completed stages are
   * committed to the view; pausing freezes after the current stage. */
  advance(now: number): Frame {
    for (;;) {
      if (!this.active) {
        if (this.paused || this.queue.length === 0) return staticFrame(this.view);
        const stage = this.queue.shift()!;
        this.active = {
          stage,
          pre: {
            nodes: new Map(this.view.nodes),
            edges: new Map(this.view.edges),
          },
          startedAt: now,
        };
      }
      const { stage, pre, startedAt } = this.active;
      const t = now - startedAt;
      if (t >= stage.timing.T_an) {
        this.view.applyStage(stage);
        this.active = null;
        continue; // pull the next stage (or fall through to static)
      }
      return evaluateStageFrame(stage, pre, t);
    }
  }
}
