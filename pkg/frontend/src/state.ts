/**
 * Cumulative view state: the entity set and node positions implied by
 * every stage message received so far. After a stage completes, the
 * rendered set equals the cumulative application of all received diffs.
 */

import { EntityRef, MoveEntry, StageMessage, edgeKey, isEdgeRef } from "./protocol.js";

export interface Point {
  x: number;
  y: number;
}

export class GraphView {
  nodes = new Map<string, Point>();
  edges = new Map<string, [string, string]>();
  lastStageId: number | null = null;
  outOfOrder = false; // warning badge; stages are applied regardless

  applyStage(stage: StageMessage): void {
    if (this.lastStageId !== null && stage.stage_id !== this.lastStageId + 1) {
      this.outOfOrder = true;
    }
    this.lastStageId = stage.stage_id;

    for (const entity of stage.deletions) {
      if (isEdgeRef(entity)) {
        this.edges.delete(edgeKey(entity));
      } else {
        this.nodes.delete(entity);
        for (const [key, pair] of [...this.edges]) {
          if (pair[0] === entity || pair[1] === entity) this.edges.delete(key);
        }
      }
    }
    // zero-displacement move entries carry appearance positions for additions
    const positions = new Map<string, MoveEntry>(stage.moves.map((m) => [m.id, m]));
    for (const entity of stage.additions) {
      if (isEdgeRef(entity)) {
        this.edges.set(edgeKey(entity), [...entity].sort() as [string, string]);
      } else {
        const entry = positions.get(entity);
        this.nodes.set(entity, entry ? { x: entry.to[0], y: entry.to[1] } : { x: 0, y: 0 });
      }
    }
    for (const move of stage.moves) {
      if (this.nodes.has(move.id)) {
        this.nodes.set(move.id, { x: move.to[0], y: move.to[1] });
      }
    }
  }

  snapshot(): { nodes: string[]; edges: [string, string][] } {
    return {
      nodes: [...this.nodes.keys()].sort(),
      edges: [...this.edges.values()].map((p) => [...p] as [string, string]).sort((a, b) =>
        (a[0] + a[1]).localeCompare(b[0] + b[1]),
      ),
    };
  }
}

/** Reference reconstruction used by tests: plain set arithmetic over the
 * diffs, independent of GraphView's bookkeeping. */
export function cumulativeEntities(stages: StageMessage[]): {
  nodes: string[];
  edges: [string, string][];
} {
  const nodes = new Set<string>();
  const edges = new Map<string, [string, string]>();
  for (const stage of stages) {
    for (const entity of stage.deletions) {
      if (isEdgeRef(entity)) edges.delete(edgeKey(entity));
      else {
        nodes.delete(entity);
        for (const [key, pair] of [...edges]) {
          if (pair.includes(entity)) edges.delete(key);
        }
      }
    }
    for (const entity of stage.additions) {
      if (isEdgeRef(entity)) edges.set(edgeKey(entity), [...entity].sort() as [string, string]);
      else nodes.add(entity);
    }
  }
  return {
    nodes: [...nodes].sort(),
    edges: [...edges.values()].sort((a, b) => (a[0] + a[1]).localeCompare(b[0] + b[1])),
  };
}
