/**
 * Canvas rendering, split into a pure draw-op planner (testable headless)
 * and a thin executor that paints the ops. Deletion flashes are orange,
 * addition flashes blue, per the staging figure conventions.
 */

import { Frame, Highlight } from "./playback.js";

export const COLORS: Record<Highlight, string> = {
  none: "#4a4a4a",
  "delete-orange": "#e66a1f",
  "add-blue": "#2a6fdb",
};
export const EDGE_COLOR = "#9a9a9a";
export const NODE_RADIUS = 7;

export interface DrawOp {
  shape: "line" | "circle" | "label";
  x1: number;
  y1: number;
  x2?: number;
  y2?: number;
  color: string;
  opacity: number;
  text?: string;
}

export interface Viewport {
  scale: number;
  offsetX: number;
  offsetY: number;
}

/** Fit all frame content into a width x height box with a margin. */
export function fitViewport(frame: Frame, width: number, height: number,
                            margin = 40): Viewport {
  const visible = frame.nodes.filter((n) => n.opacity > 0 || n.labelOpacity > 0);
  if (!visible.length) return { scale: 1, offsetX: width / 2, offsetY: height / 2 };
  const xs = visible.map((n) => n.x);
  const ys = visible.map((n) => n.y);
  const minX = Math.min(...xs);
  const maxX = Math.max(...xs);
  const minY = Math.min(...ys);
  const maxY = Math.max(...ys);
  const span = Math.max(maxX - minX, maxY - minY, 1e-9);
  const scale = (Math.min(width, height) - 2 * margin) / span;
  return {
    scale,
    offsetX: margin + (width - 2 * margin - (maxX - minX) * scale) / 2 - minX * scale,
    offsetY: margin + (height - 2 * margin - (maxY - minY) * scale) / 2 - minY * scale,
  };
}

export function planFrame(frame: Frame, viewport: Viewport): DrawOp[] {
  const sx = (x: number) => viewport.offsetX + x * viewport.scale;
  const sy = (y: number) => viewport.offsetY + y * viewport.scale;
  const position = new Map(frame.nodes.map((n) => [n.id, n]));
  const ops: DrawOp[] = [];
  for (const edge of frame.edges) {
    if (edge.opacity <= 0) continue;
    const a = position.get(edge.a);
    const b = position.get(edge.b);
    if (!a || !b) continue;
    ops.push({
      shape: "line",
      x1: sx(a.x), y1: sy(a.y), x2: sx(b.x), y2: sy(b.y),
      color: edge.highlight === "none" ? EDGE_COLOR : COLORS[edge.highlight],
      opacity: edge.opacity,
    });
  }
  for (const node of frame.nodes) {
    if (node.opacity > 0) {
      ops.push({
        shape: "circle",
        x1: sx(node.x), y1: sy(node.y),
        color: COLORS[node.highlight],
        opacity: node.opacity,
      });
    }
    if (node.labelOpacity > 0) {
      ops.push({
        shape: "label",
        x1: sx(node.x) + NODE_RADIUS + 3, y1: sy(node.y) + 3,
        color: "#222222",
        opacity: node.labelOpacity,
        text: node.id,
      });
    }
  }
  return ops;
}

export function paint(ctx: CanvasRenderingContext2D, width: number, height: number,
                      ops: DrawOp[]): void {
  ctx.clearRect(0, 0, width, height);
  for (const op of ops) {
    ctx.globalAlpha = op.opacity;
    if (op.shape === "line") {
      ctx.strokeStyle = op.color;
      ctx.lineWidth = 1.5;
      ctx.beginPath();
      ctx.moveTo(op.x1, op.y1);
      ctx.lineTo(op.x2!, op.y2!);
      ctx.stroke();
    } else if (op.shape === "circle") {
      ctx.fillStyle = op.color;
      ctx.beginPath();
      ctx.arc(op.x1, op.y1, NODE_RADIUS, 0, 2 * Math.PI);
      ctx.fill();
    } else {
      ctx.fillStyle = op.color;
      ctx.font = "11px sans-serif";
      ctx.fillText(op.text ?? "", op.x1, op.y1);
    }
  }
  ctx.globalAlpha = 1;
}
