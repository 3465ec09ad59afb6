import type { ProjectionPoint } from "./types.js";

/** Screen-space marker; the render model is pure data so it can be built and
 * hit-tested headlessly. */
export interface Marker {
  id: number;
  sx: number;
  sy: number;
  label: string;
  colorIndex: number;
  flagged: boolean;
}

export interface RenderModel {
  markers: Marker[];
  width: number;
  height: number;
  empty: boolean;
}

export const PALETTE = [
  "#4c78a8", "#f58518", "#54a24b", "#e45756", "#72b7b2",
  "#b279a2", "#eeca3b", "#ff9da6", "#9d755d", "#bab0ac",
];

export function colorOf(index: number): string {
  return PALETTE[((index % PALETTE.length) + PALETTE.length) % PALETTE.length];
}

export function buildRenderModel(
  points: ProjectionPoint[],
  flagged: Set<number>,
  vocab: string[],
  width: number,
  height: number,
  padding = 24,
): RenderModel {
  if (points.length === 0) {
    return { markers: [], width, height, empty: true };
  }
  let minX = Infinity, maxX = -Infinity, minY = Infinity, maxY = -Infinity;
  for (const p of points) {
    minX = Math.min(minX, p.x);
    maxX = Math.max(maxX, p.x);
    minY = Math.min(minY, p.y);
    maxY = Math.max(maxY, p.y);
  }
  const spanX = maxX - minX || 1;
  const spanY = maxY - minY || 1;
  const innerW = Math.max(1, width - 2 * padding);
  const innerH = Math.max(1, height - 2 * padding);
  const markers = points.map((p) => ({
    id: p.id,
    sx: padding + ((p.x - minX) / spanX) * innerW,
    sy: padding + (1 - (p.y - minY) / spanY) * innerH,
    label: p.label,
    colorIndex: labelIndex(p.label, vocab),
    flagged: flagged.has(p.id),
  }));
  return { markers, width, height, empty: false };
}

function labelIndex(label: string, vocab: string[]): number {
  const index = vocab.indexOf(label);
  if (index >= 0) {
    return index;
  }
  let hash = 0;
  for (let i = 0; i < label.length; i++) {
    hash = (hash * 31 + label.charCodeAt(i)) | 0;
  }
  return Math.abs(hash);
}

/** Nearest marker within radius of the click, or null. */
export function hitTest(
  model: RenderModel,
  sx: number,
  sy: number,
  radius = 8,
  flaggedOnly = false,
): number | null {
  let best: number | null = null;
  let bestDist = radius * radius;
  for (const m of model.markers) {
    if (flaggedOnly && !m.flagged) {
      continue;
    }
    const dx = m.sx - sx;
    const dy = m.sy - sy;
    const d2 = dx * dx + dy * dy;
    if (d2 <= bestDist) {
      best = m.id;
      bestDist = d2;
    }
  }
  return best;
}

export function drawScatter(
  ctx: CanvasRenderingContext2D,
  model: RenderModel,
  selectedId: number | null,
  flaggedOnly = false,
): void {
  ctx.clearRect(0, 0, model.width, model.height);
  for (const m of model.markers) {
    const dimmed = flaggedOnly && !m.flagged;
    ctx.globalAlpha = dimmed ? 0.12 : 0.85;
    ctx.fillStyle = colorOf(m.colorIndex);
    ctx.beginPath();
    ctx.arc(m.sx, m.sy, m.id === selectedId ? 6 : 3.2, 0, Math.PI * 2);
    ctx.fill();
    if (m.flagged && !dimmed) {
      ctx.globalAlpha = 1;
      ctx.strokeStyle = "#d62728";
      ctx.lineWidth = 1.6;
      ctx.beginPath();
      ctx.arc(m.sx, m.sy, 6.5, 0, Math.PI * 2);
      ctx.stroke();
    }
    if (m.id === selectedId) {
      ctx.globalAlpha = 1;
      ctx.strokeStyle = "#111";
      ctx.lineWidth = 2;
      ctx.beginPath();
      ctx.arc(m.sx, m.sy, 8, 0, Math.PI * 2);
      ctx.stroke();
    }
  }
  ctx.globalAlpha = 1;
}
