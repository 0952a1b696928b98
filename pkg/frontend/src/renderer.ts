/** Canvas renderer: draws a MapScene through a pan/zoom transform.
 *
 * Everything is immediate-mode 2D canvas; points are batched per color so a
 * thinned viewport of thousands of dots stays one pass per platform.
 */

import type { MapScene, SceneDot } from './scene.js';

export interface Viewport {
  scale: number;
  offsetX: number;
  offsetY: number;
}

export function fitViewport(bounds: { xmin: number; ymin: number; xmax: number; ymax: number },
                            width: number, height: number, margin = 24): Viewport {
  const spanX = Math.max(bounds.xmax - bounds.xmin, 1e-9);
  const spanY = Math.max(bounds.ymax - bounds.ymin, 1e-9);
  const scale = Math.min((width - 2 * margin) / spanX, (height - 2 * margin) / spanY);
  return {
    scale,
    offsetX: margin - bounds.xmin * scale + (width - 2 * margin - spanX * scale) / 2,
    offsetY: margin - bounds.ymin * scale + (height - 2 * margin - spanY * scale) / 2,
  };
}

export function toScreen(viewport: Viewport, x: number, y: number): [number, number] {
  return [x * viewport.scale + viewport.offsetX, y * viewport.scale + viewport.offsetY];
}

export function toScene(viewport: Viewport, px: number, py: number): [number, number] {
  return [(px - viewport.offsetX) / viewport.scale, (py - viewport.offsetY) / viewport.scale];
}

export function drawScene(ctx: CanvasRenderingContext2D, scene: MapScene,
                          viewport: Viewport, titles?: Map<string, string>,
                          thumbnails?: Map<string, CanvasImageSource>): void {
  const { width, height } = ctx.canvas;
  ctx.clearRect(0, 0, width, height);
  ctx.fillStyle = '#11161d';
  ctx.fillRect(0, 0, width, height);

  ctx.lineWidth = 1;
  ctx.strokeStyle = 'rgba(140, 160, 190, 0.35)';
  for (const contour of scene.contours) {
    ctx.beginPath();
    contour.points.forEach(([x, y], i) => {
      const [px, py] = toScreen(viewport, x, y);
      if (i === 0) ctx.moveTo(px, py);
      else ctx.lineTo(px, py);
    });
    ctx.stroke();
  }

  const byColor = new Map<string, SceneDot[]>();
  for (const dot of scene.dots) {
    const bucket = byColor.get(dot.color);
    if (bucket) bucket.push(dot);
    else byColor.set(dot.color, [dot]);
  }
  for (const [color, dots] of byColor) {
    ctx.fillStyle = color;
    ctx.beginPath();
    for (const dot of dots) {
      const [px, py] = toScreen(viewport, dot.x, dot.y);
      ctx.moveTo(px + 3, py);
      ctx.arc(px, py, 3, 0, Math.PI * 2);
    }
    ctx.fill();
  }

  // titles at high zoom next to their dots; thumbnails at the highest zoom
  if (titles) {
    ctx.fillStyle = 'rgba(230, 236, 245, 0.85)';
    ctx.font = '11px system-ui, sans-serif';
    for (const dot of scene.dots) {
      if (dot.lod === 'dot') continue;
      const [px, py] = toScreen(viewport, dot.x, dot.y);
      const image = dot.lod === 'thumbnail' ? thumbnails?.get(dot.itemId) : undefined;
      if (image) {
        ctx.drawImage(image, px + 5, py - 13, 48, 27);
      }
      const title = titles.get(dot.itemId);
      if (title) {
        ctx.fillText(title.slice(0, 32), px + (image ? 57 : 6), py + 3);
      }
    }
  }

  ctx.textAlign = 'center';
  for (const label of scene.labels) {
    const [px, py] = toScreen(viewport, label.x, label.y);
    const size = Math.min(22, 11 + Math.log2(1 + label.weight) * 1.6);
    ctx.font = `600 ${size}px system-ui, sans-serif`;
    ctx.fillStyle = 'rgba(15, 20, 28, 0.55)';
    ctx.fillText(label.text, px + 1, py + 1);
    ctx.fillStyle = '#f3f6fb';
    ctx.fillText(label.text, px, py);
  }
  ctx.textAlign = 'start';
}
