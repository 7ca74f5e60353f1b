/** SVG scatter of the current batch in the service's fixed 2-D projection:
 * background points gray, the sample being labeled highlighted. Pure string
 * building so it is testable without a DOM. */

export const WIDTH = 420;
export const HEIGHT = 320;
const PAD = 18;

export interface Box {
  xMin: number;
  xMax: number;
  yMin: number;
  yMax: number;
}

export function bounds(points: [number, number][]): Box {
  let xMin = Infinity, xMax = -Infinity, yMin = Infinity, yMax = -Infinity;
  for (const [x, y] of points) {
    xMin = Math.min(xMin, x);
    xMax = Math.max(xMax, x);
    yMin = Math.min(yMin, y);
    yMax = Math.max(yMax, y);
  }
  // degenerate spans still need a finite scale
  if (!(xMax - xMin > 1e-9)) { xMin -= 0.5; xMax += 0.5; }
  if (!(yMax - yMin > 1e-9)) { yMin -= 0.5; yMax += 0.5; }
  return { xMin, xMax, yMin, yMax };
}

export function toSvgCoords(p: [number, number], box: Box): [number, number] {
  const x = PAD + ((p[0] - box.xMin) / (box.xMax - box.xMin)) * (WIDTH - 2 * PAD);
  // svg y axis points down
  const y = HEIGHT - PAD - ((p[1] - box.yMin) / (box.yMax - box.yMin)) * (HEIGHT - 2 * PAD);
  return [x, y];
}

export function scatterSvg(background: [number, number][], query: [number, number]): string {
  const box = bounds([...background, query]);
  const dots = background
    .map((p) => {
      const [x, y] = toSvgCoords(p, box);
      return `<circle class="bg-point" cx="${x.toFixed(1)}" cy="${y.toFixed(1)}" r="3" fill="#b9bdc4"/>`;
    })
    .join("");
  const [qx, qy] = toSvgCoords(query, box);
  const highlight =
    `<circle class="query-point" cx="${qx.toFixed(1)}" cy="${qy.toFixed(1)}" r="7" ` +
    `fill="#ff8c00" stroke="#7a3b00" stroke-width="2"/>`;
  return (
    `<svg viewBox="0 0 ${WIDTH} ${HEIGHT}" width="${WIDTH}" height="${HEIGHT}" role="img">` +
    `<rect width="${WIDTH}" height="${HEIGHT}" fill="#f7f8fa"/>` +
    dots +
    highlight +
    `</svg>`
  );
}
