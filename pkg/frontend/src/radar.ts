// Pure radar-chart geometry: one axis per concept, a filled polygon at the
// current knowledge values, and an optional outline polygon for the previous
// round. No DOM access here, so the math is directly testable.

export interface RadarInput {
  concepts: string[];
  theta: number[];
  previous?: number[] | null;
  epsilonLow: number;
  size?: number;
}

export interface RadarAxis {
  label: string;
  x: number;
  y: number;
  labelX: number;
  labelY: number;
}

export interface RadarGeometry {
  error: string | null;
  size: number;
  center: number;
  scaleMax: number;
  axes: RadarAxis[];
  polygon: string; // SVG points for the current values
  previousPolygon: string | null;
  rings: number[]; // radii of reference rings
}

const DEFAULT_SIZE = 320;
const LABEL_PUSH = 1.12;

function placeholder(size: number, message: string): RadarGeometry {
  return {
    error: message,
    size,
    center: size / 2,
    scaleMax: 0,
    axes: [],
    polygon: "",
    previousPolygon: null,
    rings: [],
  };
}

function angleOf(index: number, count: number): number {
  // start at 12 o'clock, go clockwise
  return -Math.PI / 2 + (2 * Math.PI * index) / count;
}

function polygonPoints(
  values: number[],
  scaleMax: number,
  center: number,
  radius: number,
): string {
  return values
    .map((value, i) => {
      const r = (Math.min(Math.max(value, 0), scaleMax) / scaleMax) * radius;
      const a = angleOf(i, values.length);
      const x = center + r * Math.cos(a);
      const y = center + r * Math.sin(a);
      return `${x.toFixed(2)},${y.toFixed(2)}`;
    })
    .join(" ");
}

export function radarGeometry(input: RadarInput): RadarGeometry {
  const size = input.size ?? DEFAULT_SIZE;
  if (input.concepts.length === 0 || input.theta.length === 0) {
    return placeholder(size, "no knowledge state yet");
  }
  if (input.concepts.length !== input.theta.length) {
    return placeholder(
      size,
      `concepts (${input.concepts.length}) and theta (${input.theta.length}) differ`,
    );
  }
  if (input.previous && input.previous.length !== input.theta.length) {
    return placeholder(size, "previous round has a different concept count");
  }

  const center = size / 2;
  const radius = (size / 2) * 0.78;
  const candidates = [...input.theta, input.epsilonLow * 2];
  if (input.previous) candidates.push(...input.previous);
  const scaleMax = Math.max(...candidates.map((v) => Math.max(v, 0)), 1e-9);

  const axes: RadarAxis[] = input.concepts.map((label, i) => {
    const a = angleOf(i, input.concepts.length);
    return {
      label,
      x: center + radius * Math.cos(a),
      y: center + radius * Math.sin(a),
      labelX: center + radius * LABEL_PUSH * Math.cos(a),
      labelY: center + radius * LABEL_PUSH * Math.sin(a),
    };
  });

  return {
    error: null,
    size,
    center,
    scaleMax,
    axes,
    polygon: polygonPoints(input.theta, scaleMax, center, radius),
    previousPolygon: input.previous
      ? polygonPoints(input.previous, scaleMax, center, radius)
      : null,
    rings: [0.25, 0.5, 0.75, 1.0].map((f) => radius * f),
  };
}

export function radarSvg(geometry: RadarGeometry): string {
  const { size, center } = geometry;
  if (geometry.error) {
    return (
      `<svg viewBox="0 0 ${size} ${size}" role="img" aria-label="knowledge radar">` +
      `<text x="${center}" y="${center}" text-anchor="middle" class="radar-placeholder">` +
      `${geometry.error}</text></svg>`
    );
  }
  const rings = geometry.rings
    .map((r) => `<circle cx="${center}" cy="${center}" r="${r}" class="radar-ring"/>`)
    .join("");
  const spokes = geometry.axes
    .map((ax) => `<line x1="${center}" y1="${center}" x2="${ax.x}" y2="${ax.y}" class="radar-spoke"/>`)
    .join("");
  const labels = geometry.axes
    .map(
      (ax) =>
        `<text x="${ax.labelX}" y="${ax.labelY}" text-anchor="middle" class="radar-label">${ax.label}</text>`,
    )
    .join("");
  const previous = geometry.previousPolygon
    ? `<polygon points="${geometry.previousPolygon}" class="radar-previous"/>`
    : "";
  return (
    `<svg viewBox="0 0 ${size} ${size}" role="img" aria-label="knowledge radar">` +
    rings +
    spokes +
    previous +
    `<polygon points="${geometry.polygon}" class="radar-current"/>` +
    labels +
    `</svg>`
  );
}
