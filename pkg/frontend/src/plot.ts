// Confidence-likelihood plot geometry. POS runs on the x axis, LOK on the
// y axis with 1 at the top. Everything here is coordinate mapping of
// server-supplied numbers; the allowed intervals, scores and suggestions
// are never recomputed on this side.

import { PlotData, PlotPoint } from "./api.js";

export interface PlotLayout {
  width: number;
  height: number;
  margin: number;
}

export const DEFAULT_LAYOUT: PlotLayout = { width: 420, height: 320, margin: 36 };

export function posToX(pos: number, layout: PlotLayout): number {
  return layout.margin + pos * (layout.width - 2 * layout.margin);
}

export function lokToY(lok: number, layout: PlotLayout): number {
  // lok 0 at the bottom edge, lok 1 at the top
  return layout.height - layout.margin - lok * (layout.height - 2 * layout.margin);
}

export function polygonPath(vertices: [number, number][], layout: PlotLayout): string {
  if (vertices.length === 0) return "";
  const steps = vertices.map(([pos, lok], index) => {
    const cmd = index === 0 ? "M" : "L";
    return `${cmd}${posToX(pos, layout).toFixed(2)},${lokToY(lok, layout).toFixed(2)}`;
  });
  return steps.join(" ") + " Z";
}

// "blueness proportional to similarity": linear map, nothing fancier
export function similarityColor(similarity: number): string {
  return `rgba(42, 96, 189, ${similarity.toFixed(3)})`;
}

export interface SquareModel {
  characterizationId: string;
  x: number;
  y: number;
  fill: string;
  similarity: number;
}

export interface CircleModel {
  expertId: string;
  x: number;
  y: number;
}

export interface MarkerModel {
  x: number;
  y: number;
  pos: number;
}

export interface PlotModel {
  regionPaths: string[];
  lokLineY: number | null;
  squares: SquareModel[];
  circles: CircleModel[];
  suggestion: MarkerModel | null;
  // slider geometry on the LOK line, straight from GET pos/region
  allowedSegments: { x0: number; x1: number }[];
}

export interface PlotInputs {
  plotData: PlotData;
  lok: number | null;
  intervals: [number, number][];
  entries: { expert_id: string; pos: number }[];
  suggestedPos: number | null;
}

export function buildPlotModel(inputs: PlotInputs, layout: PlotLayout = DEFAULT_LAYOUT): PlotModel {
  const { plotData, lok, intervals, entries, suggestedPos } = inputs;
  const lokLineY = lok === null ? null : lokToY(lok, layout);
  return {
    regionPaths: [
      polygonPath(plotData.region.left, layout),
      polygonPath(plotData.region.right, layout),
    ],
    lokLineY,
    squares: plotData.points.map((p: PlotPoint) => ({
      characterizationId: p.characterization_id,
      x: posToX(p.pos, layout),
      y: lokToY(p.lok, layout),
      fill: similarityColor(p.similarity),
      similarity: p.similarity,
    })),
    circles:
      lok === null
        ? []
        : entries.map((e) => ({
            expertId: e.expert_id,
            x: posToX(e.pos, layout),
            y: lokToY(lok, layout),
          })),
    suggestion:
      suggestedPos === null || lok === null
        ? null
        : { x: posToX(suggestedPos, layout), y: lokToY(lok, layout), pos: suggestedPos },
    allowedSegments: intervals.map(([lo, hi]) => ({
      x0: posToX(lo, layout),
      x1: posToX(hi, layout),
    })),
  };
}

// Membership test against server intervals, used to clamp the slider. The
// candidate replacement value (nearest allowed) comes from POST
// pos/validate, not from here.
export function insideIntervals(pos: number, intervals: [number, number][]): boolean {
  return intervals.some(([lo, hi]) => pos >= lo && pos <= hi);
}

export function renderPlot(svg: SVGSVGElement, model: PlotModel, layout: PlotLayout = DEFAULT_LAYOUT): void {
  const ns = "http://www.w3.org/2000/svg";
  svg.setAttribute("viewBox", `0 0 ${layout.width} ${layout.height}`);
  while (svg.firstChild) svg.removeChild(svg.firstChild);

  const frame = document.createElementNS(ns, "rect");
  frame.setAttribute("x", String(layout.margin));
  frame.setAttribute("y", String(layout.margin));
  frame.setAttribute("width", String(layout.width - 2 * layout.margin));
  frame.setAttribute("height", String(layout.height - 2 * layout.margin));
  frame.setAttribute("class", "plot-frame");
  svg.appendChild(frame);

  for (const path of model.regionPaths) {
    if (!path) continue;
    const el = document.createElementNS(ns, "path");
    el.setAttribute("d", path);
    el.setAttribute("class", "plot-region");
    svg.appendChild(el);
  }

  for (const square of model.squares) {
    const el = document.createElementNS(ns, "rect");
    const side = 10;
    el.setAttribute("x", (square.x - side / 2).toFixed(2));
    el.setAttribute("y", (square.y - side / 2).toFixed(2));
    el.setAttribute("width", String(side));
    el.setAttribute("height", String(side));
    el.setAttribute("fill", square.fill);
    el.setAttribute("class", "plot-square");
    el.setAttribute("data-characterization", square.characterizationId);
    svg.appendChild(el);
  }

  if (model.lokLineY !== null) {
    const line = document.createElementNS(ns, "line");
    line.setAttribute("x1", String(layout.margin));
    line.setAttribute("x2", String(layout.width - layout.margin));
    line.setAttribute("y1", model.lokLineY.toFixed(2));
    line.setAttribute("y2", model.lokLineY.toFixed(2));
    line.setAttribute("class", "plot-lok-line");
    svg.appendChild(line);

    for (const segment of model.allowedSegments) {
      const el = document.createElementNS(ns, "line");
      el.setAttribute("x1", segment.x0.toFixed(2));
      el.setAttribute("x2", segment.x1.toFixed(2));
      el.setAttribute("y1", model.lokLineY.toFixed(2));
      el.setAttribute("y2", model.lokLineY.toFixed(2));
      el.setAttribute("class", "plot-allowed");
      svg.appendChild(el);
    }
  }

  for (const circle of model.circles) {
    const el = document.createElementNS(ns, "circle");
    el.setAttribute("cx", circle.x.toFixed(2));
    el.setAttribute("cy", circle.y.toFixed(2));
    el.setAttribute("r", "7");
    el.setAttribute("class", "plot-expert");
    el.setAttribute("data-expert", circle.expertId);
    svg.appendChild(el);
  }

  if (model.suggestion) {
    const el = document.createElementNS(ns, "circle");
    el.setAttribute("cx", model.suggestion.x.toFixed(2));
    el.setAttribute("cy", model.suggestion.y.toFixed(2));
    el.setAttribute("r", "5");
    el.setAttribute("class", "plot-suggestion");
    svg.appendChild(el);
  }
}
