// DOM rendering. Scenes here are drawn 1-D on a number line (the loop
// witnesses live on a line and the interesting readout is the shrinking
// gap); a second coordinate falls back to a plane view. Lights render as
// fill colors plus their letter so the two states stay distinguishable
// without color vision.

import type { ViewState } from "./viewmodel.js";

const LIGHT_FILL: Record<"A" | "B", string> = { A: "#e8b836", B: "#3f7cd6" };

export interface RenderCallbacks {
  onChoose(index: number): void;
  onUndo(): void;
  onFork(): void;
  onZoom(factor: number): void;
}

export interface RenderOptions {
  zoom: number;
}

function el(tag: string, cls: string, text?: string): HTMLElement {
  const node = document.createElement(tag);
  node.className = cls;
  if (text !== undefined) node.textContent = text;
  return node;
}

function numberLine(state: ViewState, zoom: number): SVGSVGElement {
  const svg = document.createElementNS("http://www.w3.org/2000/svg", "svg");
  svg.setAttribute("viewBox", "0 0 600 120");
  svg.classList.add("scene");
  const xs = state.robots.map((r) => r.xDecimal);
  const planar = state.robots.some((r) => r.yDecimal !== 0);
  const mid = xs.length ? (Math.min(...xs) + Math.max(...xs)) / 2 : 0;
  const halfSpan = Math.max(1e-9, (Math.max(...xs, mid) - Math.min(...xs, mid)) || 1) / zoom;
  const sx = (x: number) => 300 + ((x - mid) / (2 * halfSpan)) * 560;
  const sy = (y: number) => (planar ? 60 - y * 20 : 60);

  const axis = document.createElementNS(svg.namespaceURI, "line");
  axis.setAttribute("x1", "20");
  axis.setAttribute("x2", "580");
  axis.setAttribute("y1", "60");
  axis.setAttribute("y2", "60");
  axis.setAttribute("stroke", "#999");
  svg.appendChild(axis);

  for (const robot of state.robots) {
    if (robot.pendingTarget) {
      const marker = document.createElementNS(svg.namespaceURI, "rect");
      marker.setAttribute("x", String(sx(robot.pendingTarget.x) - 3));
      marker.setAttribute("y", String(sy(robot.pendingTarget.y) - 3));
      marker.setAttribute("width", "6");
      marker.setAttribute("height", "6");
      marker.setAttribute("fill", "none");
      marker.setAttribute("stroke", LIGHT_FILL[robot.light]);
      svg.appendChild(marker);
    }
    const g = document.createElementNS(svg.namespaceURI, "g");
    const circle = document.createElementNS(svg.namespaceURI, "circle");
    circle.setAttribute("cx", String(sx(robot.observedXDecimal)));
    circle.setAttribute("cy", String(sy(robot.observedYDecimal)));
    circle.setAttribute("r", "14");
    circle.setAttribute("fill", LIGHT_FILL[robot.light]);
    const letter = document.createElementNS(svg.namespaceURI, "text");
    letter.setAttribute("x", String(sx(robot.observedXDecimal)));
    letter.setAttribute("y", String(sy(robot.observedYDecimal) + 5));
    letter.setAttribute("text-anchor", "middle");
    letter.setAttribute("fill", "#fff");
    letter.textContent = `${robot.light}`;
    const name = document.createElementNS(svg.namespaceURI, "text");
    name.setAttribute("x", String(sx(robot.observedXDecimal)));
    name.setAttribute("y", String(sy(robot.observedYDecimal) - 20));
    name.setAttribute("text-anchor", "middle");
    name.textContent = robot.name;
    g.append(circle, letter, name);
    svg.appendChild(g);
  }
  return svg as SVGSVGElement;
}

export function render(
  root: HTMLElement,
  state: ViewState,
  options: RenderOptions,
  callbacks: RenderCallbacks,
): void {
  root.replaceChildren();

  if (state.banner) {
    root.appendChild(el("div", "banner", state.banner));
  }
  if (state.lastError) {
    const text = state.lastConstraint
      ? `${state.lastError}: ${state.lastConstraint}`
      : state.lastError;
    root.appendChild(el("div", "error", text));
  }

  const crumbs = el("div", "breadcrumb");
  for (const branch of state.branch) {
    crumbs.appendChild(el("span", "crumb", branch));
  }
  root.appendChild(crumbs);

  root.appendChild(numberLine(state, options.zoom));

  const readout = el("div", "readout");
  readout.appendChild(
    el("span", "distance", `gap² = ${state.distanceSquared ?? "—"} (${state.distanceSquaredDecimal ?? ""})`),
  );
  if (state.verdict) readout.appendChild(el("span", "verdict", state.verdict));
  if (state.loopStart !== null) {
    readout.appendChild(el("span", "loop", `loop starts @ ${state.loopStart}`));
  }
  root.appendChild(readout);

  const badges = el("div", "badges");
  for (const robot of state.robots) {
    badges.appendChild(el("span", `badge badge-${robot.phaseBadge.toLowerCase()}`,
      `${robot.name}: ${robot.phaseBadge} @ ${robot.x}`));
  }
  root.appendChild(badges);

  const controls = el("div", "controls");
  const undo = el("button", "undo", "undo") as HTMLButtonElement;
  undo.disabled = !state.canUndo;
  undo.onclick = callbacks.onUndo;
  const fork = el("button", "fork", "fork") as HTMLButtonElement;
  fork.onclick = callbacks.onFork;
  const zoomIn = el("button", "zoom", "zoom +") as HTMLButtonElement;
  zoomIn.onclick = () => callbacks.onZoom(2);
  const zoomOut = el("button", "zoom", "zoom -") as HTMLButtonElement;
  zoomOut.onclick = () => callbacks.onZoom(0.5);
  controls.append(undo, fork, zoomIn, zoomOut);
  root.appendChild(controls);

  const palette = el("div", "palette");
  state.palette.forEach((entry, index) => {
    const button = el("button", "event", entry.label) as HTMLButtonElement;
    button.onclick = () => callbacks.onChoose(index);
    palette.appendChild(button);
  });
  root.appendChild(palette);

  const timeline = el("ol", "timeline");
  for (const entry of state.timeline) {
    timeline.appendChild(el("li", "tick", `${entry.index}. ${entry.label}`));
  }
  root.appendChild(timeline);
}
