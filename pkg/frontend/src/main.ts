/** Wires the state machine, the service client and the 3D viewer into the page. */

import { ServiceClient } from "./api.js";
import { buildColors, sourceColor } from "./colors.js";
import { ViewState } from "./state.js";
import type { Axis, SelectionOut } from "./types.js";
import { CloudViewer } from "./viewer.js";

const apiBase = new URLSearchParams(location.search).get("api") ?? "";
const state = new ViewState(new ServiceClient(apiBase));

const el = (id: string) => document.getElementById(id)!;

function banner(message: string | null): void {
  const box = el("banner");
  box.textContent = message ?? "";
  box.style.display = message ? "block" : "none";
}

function describeSelection(s: SelectionOut): string {
  if (s.kind === "segment") {
    return `#${s.id} segment ${s.cloud_id} [${(s.indices ?? []).length} pts]`;
  }
  return `#${s.id} pair ${s.axis} ${s.cloud_id}:${s.index} vs ${s.ref_cloud_id}:${s.ref_index}`;
}

let viewer: CloudViewer;

function repaint(): void {
  for (const summary of state.summaries) {
    const cloud = state.cloud(summary.id);
    const order = state.summaries.filter((s) => !s.is_reference)
      .findIndex((s) => s.id === summary.id);
    const base = sourceColor(Math.max(order, 0), summary.is_reference);
    const isActive = summary.id === state.activeCloud;
    const segment = new Set(isActive ? state.segmentBuffer : []);
    const pair = new Set<number>();
    if (summary.id === state.activeCloud && state.pairBuffer.index !== undefined) {
      pair.add(state.pairBuffer.index);
    }
    if (summary.id === state.reference && state.pairBuffer.refIndex !== undefined) {
      pair.add(state.pairBuffer.refIndex);
    }
    const measure = new Set(
      state.measureBuffer.filter((m) => m.cloudId === summary.id).map((m) => m.index));
    viewer.setColors(summary.id, buildColors(cloud, base, {
      middleRing: isActive || summary.is_reference ? cloud.middle_ring : null,
      segment, pair, measure,
    }));
    viewer.setPreviewMatrix(summary.id, state.previewMatrix(summary.id));
  }
  renderSidebar();
}

function renderSidebar(): void {
  const legend = el("legend");
  legend.innerHTML = "";
  state.summaries.forEach((s) => {
    const order = state.summaries.filter(x => !x.is_reference).findIndex(x => x.id === s.id);
    const [r, g, b] = sourceColor(Math.max(order, 0), s.is_reference);
    const row = document.createElement("label");
    row.className = "legend-row";
    row.innerHTML = `<input type="radio" name="active" value="${s.id}"
        ${s.id === state.activeCloud ? "checked" : ""} ${s.is_reference ? "disabled" : ""}>
      <span class="swatch" style="background: rgb(${r * 255},${g * 255},${b * 255})"></span>
      ${s.id}${s.is_reference ? " (reference)" : ""} — ${s.point_count} pts, middle ring ${s.middle_ring}`;
    row.querySelector("input")!.addEventListener("change", () => {
      state.setActiveCloud(s.id);
      repaint();
    });
    legend.appendChild(row);
  });

  el("segment-status").textContent =
    `${state.segmentBuffer.length} point(s) buffered` +
    (state.segmentReady() ? " — ready" : " — need ≥ 3 consecutive middle-ring points");
  const pb = state.pairBuffer;
  el("pair-status").textContent =
    `cloud: ${pb.index ?? "—"}, reference: ${pb.refIndex ?? "—"}` +
    (state.pairReady() ? " — ready" : "");
  el("error").textContent = state.lastError ?? "";

  const list = el("selections");
  list.innerHTML = "";
  state.selections.forEach((s) => {
    const row = document.createElement("li");
    row.textContent = describeSelection(s) + " ";
    const btn = document.createElement("button");
    btn.textContent = "delete";
    btn.addEventListener("click", async () => {
      await state.deleteSelection(s.id);
      repaint();
    });
    row.appendChild(btn);
    list.appendChild(row);
  });

  const preview = el("preview-info");
  if (state.preview) {
    preview.innerHTML = state.preview.clouds.map((c) => {
      const angles = c.roll_deg == null ? "angles pending" :
        `roll ${c.roll_deg.toFixed(2)}°, pitch ${c.pitch_deg!.toFixed(2)}°, ` +
        `yaw ${c.yaw_deg!.toFixed(2)}° (${c.yaw_readings} readings)`;
      const status = c.complete ? "complete" : `missing: ${c.missing.join("; ")}`;
      return `<div><b>${c.cloud_id}</b>: ${angles}<br><small>${status}</small></div>`;
    }).join("");
  } else {
    preview.textContent = "no preview yet";
  }
  const dist = state.measuredDistance();
  el("measure-info").textContent = dist === null
    ? "pick two points with the measure tool"
    : `distance: ${dist.toFixed(3)} m`;
}

function bindTools(): void {
  el("tool-segment").addEventListener("click", () => {
    state.setTool({ kind: "segment" });
    repaint();
  });
  for (const axis of ["x", "y", "z"] as Axis[]) {
    el(`tool-pair-${axis}`).addEventListener("click", () => {
      state.setTool({ kind: "pointpair", axis });
      repaint();
    });
  }
  el("tool-measure").addEventListener("click", () => {
    state.setTool({ kind: "measure" });
    repaint();
  });
  el("submit-segment").addEventListener("click", async () => {
    await state.submitSegment();
    repaint();
  });
  el("submit-pair").addEventListener("click", async () => {
    await state.submitPointPair();
    repaint();
  });
  el("toggle-preview").addEventListener("click", async () => {
    try {
      if (!state.previewEnabled) await state.refreshPreview();
      state.previewEnabled = !state.previewEnabled;
      (el("toggle-preview") as HTMLButtonElement).textContent =
        state.previewEnabled ? "hide transform preview" : "show transform preview";
    } catch (err) {
      state.lastError = String(err);
    }
    repaint();
  });
}

async function boot(): Promise<void> {
  viewer = new CloudViewer(el("canvas-holder"), (cloudId, index) => {
    state.addPick(cloudId, index);
    const p = state.cloud(cloudId);
    el("pick-info").textContent =
      `picked ${cloudId}#${index} at (${p.x[index].toFixed(3)}, ` +
      `${p.y[index].toFixed(3)}, ${p.z[index].toFixed(3)}), ring ${p.ring[index]}`;
    repaint();
  });
  try {
    await state.load();
  } catch (err) {
    banner(`service unreachable or malformed payload: ${err}`);
    return;
  }
  banner(null);
  for (const summary of state.summaries) {
    viewer.setCloud(state.cloud(summary.id));
  }
  bindTools();
  repaint();
}

boot();
