// DOM wiring: canvases, buttons, and the render loop around the headless
// console core. Runs entirely on the browser's single event loop.

import { Console } from "./console.js";
import { CommandClient, parseFrame, readFrameStream } from "./protocol.js";
import { PRESETS } from "./presets.js";
import {
  Camera,
  defaultCamera,
  drawPane,
  drawSphere,
  unproject,
} from "./sphere.js";
import { drawSeries, fitScale, logFloor } from "./traces.js";
import { Snapshot, Vec3 } from "./types.js";

const SERVICE = ""; // same origin; override with ?service=http://host:port

function serviceBase(): string {
  const q = new URLSearchParams(location.search).get("service");
  return q ?? SERVICE;
}

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node as T;
}

function ctx2d(canvas: HTMLCanvasElement): CanvasRenderingContext2D {
  const c = canvas.getContext("2d");
  if (!c) throw new Error("canvas 2d context unavailable");
  return c;
}

async function main(): Promise<void> {
  const base = serviceBase();
  const clientId = `console-${Math.random().toString(36).slice(2, 10)}`;
  const client = new CommandClient(base, clientId);
  const con = new Console(client, parseFrame);

  const sphereCanvas = el<HTMLCanvasElement>("sphere");
  const paneCanvas = el<HTMLCanvasElement>("pane");
  const misCanvas = el<HTMLCanvasElement>("mis-trace");
  const voltCanvas = el<HTMLCanvasElement>("volt-trace");
  const banner = el<HTMLDivElement>("banner");
  const status = el<HTMLSpanElement>("status");

  // size the 2-D pane to the service screen so px/py plot verbatim
  try {
    const snap: Snapshot = await (await fetch(`${base}/snapshot`)).json();
    status.textContent = `profile ${snap.profile}, ${snap.stage_count} stages`;
  } catch {
    status.textContent = "snapshot unavailable";
  }

  const cam: Camera = defaultCamera(sphereCanvas.width, sphereCanvas.height);

  // orbit with pointer drag, retarget with plain click
  let dragging = false;
  let moved = 0;
  let lastX = 0;
  let lastY = 0;
  sphereCanvas.addEventListener("pointerdown", (ev) => {
    dragging = true;
    moved = 0;
    lastX = ev.offsetX;
    lastY = ev.offsetY;
  });
  sphereCanvas.addEventListener("pointermove", (ev) => {
    if (!dragging) return;
    const dx = ev.offsetX - lastX;
    const dy = ev.offsetY - lastY;
    moved += Math.abs(dx) + Math.abs(dy);
    cam.yawRad -= dx * 0.008;
    cam.pitchRad = Math.max(
      -1.4,
      Math.min(1.4, cam.pitchRad + dy * 0.008),
    );
    lastX = ev.offsetX;
    lastY = ev.offsetY;
  });
  sphereCanvas.addEventListener("pointerup", (ev) => {
    dragging = false;
    if (moved > 4) return; // it was an orbit, not a click
    const sop = unproject(ev.offsetX, ev.offsetY, cam);
    if (sop) void con.send({ kind: "SetTarget", sop }, performance.now());
  });

  const presetBar = el<HTMLDivElement>("presets");
  for (const preset of PRESETS) {
    const btn = document.createElement("button");
    btn.textContent = preset.key;
    btn.title = preset.label;
    btn.addEventListener("click", () =>
      void con.send(
        { kind: "SetTarget", sop: preset.sop as Vec3 },
        performance.now(),
      ),
    );
    presetBar.appendChild(btn);
  }
  el<HTMLButtonElement>("btn-pause").addEventListener("click", () =>
    void con.send({ kind: "Pause" }, performance.now()),
  );
  el<HTMLButtonElement>("btn-resume").addEventListener("click", () =>
    void con.send({ kind: "Resume" }, performance.now()),
  );
  el<HTMLButtonElement>("btn-reset").addEventListener("click", () =>
    void con.send({ kind: "Reset" }, performance.now()),
  );
  el<HTMLButtonElement>("btn-drift").addEventListener("click", () => {
    const sigma = parseFloat(el<HTMLInputElement>("drift-sigma").value);
    if (Number.isFinite(sigma) && sigma >= 0)
      void con.send({ kind: "SetDrift", sigma }, performance.now());
  });
  el<HTMLButtonElement>("btn-jump").addEventListener("click", () => {
    const angle = parseFloat(el<HTMLInputElement>("jump-angle").value);
    if (Number.isFinite(angle))
      void con.send({ kind: "InjectJump", angle }, performance.now());
  });

  const sphereCtx = ctx2d(sphereCanvas);
  const paneCtx = ctx2d(paneCanvas);
  const misCtx = ctx2d(misCanvas);
  const voltCtx = ctx2d(voltCanvas);
  const voltColors = ["#6fe3a5", "#ffb454", "#5aa0ff", "#c792ea", "#ff6b6b", "#f5e663"];

  function paint(now: number): void {
    const frame = con.renderTick(now);
    if (con.banner) {
      banner.textContent = con.banner.text;
      banner.style.display = "block";
    } else if (con.isStale(now)) {
      banner.textContent = "stale: no frames for over 1 s";
      banner.style.display = "block";
    } else {
      banner.style.display = "none";
    }
    if (con.halted) return; // schema mismatch: banner stays, rendering stops
    if (frame) {
      const view = con.view.latest();
      drawSphere(
        sphereCtx,
        cam,
        sphereCanvas.width,
        sphereCanvas.height,
        view ? view.trail : [],
        frame.sop_meas,
        con.target,
        frame.launch,
      );
      drawPane(
        paneCtx,
        paneCanvas.width,
        paneCanvas.height,
        con.pixelTrail,
        frame.px,
        frame.py,
      );

      misCtx.clearRect(0, 0, misCanvas.width, misCanvas.height);
      const misScale = fitScale(
        [con.traces.misalign.points],
        misCanvas.width,
        misCanvas.height,
        -9,
        1,
      );
      drawSeries(
        misCtx,
        con.traces.misalign.points,
        misScale,
        "#6fe3a5",
        (v) => logFloor(v),
      );

      voltCtx.clearRect(0, 0, voltCanvas.width, voltCanvas.height);
      const all = con.traces.cmd.flat().concat(con.traces.out.flat());
      const voltScale = fitScale(
        all.map((s) => s.points),
        voltCanvas.width,
        voltCanvas.height,
        -70,
        70,
      );
      let k = 0;
      for (let s = 0; s < con.traces.cmd.length; s++) {
        for (let e = 0; e < 2; e++) {
          const color = voltColors[k++ % voltColors.length];
          voltCtx.globalAlpha = 0.45; // commanded, dimmed under realized
          drawSeries(voltCtx, con.traces.cmd[s][e].points, voltScale, color);
          voltCtx.globalAlpha = 1.0;
          drawSeries(voltCtx, con.traces.out[s][e].points, voltScale, color);
        }
      }
      const pend = con.pending ? ` | awaiting ${con.pending.kind}` : "";
      const errs = con.lastErrors.length > 0 ? ` | ${con.lastErrors.join(",")}` : "";
      el<HTMLSpanElement>("tick").textContent =
        `tick ${frame.tick} | misalign ${frame.misalign_rad.toExponential(2)} rad` +
        `${frame.paused ? " | paused" : ""}${pend}${errs}`;
    }
    requestAnimationFrame(paint);
  }
  requestAnimationFrame(paint);

  // stream forever, reconnecting with a short backoff
  for (;;) {
    try {
      await readFrameStream(`${base}/frames`, (line) => con.ingest(line));
    } catch {
      // fall through to retry
    }
    if (con.halted) return;
    await new Promise((r) => setTimeout(r, 500));
  }
}

window.addEventListener("load", () => void main());
