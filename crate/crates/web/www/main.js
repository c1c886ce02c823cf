import init, { simulate, bound_curve, delay_heatmap, scenario_names } from "./pkg/robocpd_web.js";

const $ = (id) => document.getElementById(id);

function values(fieldsetId) {
  const out = {};
  for (const el of $(fieldsetId).querySelectorAll("input, select")) {
    out[el.name] = el.type === "number" ? Number(el.value) : el.value;
  }
  return out;
}

function show(id, text, isError = false) {
  const el = $(id);
  el.textContent = text;
  el.className = isError ? "out err" : "out";
}

function frame(canvas) {
  const ctx = canvas.getContext("2d");
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  return { ctx, w: canvas.width, h: canvas.height, pad: 36 };
}

function drawSimulation(view) {
  const { ctx, w, h, pad } = frame($("sim-canvas"));
  const ys = view.series;
  let lo = Infinity, hi = -Infinity;
  for (const y of ys) { lo = Math.min(lo, y); hi = Math.max(hi, y); }
  // heavy tails squash the plot; clamp to a readable band
  lo = Math.max(lo, -4); hi = Math.min(hi, 5);
  const x = (t) => pad + ((t - 1) / (ys.length - 1)) * (w - 2 * pad);
  const y = (v) => h - pad - ((Math.min(Math.max(v, lo), hi) - lo) / (hi - lo)) * (h - 2 * pad);

  ctx.fillStyle = "rgba(40, 80, 160, 0.45)";
  ys.forEach((v, i) => ctx.fillRect(x(i + 1), y(v), 1.5, 1.5));

  const vline = (t, color, width) => {
    ctx.strokeStyle = color; ctx.lineWidth = width;
    ctx.beginPath(); ctx.moveTo(x(t), pad / 2); ctx.lineTo(x(t), h - pad); ctx.stroke();
  };
  view.change_points.forEach((t) => vline(t, "#999", 1));
  for (const d of view.detections) {
    if (d.localization) {
      const [a, b] = d.localization;
      ctx.fillStyle = "rgba(200, 30, 30, 0.12)";
      ctx.fillRect(x(a), pad / 2, Math.max(x(b) - x(a), 2), h - pad * 1.5);
    }
    vline(d.time, "#c22", 2);
  }
  ctx.fillStyle = "#444";
  ctx.fillText(`1`, pad, h - pad / 3);
  ctx.fillText(`${ys.length}`, w - pad - 20, h - pad / 3);
}

function drawBound(view) {
  const { ctx, w, h, pad } = frame($("bound-canvas"));
  const lx = view.t.map(Math.log10);
  const ly = view.radius.map((r) => Math.log10(r));
  const [x0, x1] = [lx[0], lx[lx.length - 1]];
  const finite = ly.filter(Number.isFinite);
  const [y0, y1] = [Math.min(...finite), Math.max(...finite)];
  const px = (v) => pad + ((v - x0) / (x1 - x0 || 1)) * (w - 2 * pad);
  const py = (v) => h - pad - ((v - y0) / (y1 - y0 || 1)) * (h - 2 * pad);

  ctx.strokeStyle = "#2a5"; ctx.lineWidth = 2; ctx.beginPath();
  let started = false;
  lx.forEach((v, i) => {
    if (!Number.isFinite(ly[i])) return;
    if (started) ctx.lineTo(px(v), py(ly[i])); else { ctx.moveTo(px(v), py(ly[i])); started = true; }
  });
  ctx.stroke();
  ctx.fillStyle = "#444";
  ctx.fillText(`t = ${view.t[0]}`, pad, h - pad / 3);
  ctx.fillText(`t = ${view.t[view.t.length - 1]}`, w - pad - 60, h - pad / 3);
  ctx.fillText(`√B max ${10 ** y1 < 1000 ? (10 ** y1).toFixed(2) : (10 ** y1).toExponential(2)}`, pad + 4, pad);
  ctx.fillText(`√B min ${(10 ** y0).toExponential(2)}`, pad + 4, h - pad - 4);
}

function drawHeatmap(view) {
  const { ctx, w, h, pad } = frame($("heat-canvas"));
  const rows = view.n_grid.length, cols = view.jump_grid.length;
  const cw = (w - 2 * pad) / cols, ch = (h - 2 * pad) / rows;
  const finite = view.cells.flat().filter((c) => c !== null);
  const maxLog = Math.log10(Math.max(...finite, 10));
  view.cells.forEach((row, i) => row.forEach((c, j) => {
    const x = pad + j * cw, y = pad + i * ch;
    if (c === null) { ctx.fillStyle = "#fff"; } else {
      const s = Math.log10(c) / maxLog;
      ctx.fillStyle = `hsl(${220 - 200 * s}, 70%, ${35 + 30 * (1 - s)}%)`;
    }
    ctx.fillRect(x, y, cw - 1, ch - 1);
  }));
  ctx.fillStyle = "#444";
  view.jump_grid.forEach((d, j) => { if (j % 2 === 1) ctx.fillText(d, pad + j * cw + 2, h - pad / 3); });
  view.n_grid.forEach((n, i) => { if (i % 4 === 0) ctx.fillText(n, 2, pad + i * ch + ch / 2); });
  ctx.fillText("Δ →", w - pad, h - pad / 3);
  ctx.fillText("n ↓", 2, pad / 2);
}

function guarded(outId, f) {
  return () => {
    try { f(); } catch (e) { show(outId, String(e), true); }
  };
}

async function main() {
  await init();
  const sel = $("sim").querySelector("select[name=scenario]");
  for (const name of JSON.parse(scenario_names())) {
    const opt = document.createElement("option");
    opt.textContent = name;
    if (name === "pareto-d1-D1") opt.selected = true;
    sel.appendChild(opt);
  }

  const runSim = guarded("sim-out", () => {
    const v = values("sim");
    const view = JSON.parse(simulate(v.scenario, v.detector, v.g, v.sigma, v.delta, v.seed));
    drawSimulation(view);
    const lines = view.detections.map((d) =>
      `t=${d.time}  segment from ${d.segment_start}  localized to [${d.localization?.join(", ")}]`);
    show("sim-out", `${view.detections.length} detections, ${view.num_false} false, regret ${view.regret}\n${lines.join("\n")}`);
  });
  const runBound = guarded("bound-out", () => {
    const v = values("bound");
    const view = JSON.parse(bound_curve(v.g, v.sigma, v.delta, v.regime, v.tmax));
    drawBound(view);
    show("bound-out", `γ = ${view.gamma}, λ = ${view.lambda}`);
  });
  const runHeat = guarded("heat-out", () => {
    const v = values("heat");
    const t0 = performance.now();
    const view = JSON.parse(delay_heatmap(v.g, v.sigma, v.delta, v.dprime, v.nstep));
    drawHeatmap(view);
    const vacuous = view.cells.flat().filter((c) => c === null).length;
    show("heat-out", `${vacuous} of ${view.cells.flat().length} cells vacuous; ${(performance.now() - t0).toFixed(0)} ms`);
  });

  $("sim-run").addEventListener("click", runSim);
  $("bound-run").addEventListener("click", runBound);
  $("heat-run").addEventListener("click", runHeat);
  runSim(); runBound(); runHeat();
}

main();
