// Expects the wasm-bindgen output in ./pkg (see the README for the build line).
import init, { sweep, histogram_3sl, ground, presets } from "./pkg/cqed_web.js";

const $ = (id) => document.getElementById(id);
const num = (id) => Number($(id).value);

function fillSizes(select, sizes) {
  select.innerHTML = sizes.map((n) => `<option>${n}</option>`).join("");
}

function axes(ctx, w, h) {
  ctx.clearRect(0, 0, w, h);
  ctx.strokeStyle = "#888";
  ctx.strokeRect(40.5, 10.5, w - 50, h - 40);
}

function lineChart(canvas, xs, ys, marker) {
  const ctx = canvas.getContext("2d");
  const { width: w, height: h } = canvas;
  axes(ctx, w, h);
  if (xs.length === 0) return;
  const x0 = Math.min(...xs), x1 = Math.max(...xs);
  const y0 = Math.min(0, ...ys), y1 = Math.max(...ys) || 1;
  const px = (x) => 40 + ((x - x0) / (x1 - x0 || 1)) * (w - 50);
  const py = (y) => h - 30 - ((y - y0) / (y1 - y0 || 1)) * (h - 40);
  ctx.strokeStyle = "#1f5fbf";
  ctx.beginPath();
  xs.forEach((x, i) => (i ? ctx.lineTo(px(x), py(ys[i])) : ctx.moveTo(px(x), py(ys[i]))));
  ctx.stroke();
  ctx.fillStyle = "#1f5fbf";
  xs.forEach((x, i) => ctx.fillRect(px(x) - 2, py(ys[i]) - 2, 4, 4));
  if (marker) {
    ctx.strokeStyle = "#c33";
    ctx.beginPath();
    ctx.moveTo(px(marker), 10);
    ctx.lineTo(px(marker), h - 30);
    ctx.stroke();
  }
  ctx.fillStyle = "#333";
  ctx.fillText(x0.toPrecision(3), 40, h - 14);
  ctx.fillText(x1.toPrecision(3), w - 40, h - 14);
  ctx.fillText(y1.toPrecision(3), 2, 16);
}

function bars(canvas, xs, ws) {
  const ctx = canvas.getContext("2d");
  const { width: w, height: h } = canvas;
  axes(ctx, w, h);
  const top = Math.max(...ws) || 1;
  const bw = (w - 50) / xs.length;
  ctx.fillStyle = "#1f5fbf";
  ws.forEach((v, i) => {
    const bh = (v / top) * (h - 40);
    ctx.fillRect(40 + i * bw, h - 30 - bh, Math.max(bw - 1, 1), bh);
  });
  ctx.fillStyle = "#333";
  ctx.fillText(String(xs[0]), 40, h - 14);
  ctx.fillText(String(xs[xs.length - 1]), w - 40, h - 14);
}

function heatmap(canvas, hist) {
  const ctx = canvas.getContext("2d");
  const [re, im] = hist.axes;
  const nx = re.length, ny = im.length;
  const top = Math.max(...hist.weights) || 1;
  const img = ctx.createImageData(nx, ny);
  for (let iy = 0; iy < ny; iy++) {
    for (let ix = 0; ix < nx; ix++) {
      const v = Math.sqrt(hist.weights[iy * nx + ix] / top);
      const o = 4 * ((ny - 1 - iy) * nx + ix);
      img.data[o] = 255 * Math.min(1, 2 * v);
      img.data[o + 1] = 255 * Math.max(0, 2 * v - 1);
      img.data[o + 2] = 80 * (1 - v);
      img.data[o + 3] = 255;
    }
  }
  const tmp = document.createElement("canvas");
  tmp.width = nx;
  tmp.height = ny;
  tmp.getContext("2d").putImageData(img, 0, 0);
  ctx.imageSmoothingEnabled = false;
  ctx.drawImage(tmp, 0, 0, canvas.width, canvas.height);
}

function guard(out, f) {
  out.classList.remove("err");
  out.textContent = "running...";
  // let the status text paint before the solver blocks the thread
  setTimeout(() => {
    const t = performance.now();
    try {
      f();
      out.textContent += `\n(${((performance.now() - t) / 1000).toFixed(2)} s)`;
    } catch (e) {
      out.classList.add("err");
      out.textContent = String(e);
    }
  }, 10);
}

function runSweep() {
  guard($("sw-out"), () => {
    const r = JSON.parse(
      sweep($("sw-geom").value, num("sw-n"), $("sw-model").value, num("sw-nph"), num("sw-wd"), num("sw-g"),
        num("sw-j"), $("sw-axis").value, num("sw-min"), num("sw-max"), num("sw-count"), $("sw-col").value),
    );
    lineChart($("sw-canvas"), r.x, r.y, r.peak && r.peak.x);
    let text = r.peak ? `peak of ${r.column} at ${r.peak.x.toFixed(4)}` : `${r.column}: no interior maximum`;
    if (r.failed.length) text += `\n${r.failed.length} points failed: ${r.failed[0].error}`;
    $("sw-out").textContent = text;
  });
}

function run3sl() {
  guard($("tsl-out"), () => {
    const r = JSON.parse(histogram_3sl(num("tsl-n"), num("tsl-hz"), num("tsl-jc"), num("tsl-bins")));
    heatmap($("tsl-canvas"), r.histogram);
    const top = r.peaks.length ? r.peaks[0].weight : 0;
    const angles = r.peaks.filter((p) => p.weight > top * (1 - 1e-9)).map((p) => p.theta_over_pi_6.toFixed(2));
    $("tsl-out").textContent = `E0 = ${r.energy.toFixed(8)}\nglobal maxima at theta / (pi/6) = ${angles.join(", ")}`;
  });
}

function runGround() {
  guard($("gs-out"), () => {
    const r = JSON.parse(
      ground($("gs-geom").value, num("gs-n"), $("gs-model").value, num("gs-nph"), num("gs-wd"), num("gs-g"), num("gs-j")),
    );
    if (r.photon) bars($("gs-photon"), r.photon.axes[0], r.photon.weights);
    bars($("gs-pol"), r.polarization.axes[0], r.polarization.weights);
    const o = r.solution.observables;
    $("gs-out").textContent =
      `E0 = ${o.energy.toFixed(8)}  <a+a> = ${o.photon_number?.toFixed(4)}  polaron <a+a> = ${o.polaron_photon_number?.toFixed(4)}` +
      `\nS^2 = ${o.total_spin.toFixed(4)}  <|S_x|> = ${o.sx_abs.toFixed(4)}  sector ${r.solution.ground_sector}`;
  });
}

await init();
const sizes = JSON.parse(presets());
const bind = (geomId, nId) => {
  const update = () => fillSizes($(nId), sizes[$(geomId).value]);
  $(geomId).addEventListener("change", update);
  update();
};
bind("sw-geom", "sw-n");
bind("gs-geom", "gs-n");
fillSizes($("tsl-n"), sizes.triangular);
$("sw-run").addEventListener("click", runSweep);
$("tsl-run").addEventListener("click", run3sl);
$("gs-run").addEventListener("click", runGround);
