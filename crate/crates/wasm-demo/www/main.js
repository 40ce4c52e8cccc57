import init, { gaussianSurface, telegraphRate, lyapunovMc } from "./pkg/lyapunov_lab_wasm.js";

const $ = (id) => document.getElementById(id);
const num = (id) => parseFloat($(id).value);

function show(id, text, isError = false) {
  const el = $(id);
  el.textContent = text;
  el.className = isError ? "out err" : "out";
}

// diverging blue-white-red, scaled to the largest |w|
function colour(v, scale) {
  const t = Math.max(-1, Math.min(1, v / scale));
  const k = Math.round(255 * (1 - Math.abs(t)));
  return t >= 0 ? `rgb(255,${k},${k})` : `rgb(${k},${k},255)`;
}

function drawSurface() {
  const n = 64;
  const r = num("s-r");
  let data;
  try {
    data = gaussianSurface(num("s-a"), num("s-b"), num("s-c"), $("s-tl").checked, n, r);
  } catch (e) {
    show("s-out", String(e), true);
    return;
  }
  const [l1, l2] = data;
  const w = data.subarray(2);
  const scale = w.reduce((m, x) => Math.max(m, Math.abs(x)), 1e-12);
  const cv = $("s-canvas");
  const ctx = cv.getContext("2d");
  const cell = cv.width / n;
  for (let i = 0; i < n; i++) {
    for (let j = 0; j < n; j++) {
      ctx.fillStyle = colour(w[i * n + j], scale);
      // η₁ to the right, η₂ up
      ctx.fillRect(i * cell, (n - 1 - j) * cell, cell + 1, cell + 1);
    }
  }
  show("s-out", `λ = (${l1.toFixed(4)}, ${l2.toFixed(4)})   max |w| on the square = ${scale.toFixed(3)}`);
}

function plot(ctx, x0, width, height, xs, ys, colourName) {
  const xmin = Math.min(...xs), xmax = Math.max(...xs);
  const finite = ys.filter(Number.isFinite);
  const ymin = Math.min(0, ...finite), ymax = Math.max(...finite);
  const px = (x) => x0 + ((x - xmin) / (xmax - xmin)) * width;
  const py = (y) => height - 10 - ((y - ymin) / (ymax - ymin || 1)) * (height - 20);
  ctx.strokeStyle = "#bbb";
  ctx.beginPath();
  ctx.moveTo(px(xmin), py(0));
  ctx.lineTo(px(xmax), py(0));
  ctx.stroke();
  ctx.strokeStyle = colourName;
  ctx.beginPath();
  xs.forEach((x, i) => (i ? ctx.lineTo(px(x), py(ys[i])) : ctx.moveTo(px(x), py(ys[i]))));
  ctx.stroke();
}

function drawTelegraph() {
  const n = 121;
  let v;
  try {
    v = telegraphRate(num("t-sigma"), num("t-nu"), n);
  } catch (e) {
    show("t-out", String(e), true);
    return;
  }
  const part = (k) => Array.from(v.subarray(k * n, (k + 1) * n));
  const [eta, w, a, j] = [0, 1, 2, 3].map(part);
  const cv = $("t-canvas");
  const ctx = cv.getContext("2d");
  ctx.clearRect(0, 0, cv.width, cv.height);
  const half = cv.width / 2 - 10;
  plot(ctx, 0, half, cv.height, eta, w, "#1f77b4");
  plot(ctx, half + 20, half, cv.height, a, j, "#d62728");
  show("t-out", `left: w(η) on [-3, 3]; right: J(a) on ±0.99σ, J(${a[(n - 1) / 2].toFixed(2)}) = ${j[(n - 1) / 2].toExponential(2)}`);
}

function runMc() {
  show("m-out", "running…");
  // let the status paint before the synchronous run
  setTimeout(() => {
    const d = Math.round(num("m-d"));
    const t0 = performance.now();
    try {
      const v = lyapunovMc(d, num("m-b"), num("m-c"), num("m-eps"), num("m-t"), Math.round(num("m-n")), Math.round(num("m-seed")));
      const rows = [];
      for (let k = 0; k < d; k++) rows.push(`λ${k + 1} = ${v[k].toFixed(4)} ± ${v[d + k].toFixed(4)}`);
      const sum = Array.from(v.subarray(0, d)).reduce((s, x) => s + x, 0);
      rows.push(`Σλ = ${sum.toExponential(2)}   (${((performance.now() - t0) / 1000).toFixed(1)} s)`);
      show("m-out", rows.join("\n"));
    } catch (e) {
      show("m-out", String(e), true);
    }
  }, 10);
}

await init();
for (const id of ["s-a", "s-b", "s-c", "s-tl", "s-r"]) $(id).addEventListener("input", drawSurface);
for (const id of ["t-sigma", "t-nu"]) $(id).addEventListener("input", drawTelegraph);
$("m-run").addEventListener("click", runMc);
drawSurface();
drawTelegraph();
