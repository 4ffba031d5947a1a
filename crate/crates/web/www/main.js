import init, { build_operator, collocation_check, simulate_pulse } from "./pkg/rbfsbp_web.js";

const $ = (id) => document.getElementById(id);
const num = (id) => Number($(id).value);

function call(f, statusId) {
  const out = JSON.parse(f());
  if (out.error) {
    $(statusId).innerHTML = `<span class="err">${out.error}</span>`;
    return null;
  }
  return out;
}

// Draws polylines (or stems) of y over x; series = [{x, y, color, stems}].
function plot(canvas, series, opts = {}) {
  const ctx = canvas.getContext("2d");
  const { width: w, height: h } = canvas;
  const pad = 30;
  ctx.clearRect(0, 0, w, h);
  const xs = series.flatMap((s) => s.x);
  const ys = series.flatMap((s) => s.y).filter(Number.isFinite);
  let [x0, x1] = [Math.min(...xs), Math.max(...xs)];
  let [y0, y1] = opts.yRange ?? [Math.min(0, ...ys), Math.max(...ys)];
  if (y1 === y0) y1 = y0 + 1;
  if (x1 === x0) x1 = x0 + 1;
  const px = (x) => pad + ((x - x0) / (x1 - x0)) * (w - 2 * pad);
  const py = (y) => h - pad - ((y - y0) / (y1 - y0)) * (h - 2 * pad);
  ctx.strokeStyle = "#999";
  ctx.beginPath();
  ctx.moveTo(pad, py(0));
  ctx.lineTo(w - pad, py(0));
  ctx.stroke();
  ctx.fillStyle = "#555";
  ctx.fillText(y1.toPrecision(3), 2, pad - 5);
  ctx.fillText(y0.toPrecision(3), 2, h - pad + 12);
  for (const s of series) {
    ctx.strokeStyle = s.color ?? "#1f77b4";
    ctx.beginPath();
    s.x.forEach((x, i) => {
      const y = Math.max(y0, Math.min(y1, s.y[i]));
      if (s.stems) {
        ctx.moveTo(px(x), py(0));
        ctx.lineTo(px(x), py(y));
      } else if (i === 0) {
        ctx.moveTo(px(x), py(y));
      } else {
        ctx.lineTo(px(x), py(y));
      }
    });
    ctx.stroke();
  }
}

function runOperator() {
  const op = call(
    () => build_operator($("op-kernel").value, num("op-shape"), num("op-k"), num("op-deg"), 0, 1, $("op-grid").value),
    "op-status",
  );
  if (!op) return;
  $("op-status").textContent =
    `${op.grid.length} nodes, exactness residual ${op.exactness_residual.toExponential(2)}, ` +
    `skew residual ${op.skew_residual.toExponential(2)}, ${op.passed ? "all checks pass" : "CHECKS FAIL"}`;
  plot($("op-plot"), [{ x: op.grid, y: op.weights, stems: true }]);
  const fmt = (v) => v.toFixed(4).padStart(10);
  $("op-d").textContent = "D =\n" + op.d.map((row) => row.map(fmt).join(" ")).join("\n");
}

function runDiagnostic() {
  const d = call(
    () => collocation_check($("dg-kernel").value, num("dg-shape"), $("dg-family").value, num("dg-n"), num("dg-deg")),
    "dg-status",
  );
  if (!d) return;
  $("dg-status").textContent =
    `best residual ${d.residual.toExponential(2)}, smallest weight ${d.min_weight.toExponential(2)}`;
  const neg = d.weights.map((w) => (w < 0 ? w : 0));
  plot($("dg-plot"), [
    { x: d.points, y: d.weights, stems: true },
    { x: d.points, y: neg, stems: true, color: "#d62728" },
  ]);
}

let animation = null;

function runSimulation() {
  if (animation) cancelAnimationFrame(animation);
  const s = call(
    () =>
      simulate_pulse(
        $("sim-kernel").value,
        num("sim-shape"),
        $("sim-method").value,
        num("sim-k"),
        num("sim-blocks"),
        num("sim-deg"),
        num("sim-t"),
        200,
      ),
    "sim-status",
  );
  if (!s) return;
  const e0 = s.energy[0];
  const last = s.energy[s.energy.length - 1];
  $("sim-status").textContent =
    `${s.x.length} nodes, energy ${e0.toFixed(6)} -> ${last.toPrecision(7)}` +
    (s.blew_up_at !== null ? `, stopped at t = ${s.blew_up_at.toFixed(3)} (unbounded growth)` : "");
  plot($("sim-energy"), [{ x: s.times, y: s.energy.map((e) => e / e0), color: "#2ca02c" }], {
    yRange: [0, Math.max(1.1, ...s.energy.map((e) => e / e0).filter(Number.isFinite))],
  });
  let i = 0;
  const step = () => {
    plot($("sim-plot"), [{ x: s.x, y: s.frames[i] }], { yRange: [-0.5, 1.5] });
    $("sim-plot").getContext("2d").fillText(`t = ${s.times[i].toFixed(3)}`, 40, 20);
    i += 1;
    if (i < s.frames.length) animation = requestAnimationFrame(step);
  };
  step();
}

await init();
$("op-run").onclick = runOperator;
$("dg-run").onclick = runDiagnostic;
$("sim-run").onclick = runSimulation;
runOperator();
runDiagnostic();
runSimulation();
