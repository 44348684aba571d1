import init, { mf_grid, channel_matrix, ber_point } from "./pkg/otfs_wasm.js";

const $ = (id) => document.getElementById(id);
const num = (id) => Number($(id).value);

function heatmap(canvas, values, rows, cols) {
  canvas.width = cols;
  canvas.height = rows;
  const ctx = canvas.getContext("2d");
  const img = ctx.createImageData(cols, rows);
  let max = 0;
  for (const v of values) max = Math.max(max, v);
  for (let i = 0; i < values.length; i++) {
    const t = max > 0 ? Math.sqrt(values[i] / max) : 0;
    img.data[4 * i] = 255 * t;
    img.data[4 * i + 1] = 255 * t * t;
    img.data[4 * i + 2] = 80 * (1 - t);
    img.data[4 * i + 3] = 255;
  }
  ctx.putImageData(img, 0, 0);
}

function guard(out, f) {
  try {
    f();
  } catch (e) {
    $(out).textContent = "error: " + e.message;
  }
}

function runMf() {
  guard("mf-out", () => {
    const r = num("mf-r");
    const paths = $("mf-paths").value.split(",").map((s) => s.trim()).filter(Boolean).map((s) => s.split(":").map(Number));
    const snr = $("mf-snr").value.trim() === "" ? NaN : Number($("mf-snr").value);
    const d = Uint32Array.from(paths.map((p) => p[0]));
    const w = Uint32Array.from(paths.map((p) => p[1]));
    const g = Float64Array.from(paths.map((p) => (p.length > 2 ? p[2] : 1)));
    const grid = mf_grid(r, d, w, g, snr, 1n);
    const np = Math.round(Math.sqrt(grid.length));
    heatmap($("mf-canvas"), grid, np, np);
    const ranked = [...grid.keys()].sort((a, b) => grid[b] - grid[a]).slice(0, paths.length);
    $("mf-out").textContent = "N_p = " + np + "\nlargest cells: " +
      ranked.map((i) => `(${Math.floor(i / np)}, ${i % np}) |M| = ${grid[i].toFixed(3)}`).join("; ");
  });
}

function runH() {
  guard("h-out", () => {
    const m = num("h-m"), n = num("h-n");
    const h = channel_matrix(m, n, num("h-df"), num("h-nu"), num("h-e"), BigInt(num("h-seed")));
    heatmap($("h-canvas"), h, m * n, m * n);
    const nnz = h.reduce((c, v) => c + (v > 0 ? 1 : 0), 0);
    $("h-out").textContent = `${m * n} x ${m * n}, ${nnz} nonzeros (${(nnz / (m * n)).toFixed(1)} per row)`;
  });
}

function runBer() {
  guard("b-out", () => {
    $("b-out").textContent = "running...";
    setTimeout(() => guard("b-out", () => {
      const [frames, bits, errors, ber] = ber_point(num("b-m"), num("b-n"), num("b-df"), num("b-nu"),
        num("b-snr"), num("b-it"), BigInt(num("b-frames")), 1n);
      $("b-out").textContent = `${frames} frames, ${bits} bits, ${errors} errors, BER = ${ber.toExponential(3)}`;
    }), 0);
  });
}

await init();
$("mf-run").onclick = runMf;
$("h-run").onclick = runH;
$("b-run").onclick = runBer;
runMf();
runH();
