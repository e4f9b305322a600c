import init, { polar_design, flip_rates, baseline_sweep } from "./pkg/sbnd_web.js";

const $ = (id) => document.getElementById(id);
const num = (id) => Number($(id).value);

function guard(out, f) {
  try {
    f();
  } catch (e) {
    $(out).textContent = "error: " + (e.message || e);
  }
}

function runDesign() {
  guard("pd-out", () => {
    const r = JSON.parse(polar_design(num("pd-n"), num("pd-k"), num("pd-eps")));
    const info = new Set(r.info_rows);
    const lines = r.bhattacharyya.map((z, i) => {
      const tag = info.has(i) ? "info  " : "frozen";
      return `${String(i).padStart(4)}  ${tag}  Z = ${z.toExponential(4)}`;
    });
    $("pd-out").textContent =
      `rate ${r.rate}\ninfo rows: ${r.info_rows.join(",")}\n\n` + lines.join("\n");
  });
}

function runFlips() {
  guard("fr-out", () => {
    const r = JSON.parse(flip_rates(num("fr-sigma"), num("fr-bits"), BigInt(num("fr-seed"))));
    const dev = (x) => ((x - r.q) / r.std).toFixed(2);
    $("fr-out").textContent =
      `Q(1/σ)          ${r.q.toFixed(6)}  (binomial std ${r.std.toExponential(2)})\n` +
      `additive        ${r.additive.toFixed(6)}  (${dev(r.additive)} std)\n` +
      `multiplicative  ${r.multiplicative.toFixed(6)}  (${dev(r.multiplicative)} std)`;
  });
}

function runSweep() {
  $("sw-out").textContent = "running…";
  // Let the status text paint before the blocking call.
  setTimeout(() =>
    guard("sw-out", () => {
      const r = JSON.parse(
        baseline_sweep(num("sw-n"), num("sw-k"), $("sw-dec").value, $("sw-snr").value,
          BigInt(num("sw-frames")), BigInt(num("sw-seed"))));
      $("sw-plot").innerHTML = r.svg;
      $("sw-out").textContent = r.csv;
    }), 10);
}

init().then(() => {
  $("status").textContent = "";
  $("pd-run").onclick = runDesign;
  $("fr-run").onclick = runFlips;
  $("sw-run").onclick = runSweep;
  runDesign();
}).catch((e) => {
  $("status").textContent = "failed to load the WebAssembly module: " + e;
});
