import init, { ring_spectrum, transfer_map } from "./pkg/nmqsd_wasm.js";

const FREQ_MIN = -8, FREQ_MAX = 8, FREQ_POINTS = 801, FRAMES = 200;

function status(id, text) {
  document.getElementById(id).textContent = text;
}

// Let the status line repaint before a long synchronous computation.
const nextFrame = () => new Promise((r) => requestAnimationFrame(() => setTimeout(r, 0)));

function drawSpectrum(canvas, curves) {
  const ctx = canvas.getContext("2d");
  const { width: w, height: h } = canvas;
  const pad = 40;
  ctx.clearRect(0, 0, w, h);
  const ymax = Math.max(...curves.flatMap((c) => Array.from(c.values))) * 1.05;
  const x = (f) => pad + ((f - FREQ_MIN) / (FREQ_MAX - FREQ_MIN)) * (w - 2 * pad);
  const y = (v) => h - pad - (v / ymax) * (h - 2 * pad);

  ctx.strokeStyle = "#999";
  ctx.fillStyle = "#444";
  ctx.font = "12px sans-serif";
  ctx.beginPath();
  ctx.moveTo(pad, h - pad);
  ctx.lineTo(w - pad, h - pad);
  ctx.stroke();
  for (let f = FREQ_MIN; f <= FREQ_MAX; f += 2) {
    ctx.fillText(String(f), x(f) - 6, h - pad + 16);
  }
  ctx.fillText("frequency (units of Δ)", w / 2 - 60, h - 6);

  for (const c of curves) {
    ctx.strokeStyle = c.color;
    ctx.lineWidth = 1.5;
    ctx.beginPath();
    c.values.forEach((v, i) => {
      const f = FREQ_MIN + (i * (FREQ_MAX - FREQ_MIN)) / (FREQ_POINTS - 1);
      i === 0 ? ctx.moveTo(x(f), y(v)) : ctx.lineTo(x(f), y(v));
    });
    ctx.stroke();
  }
}

function drawMap(canvas, values, nSites, tMax) {
  const ctx = canvas.getContext("2d");
  const { width: w, height: h } = canvas;
  const pad = 40;
  ctx.clearRect(0, 0, w, h);
  const cw = (w - 2 * pad) / FRAMES;
  const ch = (h - 2 * pad) / nSites;
  const vmax = Math.max(...values);
  for (let f = 0; f < FRAMES; f++) {
    for (let n = 0; n < nSites; n++) {
      const v = values[f * nSites + n] / vmax;
      const shade = Math.round(255 * (1 - Math.sqrt(Math.max(v, 0))));
      ctx.fillStyle = `rgb(${shade}, ${shade}, 255)`;
      ctx.fillRect(pad + f * cw, pad + n * ch, Math.ceil(cw), Math.ceil(ch));
    }
  }
  ctx.fillStyle = "#444";
  ctx.font = "12px sans-serif";
  ctx.fillText("site 1", 2, pad + ch / 2 + 4);
  ctx.fillText(`site ${nSites}`, 2, h - pad - ch / 2 + 4);
  ctx.fillText("t = 0", pad, h - pad + 16);
  ctx.fillText(`t = ${tMax}`, w - pad - 40, h - pad + 16);
}

function spectrumHandler(event) {
  event.preventDefault();
  const form = new FormData(event.target);
  const n = Number(form.get("n"));
  const shift = Number(form.get("shift"));
  const damping = Number(form.get("damping"));
  status("spectrum-status", "computing…");
  nextFrame().then(() => {
    try {
      const t0 = performance.now();
      const curves = [{ values: ring_spectrum(n, shift, damping, FREQ_MIN, FREQ_MAX, FREQ_POINTS), color: "#1f4fbf" }];
      if (form.get("monomer")) {
        curves.push({ values: ring_spectrum(1, 0, damping, FREQ_MIN, FREQ_MAX, FREQ_POINTS), color: "#c0392b" });
      }
      drawSpectrum(document.getElementById("spectrum"), curves);
      status("spectrum-status", `N = ${n}: ${((performance.now() - t0) / 1000).toFixed(1)} s`);
    } catch (e) {
      status("spectrum-status", `error: ${e.message ?? e}`);
    }
  });
}

function transferHandler(event) {
  event.preventDefault();
  const form = new FormData(event.target);
  const n = Number(form.get("n"));
  const tMax = Number(form.get("tmax"));
  status("transfer-status", "computing…");
  nextFrame().then(() => {
    try {
      const t0 = performance.now();
      const values = transfer_map(
        n, Number(form.get("shift")), Number(form.get("site")), Number(form.get("traj")),
        tMax, FRAMES, Boolean(form.get("bath")), 1n,
      );
      drawMap(document.getElementById("transfer"), values, n, tMax);
      status("transfer-status", `${((performance.now() - t0) / 1000).toFixed(1)} s`);
    } catch (e) {
      status("transfer-status", `error: ${e.message ?? e}`);
    }
  });
}

await init();
document.getElementById("spectrum-form").addEventListener("submit", spectrumHandler);
document.getElementById("transfer-form").addEventListener("submit", transferHandler);
document.getElementById("spectrum-form").requestSubmit();
