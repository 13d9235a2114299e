import init, { hardyPoint, hardyCurve, fringeCurve, simulateTomography } from "./pkg/entangle_web.js";

const $ = (id) => document.getElementById(id);
const num = (id) => parseFloat($(id).value);
const BASIS = ["HH", "HV", "VH", "VV"];

function bind(ids, render) {
  const update = () => {
    for (const id of ids) {
      const out = $(id + "-v");
      if (out) out.textContent = $(id).value;
    }
    try {
      $("error").textContent = "";
      render();
    } catch (e) {
      $("error").textContent = String(e.message ?? e);
    }
  };
  ids.forEach((id) => $(id).addEventListener("input", update));
  update();
}

function axes(ctx, w, h, pad) {
  ctx.clearRect(0, 0, w, h);
  ctx.strokeStyle = "#888";
  ctx.lineWidth = 1;
  ctx.beginPath();
  ctx.moveTo(pad, pad / 2);
  ctx.lineTo(pad, h - pad);
  ctx.lineTo(w - pad / 2, h - pad);
  ctx.stroke();
}

function plot(canvas, xs, ys, { xmin, xmax, ymax, color = "#1f5fbf", marker = null, band = null, xlabel = "" }) {
  const ctx = canvas.getContext("2d");
  const { width: w, height: h } = canvas;
  const pad = 36;
  const X = (x) => pad + ((x - xmin) / (xmax - xmin)) * (w - 1.5 * pad);
  const Y = (y) => h - pad - (y / ymax) * (h - 1.5 * pad);
  axes(ctx, w, h, pad);
  ctx.fillStyle = "#444";
  ctx.font = "12px system-ui";
  ctx.fillText(xmin.toString(), X(xmin) - 4, h - pad + 16);
  ctx.fillText(xmax.toString(), X(xmax) - 12, h - pad + 16);
  ctx.fillText(xlabel, w / 2, h - 6);
  ctx.fillText(ymax.toPrecision(2), 2, Y(ymax) + 4);
  if (band) {
    ctx.fillStyle = "rgba(220,80,40,0.25)";
    ctx.fillRect(X(band.x) - 3, Y(band.hi), 6, Math.max(1, Y(band.lo) - Y(band.hi)));
  }
  ctx.strokeStyle = color;
  ctx.lineWidth = 2;
  ctx.beginPath();
  xs.forEach((x, i) => (i ? ctx.lineTo(X(x), Y(ys[i])) : ctx.moveTo(X(x), Y(ys[i]))));
  ctx.stroke();
  if (marker) {
    ctx.fillStyle = "#d04020";
    ctx.beginPath();
    ctx.arc(X(marker.x), Y(marker.y), 4, 0, 2 * Math.PI);
    ctx.fill();
  }
}

function bars(canvas, values, title) {
  const ctx = canvas.getContext("2d");
  const { width: w, height: h } = canvas;
  ctx.clearRect(0, 0, w, h);
  const cell = Math.min((w - 60) / 4, (h - 40) / 4);
  const x0 = 40, y0 = 24;
  ctx.font = "12px system-ui";
  ctx.fillStyle = "#222";
  ctx.fillText(title, x0, 14);
  for (let i = 0; i < 4; i++) {
    ctx.fillStyle = "#444";
    ctx.fillText(BASIS[i], 6, y0 + cell * (i + 0.55));
    ctx.fillText(BASIS[i], x0 + cell * (i + 0.35), y0 + 4 * cell + 14);
    for (let j = 0; j < 4; j++) {
      const v = values[4 * i + j];
      const a = Math.min(1, Math.abs(v) / 0.5);
      ctx.fillStyle = v >= 0 ? `rgba(31,95,191,${a})` : `rgba(208,64,32,${a})`;
      ctx.fillRect(x0 + cell * j + 1, y0 + cell * i + 1, cell - 2, cell - 2);
      ctx.fillStyle = a > 0.6 ? "#fff" : "#222";
      ctx.fillText(v.toFixed(3), x0 + cell * j + 6, y0 + cell * (i + 0.55));
    }
  }
}

function hardyView() {
  const curve = hardyCurve(197);
  const xs = [], ys = [];
  for (let k = 0; k < curve.length; k += 2) {
    xs.push(curve[k]);
    ys.push(curve[k + 1]);
  }
  bind(["h-eps", "h-unc"], () => {
    const eps = num("h-eps");
    const [alpha, beta, f, lo, hi] = hardyPoint(eps, num("h-unc"));
    plot($("h-canvas"), xs, ys, {
      xmin: 0, xmax: 1, ymax: 0.1, xlabel: "ε",
      marker: { x: eps, y: f }, band: { x: eps, lo, hi },
    });
    $("h-out").textContent =
      `α = ${alpha.toFixed(2)}°   β = −${beta.toFixed(2)}°   α⊥ = ${(alpha + 90).toFixed(2)}°\n` +
      `Hardy fraction P(β,−β) = ${f.toFixed(5)}   band [${lo.toFixed(5)}, ${hi.toFixed(5)}]`;
  });
}

function fringeView() {
  bind(["f-eps", "f-phi", "f-fix"], () => {
    const out = fringeCurve(num("f-eps"), num("f-phi"), num("f-fix"), 360);
    const xs = [], ys = [];
    for (let k = 1; k < out.length; k += 2) {
      xs.push(out[k]);
      ys.push(out[k + 1]);
    }
    plot($("f-canvas"), xs, ys, { xmin: 0, xmax: 180, ymax: 0.5, xlabel: "arm 2 angle (°)" });
    const v = out[0];
    $("f-out").textContent = `visibility = ${Number.isNaN(v) ? "undefined (no coincidences)" : (100 * v).toFixed(2) + "%"}`;
  });
}

function tomographyView() {
  bind(["t-eps", "t-phi", "t-delta", "t-pairs", "t-seed"], () => {
    const pairs = Math.round(10 ** num("t-pairs"));
    $("t-pairs-v").textContent = pairs.toLocaleString();
    const r = simulateTomography(num("t-eps"), num("t-phi"), num("t-delta"), 0, pairs, num("t-seed"));
    bars($("t-re"), r.slice(0, 16), "Re ρ");
    bars($("t-im"), r.slice(16, 32), "Im ρ");
    const eig = Array.from(r.slice(32, 36), (x) => x.toFixed(4)).join(", ");
    $("t-out").textContent =
      `eigenvalues (${eig})${r[35] < 0 ? "   negative: unphysical estimate" : ""}\n` +
      `purity ${r[36].toFixed(4)}   fidelity with ideal state ${r[37].toFixed(4)}   trace distance to true state ${r[38].toFixed(4)}`;
  });
}

await init();
hardyView();
fringeView();
tomographyView();
