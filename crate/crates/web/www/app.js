import init, { pceCurves, spanProfile, linkSnr } from "./pkg/uwb_energy_web.js";

const $ = (id) => document.getElementById(id);
const COLOURS = ["#1b9e77", "#d95f02", "#7570b3", "#e7298a", "#66a61e", "#e6ab02"];

// series: [{ x: [], y: [], colour, label }]
function plot(canvas, series, xLabel, yLabel) {
  const ctx = canvas.getContext("2d");
  const w = canvas.width, h = canvas.height, m = { l: 60, r: 110, t: 12, b: 40 };
  ctx.clearRect(0, 0, w, h);
  const pts = series.flatMap((s) => s.x.map((x, i) => [x, s.y[i]])).filter(([, y]) => Number.isFinite(y));
  if (pts.length === 0) return;
  let [x0, x1] = [Math.min(...pts.map((p) => p[0])), Math.max(...pts.map((p) => p[0]))];
  let [y0, y1] = [Math.min(...pts.map((p) => p[1])), Math.max(...pts.map((p) => p[1]))];
  if (x1 === x0) x1 = x0 + 1;
  if (y1 === y0) { y0 -= 1; y1 += 1; }
  const pad = 0.05 * (y1 - y0);
  y0 -= pad; y1 += pad;
  const sx = (x) => m.l + ((x - x0) / (x1 - x0)) * (w - m.l - m.r);
  const sy = (y) => h - m.b - ((y - y0) / (y1 - y0)) * (h - m.t - m.b);

  ctx.strokeStyle = "#888";
  ctx.fillStyle = "#444";
  ctx.font = "12px sans-serif";
  ctx.strokeRect(m.l, m.t, w - m.l - m.r, h - m.t - m.b);
  for (let k = 0; k <= 5; k++) {
    const xv = x0 + ((x1 - x0) * k) / 5, yv = y0 + ((y1 - y0) * k) / 5;
    ctx.fillText(xv.toPrecision(4), sx(xv) - 14, h - m.b + 16);
    ctx.fillText(yv.toPrecision(3), 4, sy(yv) + 4);
  }
  ctx.fillText(xLabel, (w - m.r) / 2, h - 6);
  ctx.save();
  ctx.translate(12, h / 2);
  ctx.rotate(-Math.PI / 2);
  ctx.fillText(yLabel, -30, 0);
  ctx.restore();

  series.forEach((s, n) => {
    ctx.strokeStyle = s.colour ?? COLOURS[n % COLOURS.length];
    ctx.lineWidth = 1.5;
    ctx.beginPath();
    let pen = false;
    s.x.forEach((x, i) => {
      if (!Number.isFinite(s.y[i])) { pen = false; return; }
      pen ? ctx.lineTo(sx(x), sy(s.y[i])) : ctx.moveTo(sx(x), sy(s.y[i]));
      pen = true;
    });
    ctx.stroke();
    if (s.label) {
      ctx.fillStyle = ctx.strokeStyle;
      ctx.fillText(s.label, w - m.r + 8, m.t + 14 + 16 * n);
    }
  });
}

function guard(statsEl, fn) {
  try {
    fn();
    if (statsEl) statsEl.classList.remove("error");
  } catch (e) {
    if (statsEl) {
      statsEl.textContent = String(e.message ?? e);
      statsEl.classList.add("error");
    }
  }
}

function drawPce() {
  const out = Number($("pce-out").value);
  $("pce-out-v").textContent = out;
  const elec = $("pce-elec").checked;
  const curves = JSON.parse(pceCurves(-20, 10, 121, out));
  plot(
    $("pce-plot"),
    curves.map((c) => ({ x: c.input_dbm, y: elec ? c.electrical_w : c.pce.map((p) => 100 * p), label: c.amplifier })),
    "total input power (dBm)",
    elec ? "electrical power (W)" : "PCE (%)",
  );
}

function drawSpan() {
  const launch = Number($("span-launch").value);
  $("span-launch-v").textContent = launch;
  guard($("span-stats"), () => {
    const v = JSON.parse(spanProfile($("span-fibre").value, $("span-bands").value, launch));
    const last = v.power_dbm.length - 1;
    const rows = [0, Math.round(last / 4), Math.round(last / 2), last];
    plot(
      $("span-plot"),
      rows.map((r) => ({ x: v.frequency_thz, y: v.power_dbm[r], label: `${v.z_km[r].toFixed(0)} km` })),
      "frequency (THz)",
      "channel power (dBm)",
    );
    $("span-stats").textContent = `${v.frequency_thz.length} channels, end-of-span tilt ${v.tilt_db.toFixed(2)} dB`;
  });
}

function drawLink() {
  const launch = Number($("link-launch").value);
  $("link-launch-v").textContent = launch;
  guard($("link-stats"), () => {
    const v = JSON.parse(linkSnr($("link-fibre").value, $("link-bands").value, launch, Number($("link-spans").value)));
    plot($("link-plot"), [{ x: v.frequency_thz, y: v.snr_db, label: "SNR" }], "frequency (THz)", "SNR (dB)");
    $("link-stats").textContent =
      `${v.throughput_tbps.toFixed(1)} Tb/s, ${v.pj_per_bit_amp.toFixed(3)} pJ/bit amplifiers, ` +
      `${v.pj_per_bit_total.toFixed(2)} pJ/bit with transceivers`;
  });
}

await init();
$("status").textContent = "Flat launch power per channel; drag the sliders to re-run the model.";
for (const id of ["pce-out", "pce-elec"]) $(id).addEventListener("input", drawPce);
for (const id of ["span-fibre", "span-bands", "span-launch"]) $(id).addEventListener("change", drawSpan);
for (const id of ["link-fibre", "link-bands", "link-spans", "link-launch"]) $(id).addEventListener("change", drawLink);
drawPce();
drawSpan();
drawLink();
