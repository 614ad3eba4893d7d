import init, { Scene, Fitter, sweep_sigma } from "./pkg/edgefit_web.js";

const $ = (id) => document.getElementById(id);

// Draws a row-major float image, scaled so its maximum is white.
function draw(canvas, data, width, height) {
  canvas.width = width;
  canvas.height = height;
  const ctx = canvas.getContext("2d");
  const img = ctx.createImageData(width, height);
  let max = 0;
  for (const v of data) max = Math.max(max, v);
  const k = max > 0 ? 255 / max : 0;
  for (let i = 0; i < width * height; i++) {
    const g = Math.round(data[i] * k);
    img.data.set([g, g, g, 255], 4 * i);
  }
  ctx.putImageData(img, 0, 0);
}

const PIX = 64 * 64;
const part = (maps, k) => maps.subarray(k * PIX, (k + 1) * PIX);

let scene = null;

function rebuildScene() {
  scene?.free();
  scene = new Scene($("shape").value, Number($("points").value), 1n);
  renderScene();
}

function renderScene() {
  const az = Number($("az").value), el = Number($("el").value), s2 = Number($("s2").value);
  $("az-out").value = az;
  $("el-out").value = el;
  $("s2-out").value = s2.toFixed(1);
  const maps = scene.render(az, el, s2);
  draw($("v-img"), part(maps, 0), 64, 64);
  draw($("v-edge"), part(maps, 1), 64, 64);
  draw($("v-corner"), part(maps, 2), 64, 64);
}

function renderSweep() {
  const values = new Float64Array($("sw-values").value.split(",").map(Number));
  const r = Number($("sw-r").value);
  $("sw-r-out").value = r.toFixed(2);
  try {
    const sweep = sweep_sigma(values, Number($("sw-n").value), r);
    const strip = $("sweep-strip");
    draw(strip, sweep.strip(), sweep.width(), 64);
    strip.style.width = `${3 * sweep.width()}px`;
    $("sw-count").value = Array.from(sweep.components()).join(", ");
    sweep.free();
  } catch (e) {
    $("sw-count").value = String(e);
  }
}

let fitter = null;
let running = false;

function resetFit() {
  fitter?.free();
  fitter = new Fitter(256, Number($("fit-jitter").value), 0n, $("fit-visual").checked);
  draw($("f-target"), part(fitter.render_target(30, 20), 1), 64, 64);
  showFit();
}

function showFit() {
  $("fit-step").value = fitter.steps();
  $("fit-cd").value = fitter.chamfer().toFixed(4);
  draw($("f-edge"), part(fitter.render(30, 20), 1), 64, 64);
}

function loop() {
  if (!running) return;
  fitter.advance(10);
  showFit();
  if (fitter.steps() >= 2500) {
    running = false;
    $("fit-run").textContent = "run";
    return;
  }
  requestAnimationFrame(loop);
}

await init();
for (const id of ["shape", "points"]) $(id).addEventListener("change", rebuildScene);
for (const id of ["az", "el", "s2"]) $(id).addEventListener("input", renderScene);
for (const id of ["sw-values", "sw-n"]) $(id).addEventListener("change", renderSweep);
$("sw-r").addEventListener("input", renderSweep);
$("fit-reset").addEventListener("click", () => { running = false; $("fit-run").textContent = "run"; resetFit(); });
$("fit-visual").addEventListener("change", resetFit);
$("fit-run").addEventListener("click", () => {
  running = !running;
  $("fit-run").textContent = running ? "pause" : "run";
  loop();
});
rebuildScene();
renderSweep();
resetFit();
