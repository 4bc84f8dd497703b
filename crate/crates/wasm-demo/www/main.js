import init, { renderFigure, finslerNorm, indicatrixOutline, loopDeviation } from "./pkg/berwald_wasm.js";

const presets = {
  "radial (plane)": `surface.name = euclidean
rho.kind = potential
rho.potential = euclid-quadratic
curve.kind = radial
curve.direction = 1, 1
curve.t1 = 1.5
indicatrix.focal = 1, 0
indicatrix.level = 4
figure.times = 0, 0.75, 1.5
figure.scale = 0.3`,
  "circle (plane)": `surface.name = euclidean
rho.kind = potential
rho.potential = euclid-quadratic
curve.kind = circle
curve.center = 0, 1
curve.radius = 1
curve.t1 = 2*pi
indicatrix.focal = 1, 0
indicatrix.level = 4
figure.frames = 8
figure.scale = 0.25`,
  "line (half-plane)": `surface.name = hyperbolic
rho.kind = potential
rho.potential = hyp-log
curve.kind = line
curve.origin = 0, 1
curve.direction = 1, 1
curve.t1 = 2
indicatrix.focal = 1, 0
indicatrix.level = 4
indicatrix.base = 0, 1
figure.frames = 3
figure.scale = 0.15`,
  "circle (half-plane)": `surface.name = hyperbolic
rho.kind = potential
rho.potential = hyp-log
curve.kind = circle
curve.center = 0, 2
curve.radius = 1
curve.t1 = 2*pi
indicatrix.focal = 1, 0
indicatrix.level = 4
indicatrix.base = 0, 1
figure.frames = 8
figure.scale = 0.12`,
};

const $ = (id) => document.getElementById(id);
const num = (id) => parseFloat($(id).value);

function show(el, f) {
  try {
    el.classList.remove("err");
    f();
  } catch (e) {
    el.classList.add("err");
    el.textContent = e.message ?? String(e);
  }
}

function drawFigure() {
  const out = $("figure");
  show(out, () => { out.innerHTML = renderFigure($("config").value); });
}

function updateNorm() {
  const ex = $("norm-example").value;
  const [p1, p2, v1, v2] = ["p1", "p2", "v1", "v2"].map(num);
  const out = $("norm-out");
  show(out, () => {
    const f = finslerNorm(ex, p1, p2, v1, v2);
    out.textContent = `F(p, v) = ${f.toFixed(10)}`;
    const pts = indicatrixOutline(ex, p1, p2, 180);
    const r = Math.max(...pts.map(Math.abs), Math.abs(v1), Math.abs(v2)) * 1.15;
    let d = "";
    for (let i = 0; i < pts.length; i += 2) d += `${i ? "L" : "M"}${pts[i]} ${-pts[i + 1]} `;
    $("outline").setAttribute("viewBox", `${-r} ${-r} ${2 * r} ${2 * r}`);
    const w = r / 150;
    $("outline").innerHTML =
      `<path d="${d}Z" fill="#e8eef8" stroke="#1f4e9c" stroke-width="${w}"/>` +
      `<line x1="0" y1="0" x2="${v1}" y2="${-v2}" stroke="#c0392b" stroke-width="${2 * w}"/>` +
      `<circle cx="0" cy="0" r="${3 * w}"/>`;
  });
}

function updateHolonomy() {
  $("scale-val").textContent = $("scale").value;
  const out = $("hol-out");
  show(out, () => {
    const d = loopDeviation($("hol-example").value, num("scale"), num("c1"), num("c2"), num("r"));
    out.textContent = `max |H - I| = ${d.toExponential(3)}`;
  });
}

await init();
for (const name of Object.keys(presets)) $("preset").add(new Option(name));
$("preset").onchange = () => { $("config").value = presets[$("preset").value]; drawFigure(); };
$("render").onclick = drawFigure;
for (const id of ["norm-example", "p1", "p2", "v1", "v2"]) $(id).oninput = updateNorm;
for (const id of ["hol-example", "scale", "c1", "c2", "r"]) $(id).oninput = updateHolonomy;
$("config").value = presets[$("preset").value];
drawFigure();
updateNorm();
updateHolonomy();
