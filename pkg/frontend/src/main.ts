import { render, ConsoleElements } from "./render.js";
import { ConsoleSession } from "./session.js";

function mustGet<T extends HTMLElement>(id: string): T {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing element #${id}`);
  return el as T;
}

const els: ConsoleElements = {
  banner: mustGet("banner"),
  serverTime: mustGet("server-time"),
  phaseLabel: mustGet("phase-label"),
  needle: mustGet("needle"),
  speedValue: mustGet("speed-value"),
  lampRed: mustGet("lamp-red"),
  lampGreen: mustGet("lamp-green"),
  badgeAlarm: mustGet("badge-alarm"),
  badgeVibration: mustGet("badge-vibration"),
  alertFeed: mustGet("alert-feed"),
  resetButton: mustGet<HTMLButtonElement>("reset-button"),
  notice: mustGet("notice"),
  dropCounter: mustGet("drop-counter"),
};

const url = `ws://${location.host}/ws`;
const session = new ConsoleSession(url, (view) => render(view, els));
session.connect();

const eyesButton = mustGet<HTMLButtonElement>("eyes-button");
const toggleMode = mustGet<HTMLInputElement>("toggle-mode");
let toggledClosed = false;

function syncEyesLabel(closed: boolean): void {
  eyesButton.textContent = closed ? "eyes CLOSED" : "hold: close eyes";
  eyesButton.classList.toggle("closed", closed);
}

eyesButton.addEventListener("pointerdown", (ev) => {
  ev.preventDefault();
  eyesButton.setPointerCapture(ev.pointerId);
  if (toggleMode.checked) return; // handled on click in toggle mode
  session.pressEyes();
  syncEyesLabel(true);
});

for (const evt of ["pointerup", "pointercancel"] as const) {
  eyesButton.addEventListener(evt, () => {
    if (toggleMode.checked) return;
    session.releaseEyes();
    syncEyesLabel(false);
  });
}

eyesButton.addEventListener("click", () => {
  if (!toggleMode.checked) return;
  toggledClosed = !toggledClosed;
  session.setEyes(toggledClosed);
  syncEyesLabel(toggledClosed);
});

toggleMode.addEventListener("change", () => {
  // leaving hold mode (or entering it) always returns eyes to open
  toggledClosed = false;
  session.setEyes(false);
  syncEyesLabel(false);
});

const slider = mustGet<HTMLInputElement>("alcohol-slider");
const sliderValue = mustGet("alcohol-value");
slider.addEventListener("input", () => {
  sliderValue.textContent = `${slider.value} ppm`;
  session.setAlcohol(Number(slider.value));
});

els.resetButton.addEventListener("click", () => session.reset());
