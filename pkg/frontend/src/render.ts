/** Pure rendering: UiState in, HTML string out.
 *
 * Labels and readings come from the folded device state only, so the
 * screen is a function of the event log plus session furniture.  No
 * handler lives here; main.ts wires clicks by data-action.
 */

import type { DeviceState, Toast, UiState } from "./store";
import type { DeviceName } from "./types";

export function escapeHtml(value: unknown): string {
  return String(value)
    .replaceAll("&", "&amp;")
    .replaceAll("<", "&lt;")
    .replaceAll(">", "&gt;")
    .replaceAll('"', "&quot;");
}

const asBool = (v: unknown): boolean => v === true;
const asStr = (v: unknown): string => (typeof v === "string" ? v : "");

const PANEL_TITLES: Record<string, string> = {
  entry: "Door",
  automation: "Room",
  car: "Car",
};

const TEMP_STEP_C = 0.0625;

export function render(state: UiState): string {
  return state.loggedIn ? renderMain(state) : renderLogin(state);
}

function renderLogin(state: UiState): string {
  return `
  <div class="screen" data-screen="login">
    ${renderBanner(state)}
    <form class="card login-card" data-role="login-form">
      <h1>HomeLink</h1>
      <label>User Name <input name="username" autocomplete="username"></label>
      <label>Password <input name="password" type="password" autocomplete="current-password"></label>
      <button type="submit">Login</button>
    </form>
    ${renderToasts(state.toasts)}
  </div>`;
}

function renderMain(state: UiState): string {
  const collapsed = (["entry", "car"] as const).filter((d) => asBool(state.devices[d]?.collapsed));
  if (collapsed.length > 0) return renderLockdown(state, collapsed);
  return `
  <div class="screen" data-screen="main">
    <header><h1>HomeLink</h1></header>
    ${renderBanner(state)}
    <main class="panels">
      ${renderDoorPanel(state)}
      ${renderRoomPanel(state)}
      ${renderCarPanel(state)}
    </main>
    ${renderToasts(state.toasts)}
  </div>`;
}

function renderLockdown(state: UiState, collapsed: DeviceName[]): string {
  const names = collapsed.map((d) => PANEL_TITLES[d] ?? d).join(", ");
  const alerts = state.sms
    .map((m) => `<li>${escapeHtml(m.to)}: ${escapeHtml(m.text)}</li>`)
    .join("");
  const resets = collapsed
    .map(
      (d) =>
        `<button data-action="reset" data-device="${d}">Reset ${escapeHtml(PANEL_TITLES[d] ?? d)}</button>`,
    )
    .join("");
  return `
  <div class="screen lockdown" data-screen="lockdown">
    <div class="card">
      <h1>Security Lockdown</h1>
      <p data-role="lockdown-reason">${escapeHtml(names)}: too many wrong passwords.</p>
      <ul class="sms-log" data-role="sms-log">${alerts}</ul>
      <label>Reset code <input name="reset-code" type="password" data-role="reset-code"></label>
      <div class="row">${resets}</div>
    </div>
    ${renderToasts(state.toasts)}
  </div>`;
}

function renderBanner(state: UiState): string {
  if (!state.banner) return "";
  return `<div class="banner" data-role="banner">${escapeHtml(state.banner)}</div>`;
}

function renderToasts(toasts: Toast[]): string {
  const items = toasts
    .map(
      (t) =>
        `<div class="toast toast-${t.tone}" data-toast-id="${t.id}">` +
        `<span data-role="toast-text">${escapeHtml(t.text)}</span>` +
        `<button data-action="toast-dismiss" data-toast-id="${t.id}">&times;</button></div>`,
    )
    .join("");
  return `<div class="toasts" data-role="toasts">${items}</div>`;
}

function connectControl(device: DeviceName, attached: boolean): string {
  if (attached) {
    return (
      `<span class="tag tag-on" data-role="link-state">connected</span>` +
      `<button data-action="disconnect" data-device="${device}">Disconnect</button>`
    );
  }
  return (
    `<span class="tag" data-role="link-state">not connected</span>` +
    `<button data-action="connect" data-device="${device}">Connect</button>`
  );
}

const dis = (enabled: boolean): string => (enabled ? "" : " disabled");

function renderDoorPanel(state: UiState): string {
  const s: DeviceState = state.devices.entry ?? {};
  const attached = state.attached.has("entry");
  const lcd = Array.isArray(s.lcd) ? (s.lcd as unknown[]) : ["", ""];
  return `
  <section class="panel" data-panel="door">
    <h2>${PANEL_TITLES.entry}</h2>
    <div class="row">${connectControl("entry", attached)}</div>
    <pre class="lcd" data-role="lcd">${escapeHtml(asStr(lcd[0]))}\n${escapeHtml(asStr(lcd[1]))}</pre>
    <dl class="facts">
      <dt>Door</dt><dd data-role="door-state">${asBool(s.door_locked) ? "Locked" : "Unlocked"}</dd>
      <dt>Alarm</dt><dd data-role="alarm-state">${asBool(s.alarm_on) ? "SOUNDING" : "quiet"}</dd>
      <dt>Bluetooth</dt><dd data-role="bt-state">${asBool(s.bt_powered) ? "powered" : "off"}</dd>
    </dl>
    <form class="row" data-role="door-form">
      <input name="password" type="password" placeholder="Door password"${dis(attached)}>
      <button type="submit"${dis(attached)}>Send</button>
    </form>
  </section>`;
}

function lightButton(n: 1 | 2, s: DeviceState, attached: boolean): string {
  const on = asBool(s[`light${n}`]);
  return (
    `<button data-action="light" data-light="${n}" data-on="${!on}"${dis(attached)}>` +
    `Light${n} ${on ? "On" : "Off"}</button>`
  );
}

function renderRoomPanel(state: UiState): string {
  const s: DeviceState = state.devices.automation ?? {};
  const attached = state.attached.has("automation");
  const fanOn = asBool(s.fan_on);
  const register = typeof s.temp_register === "number" ? s.temp_register : null;
  const tempText = register === null ? "&mdash;" : escapeHtml(`${(register * TEMP_STEP_C).toFixed(1)} °C`);
  return `
  <section class="panel" data-panel="room">
    <h2>${PANEL_TITLES.automation}</h2>
    <div class="row">${connectControl("automation", attached)}</div>
    <div class="row">
      ${lightButton(1, s, attached)}
      ${lightButton(2, s, attached)}
    </div>
    <div class="row">
      <button data-action="fan" data-on="${!fanOn}"${dis(attached)}>FAN ${fanOn ? "On" : "Off"}</button>
      <button data-action="fan-step" data-direction="up"${dis(attached)}>FAN+</button>
      <button data-action="fan-step" data-direction="down"${dis(attached)}>FAN-</button>
      <span class="tag" data-role="fan-level">level ${typeof s.fan_level === "number" ? s.fan_level : 0}</span>
    </div>
    <div class="row">
      <button data-action="temp"${dis(attached)}>Temperature</button>
      <span class="reading" data-role="temp-reading">${tempText}</span>
    </div>
  </section>`;
}

const ACTUATOR_TEXT: Record<string, string> = {
  locked: "Locked",
  unlocked: "Unlocked",
  moving_to_locked: "Locking...",
  moving_to_unlocked: "Unlocking...",
};

function renderCarPanel(state: UiState): string {
  const s: DeviceState = state.devices.car ?? {};
  const attached = state.attached.has("car");
  const actuator = asStr(s.actuator);
  return `
  <section class="panel" data-panel="car">
    <h2>${PANEL_TITLES.car}</h2>
    <div class="row">${connectControl("car", attached)}</div>
    <dl class="facts">
      <dt>Doors</dt><dd data-role="actuator-state">${escapeHtml(ACTUATOR_TEXT[actuator] ?? actuator)}</dd>
      <dt>RL1</dt><dd data-role="rl1-state">${asBool(s.rl1) ? "energized" : "off"}</dd>
      <dt>RL2</dt><dd data-role="rl2-state">${asBool(s.rl2) ? "energized" : "off"}</dd>
    </dl>
    <form class="row" data-role="car-form">
      <input name="password" type="password" placeholder="Lock or unlock password"${dis(attached)}>
      <button type="submit"${dis(attached)}>Send</button>
    </form>
  </section>`;
}
