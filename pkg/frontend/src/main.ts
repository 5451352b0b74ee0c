/** DOM wiring: one render pass per store change, one delegated handler
 * per input kind.  Repaints rebuild the whole tree; pending input text
 * and focus are carried across so a live event never eats a half-typed
 * password.
 */

import { Actions } from "./actions";
import { GatewayClient, openWebSocket } from "./client";
import { render } from "./render";
import { Store } from "./store";
import type { DeviceName } from "./types";

const app = document.querySelector<HTMLDivElement>("#app");
if (!app) throw new Error("missing #app root");
const root = app;

const store = new Store();
const client = new GatewayClient({
  onEvent: (ev) => store.applyEvent(ev),
  onDown: () => store.setBanner("Gateway unreachable"),
});
const actions = new Actions(client, store);

const gatewayUrl = `ws://${location.hostname || "127.0.0.1"}:7071/`;
openWebSocket(gatewayUrl, client);

function inputKey(input: HTMLInputElement): string {
  const form = input.closest("form");
  return `${form?.dataset.role ?? ""}/${input.name || input.dataset.role || ""}`;
}

function repaint(): void {
  const active = document.activeElement;
  const activeKey = active instanceof HTMLInputElement ? inputKey(active) : null;
  const kept = new Map<string, string>();
  for (const input of root.querySelectorAll<HTMLInputElement>("input")) {
    if (input.value) kept.set(inputKey(input), input.value);
  }
  root.innerHTML = render(store.state);
  for (const input of root.querySelectorAll<HTMLInputElement>("input")) {
    const key = inputKey(input);
    const value = kept.get(key);
    if (value !== undefined) input.value = value;
    if (key === activeKey) input.focus();
  }
}

store.subscribe(repaint);
repaint();

root.addEventListener("submit", (event) => {
  const form = event.target;
  if (!(form instanceof HTMLFormElement)) return;
  event.preventDefault();
  const data = new FormData(form);
  const password = String(data.get("password") ?? "");
  switch (form.dataset.role) {
    case "login-form":
      void actions.login(String(data.get("username") ?? ""), password);
      break;
    case "door-form":
      void actions.sendDoorPassword(password);
      form.reset();
      break;
    case "car-form":
      void actions.sendCarPassword(password);
      form.reset();
      break;
  }
});

root.addEventListener("click", (event) => {
  const target = event.target;
  if (!(target instanceof Element)) return;
  const button = target.closest<HTMLButtonElement>("button[data-action]");
  if (!button || button.disabled) return;
  const device = (button.dataset.device ?? "") as DeviceName;
  switch (button.dataset.action) {
    case "connect":
      void actions.connect(device);
      break;
    case "disconnect":
      void actions.disconnect(device);
      break;
    case "light":
      void actions.setLight(Number(button.dataset.light) === 2 ? 2 : 1, button.dataset.on === "true");
      break;
    case "fan":
      void actions.setFan(button.dataset.on === "true");
      break;
    case "fan-step":
      void actions.fanStep(button.dataset.direction === "down" ? "down" : "up");
      break;
    case "temp":
      void actions.readTemperature();
      break;
    case "reset": {
      const code = root.querySelector<HTMLInputElement>('[data-role="reset-code"]')?.value ?? "";
      void actions.reset(device, code);
      break;
    }
    case "toast-dismiss":
      store.dismissToast(Number(button.dataset.toastId));
      break;
  }
});
