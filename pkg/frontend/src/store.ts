/** Client-side state: a fold over gateway events plus session furniture.
 *
 * Device state is never invented here.  The fold tables mirror the
 * gateway's own replay rules one for one, so the panels show exactly
 * what the event log says.  Everything else in UiState (login flag,
 * attachments, toast queue, connectivity banner) is session furniture
 * the server does not track per client.
 */

import type { DeviceName, GatewayEvent } from "./types";

export type DeviceState = Record<string, unknown>;

export type Toast = { id: number; text: string; tone: "info" | "error" };

export type SmsRecord = { to: string; text: string };

export type UiState = {
  loggedIn: boolean;
  banner: string | null;
  attached: Set<DeviceName>;
  devices: Record<string, DeviceState>;
  sms: SmsRecord[];
  toasts: Toast[];
};

type Fold = (state: DeviceState, p: Record<string, unknown>) => void;

const ENTRY_FOLD: Record<string, Fold> = {
  bt_power: (s, p) => {
    s.bt_powered = p.on;
  },
  door: (s, p) => {
    s.door_locked = p.locked;
  },
  lcd: (s, p) => {
    s.lcd = [p.row1, p.row2];
  },
};

const AUTOMATION_FOLD: Record<string, Fold> = {
  light: (s, p) => {
    s[`light${p.light_id}`] = p.on;
  },
  ambient: (s, p) => {
    s.ambient_c = p.celsius;
  },
  // The gateway replay has no use for sensor reads; the panel shows the
  // last one, so remember it here.
  temp_read: (s, p) => {
    s.temp_register = p.register;
  },
};

const CAR_FOLD: Record<string, Fold> = {
  actuator: (s, p) => {
    s.actuator = p.state;
  },
};

const DEVICE_FOLDS: Record<string, Record<string, Fold>> = {
  entry: ENTRY_FOLD,
  automation: AUTOMATION_FOLD,
  car: CAR_FOLD,
};

/** State transitions shared by the two password-guarded devices. */
function foldCommon(state: DeviceState, kind: string, p: Record<string, unknown>): boolean {
  if (kind === "alarm") state.alarm_on = p.on;
  else if (kind === "collapse") state.collapsed = true;
  else if (kind === "auth") state.failures = p.failures;
  else if (kind === "reset" && p.ok === true) {
    state.collapsed = false;
    state.failures = 0;
  } else return false;
  return true;
}

const ENVELOPE_KEYS = new Set(["event", "seq", "t_ms", "device", "kind"]);

function payloadOf(ev: GatewayEvent): Record<string, unknown> {
  const p: Record<string, unknown> = {};
  for (const [key, value] of Object.entries(ev)) {
    if (!ENVELOPE_KEYS.has(key)) p[key] = value;
  }
  return p;
}

function foldDeviceEvent(devices: Record<string, DeviceState>, ev: GatewayEvent): void {
  const p = payloadOf(ev);
  if (ev.kind === "init") {
    devices[ev.device] = { ...p };
    return;
  }
  const state = devices[ev.device];
  if (!state) return;
  if (foldCommon(state, ev.kind, p)) return;
  if (ev.kind === "relay") {
    state.rl1 = p.rl1;
    state.rl2 = p.rl2;
    return;
  }
  if (ev.kind === "fan") {
    state.fan_on = p.on;
    state.fan_level = p.level;
    return;
  }
  const fold = (DEVICE_FOLDS[ev.device] ?? {})[ev.kind];
  if (fold) fold(state, p);
}

export class Store {
  state: UiState = {
    loggedIn: false,
    banner: null,
    attached: new Set(),
    devices: {},
    sms: [],
    toasts: [],
  };

  private listeners = new Set<() => void>();
  private nextToastId = 1;

  subscribe(listener: () => void): () => void {
    this.listeners.add(listener);
    return () => this.listeners.delete(listener);
  }

  private emitChange(): void {
    for (const listener of this.listeners) listener();
  }

  applyEvent(ev: GatewayEvent): void {
    foldDeviceEvent(this.state.devices, ev);
    if (ev.event === "toast" && typeof ev.text === "string") {
      this.state.toasts.push({ id: this.nextToastId++, text: ev.text, tone: "info" });
    } else if (ev.event === "sms") {
      this.state.sms.push({ to: String(ev.to ?? ""), text: String(ev.text ?? "") });
    }
    this.emitChange();
  }

  pushToast(text: string, tone: Toast["tone"] = "info"): void {
    this.state.toasts.push({ id: this.nextToastId++, text, tone });
    this.emitChange();
  }

  dismissToast(id: number): void {
    this.state.toasts = this.state.toasts.filter((t) => t.id !== id);
    this.emitChange();
  }

  setLoggedIn(on: boolean): void {
    this.state.loggedIn = on;
    this.emitChange();
  }

  setBanner(text: string | null): void {
    this.state.banner = text;
    this.emitChange();
  }

  markAttached(device: DeviceName): void {
    this.state.attached.add(device);
    this.emitChange();
  }

  markDetached(device: DeviceName): void {
    this.state.attached.delete(device);
    this.emitChange();
  }
}
