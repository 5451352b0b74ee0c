/** One method per operator intent; each sends exactly one request.
 *
 * Replies route into session furniture (login flag, attachments) and
 * toasts.  Device state itself never comes from replies: the event
 * stream carries it, and the store folds it there.
 */

import type { GatewayClient } from "./client";
import type { Store } from "./store";
import type { DeviceName, Op, Reply } from "./types";

export const UNREACHABLE_BANNER = "Gateway unreachable";

export class Actions {
  constructor(
    private client: GatewayClient,
    private store: Store,
  ) {}

  async login(username: string, password: string): Promise<void> {
    let reply: Reply;
    try {
      reply = await this.client.request({ op: "login", username, password });
    } catch {
      this.store.setBanner(UNREACHABLE_BANNER);
      return;
    }
    if (reply.ok) {
      this.store.setBanner(null);
      this.store.setLoggedIn(true);
      return;
    }
    this.store.pushToast(reply.message ?? "login failed", "error");
  }

  async connect(device: DeviceName): Promise<void> {
    const reply = await this.send({ op: "attach", device });
    if (!reply) return;
    if (reply.ok) {
      this.store.markAttached(device);
      this.store.pushToast("Connected", "info");
    } else {
      this.store.pushToast(`Connect failed: ${reply.error ?? "unknown"}`, "error");
    }
  }

  async disconnect(device: DeviceName): Promise<void> {
    const reply = await this.send({ op: "detach", device });
    if (reply) this.store.markDetached(device);
  }

  async sendDoorPassword(password: string): Promise<void> {
    await this.command({ op: "auth", device: "entry", password });
  }

  async sendCarPassword(password: string): Promise<void> {
    await this.command({ op: "auth", device: "car", password });
  }

  async setLight(light: 1 | 2, on: boolean): Promise<void> {
    await this.command({ op: "light", light, on });
  }

  async setFan(on: boolean): Promise<void> {
    await this.command({ op: "fan_set", on });
  }

  async fanStep(direction: "up" | "down"): Promise<void> {
    await this.command({ op: "fan_step", direction });
  }

  async readTemperature(): Promise<void> {
    await this.command({ op: "temp" });
  }

  async reset(device: DeviceName, code: string): Promise<void> {
    const reply = await this.send({ op: "reset", device, code });
    if (!reply) return;
    if (reply.ok && reply.response?.type === "ack") {
      this.store.pushToast("Reset accepted", "info");
    } else if (reply.ok && reply.response?.type === "nack") {
      this.store.pushToast(`Rejected: ${reply.response.reason_name}`, "error");
    }
  }

  private async send(op: Op): Promise<Reply | null> {
    try {
      return await this.client.request(op);
    } catch {
      this.store.setBanner(UNREACHABLE_BANNER);
      return null;
    }
  }

  private async command(op: Op): Promise<void> {
    const reply = await this.send(op);
    if (!reply) return;
    if (!reply.ok) {
      this.store.pushToast(`Request failed: ${reply.error ?? "unknown"}`, "error");
      return;
    }
    const response = reply.response;
    if (!response) return;
    if (response.type === "nack") {
      this.store.pushToast(`Rejected: ${response.reason_name ?? response.reason}`, "error");
      return;
    }
    // A password send confirmed by the device gets its own toast; the
    // automation device announces its acks through gateway toast events.
    if (response.type === "ack" && (reply.device === "entry" || reply.device === "car")) {
      this.store.pushToast("Password Sent", "info");
    }
  }
}
