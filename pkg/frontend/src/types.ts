/** Shapes spoken on the gateway's JSON plane (see PROTOCOL.md). */

export type DeviceName = "entry" | "automation" | "car";

export const DEVICE_NAMES: DeviceName[] = ["entry", "automation", "car"];

/** One broadcast line: envelope fields plus the event payload flattened in. */
export type GatewayEvent = {
  event: "state" | "toast" | "sms" | "alarm" | "collapsed";
  seq: number;
  t_ms: number;
  device: string;
  kind: string;
} & Record<string, unknown>;

/** Device reply embedded in a command reply ("type" discriminates). */
export type CommandResponse = {
  type: "ack" | "nack" | "collapsed" | "temp_report" | "status_report";
  reason?: number;
  reason_name?: string;
  raw?: number;
  temp_c?: number;
} & Record<string, unknown>;

export type Reply = {
  id?: number;
  ok: boolean;
  result?: string | Record<string, unknown>;
  device?: string;
  response?: CommandResponse;
  error?: string;
  message?: string;
  detail?: string;
};

export type Op = { op: string } & Record<string, unknown>;
