/**
 * Single-socket connection to a replay server. Parses each line-message,
 * verifies the schema version from `hello`, and dispatches. On a version
 * mismatch the client shows a banner and stops consuming.
 */

import { ControlCommand, ServerMessage, WIRE_VERSION, encodeControl,
         parseServerMessage } from "./protocol.js";

export type ConnectionStatus = "connecting" | "connected" | "closed" | "schema-mismatch";

export interface ClientHandlers {
  onMessage: (message: ServerMessage) => void;
  onStatus: (status: ConnectionStatus, detail?: string) => void;
}

export class DashboardClient {
  private ws: WebSocket | null = null;
  private halted = false;
  status: ConnectionStatus = "connecting";

  constructor(private url: string, private handlers: ClientHandlers) {}

  connect(): void {
    this.ws = new WebSocket(this.url);
    this.setStatus("connecting");
    this.ws.onopen = () => this.setStatus("connected");
    this.ws.onclose = () => {
      if (!this.halted) this.setStatus("closed");
    };
    this.ws.onmessage = (event) => {
      if (this.halted) return;
      const message = parseServerMessage(String(event.data));
      if (!message) return;
      if (message.type === "hello" && message.version !== WIRE_VERSION) {
        this.halted = true;
        this.setStatus("schema-mismatch",
                       `server speaks v${message.version}, client v${WIRE_VERSION}`);
        this.ws?.close();
        return;
      }
      this.handlers.onMessage(message);
    };
  }

  sendControl(control: ControlCommand): void {
    if (this.ws && this.ws.readyState === WebSocket.OPEN) {
      this.ws.send(encodeControl(control));
    }
  }

  private setStatus(status: ConnectionStatus, detail?: string): void {
    this.status = status;
    this.handlers.onStatus(status, detail);
  }
}
