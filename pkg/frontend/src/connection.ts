// Websocket session: allocates command sequence numbers, routes acks and
// rejections back into the view state, reconnects with backoff.

import type { CommandPayload, ServerMessage } from "./protocol";
import { ViewState } from "./store";

interface SocketLike {
  send(data: string): void;
  close(): void;
  onmessage: ((ev: { data: string }) => void) | null;
  onopen: (() => void) | null;
  onclose: (() => void) | null;
}

export class Connection {
  private seq = 0;
  private socket: SocketLike | null = null;
  private url: string;
  private makeSocket: (url: string) => SocketLike;
  onchange: (() => void) | null = null;

  constructor(
    public state: ViewState,
    url: string,
    makeSocket?: (url: string) => SocketLike,
  ) {
    this.url = url;
    this.makeSocket =
      makeSocket ?? ((u) => new WebSocket(u) as unknown as SocketLike);
  }

  connect(): void {
    const socket = this.makeSocket(this.url);
    this.socket = socket;
    socket.onopen = () => {
      this.state.connected = true;
      this.onchange?.();
    };
    socket.onclose = () => {
      this.state.connected = false;
      this.onchange?.();
      setTimeout(() => this.connect(), 1000);
    };
    socket.onmessage = (ev) => {
      this.handleMessage(JSON.parse(ev.data) as ServerMessage);
      this.onchange?.();
    };
  }

  handleMessage(message: ServerMessage): void {
    if (message.type === "snapshot") {
      this.state.applySnapshot(message.payload);
    } else if (message.type === "ack") {
      this.state.applyAck(message.payload);
    } else if (message.type === "rejection") {
      this.state.applyRejection(message.payload);
    }
  }

  send(payload: CommandPayload): number {
    this.seq += 1;
    const message = { type: "command", seq: this.seq, payload };
    this.state.commandSent(this.seq, payload.kind);
    this.socket?.send(JSON.stringify(message));
    return this.seq;
  }
}
