/**
 * Service client: WebSocket when available, plain HTTP otherwise.
 *
 * Both transports validate every inbound payload against the protocol
 * schemas before it reaches the view layer.
 */

import {
  Envelope,
  EnvelopeSchema,
  RatePayloadSchema,
  Reply,
  SessionCreated,
  UtterancePayloadSchema,
  parseReply,
  parseSessionCreated,
} from "./protocol.js";

export class ProtocolError extends Error {}

export interface MatcherClient {
  createSession(): Promise<SessionCreated>;
  sendUtterance(session: string, text: string): Promise<Reply>;
  rate(session: string, rating: number, feedback?: string): Promise<void>;
}

async function expectOk(resp: Response): Promise<unknown> {
  if (!resp.ok) {
    let detail = resp.statusText;
    try {
      const body = (await resp.json()) as { detail?: unknown };
      if (body.detail !== undefined) detail = JSON.stringify(body.detail);
    } catch {
      // non-JSON error body; keep the status text
    }
    throw new ProtocolError(`service error ${resp.status}: ${detail}`);
  }
  return resp.json();
}

/** HTTP fallback client; also what the integration tests exercise. */
export class HttpClient implements MatcherClient {
  constructor(private readonly baseUrl: string) {}

  async createSession(): Promise<SessionCreated> {
    const obj = await expectOk(
      await fetch(`${this.baseUrl}/session`, {
        method: "POST",
        headers: { "content-type": "application/json" },
        body: JSON.stringify({}),
      }),
    );
    return parseSessionCreated(obj);
  }

  async sendUtterance(session: string, text: string): Promise<Reply> {
    const payload = UtterancePayloadSchema.parse({ text });
    const obj = await expectOk(
      await fetch(`${this.baseUrl}/session/${session}/utterance`, {
        method: "POST",
        headers: { "content-type": "application/json" },
        body: JSON.stringify(payload),
      }),
    );
    return parseReply(obj);
  }

  async rate(session: string, rating: number, feedback = ""): Promise<void> {
    const payload = RatePayloadSchema.parse({ rating, feedback });
    await expectOk(
      await fetch(`${this.baseUrl}/session/${session}/rate`, {
        method: "POST",
        headers: { "content-type": "application/json" },
        body: JSON.stringify(payload),
      }),
    );
  }
}

/** WebSocket client used in the browser; one in-flight request at a time. */
export class WsClient implements MatcherClient {
  private socket: WebSocket | null = null;

  constructor(private readonly wsUrl: string) {}

  private async connect(): Promise<WebSocket> {
    if (this.socket && this.socket.readyState === WebSocket.OPEN) {
      return this.socket;
    }
    const socket = new WebSocket(this.wsUrl);
    await new Promise<void>((resolve, reject) => {
      socket.onopen = () => resolve();
      socket.onerror = () => reject(new ProtocolError("connection failed"));
    });
    this.socket = socket;
    return socket;
  }

  private async roundTrip(message: Envelope): Promise<Envelope> {
    const socket = await this.connect();
    const response = new Promise<Envelope>((resolve, reject) => {
      socket.onmessage = (event) => {
        try {
          resolve(EnvelopeSchema.parse(JSON.parse(event.data as string)));
        } catch (err) {
          reject(new ProtocolError(`malformed server message: ${err}`));
        }
      };
      socket.onclose = () => reject(new ProtocolError("connection closed"));
    });
    socket.send(JSON.stringify(EnvelopeSchema.parse(message)));
    const reply = await response;
    if (reply.type === "error") {
      throw new ProtocolError(JSON.stringify(reply.payload));
    }
    return reply;
  }

  async createSession(): Promise<SessionCreated> {
    const reply = await this.roundTrip({ type: "create", payload: {} });
    return parseSessionCreated(reply.payload);
  }

  async sendUtterance(session: string, text: string): Promise<Reply> {
    const payload = UtterancePayloadSchema.parse({ text });
    const reply = await this.roundTrip({ type: "utterance", session, payload });
    return parseReply(reply.payload);
  }

  async rate(session: string, rating: number, feedback = ""): Promise<void> {
    const payload = RatePayloadSchema.parse({ rating, feedback });
    await this.roundTrip({ type: "rate", session, payload });
  }
}
