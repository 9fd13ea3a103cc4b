/** WebSocket session client: connects, forwards decoded server messages
 *  to a listener, and exposes the small set of client actions. */

import { decodeMessage, encodeMessage, type WireMessage } from './protocol.js';
import type { Transport } from './capture.js';

export interface ClientOptions {
  serverUrl: string;
  onMessage(message: WireMessage): void;
  onClose?(): void;
}

export class SessionClient implements Transport {
  private socket: WebSocket | null = null;

  constructor(private readonly options: ClientOptions) {}

  connect(): Promise<void> {
    return new Promise((resolve, reject) => {
      const socket = new WebSocket(this.options.serverUrl);
      socket.binaryType = 'arraybuffer';
      socket.onopen = () => resolve();
      socket.onerror = () => reject(new Error(`cannot reach ${this.options.serverUrl}`));
      socket.onclose = () => this.options.onClose?.();
      socket.onmessage = (event: MessageEvent) => {
        if (typeof event.data !== 'string') return; // server never sends binary
        const message = decodeMessage(event.data);
        if (message !== null) this.options.onMessage(message);
      };
      this.socket = socket;
    });
  }

  sendText(message: string): void {
    this.socket?.send(message);
  }

  sendBinary(frame: Uint8Array): void {
    this.socket?.send(frame);
  }

  createSession(catalogId: string, displayName: string, config: Record<string, unknown> = {}): void {
    this.sendText(
      encodeMessage('create_session', { catalog_id: catalogId, display_name: displayName, config }),
    );
  }

  join(joinCode: string, displayName: string): void {
    this.sendText(encodeMessage('join', { join_code: joinCode, display_name: displayName }));
  }

  ready(): void {
    this.sendText(encodeMessage('ready'));
  }

  close(): void {
    this.socket?.close();
    this.socket = null;
  }
}

/** Server URL from the page's query string, defaulting to same-origin /ws. */
export function serverUrlFromLocation(loc: { search: string; host: string; protocol: string }): string {
  const params = new URLSearchParams(loc.search);
  const explicit = params.get('server');
  if (explicit) return explicit;
  const scheme = loc.protocol === 'https:' ? 'wss' : 'ws';
  return `${scheme}://${loc.host}/ws`;
}
