/** Wire protocol shared with the game server: JSON text frames plus
 *  binary audio frames (4-byte big-endian sequence number, then PCM). */

export const PROTOCOL_VERSION = 1;

export interface WireMessage {
  type: string;
  protocol_version: number;
  payload: Record<string, unknown>;
}

export interface RosterEntry {
  player_index: number;
  display_name: string;
  connected: boolean;
}

export function encodeMessage(type: string, payload: Record<string, unknown> = {}): string {
  return JSON.stringify({ type, protocol_version: PROTOCOL_VERSION, payload });
}

export function decodeMessage(data: string): WireMessage | null {
  let raw: unknown;
  try {
    raw = JSON.parse(data);
  } catch {
    return null;
  }
  if (typeof raw !== 'object' || raw === null) return null;
  const obj = raw as Record<string, unknown>;
  if (typeof obj.type !== 'string' || typeof obj.protocol_version !== 'number') return null;
  const payload = typeof obj.payload === 'object' && obj.payload !== null ? obj.payload : {};
  return { type: obj.type, protocol_version: obj.protocol_version, payload: payload as Record<string, unknown> };
}

export function encodeAudioFrame(seq: number, pcm: Uint8Array): Uint8Array {
  const frame = new Uint8Array(4 + pcm.byteLength);
  new DataView(frame.buffer).setUint32(0, seq, false);
  frame.set(pcm, 4);
  return frame;
}
