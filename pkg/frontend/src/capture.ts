/** Push-to-talk capture controller.
 *
 *  Holds the talk button -> stream mic PCM as binary frames with
 *  increasing sequence numbers; release -> flush and send end_of_speech.
 *  A denied microphone permission permanently switches the controller to
 *  text-entry mode, where answers go out as `transcript` messages.
 */

import { chunkPcm, floatToPcm16, resampleTo16k } from './audio.js';
import { encodeAudioFrame, encodeMessage } from './protocol.js';

export type CaptureMode = 'audio' | 'text';

export interface Transport {
  sendText(message: string): void;
  sendBinary(frame: Uint8Array): void;
}

export interface MicSource {
  /** Resolves when the mic is live; calls onAudio per captured buffer. */
  open(onAudio: (samples: Float32Array, sampleRate: number) => void): Promise<void>;
  close(): void;
}

export class PermissionDenied extends Error {}

export class CaptureController {
  private mode: CaptureMode = 'audio';
  private talking = false;
  private seq = 0;
  private sentAnyAudio = false;
  // Bounded backlog of not-yet-sent chunks; oldest dropped on overflow.
  private backlog: Uint8Array[] = [];
  private readonly maxBacklog: number;

  constructor(
    private readonly transport: Transport,
    private readonly mic: MicSource | null,
    options: { maxBacklog?: number } = {},
  ) {
    this.maxBacklog = options.maxBacklog ?? 32;
    if (mic === null) this.mode = 'text';
  }

  get captureMode(): CaptureMode {
    return this.mode;
  }

  get isTalking(): boolean {
    return this.talking;
  }

  /** Begin an utterance (button pressed). Only valid for the active player;
   *  callers gate on the view's activePlayer, mirroring the server rule. */
  async pressTalk(): Promise<void> {
    if (this.mode === 'text' || this.talking) return;
    this.talking = true;
    this.seq = 0;
    this.sentAnyAudio = false;
    try {
      await this.mic!.open((samples, rate) => this.onAudio(samples, rate));
    } catch (err) {
      this.talking = false;
      this.mode = 'text';
      throw new PermissionDenied(String(err));
    }
  }

  private onAudio(samples: Float32Array, sampleRate: number): void {
    if (!this.talking) return;
    const pcm = floatToPcm16(resampleTo16k(samples, sampleRate));
    for (const chunk of chunkPcm(pcm)) {
      this.backlog.push(chunk);
      if (this.backlog.length > this.maxBacklog) this.backlog.shift();
    }
    this.flush();
  }

  private flush(): void {
    while (this.backlog.length > 0) {
      const chunk = this.backlog.shift()!;
      if (chunk.byteLength === 0) continue;
      this.seq += 1;
      this.sentAnyAudio = true;
      this.transport.sendBinary(encodeAudioFrame(this.seq, chunk));
    }
  }

  /** End the utterance (button released); end_of_speech always goes out,
   *  even for an empty utterance. */
  releaseTalk(): void {
    if (this.mode === 'text' || !this.talking) return;
    this.talking = false;
    this.flush();
    this.mic!.close();
    this.transport.sendText(encodeMessage('end_of_speech'));
  }

  /** Text-entry path: also the fallback when the mic is unavailable. */
  submitText(text: string): void {
    this.transport.sendText(encodeMessage('transcript', { text }));
  }
}
