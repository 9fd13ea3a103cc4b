import { readFileSync } from 'node:fs';
import { fileURLToPath } from 'node:url';
import { describe, expect, it } from 'vitest';
import { CaptureController, PermissionDenied, type MicSource, type Transport } from '../src/capture.js';
import { decodeMessage, type WireMessage } from '../src/protocol.js';
import { initialView, reduce, type ClientView } from '../src/viewReducer.js';

const fixturePath = fileURLToPath(new URL('./fixtures/session_stream.json', import.meta.url));
const stream: WireMessage[] = JSON.parse(readFileSync(fixturePath, 'utf8'));

class FakeTransport implements Transport {
  textMessages: WireMessage[] = [];
  binaryFrames: Uint8Array[] = [];
  sendText(message: string): void {
    const decoded = decodeMessage(message);
    if (decoded === null) throw new Error('controller sent malformed text');
    this.textMessages.push(decoded);
  }
  sendBinary(frame: Uint8Array): void {
    this.binaryFrames.push(frame);
  }
}

const deniedMic: MicSource = {
  open() {
    return Promise.reject(new Error('NotAllowedError: permission denied'));
  },
  close() {},
};

/** Replays the recorded stream against the view, answering through the
 *  controller whenever the view says it is our turn. No game rules live
 *  here: the next server message always decides what happens. */
function playThrough(capture: CaptureController): ClientView {
  let view = initialView;
  for (const message of stream) {
    view = reduce(view, message);
    if (view.phase === 'prompt' && view.playerIndex !== null && view.activePlayer === view.playerIndex) {
      capture.submitText('an answer');
    }
  }
  return view;
}

describe('capture fallback on denied microphone permission', () => {
  it('pressTalk rejection switches the controller to text mode', async () => {
    const transport = new FakeTransport();
    const capture = new CaptureController(transport, deniedMic);
    expect(capture.captureMode).toBe('audio');
    await expect(capture.pressTalk()).rejects.toBeInstanceOf(PermissionDenied);
    expect(capture.captureMode).toBe('text');
    expect(capture.isTalking).toBe(false);
    // later presses are inert, not crashes
    await capture.pressTalk();
    capture.releaseTalk();
    expect(transport.binaryFrames).toHaveLength(0);
    expect(transport.textMessages).toHaveLength(0);
  });

  it('a full session remains completable through text entry', async () => {
    const transport = new FakeTransport();
    const capture = new CaptureController(transport, deniedMic);
    await expect(capture.pressTalk()).rejects.toBeInstanceOf(PermissionDenied);

    const final = playThrough(capture);

    expect(final.phase).toBe('complete');
    expect(final.summary).not.toBeNull();
    expect(transport.binaryFrames).toHaveLength(0);
    expect(transport.textMessages.length).toBeGreaterThan(0);
    for (const message of transport.textMessages) {
      expect(message.type).toBe('transcript');
      expect(typeof message.payload.text).toBe('string');
    }
  });

  it('a null mic source starts in text mode', () => {
    const transport = new FakeTransport();
    const capture = new CaptureController(transport, null);
    expect(capture.captureMode).toBe('text');
    capture.submitText('dog');
    expect(transport.textMessages[0].type).toBe('transcript');
    expect(transport.textMessages[0].payload.text).toBe('dog');
  });
});

describe('audio path when the microphone works', () => {
  it('streams increasing-seq frames and ends with end_of_speech', async () => {
    let deliver: ((samples: Float32Array, rate: number) => void) | null = null;
    const mic: MicSource = {
      open(onAudio) {
        deliver = onAudio;
        return Promise.resolve();
      },
      close() {
        deliver = null;
      },
    };
    const transport = new FakeTransport();
    const capture = new CaptureController(transport, mic);

    await capture.pressTalk();
    deliver!(new Float32Array(16000).fill(0.25), 16000); // one second of tone
    capture.releaseTalk();

    expect(transport.binaryFrames).toHaveLength(4); // 16000 samples / 4096 per chunk
    const seqs = transport.binaryFrames.map((f) => new DataView(f.buffer, f.byteOffset).getUint32(0, false));
    expect(seqs).toEqual([1, 2, 3, 4]);
    const last = transport.textMessages[transport.textMessages.length - 1];
    expect(last.type).toBe('end_of_speech');
  });
});
