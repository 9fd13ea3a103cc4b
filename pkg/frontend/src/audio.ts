/** Audio plumbing for push-to-talk capture: resample whatever the mic
 *  gives us down to 16 kHz mono, convert to 16-bit PCM, and cut into
 *  frames of at most 4096 samples for the wire. */

export const TARGET_SAMPLE_RATE = 16000;
export const MAX_CHUNK_FRAMES = 4096;

/** Linear-interpolation downsampler; adequate for speech capture. */
export function resampleTo16k(input: Float32Array, inputRate: number): Float32Array {
  if (inputRate === TARGET_SAMPLE_RATE) return input;
  const outLength = Math.floor((input.length * TARGET_SAMPLE_RATE) / inputRate);
  const out = new Float32Array(outLength);
  const ratio = inputRate / TARGET_SAMPLE_RATE;
  for (let i = 0; i < outLength; i++) {
    const pos = i * ratio;
    const left = Math.floor(pos);
    const right = Math.min(left + 1, input.length - 1);
    const frac = pos - left;
    out[i] = input[left] * (1 - frac) + input[right] * frac;
  }
  return out;
}

export function floatToPcm16(input: Float32Array): Uint8Array {
  const out = new Uint8Array(input.length * 2);
  const view = new DataView(out.buffer);
  for (let i = 0; i < input.length; i++) {
    const clamped = Math.max(-1, Math.min(1, input[i]));
    view.setInt16(i * 2, Math.round(clamped * 0x7fff), true);
  }
  return out;
}

/** Split PCM bytes into wire chunks of at most MAX_CHUNK_FRAMES samples. */
export function chunkPcm(pcm: Uint8Array, maxFrames: number = MAX_CHUNK_FRAMES): Uint8Array[] {
  const chunks: Uint8Array[] = [];
  const maxBytes = maxFrames * 2;
  for (let off = 0; off < pcm.byteLength; off += maxBytes) {
    chunks.push(pcm.subarray(off, Math.min(off + maxBytes, pcm.byteLength)));
  }
  return chunks;
}
