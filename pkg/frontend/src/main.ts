/** Browser entry point: wires socket, reducer, renderer, and capture
 *  together. Query params: ?server=<ws url>, ?join=<code>, ?name=<name>,
 *  ?catalog=<id>. Without ?join a new session is created. */

import { SessionClient, serverUrlFromLocation } from './client.js';
import { CaptureController, PermissionDenied, type MicSource } from './capture.js';
import { initialView, reduce, type ClientView } from './viewReducer.js';
import { paint, render } from './render.js';

function browserMic(): MicSource {
  let ctx: AudioContext | null = null;
  let stream: MediaStream | null = null;
  return {
    async open(onAudio) {
      stream = await navigator.mediaDevices.getUserMedia({ audio: true });
      ctx = new AudioContext();
      const source = ctx.createMediaStreamSource(stream);
      const processor = ctx.createScriptProcessor(4096, 1, 1);
      processor.onaudioprocess = (e) => onAudio(e.inputBuffer.getChannelData(0), ctx!.sampleRate);
      source.connect(processor);
      processor.connect(ctx.destination);
    },
    close() {
      stream?.getTracks().forEach((t) => t.stop());
      void ctx?.close();
      ctx = null;
      stream = null;
    },
  };
}

export async function start(root: HTMLElement): Promise<void> {
  let view: ClientView = initialView;
  const params = new URLSearchParams(window.location.search);

  const client = new SessionClient({
    serverUrl: serverUrlFromLocation(window.location),
    onMessage(message) {
      view = reduce(view, message);
      repaint();
    },
    onClose() {
      view = { ...view, connected: false };
      repaint();
    },
  });
  const capture = new CaptureController(client, browserMic());

  function repaint(): void {
    paint(render(view), root);
    attachControls();
  }

  function attachControls(): void {
    if (view.phase === 'lobby') {
      const button = document.createElement('button');
      button.textContent = 'Ready';
      button.onclick = () => client.ready();
      root.appendChild(button);
    }
    if (view.phase === 'prompt' && view.activePlayer === view.playerIndex) {
      if (capture.captureMode === 'audio') {
        const talk = document.createElement('button');
        talk.textContent = 'Hold to talk';
        talk.onpointerdown = () => {
          capture.pressTalk().catch((err) => {
            if (err instanceof PermissionDenied) repaint(); // show text entry instead
          });
        };
        talk.onpointerup = () => capture.releaseTalk();
        root.appendChild(talk);
      } else {
        const input = document.createElement('input');
        input.placeholder = 'Type your answer';
        const send = document.createElement('button');
        send.textContent = 'Answer';
        send.onclick = () => {
          capture.submitText(input.value);
          input.value = '';
        };
        root.append(input, send);
      }
    }
  }

  await client.connect();
  const name = params.get('name') ?? 'Player';
  const joinCode = params.get('join');
  if (joinCode) client.join(joinCode, name);
  else client.createSession(params.get('catalog') ?? 'en', name);
  repaint();
}
