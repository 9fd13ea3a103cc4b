/** Rendering: ClientView -> a plain screen description, and that
 *  description -> DOM. The description layer keeps tests DOM-free. */

import type { ClientView } from './viewReducer.js';
import { avatarViews, type AvatarView } from './viewReducer.js';

export interface Screen {
  kind: 'waiting' | 'lobby' | 'prompt' | 'reward' | 'summary' | 'error';
  image: string | null;
  promptText: string | null;
  avatars: AvatarView[];
  rewardIcon: string | null;
  attemptsLeft: number | null;
  partialTranscript: string | null;
  summary: Record<string, unknown> | null;
  statusLine: string;
}

export function render(view: ClientView): Screen {
  const base: Screen = {
    kind: 'waiting',
    image: null,
    promptText: null,
    avatars: avatarViews(view),
    rewardIcon: null,
    attemptsLeft: view.attemptsLeft,
    partialTranscript: view.partialTranscript,
    summary: null,
    statusLine: view.connected ? 'connected' : 'connecting…',
  };
  switch (view.phase) {
    case 'lobby':
      return { ...base, kind: 'lobby', statusLine: view.joinCode ? `join code: ${view.joinCode}` : base.statusLine };
    case 'prompt':
    case 'feedback':
    case 'passed':
      return { ...base, kind: 'prompt', image: view.imageRef, promptText: view.promptText };
    case 'reward':
      return { ...base, kind: 'reward', rewardIcon: view.rewardOverlay?.icon ?? null };
    case 'complete':
      return { ...base, kind: 'summary', summary: view.summary };
    case 'error':
      return { ...base, kind: 'error', statusLine: view.errorMessage ?? 'error' };
    default:
      return base;
  }
}

export function paint(screen: Screen, root: HTMLElement, assetBase = '/assets'): void {
  const avatarHtml = screen.avatars
    .map(
      (a) =>
        `<div class="avatar${a.highlighted ? ' active' : ''}${a.grayedOut ? ' grayed' : ''}">` +
        `<span class="avatar-name">${a.displayName}</span></div>`,
    )
    .join('');
  const parts: string[] = [`<div class="avatars">${avatarHtml}</div>`];
  if (screen.kind === 'prompt' && screen.image) {
    parts.push(`<img class="pictogram" src="${assetBase}/${screen.image}" alt="">`);
  }
  if (screen.promptText) parts.push(`<p class="prompt-text">${screen.promptText}</p>`);
  if (screen.partialTranscript) parts.push(`<p class="partial">${screen.partialTranscript}…</p>`);
  if (screen.attemptsLeft !== null) parts.push(`<p class="attempts">Tries left: ${screen.attemptsLeft}</p>`);
  if (screen.kind === 'reward') parts.push(`<div class="reward-overlay">${screen.rewardIcon ?? '⭐'}</div>`);
  if (screen.kind === 'summary' && screen.summary) {
    parts.push(`<pre class="summary">${JSON.stringify(screen.summary, null, 2)}</pre>`);
  }
  parts.push(`<p class="status">${screen.statusLine}</p>`);
  root.innerHTML = parts.join('\n');
}
