/** Pure view state: a fold over the ordered server message stream.
 *
 *  The client never decides correctness, turns, or rewards; every state
 *  change here is a direct echo of a server message. Unknown message
 *  tags leave the view untouched (neutral waiting).
 */

import type { RosterEntry, WireMessage } from './protocol.js';

export type ViewPhase =
  | 'connecting'
  | 'lobby'
  | 'prompt'
  | 'feedback'
  | 'reward'
  | 'passed'
  | 'complete'
  | 'error';

export interface AvatarView {
  playerIndex: number;
  displayName: string;
  highlighted: boolean;
  grayedOut: boolean;
  connected: boolean;
}

export interface ClientView {
  phase: ViewPhase;
  playerIndex: number | null;
  sessionId: string | null;
  joinCode: string | null;
  imageRef: string | null;
  soundRef: string | null;
  promptText: string | null;
  partialTranscript: string | null;
  roster: RosterEntry[];
  activePlayer: number | null;
  rewardOverlay: { icon: string; durationMs: number } | null;
  attemptsLeft: number | null;
  lastResult: { matched: boolean; transcript: string; matchedLabel: string | null } | null;
  summary: Record<string, unknown> | null;
  errorMessage: string | null;
  connected: boolean;
}

export const initialView: ClientView = {
  phase: 'connecting',
  playerIndex: null,
  sessionId: null,
  joinCode: null,
  imageRef: null,
  soundRef: null,
  promptText: null,
  partialTranscript: null,
  roster: [],
  activePlayer: null,
  rewardOverlay: null,
  attemptsLeft: null,
  lastResult: null,
  summary: null,
  errorMessage: null,
  connected: false,
};

function avatars(view: ClientView): AvatarView[] {
  return view.roster.map((entry) => ({
    playerIndex: entry.player_index,
    displayName: entry.display_name,
    highlighted: view.activePlayer === entry.player_index,
    grayedOut: view.activePlayer !== null && view.activePlayer !== entry.player_index,
    connected: entry.connected,
  }));
}

export function avatarViews(view: ClientView): AvatarView[] {
  return avatars(view);
}

export function reduce(view: ClientView, message: WireMessage): ClientView {
  const p = message.payload;
  switch (message.type) {
    case 'session_created':
      return {
        ...view,
        sessionId: (p.session_id as string) ?? null,
        joinCode: (p.join_code as string) ?? null,
        connected: true,
        phase: 'lobby',
      };
    case 'joined':
      return {
        ...view,
        playerIndex: view.playerIndex ?? ((p.player_index as number) ?? null),
        roster: (p.roster as RosterEntry[]) ?? view.roster,
        connected: true,
        phase: view.phase === 'connecting' ? 'lobby' : view.phase,
      };
    case 'prompt_shown':
      return {
        ...view,
        phase: 'prompt',
        imageRef: (p.image_ref as string) ?? null,
        soundRef: (p.sound_ref as string | null) ?? null,
        promptText: (p.prompt_text as string) ?? null,
        activePlayer: (p.active_player as number) ?? null,
        rewardOverlay: null,
        partialTranscript: null,
        attemptsLeft: null,
        lastResult: null,
      };
    case 'partial_transcript':
      return { ...view, partialTranscript: (p.text as string) ?? null };
    case 'recognition_result':
      return {
        ...view,
        phase: 'feedback',
        partialTranscript: null,
        lastResult: {
          matched: Boolean(p.matched),
          transcript: (p.transcript as string) ?? '',
          matchedLabel: (p.matched_label as string | null) ?? null,
        },
      };
    case 'try_again':
      return { ...view, phase: 'prompt', attemptsLeft: (p.attempts_left as number) ?? null };
    case 'reward':
      return {
        ...view,
        phase: 'reward',
        rewardOverlay: {
          icon: (p.icon as string) ?? 'star',
          durationMs: (p.duration_ms as number) ?? 0,
        },
      };
    case 'prompt_passed':
      return { ...view, phase: 'passed', attemptsLeft: null };
    case 'turn_changed':
      return { ...view, activePlayer: (p.active_player as number) ?? view.activePlayer };
    case 'session_complete':
      return {
        ...view,
        phase: 'complete',
        rewardOverlay: null,
        summary: (p.summary as Record<string, unknown>) ?? null,
      };
    case 'error':
      if (p.code === 'not_your_turn' || p.code === 'bad_phase') {
        // Soft protocol errors: surface the text, keep playing.
        return { ...view, errorMessage: (p.message as string) ?? null };
      }
      return { ...view, phase: 'error', errorMessage: (p.message as string) ?? null };
    default:
      return view; // forward compatibility: unknown tags change nothing
  }
}

export function replay(messages: WireMessage[], start: ClientView = initialView): ClientView[] {
  const snapshots: ClientView[] = [];
  let view = start;
  for (const message of messages) {
    view = reduce(view, message);
    snapshots.push(view);
  }
  return snapshots;
}
