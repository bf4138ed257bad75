// Session state machine. Every rendered turn corresponds to a server
// response; the only client-side persistence is the session token.

import type { BeliefSummary, MasterAction } from './api.js';

export type Phase =
  | 'idle' // nothing yet; may offer resume-or-new
  | 'chatting'
  | 'closed' // dialogue over, rating panel open
  | 'rated' // rating accepted, thank-you state
  | 'failed'; // network failure, retry banner

export interface Message {
  role: 'user' | 'system';
  text: string;
  action?: MasterAction;
  belief?: BeliefSummary;
}

export interface RatingDraft {
  success: boolean | null;
  quality: number | null;
}

export interface ChatState {
  phase: Phase;
  sessionId: string | null;
  messages: Message[];
  pending: boolean; // a request is in flight
  error: string | null;
  rating: RatingDraft;
  ratingSubmitted: boolean;
  resumeOffered: boolean;
}

export function initialState(): ChatState {
  return {
    phase: 'idle',
    sessionId: null,
    messages: [],
    pending: false,
    error: null,
    rating: { success: null, quality: null },
    ratingSubmitted: false,
    resumeOffered: false,
  };
}

export function sessionStarted(state: ChatState, sessionId: string, greeting: string): ChatState {
  return {
    ...initialState(),
    phase: 'chatting',
    sessionId,
    messages: [{ role: 'system', text: greeting }],
  };
}

export function sessionResumed(
  state: ChatState,
  sessionId: string,
  status: 'open' | 'closed',
  rated: boolean,
): ChatState {
  return {
    ...initialState(),
    phase: status === 'open' ? 'chatting' : rated ? 'rated' : 'closed',
    sessionId,
    ratingSubmitted: rated,
    messages: [{ role: 'system', text: 'Resumed your previous session.' }],
  };
}

export function userSent(state: ChatState, text: string): ChatState {
  return {
    ...state,
    pending: true,
    error: null,
    messages: [...state.messages, { role: 'user', text }],
  };
}

export function systemReplied(
  state: ChatState,
  text: string,
  action: MasterAction,
  belief: BeliefSummary,
  closed: boolean,
): ChatState {
  return {
    ...state,
    pending: false,
    phase: closed ? 'closed' : 'chatting',
    messages: [...state.messages, { role: 'system', text, action, belief }],
  };
}

export function requestFailed(state: ChatState, message: string): ChatState {
  return { ...state, pending: false, phase: 'failed', error: message };
}

export function retried(state: ChatState): ChatState {
  return { ...state, phase: state.sessionId ? 'chatting' : 'idle', error: null };
}

export function sessionClosedByServer(state: ChatState): ChatState {
  // A 409 on an utterance means the dialogue already ended: open the rating panel.
  return { ...state, pending: false, phase: 'closed', error: null };
}

export function ratingChanged(state: ChatState, draft: Partial<RatingDraft>): ChatState {
  return { ...state, rating: { ...state.rating, ...draft } };
}

export function ratingAccepted(state: ChatState): ChatState {
  return { ...state, phase: 'rated', ratingSubmitted: true, error: null };
}

export function ratingRejectedAsDuplicate(state: ChatState): ChatState {
  // Server already has a rating for this session: treat it as submitted.
  return { ...state, phase: 'rated', ratingSubmitted: true, error: 'already rated' };
}

export function validateRating(draft: RatingDraft): string | null {
  if (draft.success === null) return 'Choose whether the dialogue was successful.';
  if (draft.quality === null) return 'Pick a quality score from 0 to 5.';
  if (!Number.isInteger(draft.quality) || draft.quality < 0 || draft.quality > 5) {
    return 'Quality must be a whole number from 0 to 5.';
  }
  return null;
}

export function canSubmitRating(state: ChatState): boolean {
  return (
    state.phase === 'closed' &&
    !state.ratingSubmitted &&
    !state.pending &&
    validateRating(state.rating) === null
  );
}

export function canSendUtterance(state: ChatState, text: string): boolean {
  return state.phase === 'chatting' && !state.pending && text.trim().length > 0;
}
