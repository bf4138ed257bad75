// Bootstrap: wire the API client, state machine and view together.

import { ApiError, ChatApi } from './api.js';
import * as S from './state.js';
import { ChatView } from './ui.js';

const TOKEN_KEY = 'neuraldm.session';

function start(root: HTMLElement): void {
  const api = new ChatApi('');
  let state = S.initialState();

  const view = new ChatView(root, {
    onSend: (text) => void send(text),
    onRetry: () => {
      state = S.retried(state);
      if (!state.sessionId) void openSession();
      else render();
    },
    onRatingSuccess: (success) => {
      state = S.ratingChanged(state, { success });
      render();
    },
    onRatingQuality: (quality) => {
      state = S.ratingChanged(state, { quality });
      render();
    },
    onSubmitRating: () => void submitRating(),
    onResume: () => void resume(),
    onStartNew: () => {
      sessionStorage.removeItem(TOKEN_KEY);
      void openSession();
    },
  });

  function render(): void {
    const note: string | null = state.phase === 'closed' ? S.validateRating(state.rating) : null;
    view.render(state, state.phase === 'chatting' && !state.pending, S.canSubmitRating(state), note);
  }

  async function openSession(): Promise<void> {
    try {
      const session = await api.createSession();
      sessionStorage.setItem(TOKEN_KEY, session.session_id);
      state = S.sessionStarted(state, session.session_id, session.greeting);
    } catch (error) {
      state = S.requestFailed(state, describe(error));
    }
    render();
  }

  async function resume(): Promise<void> {
    const saved = sessionStorage.getItem(TOKEN_KEY);
    if (!saved) return void openSession();
    try {
      const info = await api.getSession(saved);
      state = S.sessionResumed(state, info.session_id, info.status, info.rated);
    } catch {
      sessionStorage.removeItem(TOKEN_KEY);
      return void openSession();
    }
    render();
  }

  async function send(text: string): Promise<void> {
    const sessionId = state.sessionId;
    if (!sessionId || !S.canSendUtterance(state, text)) return;
    state = S.userSent(state, text);
    render();
    try {
      const reply = await api.sendUtterance(sessionId, text);
      state = S.systemReplied(
        state, reply.system_text, reply.master_action, reply.belief_summary, reply.closed,
      );
    } catch (error) {
      if (error instanceof ApiError && error.status === 409) {
        state = S.sessionClosedByServer(state);
      } else {
        state = S.requestFailed(state, describe(error));
      }
    }
    render();
  }

  async function submitRating(): Promise<void> {
    if (!state.sessionId || !S.canSubmitRating(state)) return;
    const { success, quality } = state.rating;
    try {
      await api.submitRating(state.sessionId, { success: success!, quality: quality! });
      state = S.ratingAccepted(state);
    } catch (error) {
      if (error instanceof ApiError && error.status === 409) {
        state = S.ratingRejectedAsDuplicate(state);
      } else {
        state = S.requestFailed(state, describe(error));
      }
    }
    render();
  }

  const saved = sessionStorage.getItem(TOKEN_KEY);
  if (saved) {
    state = { ...state, resumeOffered: true };
    render();
  } else {
    void openSession();
  }
}

function describe(error: unknown): string {
  if (error instanceof ApiError) return `${error.status}: ${error.message}`;
  return error instanceof Error ? error.message : String(error);
}

const root = document.getElementById('app');
if (root) start(root);
