// DOM rendering: a single render(state) pass over a static skeleton.

import type { ChatState, Message } from './state.js';

export interface UiHandlers {
  onSend(text: string): void;
  onRetry(): void;
  onRatingSuccess(success: boolean): void;
  onRatingQuality(quality: number): void;
  onSubmitRating(): void;
  onResume(): void;
  onStartNew(): void;
}

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

function actionLabel(message: Message): string | null {
  if (!message.action) return null;
  const bits = message.action.offer_bits.map((b) => (b ? '1' : '0')).join('');
  return `${message.action.dia_act}(${message.action.query_slot}) bits=${bits}`;
}

export function messageNode(message: Message, inspect: boolean): HTMLElement {
  const wrap = el('div', `bubble ${message.role}`);
  wrap.appendChild(el('div', 'text', message.text));
  if (inspect && message.action) {
    const details = el('div', 'inspector');
    details.appendChild(el('div', 'action', actionLabel(message) ?? ''));
    if (message.belief) {
      const slots = Object.entries(message.belief.slots)
        .map(([slot, s]) => `${slot}=${s.top_value}@${s.probability.toFixed(2)}`)
        .join(' ');
      const matched = message.belief.matched_count;
      details.appendChild(el('div', 'belief', `${slots} | matches=${matched ?? '-'}`));
    }
    wrap.appendChild(details);
  }
  return wrap;
}

export class ChatView {
  private transcript: HTMLElement;
  private input: HTMLInputElement;
  private sendButton: HTMLButtonElement;
  private banner: HTMLElement;
  private ratingPanel: HTMLElement;
  private resumePanel: HTMLElement;
  private inspectToggle: HTMLInputElement;

  constructor(
    private root: HTMLElement,
    private handlers: UiHandlers,
  ) {
    this.root.innerHTML = `
      <header><h1>Restaurant Chat</h1>
        <label class="inspect-label"><input type="checkbox" id="inspect"> inspector</label>
      </header>
      <div id="resume-panel" class="panel hidden">
        <p>You have a previous session.</p>
        <button id="resume">Resume</button>
        <button id="start-new">Start new</button>
      </div>
      <div id="banner" class="banner hidden"></div>
      <div id="transcript" class="transcript"></div>
      <form id="composer" class="composer">
        <input id="utterance" autocomplete="off" placeholder="Type your message" />
        <button id="send" type="submit">Send</button>
      </form>
      <div id="rating-panel" class="panel hidden">
        <p>Do you think this dialogue was successful?</p>
        <div class="rating-success">
          <label><input type="radio" name="success" value="yes"> yes</label>
          <label><input type="radio" name="success" value="no"> no</label>
        </div>
        <p>Quality (0-5):</p>
        <div class="rating-quality">
          ${[0, 1, 2, 3, 4, 5]
            .map((q) => `<label><input type="radio" name="quality" value="${q}"> ${q}</label>`)
            .join('')}
        </div>
        <button id="submit-rating">Submit rating</button>
        <div id="rating-note" class="note"></div>
      </div>
    `;
    this.transcript = this.byId('transcript');
    this.input = this.byId('utterance') as HTMLInputElement;
    this.sendButton = this.byId('send') as HTMLButtonElement;
    this.banner = this.byId('banner');
    this.ratingPanel = this.byId('rating-panel');
    this.resumePanel = this.byId('resume-panel');
    this.inspectToggle = this.byId('inspect') as HTMLInputElement;

    this.byId('composer').addEventListener('submit', (event) => {
      event.preventDefault();
      const text = this.input.value;
      if (text.trim()) {
        this.input.value = '';
        handlers.onSend(text);
      }
    });
    this.byId('resume').addEventListener('click', () => handlers.onResume());
    this.byId('start-new').addEventListener('click', () => handlers.onStartNew());
    this.byId('submit-rating').addEventListener('click', () => handlers.onSubmitRating());
    this.root.querySelectorAll('input[name="success"]').forEach((node) =>
      node.addEventListener('change', (event) =>
        handlers.onRatingSuccess((event.target as HTMLInputElement).value === 'yes'),
      ),
    );
    this.root.querySelectorAll('input[name="quality"]').forEach((node) =>
      node.addEventListener('change', (event) =>
        handlers.onRatingQuality(Number((event.target as HTMLInputElement).value)),
      ),
    );
  }

  private byId(id: string): HTMLElement {
    const node = this.root.querySelector(`#${id}`);
    if (!node) throw new Error(`missing element #${id}`);
    return node as HTMLElement;
  }

  render(state: ChatState, canSend: boolean, canRate: boolean, ratingNote: string | null): void {
    this.resumePanel.classList.toggle('hidden', !state.resumeOffered);
    this.banner.classList.toggle('hidden', state.phase !== 'failed');
    if (state.phase === 'failed') {
      this.banner.textContent = `Connection problem: ${state.error ?? 'unknown'} `;
      const retry = el('button', '', 'Retry');
      retry.addEventListener('click', () => this.handlers.onRetry());
      this.banner.appendChild(retry);
    }

    this.transcript.replaceChildren(
      ...state.messages.map((m) => messageNode(m, this.inspectToggle.checked)),
    );
    this.transcript.scrollTop = this.transcript.scrollHeight;

    this.input.disabled = state.phase !== 'chatting' || state.pending;
    this.sendButton.disabled = !canSend && this.input.value.trim().length === 0;

    const showRating = state.phase === 'closed' || state.phase === 'rated';
    this.ratingPanel.classList.toggle('hidden', !showRating);
    (this.byId('submit-rating') as HTMLButtonElement).disabled = !canRate;
    const note = this.byId('rating-note');
    if (state.phase === 'rated') {
      note.textContent = state.error === 'already rated'
        ? 'This dialogue was already rated.'
        : 'Thank you for your rating!';
    } else {
      note.textContent = ratingNote ?? '';
    }
  }
}
