// The review panel: every generated snippet is shown here first, and the
// draft is only touched when the author explicitly clicks Insert.

import type { LanguageName } from "./api.js";

export const PANEL_CLASS = "gencnippet-panel";

export interface SnippetView {
  snippet: string;
  language: LanguageName;
  modelId: string;
  onInsert: (snippet: string, language: LanguageName) => void;
}

export interface ErrorView {
  code: string;
  message: string;
  retryable: boolean;
  onRetry?: () => void;
}

export interface PickerView {
  options: LanguageName[];
  reason: "ambiguous" | "none";
  onPick: (language: LanguageName) => void;
}

function button(label: string, className: string, onClick: () => void): HTMLButtonElement {
  const element = document.createElement("button");
  element.type = "button";
  element.textContent = label;
  element.className = className;
  element.addEventListener("click", onClick);
  return element;
}

export class ReviewPanel {
  private readonly root: HTMLElement;

  constructor(host: HTMLElement) {
    const existing = host.querySelector<HTMLElement>(`.${PANEL_CLASS}`);
    if (existing) {
      this.root = existing;
    } else {
      this.root = document.createElement("div");
      this.root.className = PANEL_CLASS;
      this.root.hidden = true;
      host.appendChild(this.root);
    }
  }

  get element(): HTMLElement {
    return this.root;
  }

  private clear(): void {
    this.root.replaceChildren();
    this.root.hidden = false;
  }

  dismiss(): void {
    this.root.replaceChildren();
    this.root.hidden = true;
  }

  showPending(): void {
    this.clear();
    const note = document.createElement("p");
    note.className = "gencnippet-pending";
    note.textContent = "Generating a code example...";
    this.root.appendChild(note);
  }

  showSnippet(view: SnippetView): void {
    this.clear();
    const heading = document.createElement("p");
    heading.className = "gencnippet-heading";
    heading.textContent = `Suggested ${view.language} example (${view.modelId}) - review before inserting`;

    const pre = document.createElement("pre");
    const code = document.createElement("code");
    code.textContent = view.snippet;
    pre.appendChild(code);

    const actions = document.createElement("div");
    actions.className = "gencnippet-actions";
    actions.appendChild(
      button("Insert", "gencnippet-insert", () => {
        view.onInsert(view.snippet, view.language);
        this.dismiss();
      }),
    );
    actions.appendChild(button("Dismiss", "gencnippet-dismiss", () => this.dismiss()));

    this.root.append(heading, pre, actions);
  }

  showError(view: ErrorView): void {
    this.clear();
    const message = document.createElement("p");
    message.className = "gencnippet-error";
    message.textContent = `Generation failed (${view.code}): ${view.message}`;
    this.root.appendChild(message);
    if (view.retryable && view.onRetry) {
      const retry = view.onRetry;
      this.root.appendChild(button("Retry", "gencnippet-retry", () => retry()));
    }
    this.root.appendChild(button("Dismiss", "gencnippet-dismiss", () => this.dismiss()));
  }

  showLanguagePicker(view: PickerView): void {
    this.clear();
    const prompt = document.createElement("p");
    prompt.className = "gencnippet-picker";
    prompt.textContent =
      view.reason === "ambiguous"
        ? "Both languages are tagged - which one is this question about?"
        : "No java or python tag found - pick the question's language:";
    this.root.appendChild(prompt);
    for (const option of view.options) {
      this.root.appendChild(
        button(option, "gencnippet-pick", () => view.onPick(option)),
      );
    }
    this.root.appendChild(button("Dismiss", "gencnippet-dismiss", () => this.dismiss()));
  }
}
