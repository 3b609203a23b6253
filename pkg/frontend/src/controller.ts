// Wires the capture, language detection, API client, review panel, and
// editor insertion together. One generation request may be in flight at a
// time; the trigger button is disabled while it runs.

import { ApiError, GencnippetClient, TimeoutError } from "./api.js";
import type { GenerateMode, LanguageName } from "./api.js";
import { captureDraft } from "./capture.js";
import type { EditorElements } from "./capture.js";
import { insertSnippet } from "./editor.js";
import { ReviewPanel } from "./panel.js";

export interface ControllerOptions {
  client: GencnippetClient;
  editor: EditorElements;
  panel: ReviewPanel;
  button: HTMLButtonElement;
  mode?: GenerateMode;
}

export class GenerationController {
  private readonly client: GencnippetClient;
  private readonly editor: EditorElements;
  private readonly panel: ReviewPanel;
  private readonly button: HTMLButtonElement;
  private readonly mode: GenerateMode;
  private pending = false;

  constructor(options: ControllerOptions) {
    this.client = options.client;
    this.editor = options.editor;
    this.panel = options.panel;
    this.button = options.button;
    this.mode = options.mode ?? "zero_shot";
  }

  get busy(): boolean {
    return this.pending;
  }

  async onClick(): Promise<void> {
    if (this.pending) {
      return;
    }
    const state = captureDraft(this.editor);
    if (!state.description.trim()) {
      this.panel.showError({
        code: "EMPTY_DESCRIPTION",
        message: "Write the question body before requesting an example.",
        retryable: false,
      });
      return;
    }
    const detection = state.detection;
    if (detection.kind !== "detected") {
      this.panel.showLanguagePicker({
        options: detection.options,
        reason: detection.kind,
        onPick: (picked) => {
          void this.generate(state.description, picked);
        },
      });
      return;
    }
    await this.generate(state.description, detection.language);
  }

  async generate(description: string, language: LanguageName): Promise<void> {
    if (this.pending) {
      return;
    }
    this.pending = true;
    this.button.disabled = true;
    this.panel.showPending();
    try {
      const response = await this.client.generate({
        description,
        language,
        mode: this.mode,
      });
      this.panel.showSnippet({
        snippet: response.snippet,
        language,
        modelId: response.model_id,
        onInsert: (snippet, snippetLanguage) => {
          insertSnippet(this.editor.body, snippet, snippetLanguage);
        },
      });
    } catch (error) {
      this.showFailure(error, () => {
        void this.generate(description, language);
      });
    } finally {
      this.pending = false;
      this.button.disabled = false;
    }
  }

  private showFailure(error: unknown, retry: () => void): void {
    if (error instanceof ApiError) {
      this.panel.showError({
        code: error.code,
        message: error.message,
        retryable: error.retryable,
        onRetry: error.retryable ? retry : undefined,
      });
      return;
    }
    if (error instanceof TimeoutError) {
      this.panel.showError({
        code: "TIMEOUT",
        message: error.message,
        retryable: true,
        onRetry: retry,
      });
      return;
    }
    this.panel.showError({
      code: "NETWORK",
      message: error instanceof Error ? error.message : String(error),
      retryable: true,
      onRetry: retry,
    });
  }
}
