// Reads the live question draft into the request payload. The description
// is the title plus the body with code removed: the server is asked to
// produce code, so existing blocks are noise in the problem statement.

import type { LanguageName } from "./api.js";
import { detectLanguage, parseTagInput, type LanguageDetection } from "./language.js";

export interface EditorElements {
  title: HTMLInputElement;
  body: HTMLTextAreaElement;
  tags: HTMLInputElement;
}

export interface CaptureState {
  description: string;
  detection: LanguageDetection;
  tags: string[];
}

const FENCED_BLOCK = /^```[^\n]*\n[\s\S]*?^```[^\n]*$/gm;
const INDENTED_BLOCK = /^(?: {4}|\t).*$/gm;

export function stripCodeBlocks(markdown: string): string {
  return markdown
    .replace(FENCED_BLOCK, "")
    .replace(INDENTED_BLOCK, "")
    .replace(/\n{3,}/g, "\n\n")
    .trim();
}

export function buildDescription(title: string, body: string): string {
  const prose = stripCodeBlocks(body);
  const parts = [title.trim(), prose].filter((part) => part.length > 0);
  return parts.join("\n\n");
}

export function captureDraft(elements: EditorElements): CaptureState {
  const tags = parseTagInput(elements.tags.value);
  return {
    description: buildDescription(elements.title.value, elements.body.value),
    detection: detectLanguage(tags),
    tags,
  };
}

export function resolvedLanguage(state: CaptureState): LanguageName | null {
  return state.detection.kind === "detected" ? state.detection.language : null;
}
