// Language detection strictly from the draft's tags; the body text is
// never inspected.

import type { LanguageName } from "./api.js";

export const SUPPORTED_LANGUAGES: readonly LanguageName[] = ["java", "python"];

export type LanguageDetection =
  | { kind: "detected"; language: LanguageName }
  | { kind: "ambiguous"; options: LanguageName[] }
  | { kind: "none"; options: LanguageName[] };

function tagMatches(tag: string, language: LanguageName): boolean {
  const base = tag.trim().toLowerCase();
  // "python-3.x" counts as python; "javascript" must not count as java.
  return base === language || base.startsWith(`${language}-`);
}

export function detectLanguage(tags: readonly string[]): LanguageDetection {
  const found = SUPPORTED_LANGUAGES.filter((language) =>
    tags.some((tag) => tagMatches(tag, language)),
  );
  if (found.length === 1) return { kind: "detected", language: found[0]! };
  if (found.length > 1) return { kind: "ambiguous", options: found };
  return { kind: "none", options: [...SUPPORTED_LANGUAGES] };
}

export function parseTagInput(value: string): string[] {
  // SO's tag field is space separated; accept commas from the demo page too.
  return value
    .split(/[\s,]+/)
    .map((tag) => tag.trim())
    .filter((tag) => tag.length > 0);
}
