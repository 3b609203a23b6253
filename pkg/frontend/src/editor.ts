// Inserting the reviewed snippet into the draft. The only code path that
// mutates the editor; everything else just reads it.

export interface InsertResult {
  value: string;
  caret: number;
}

export function fencedBlock(snippet: string, language: string): string {
  const body = snippet.replace(/\s+$/, "");
  return `\`\`\`${language}\n${body}\n\`\`\``;
}

/** Pure cursor-position insertion with blank-line separation. */
export function insertAt(value: string, caret: number, block: string): InsertResult {
  const position = Math.max(0, Math.min(caret, value.length));
  const before = value.slice(0, position);
  const after = value.slice(position);
  const prefix = before.length === 0 || before.endsWith("\n\n")
    ? ""
    : before.endsWith("\n")
      ? "\n"
      : "\n\n";
  const suffix = after.length === 0 || after.startsWith("\n") ? "\n" : "\n\n";
  const inserted = `${prefix}${block}${suffix}`;
  return {
    value: `${before}${inserted}${after}`,
    caret: position + inserted.length,
  };
}

export function insertSnippet(
  editor: HTMLTextAreaElement,
  snippet: string,
  language: string,
): void {
  const caret = editor.selectionStart ?? editor.value.length;
  const result = insertAt(editor.value, caret, fencedBlock(snippet, language));
  editor.value = result.value;
  editor.selectionStart = result.caret;
  editor.selectionEnd = result.caret;
  editor.dispatchEvent(new Event("input", { bubbles: true }));
}
