// Injects the "Generate example" button next to the question editor.
// Injection is idempotent: re-running on the same document is a no-op.

export const BUTTON_CLASS = "gencnippet-button";
export const BUTTON_LABEL = "Generate example";
const MARKER_ATTRIBUTE = "data-gencnippet";

export interface EditorSelectors {
  toolbar: string;
  title: string;
  body: string;
  tags: string;
}

// Matches the ask-page markup snapshot the extension was written against.
export const DEFAULT_SELECTORS: EditorSelectors = {
  toolbar: ".wmd-button-bar",
  title: "#title",
  body: "#wmd-input",
  tags: "#tageditor-replacing-input",
};

export function findEditor(
  root: ParentNode,
  selectors: EditorSelectors = DEFAULT_SELECTORS,
): { title: HTMLInputElement; body: HTMLTextAreaElement; tags: HTMLInputElement } | null {
  const title = root.querySelector<HTMLInputElement>(selectors.title);
  const body = root.querySelector<HTMLTextAreaElement>(selectors.body);
  const tags = root.querySelector<HTMLInputElement>(selectors.tags);
  if (!title || !body || !tags) {
    return null;
  }
  return { title, body, tags };
}

export function injectButton(
  root: ParentNode & { querySelector: ParentNode["querySelector"] },
  onClick: () => void,
  selectors: EditorSelectors = DEFAULT_SELECTORS,
): HTMLButtonElement | null {
  const existing = root.querySelector<HTMLButtonElement>(`button[${MARKER_ATTRIBUTE}]`);
  if (existing) {
    return existing;
  }
  const toolbar = root.querySelector<HTMLElement>(selectors.toolbar);
  if (!toolbar) {
    console.warn(`gencnippet: no editor toolbar matched "${selectors.toolbar}"; button not injected`);
    return null;
  }
  const element = document.createElement("button");
  element.type = "button";
  element.className = BUTTON_CLASS;
  element.textContent = BUTTON_LABEL;
  element.setAttribute(MARKER_ATTRIBUTE, "button");
  element.addEventListener("click", onClick);
  toolbar.appendChild(element);
  return element;
}
