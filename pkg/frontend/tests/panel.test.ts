import { beforeEach, describe, expect, it } from "vitest";

import { PANEL_CLASS, ReviewPanel } from "../src/panel.js";

function clickByText(panel: ReviewPanel, label: string): void {
  const buttons = Array.from(panel.element.querySelectorAll("button"));
  const target = buttons.find((button) => button.textContent === label);
  if (!target) {
    throw new Error(`no "${label}" button rendered`);
  }
  target.click();
}

describe("ReviewPanel", () => {
  let host: HTMLElement;

  beforeEach(() => {
    document.body.innerHTML = "";
    host = document.createElement("div");
    document.body.appendChild(host);
  });

  it("mounts hidden and reuses an existing panel element", () => {
    const first = new ReviewPanel(host);
    const second = new ReviewPanel(host);
    expect(first.element).toBe(second.element);
    expect(host.querySelectorAll(`.${PANEL_CLASS}`)).toHaveLength(1);
    expect(first.element.hidden).toBe(true);
  });

  it("shows the snippet for review without touching anything else", () => {
    const panel = new ReviewPanel(host);
    let inserted: string | null = null;
    panel.showSnippet({
      snippet: "int x = 1;",
      language: "java",
      modelId: "mock-model",
      onInsert: (snippet) => {
        inserted = snippet;
      },
    });

    expect(panel.element.hidden).toBe(false);
    expect(panel.element.querySelector("code")?.textContent).toBe("int x = 1;");
    expect(panel.element.textContent).toContain("review before inserting");
    // Rendering alone must not insert; that needs an explicit click.
    expect(inserted).toBeNull();
  });

  it("invokes onInsert only when Insert is clicked, then closes", () => {
    const panel = new ReviewPanel(host);
    const received: string[] = [];
    panel.showSnippet({
      snippet: "x = 1",
      language: "python",
      modelId: "m",
      onInsert: (snippet) => {
        received.push(snippet);
      },
    });

    clickByText(panel, "Insert");

    expect(received).toEqual(["x = 1"]);
    expect(panel.element.hidden).toBe(true);
  });

  it("dismiss closes without inserting", () => {
    const panel = new ReviewPanel(host);
    let inserted = false;
    panel.showSnippet({
      snippet: "x",
      language: "java",
      modelId: "m",
      onInsert: () => {
        inserted = true;
      },
    });

    clickByText(panel, "Dismiss");

    expect(inserted).toBe(false);
    expect(panel.element.hidden).toBe(true);
  });

  it("shows the error code and message inline", () => {
    const panel = new ReviewPanel(host);
    panel.showError({
      code: "BACKEND_TIMEOUT",
      message: "backend took too long",
      retryable: true,
      onRetry: () => {},
    });

    const text = panel.element.textContent ?? "";
    expect(text).toContain("BACKEND_TIMEOUT");
    expect(text).toContain("backend took too long");
  });

  it("offers retry only for retryable failures", () => {
    const panel = new ReviewPanel(host);
    let retried = 0;
    panel.showError({
      code: "RATE_LIMITED",
      message: "too many requests",
      retryable: true,
      onRetry: () => {
        retried += 1;
      },
    });
    clickByText(panel, "Retry");
    expect(retried).toBe(1);

    panel.showError({
      code: "UNSUPPORTED_LANGUAGE",
      message: "rust is not supported",
      retryable: false,
    });
    const labels = Array.from(panel.element.querySelectorAll("button")).map(
      (button) => button.textContent,
    );
    expect(labels).not.toContain("Retry");
    expect(labels).toContain("Dismiss");
  });

  it("renders a language picker with one button per option", () => {
    const panel = new ReviewPanel(host);
    const picks: string[] = [];
    panel.showLanguagePicker({
      options: ["java", "python"],
      reason: "none",
      onPick: (language) => {
        picks.push(language);
      },
    });

    expect(panel.element.textContent).toContain("pick the question's language");
    clickByText(panel, "python");
    expect(picks).toEqual(["python"]);
  });

  it("explains an ambiguous tag set differently", () => {
    const panel = new ReviewPanel(host);
    panel.showLanguagePicker({
      options: ["java", "python"],
      reason: "ambiguous",
      onPick: () => {},
    });
    expect(panel.element.textContent).toContain("Both languages are tagged");
  });
});
