// Browser extension entry point. Runs on the question composer page, mounts
// the trigger button, and routes generation through the configured server.

import { GencnippetClient } from "./api.js";
import { findEditor, injectButton } from "./button.js";
import type { EditorSelectors } from "./button.js";
import { GenerationController } from "./controller.js";
import { ReviewPanel } from "./panel.js";
import type { ChromeStorageArea, Settings } from "./settings.js";
import { DEFAULT_SETTINGS, ExtensionStorage, SettingsStore } from "./settings.js";

export const ASK_PATH = "/questions/ask";

export function isAskPage(location: { hostname: string; pathname: string }): boolean {
  return location.hostname === "stackoverflow.com" && location.pathname.startsWith(ASK_PATH);
}

export interface MountOptions {
  settings?: Settings;
  selectors?: EditorSelectors;
  panelHost?: HTMLElement;
}

export function mount(root: Document, options: MountOptions = {}): GenerationController | null {
  const editor = findEditor(root, options.selectors);
  if (!editor) {
    console.warn("gencnippet: question editor not found; nothing mounted");
    return null;
  }
  const settings = options.settings ?? DEFAULT_SETTINGS;
  const client = new GencnippetClient(settings.serverUrl);
  const host = options.panelHost ?? editor.body.parentElement ?? root.body;
  const panel = new ReviewPanel(host);
  let controller: GenerationController | null = null;
  const button = injectButton(
    root,
    () => {
      if (controller) {
        void controller.onClick();
      }
    },
    options.selectors,
  );
  if (!button) {
    return null;
  }
  controller = new GenerationController({
    client,
    editor,
    panel,
    button,
    mode: settings.mode,
  });
  return controller;
}

/** Reads persisted settings from extension storage, falling back to defaults. */
export async function loadExtensionSettings(): Promise<Settings> {
  const chromeGlobal = (globalThis as { chrome?: { storage?: { local?: ChromeStorageArea } } })
    .chrome;
  const area = chromeGlobal?.storage?.local;
  if (!area) {
    return { ...DEFAULT_SETTINGS };
  }
  return new SettingsStore(new ExtensionStorage(area)).load();
}

if (typeof window !== "undefined" && typeof document !== "undefined") {
  if (isAskPage(window.location)) {
    void loadExtensionSettings().then((settings) => {
      mount(document, { settings });
    });
  }
}
