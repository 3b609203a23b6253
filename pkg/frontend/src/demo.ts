// Standalone demo page driver. Uses the same capture, detection, and review
// flow as the extension, pointed at a locally running gencnippet server.

import { GencnippetClient } from "./api.js";
import { findEditor, injectButton } from "./button.js";
import type { EditorSelectors } from "./button.js";
import { GenerationController } from "./controller.js";
import { ReviewPanel } from "./panel.js";
import { LocalStorage, SettingsError, SettingsStore } from "./settings.js";

export const DEMO_SELECTORS: EditorSelectors = {
  toolbar: "#toolbar",
  title: "#title",
  body: "#body",
  tags: "#tags",
};

export interface DemoHandles {
  controller: GenerationController;
  panel: ReviewPanel;
  store: SettingsStore;
}

export async function setupDemo(root: Document): Promise<DemoHandles | null> {
  const editor = findEditor(root, DEMO_SELECTORS);
  if (!editor) {
    console.warn("gencnippet: demo editor markup missing");
    return null;
  }
  const store = new SettingsStore(new LocalStorage(window.localStorage));
  const settings = await store.load();

  const serverField = root.querySelector<HTMLInputElement>("#server-url");
  if (serverField) {
    serverField.value = settings.serverUrl;
    serverField.addEventListener("change", () => {
      void store
        .save({ ...settings, serverUrl: serverField.value })
        .catch((error: unknown) => {
          if (error instanceof SettingsError) {
            serverField.setCustomValidity(error.message);
            serverField.reportValidity();
          }
        });
    });
  }

  const client = new GencnippetClient(settings.serverUrl);
  const panelHost = root.querySelector<HTMLElement>("#panel-host") ?? root.body;
  const panel = new ReviewPanel(panelHost);
  let controller: GenerationController | null = null;
  const button = injectButton(
    root,
    () => {
      if (controller) {
        void controller.onClick();
      }
    },
    DEMO_SELECTORS,
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
  return { controller, panel, store };
}

// Module scripts are deferred, so the markup is parsed by the time this
// runs. Importing this module elsewhere (tests) finds no demo markup and
// stays inert.
if (typeof document !== "undefined" && document.querySelector(DEMO_SELECTORS.toolbar)) {
  void setupDemo(document);
}
