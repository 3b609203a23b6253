// Persisted client settings: server URL and default generation mode.
// Storage is injectable so the same code runs against extension storage,
// page localStorage, or an in-memory stub in tests.

import type { GenerateMode } from "./api.js";

export interface Settings {
  serverUrl: string;
  mode: GenerateMode;
}

export const DEFAULT_SETTINGS: Settings = {
  serverUrl: "http://127.0.0.1:8080",
  mode: "zero_shot",
};

export interface KeyValueStorage {
  get(key: string): Promise<string | null>;
  set(key: string, value: string): Promise<void>;
  remove(key: string): Promise<void>;
}

const STORAGE_KEY = "gencnippet.settings";

export class SettingsError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "SettingsError";
  }
}

export function validateServerUrl(value: string): string {
  let parsed: URL;
  try {
    parsed = new URL(value.trim());
  } catch {
    throw new SettingsError(`"${value}" is not a valid URL`);
  }
  if (parsed.protocol !== "http:" && parsed.protocol !== "https:") {
    throw new SettingsError("server URL must use http or https");
  }
  if (parsed.search || parsed.hash) {
    throw new SettingsError("server URL must not carry a query or fragment");
  }
  return parsed.toString().replace(/\/+$/, "");
}

export class MemoryStorage implements KeyValueStorage {
  private readonly values = new Map<string, string>();

  async get(key: string): Promise<string | null> {
    return this.values.get(key) ?? null;
  }

  async set(key: string, value: string): Promise<void> {
    this.values.set(key, value);
  }

  async remove(key: string): Promise<void> {
    this.values.delete(key);
  }
}

/** The slice of chrome.storage.local the settings need. */
export interface ChromeStorageArea {
  get(keys: string[]): Promise<Record<string, unknown>>;
  set(items: Record<string, unknown>): Promise<void>;
  remove(keys: string[]): Promise<void>;
}

/** Wraps extension storage when running as a content script. */
export class ExtensionStorage implements KeyValueStorage {
  constructor(private readonly area: ChromeStorageArea) {}

  async get(key: string): Promise<string | null> {
    const items = await this.area.get([key]);
    const value = items[key];
    return typeof value === "string" ? value : null;
  }

  async set(key: string, value: string): Promise<void> {
    await this.area.set({ [key]: value });
  }

  async remove(key: string): Promise<void> {
    await this.area.remove([key]);
  }
}

/** Wraps window.localStorage for the demo page. */
export class LocalStorage implements KeyValueStorage {
  constructor(private readonly backing: Storage) {}

  async get(key: string): Promise<string | null> {
    return this.backing.getItem(key);
  }

  async set(key: string, value: string): Promise<void> {
    this.backing.setItem(key, value);
  }

  async remove(key: string): Promise<void> {
    this.backing.removeItem(key);
  }
}

export class SettingsStore {
  constructor(private readonly storage: KeyValueStorage) {}

  async load(): Promise<Settings> {
    const raw = await this.storage.get(STORAGE_KEY);
    if (raw === null) return { ...DEFAULT_SETTINGS };
    try {
      const parsed = JSON.parse(raw) as Partial<Settings>;
      return {
        serverUrl:
          typeof parsed.serverUrl === "string"
            ? parsed.serverUrl
            : DEFAULT_SETTINGS.serverUrl,
        mode:
          parsed.mode === "few_shot" || parsed.mode === "zero_shot"
            ? parsed.mode
            : DEFAULT_SETTINGS.mode,
      };
    } catch {
      return { ...DEFAULT_SETTINGS };
    }
  }

  async save(settings: Settings): Promise<Settings> {
    const normalized: Settings = {
      serverUrl: validateServerUrl(settings.serverUrl),
      mode: settings.mode,
    };
    await this.storage.set(STORAGE_KEY, JSON.stringify(normalized));
    return normalized;
  }

  async reset(): Promise<Settings> {
    await this.storage.remove(STORAGE_KEY);
    return { ...DEFAULT_SETTINGS };
  }
}
