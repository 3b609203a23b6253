import { describe, expect, it } from "vitest";

import { detectLanguage, parseTagInput, SUPPORTED_LANGUAGES } from "../src/language.js";

describe("detectLanguage", () => {
  it("detects a lone java tag", () => {
    expect(detectLanguage(["java", "sorting"])).toEqual({
      kind: "detected",
      language: "java",
    });
  });

  it("detects a lone python tag", () => {
    expect(detectLanguage(["pandas", "python"])).toEqual({
      kind: "detected",
      language: "python",
    });
  });

  it("treats versioned tags as the base language", () => {
    expect(detectLanguage(["python-3.x"])).toEqual({
      kind: "detected",
      language: "python",
    });
    expect(detectLanguage(["java-8", "collections"])).toEqual({
      kind: "detected",
      language: "java",
    });
  });

  it("does not confuse javascript with java", () => {
    expect(detectLanguage(["javascript", "node.js"])).toEqual({
      kind: "none",
      options: [...SUPPORTED_LANGUAGES],
    });
  });

  it("reports both tagged languages as ambiguous", () => {
    const result = detectLanguage(["java", "python", "jython"]);
    expect(result.kind).toBe("ambiguous");
    if (result.kind === "ambiguous") {
      expect(result.options).toEqual(["java", "python"]);
    }
  });

  it("offers every supported language when nothing matches", () => {
    const result = detectLanguage(["c#", "linq"]);
    expect(result).toEqual({ kind: "none", options: ["java", "python"] });
  });

  it("is case insensitive", () => {
    expect(detectLanguage(["Java"])).toEqual({ kind: "detected", language: "java" });
  });
});

describe("parseTagInput", () => {
  it("splits on whitespace", () => {
    expect(parseTagInput("java sorting streams")).toEqual(["java", "sorting", "streams"]);
  });

  it("accepts commas and mixed separators", () => {
    expect(parseTagInput("python, pandas,  dataframe")).toEqual([
      "python",
      "pandas",
      "dataframe",
    ]);
  });

  it("returns nothing for blank input", () => {
    expect(parseTagInput("   ")).toEqual([]);
    expect(parseTagInput("")).toEqual([]);
  });
});
