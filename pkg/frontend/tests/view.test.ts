import { describe, expect, it } from "vitest";

import {
  HIGHLIGHT_PALETTE,
  alignTokens,
  assignHighlightColors,
  choiceCaptions,
  escapeHtml,
  renderCandidateHtml,
  renderCompletion,
  renderProgress,
} from "../src/view.js";
import { makeCandidate } from "./helpers.js";

describe("alignTokens", () => {
  it("recovers character ranges for attached punctuation", () => {
    const text = "Alex phoned Sam, because he was late.";
    const tokens = ["Alex", "phoned", "Sam", ",", "because", "he", "was", "late", "."];
    const ranges = alignTokens(text, tokens);
    expect(ranges).toHaveLength(tokens.length);
    for (const [index, token] of tokens.entries()) {
      const [start, end] = ranges[index]!;
      expect(text.slice(start, end)).toBe(token);
    }
    expect(ranges[3]).toEqual([15, 16]);
  });

  it("matches repeated tokens left to right", () => {
    const ranges = alignTokens("he said he left", ["he", "said", "he", "left"]);
    expect(ranges[0]![0]).toBeLessThan(ranges[2]![0]);
  });

  it("rejects tokens that are not in the text", () => {
    expect(() => alignTokens("one two", ["one", "three"])).toThrow(/not found/);
  });
});

describe("assignHighlightColors", () => {
  it("keeps palette order when the draw is low", () => {
    const colors = assignHighlightColors(() => 0.1);
    expect(colors).toEqual({ c1: HIGHLIGHT_PALETTE[0], c2: HIGHLIGHT_PALETTE[1] });
  });

  it("swaps palette order when the draw is high", () => {
    const colors = assignHighlightColors(() => 0.9);
    expect(colors).toEqual({ c1: HIGHLIGHT_PALETTE[1], c2: HIGHLIGHT_PALETTE[0] });
  });

  it("always hands out both palette colors exactly once", () => {
    for (const draw of [0.0, 0.49, 0.5, 0.99]) {
      const colors = assignHighlightColors(() => draw);
      expect(new Set([colors.c1, colors.c2])).toEqual(new Set(HIGHLIGHT_PALETTE));
    }
  });
});

describe("renderCandidateHtml", () => {
  const colors = { c1: "#aaa", c2: "#bbb" };

  it("marks both mentions and emphasizes the pronoun", () => {
    const html = renderCandidateHtml(makeCandidate("c-1"), colors);
    expect(html).toContain('<mark class="cand cand-1" style="background:#aaa">Alex</mark>');
    expect(html).toContain('<mark class="cand cand-2" style="background:#bbb">Sam</mark>');
    expect(html).toContain('<em class="pronoun">he</em>');
  });

  it("keeps the text between spans verbatim", () => {
    const html = renderCandidateHtml(makeCandidate("c-1"), colors);
    const stripped = html.replace(/<[^>]+>/g, "");
    expect(stripped).toBe("Alex phoned Sam, because he was late.");
  });

  it("covers multi-token mention spans in full", () => {
    const candidate = makeCandidate("c-2", {
      text: "Old Alex phoned Sam, because he was late.",
      tokens: ["Old", "Alex", "phoned", "Sam", ",", "because", "he", "was", "late", "."],
      c1: { start: 0, end: 2, surface: "Old Alex" },
      c2: { start: 3, end: 4, surface: "Sam" },
      pronoun: { start: 6, end: 7, surface: "he" },
      connective: { start: 4, end: 6, surface: ", because" },
    });
    const html = renderCandidateHtml(candidate, colors);
    expect(html).toContain(">Old Alex</mark>");
  });

  it("escapes markup hiding in the sentence", () => {
    const candidate = makeCandidate("c-3", {
      text: "Alex phoned Sam <b> because he was late.",
      tokens: ["Alex", "phoned", "Sam", "<b>", "because", "he", "was", "late", "."],
    });
    const html = renderCandidateHtml(candidate, colors);
    expect(html).toContain("&lt;b&gt;");
    expect(html).not.toContain("<b>");
  });
});

describe("escapeHtml", () => {
  it("neutralizes the four dangerous characters", () => {
    expect(escapeHtml('<a href="x">&</a>')).toBe(
      "&lt;a href=&quot;x&quot;&gt;&amp;&lt;/a&gt;",
    );
  });
});

describe("progress and completion text", () => {
  it("shows personal and remaining counters", () => {
    expect(renderProgress(3, 7)).toBe("You: 3 labeled · 7 remaining");
  });

  it("reports the personal count on the completion screen", () => {
    expect(renderCompletion(6)).toContain("You labeled 6 items");
    expect(renderCompletion(1)).toContain("You labeled 1 item.");
  });
});

describe("choiceCaptions", () => {
  it("names the buttons after the mention surfaces", () => {
    const captions = choiceCaptions(makeCandidate("c-1"));
    expect(captions["1"]).toBe("Alex (1)");
    expect(captions["2"]).toBe("Sam (2)");
    expect(captions["neither"]).toBe("Neither (n)");
    expect(captions["unclear"]).toBe("Unclear (u)");
  });
});
