/**
 * Pure rendering for the labeling view: candidate text with both
 * candidate mentions highlighted and the pronoun emphasized.
 *
 * All functions here return HTML strings; DOM wiring lives in main.ts.
 */

import type { Candidate, Span } from "./types.js";

/** Two cosmetic highlight colors; which mention gets which is randomized. */
export const HIGHLIGHT_PALETTE: readonly [string, string] = ["#ffd166", "#8ecae6"];

export interface HighlightColors {
  c1: string;
  c2: string;
}

/**
 * Assign the palette to the two mentions in random order. The shuffle is
 * purely cosmetic: it stops annotators from associating a fixed color
 * with "first candidate" across items.
 */
export function assignHighlightColors(rng: () => number = Math.random): HighlightColors {
  const [a, b] = HIGHLIGHT_PALETTE;
  return rng() < 0.5 ? { c1: a, c2: b } : { c1: b, c2: a };
}

/** Character range of each token inside the original text, in order. */
export function alignTokens(text: string, tokens: string[]): Array<[number, number]> {
  const ranges: Array<[number, number]> = [];
  let cursor = 0;
  for (const token of tokens) {
    const at = text.indexOf(token, cursor);
    if (at < 0) {
      throw new Error(`token ${JSON.stringify(token)} not found in text`);
    }
    ranges.push([at, at + token.length]);
    cursor = at + token.length;
  }
  return ranges;
}

export function escapeHtml(raw: string): string {
  return raw
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

interface Decoration {
  span: Span;
  open: string;
  close: string;
}

/** Candidate text as HTML with marked mentions and an emphasized pronoun. */
export function renderCandidateHtml(
  candidate: Candidate,
  colors: HighlightColors,
): string {
  const ranges = alignTokens(candidate.text, candidate.tokens);
  const decorations: Decoration[] = [
    {
      span: candidate.c1,
      open: `<mark class="cand cand-1" style="background:${colors.c1}">`,
      close: "</mark>",
    },
    {
      span: candidate.c2,
      open: `<mark class="cand cand-2" style="background:${colors.c2}">`,
      close: "</mark>",
    },
    {
      span: candidate.pronoun,
      open: '<em class="pronoun">',
      close: "</em>",
    },
  ].sort((x, y) => x.span.start - y.span.start);

  const pieces: string[] = [];
  let cursor = 0;
  for (const { span, open, close } of decorations) {
    const first = ranges[span.start];
    const last = ranges[span.end - 1];
    if (!first || !last) {
      throw new Error(`span ${span.start}..${span.end} outside token list`);
    }
    pieces.push(escapeHtml(candidate.text.slice(cursor, first[0])));
    pieces.push(open, escapeHtml(candidate.text.slice(first[0], last[1])), close);
    cursor = last[1];
  }
  pieces.push(escapeHtml(candidate.text.slice(cursor)));
  return pieces.join("");
}

/** "You: N labeled · M remaining" progress line under the text. */
export function renderProgress(personal: number, remaining: number): string {
  return `You: ${personal} labeled · ${remaining} remaining`;
}

/** Completion screen shown once the service has nothing left to serve. */
export function renderCompletion(personal: number): string {
  const noun = personal === 1 ? "item" : "items";
  return `<h2>All done</h2><p>You labeled ${personal} ${noun}. Thank you.</p>`;
}

/** Button captions keyed by wire label, using the mention surfaces. */
export function choiceCaptions(candidate: Candidate): Record<string, string> {
  return {
    "1": `${candidate.c1.surface} (1)`,
    "2": `${candidate.c2.surface} (2)`,
    neither: "Neither (n)",
    unclear: "Unclear (u)",
  };
}
