/** Shared test fixtures: wire-shaped candidates and canned responses. */

import type { Candidate, NextResponse } from "../src/types.js";

export function makeCandidate(id: string, overrides: Partial<Candidate> = {}): Candidate {
  return {
    id,
    text: "Alex phoned Sam, because he was late.",
    tokens: ["Alex", "phoned", "Sam", ",", "because", "he", "was", "late", "."],
    c1: { start: 0, end: 1, surface: "Alex" },
    c2: { start: 2, end: 3, surface: "Sam" },
    pronoun: { start: 5, end: 6, surface: "he" },
    connective: { start: 3, end: 5, surface: ", because" },
    label: null,
    pronoun_gender: "m",
    source: "ui-fixture",
    derived_from: null,
    switched: false,
    ...overrides,
  };
}

export function nextOf(candidate: Candidate | null, remaining: number): NextResponse {
  return { candidate, remaining };
}

/** Minimal Response stand-in for the fetch-based client tests. */
export function jsonResponse(body: unknown, status = 200): Response {
  return {
    ok: status >= 200 && status < 300,
    status,
    statusText: status === 200 ? "OK" : `HTTP ${status}`,
    json: async () => body,
  } as unknown as Response;
}
