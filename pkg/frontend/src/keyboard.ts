/**
 * Keyboard shortcuts for labeling: 1 / 2 / n / u map to the four labels.
 */

import type { WireLabel } from "./types.js";

const KEY_TO_LABEL: Record<string, WireLabel> = {
  "1": "1",
  "2": "2",
  n: "neither",
  u: "unclear",
};

/** Label for a key press, or null when the key is not a shortcut. */
export function keyToLabel(key: string): WireLabel | null {
  return KEY_TO_LABEL[key.toLowerCase()] ?? null;
}

/** True when the event target is a field the user may be typing into. */
export function isEditableTarget(target: unknown): boolean {
  if (!target || typeof target !== "object") return false;
  const node = target as { tagName?: string; isContentEditable?: boolean };
  if (node.isContentEditable) return true;
  const tag = typeof node.tagName === "string" ? node.tagName.toUpperCase() : "";
  return tag === "INPUT" || tag === "TEXTAREA" || tag === "SELECT";
}

export interface KeyEventLike {
  key: string;
  target: unknown;
  preventDefault(): void;
}

/**
 * Build a keydown handler that forwards shortcut presses to onLabel.
 * Returned separately from the binding so it can be tested without a DOM.
 */
export function makeKeyHandler(
  onLabel: (label: WireLabel) => void,
): (event: KeyEventLike) => void {
  return (event) => {
    if (isEditableTarget(event.target)) return;
    const label = keyToLabel(event.key);
    if (label === null) return;
    event.preventDefault();
    onLabel(label);
  };
}

/** Attach the shortcuts to a window-like target; returns an unbind. */
export function bindAnnotationKeys(
  target: {
    addEventListener(type: "keydown", handler: (event: KeyboardEvent) => void): void;
    removeEventListener(type: "keydown", handler: (event: KeyboardEvent) => void): void;
  },
  onLabel: (label: WireLabel) => void,
): () => void {
  const handler = makeKeyHandler(onLabel);
  target.addEventListener("keydown", handler);
  return () => target.removeEventListener("keydown", handler);
}
