/**
 * The label loop: fetch a candidate, show it, post the choice, advance
 * only once the service acknowledges the write.
 *
 * A failed POST keeps the current item so the annotator can retry; a
 * label is never dropped on a network error. A failed fetch after an
 * acknowledged POST stalls the session instead, because the label is
 * already durable and resubmitting it would be wrong.
 */

import { ApiError, NetworkError } from "./api.js";
import type { Candidate, NextResponse, LabelAck, WireLabel } from "./types.js";

export type SessionState =
  | { kind: "idle" }
  | { kind: "labeling"; candidate: Candidate; remaining: number }
  | { kind: "done"; personal: number }
  | { kind: "stalled" };

export type SubmitResult =
  | { status: "advanced" }
  | { status: "done"; personal: number }
  | { status: "retry"; error: NetworkError }
  | { status: "stalled" };

export interface LabelingClient {
  next(): Promise<NextResponse>;
  submitLabel(candidateId: string, label: WireLabel): Promise<LabelAck>;
}

export class LabelSession {
  private _state: SessionState = { kind: "idle" };
  private _personal = 0;
  private _busy = false;

  constructor(private readonly client: LabelingClient) {}

  get state(): SessionState {
    return this._state;
  }

  /** Labels this annotator has submitted in this session. */
  get personalCount(): number {
    return this._personal;
  }

  get current(): Candidate | null {
    return this._state.kind === "labeling" ? this._state.candidate : null;
  }

  /** Fetch the first candidate. Throws NetworkError and stalls on failure. */
  async start(): Promise<SessionState> {
    return this.fetchNext();
  }

  /** Retry the fetch after a stall; no label is at risk here. */
  async resume(): Promise<SessionState> {
    if (this._state.kind !== "stalled") {
      throw new Error(`resume() called in state ${this._state.kind}`);
    }
    return this.fetchNext();
  }

  private async fetchNext(): Promise<SessionState> {
    let response;
    try {
      response = await this.client.next();
    } catch (error) {
      if (error instanceof NetworkError) {
        this._state = { kind: "stalled" };
      }
      throw error;
    }
    this._state = response.candidate === null
      ? { kind: "done", personal: this._personal }
      : { kind: "labeling", candidate: response.candidate, remaining: response.remaining };
    return this._state;
  }

  /**
   * Post the choice for the current item. Exactly one submission may be
   * in flight; concurrent calls are a programming error.
   */
  async submit(label: WireLabel): Promise<SubmitResult> {
    if (this._state.kind !== "labeling") {
      throw new Error(`submit() called in state ${this._state.kind}`);
    }
    if (this._busy) {
      throw new Error("submit() called while a submission is in flight");
    }
    const candidate = this._state.candidate;
    this._busy = true;
    try {
      try {
        await this.client.submitLabel(candidate.id, label);
      } catch (error) {
        if (error instanceof NetworkError) {
          // the write may not have reached the service: keep the item
          return { status: "retry", error };
        }
        if (error instanceof ApiError) throw error;
        throw error;
      }
      this._personal += 1;
      try {
        const state = await this.fetchNext();
        return state.kind === "done"
          ? { status: "done", personal: this._personal }
          : { status: "advanced" };
      } catch (error) {
        if (error instanceof NetworkError) {
          // label is durable; only the advance failed
          return { status: "stalled" };
        }
        throw error;
      }
    } finally {
      this._busy = false;
    }
  }
}
