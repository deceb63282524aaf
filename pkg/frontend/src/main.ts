/**
 * DOM wiring for the annotation page. All behavior lives in the small
 * modules this file composes; nothing here is more than glue.
 */

import { ApiClient, ApiError } from "./api.js";
import { Dashboard } from "./dashboard.js";
import { bindAnnotationKeys } from "./keyboard.js";
import { LabelSession } from "./session.js";
import {
  assignHighlightColors,
  choiceCaptions,
  renderCandidateHtml,
  renderCompletion,
  renderProgress,
} from "./view.js";
import type { WireLabel } from "./types.js";
import { WIRE_LABELS } from "./types.js";

const DASHBOARD_REFRESH_MS = 5000;

function must(id: string): HTMLElement {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id} in page`);
  return node;
}

function readConfig(): { serviceUrl: string; annotator: string } {
  const params = new URLSearchParams(window.location.search);
  const serviceUrl =
    params.get("service") ?? window.localStorage.getItem("service") ?? window.location.origin;
  let annotator = params.get("annotator") ?? window.localStorage.getItem("annotator") ?? "";
  while (!annotator) {
    annotator = window.prompt("Annotator token:")?.trim() ?? "";
  }
  window.localStorage.setItem("service", serviceUrl);
  window.localStorage.setItem("annotator", annotator);
  return { serviceUrl, annotator };
}

function start(): void {
  const config = readConfig();
  const client = new ApiClient(config);
  const session = new LabelSession(client);
  const dashboard = new Dashboard(client);

  const sentence = must("sentence");
  const progress = must("progress");
  const notice = must("notice");
  const dashboardPane = must("dashboard");
  const buttons = new Map<WireLabel, HTMLButtonElement>();
  for (const label of WIRE_LABELS) {
    buttons.set(label, must(`choice-${label}`) as HTMLButtonElement);
  }

  const setButtonsEnabled = (enabled: boolean) => {
    for (const button of buttons.values()) button.disabled = !enabled;
  };

  const render = () => {
    const state = session.state;
    notice.textContent = "";
    if (state.kind === "labeling") {
      sentence.innerHTML = renderCandidateHtml(state.candidate, assignHighlightColors());
      progress.textContent = renderProgress(session.personalCount, state.remaining);
      const captions = choiceCaptions(state.candidate);
      for (const [label, button] of buttons) {
        button.textContent = captions[label] ?? label;
      }
      setButtonsEnabled(true);
    } else if (state.kind === "done") {
      sentence.innerHTML = renderCompletion(state.personal);
      progress.textContent = "";
      setButtonsEnabled(false);
    } else if (state.kind === "stalled") {
      notice.textContent = "Connection lost; retrying…";
      setButtonsEnabled(false);
      window.setTimeout(() => void resume(), 1500);
    }
  };

  const resume = async () => {
    try {
      await session.resume();
    } catch {
      // still unreachable; render() schedules another retry
    }
    render();
  };

  const submit = async (label: WireLabel) => {
    if (session.state.kind !== "labeling") return;
    setButtonsEnabled(false);
    try {
      const result = await session.submit(label);
      if (result.status === "retry") {
        notice.textContent = "Could not reach the service; your label was not saved. Try again.";
        setButtonsEnabled(true);
        return;
      }
      render();
    } catch (error) {
      if (error instanceof ApiError) {
        notice.textContent = error.message;
        setButtonsEnabled(true);
        return;
      }
      throw error;
    }
  };

  for (const [label, button] of buttons) {
    button.addEventListener("click", () => void submit(label));
  }
  bindAnnotationKeys(window, (label) => void submit(label));

  const refreshDashboard = async () => {
    dashboardPane.innerHTML = await dashboard.refresh();
  };
  window.setInterval(() => void refreshDashboard(), DASHBOARD_REFRESH_MS);

  void (async () => {
    try {
      await session.start();
    } catch {
      // stalled; render() schedules the retry
    }
    render();
    await refreshDashboard();
  })();
}

start();
