/**
 * Agreement dashboard: counts, per-item label histograms, and the
 * running Fleiss' kappa. Every number shown comes from the service;
 * the client aggregates nothing on its own.
 */

import { NetworkError } from "./api.js";
import type {
  AgreementResponse,
  ExportResponse,
  ProgressResponse,
} from "./types.js";

export interface DashboardData {
  progress: ProgressResponse;
  agreement: AgreementResponse;
  matrix: ExportResponse["matrix"];
}

export interface DashboardSource {
  progress(): Promise<ProgressResponse>;
  agreement(): Promise<AgreementResponse>;
  exportCorpus(): Promise<ExportResponse>;
}

const EMPTY_DATA: DashboardData = {
  progress: {
    candidates: 0,
    labels: 0,
    events: 0,
    per_annotator: {},
    accepted: 0,
    rejected: 0,
    pending: 0,
  },
  agreement: { kappa: null, items: 0, raters: 0 },
  matrix: { categories: [], rows: [] },
};

export function formatKappa(agreement: AgreementResponse): string {
  if (agreement.kappa === null) {
    return "κ pending (no fully annotated items yet)";
  }
  const noun = agreement.items === 1 ? "item" : "items";
  return `κ = ${agreement.kappa.toFixed(3)} over ${agreement.items} ${noun}`
    + ` (${agreement.raters} raters)`;
}

function counterCard(label: string, value: number): string {
  return `<div class="stat"><div class="stat-value">${value}</div>`
    + `<div class="stat-label">${label}</div></div>`;
}

function histogramRow(row: number[], categories: string[]): string {
  const total = row.reduce((sum, count) => sum + count, 0) || 1;
  const bars = row
    .map((count, index) => {
      const width = Math.round((count / total) * 100);
      const name = categories[index] ?? `#${index}`;
      return `<span class="bar bar-${index}" style="width:${width}%" `
        + `title="${name}: ${count}">${count > 0 ? count : ""}</span>`;
    })
    .join("");
  return `<div class="histogram">${bars}</div>`;
}

/** Full dashboard body; `stale` adds the unreachable-service banner. */
export function renderDashboardHtml(data: DashboardData | null, stale: boolean): string {
  const shown = data ?? EMPTY_DATA;
  const pieces: string[] = [];
  if (stale) {
    pieces.push(
      '<div class="banner stale">Service unreachable — showing last known data</div>',
    );
  }
  pieces.push('<div class="stats">');
  pieces.push(counterCard("accepted", shown.progress.accepted));
  pieces.push(counterCard("rejected", shown.progress.rejected));
  pieces.push(counterCard("pending", shown.progress.pending));
  pieces.push(counterCard("labels", shown.progress.labels));
  pieces.push("</div>");
  pieces.push(`<p class="kappa">${formatKappa(shown.agreement)}</p>`);
  if (shown.matrix.rows.length > 0) {
    pieces.push('<h3>Label histograms (fully annotated items)</h3>');
    pieces.push(
      `<p class="legend">${shown.matrix.categories
        .map((name, index) => `<span class="bar bar-${index}">${name}</span>`)
        .join(" ")}</p>`,
    );
    for (const row of shown.matrix.rows) {
      pieces.push(histogramRow(row, shown.matrix.categories));
    }
  }
  return pieces.join("\n");
}

export class Dashboard {
  private last: DashboardData | null = null;
  private stale = false;

  constructor(private readonly source: DashboardSource) {}

  get data(): DashboardData | null {
    return this.last;
  }

  get isStale(): boolean {
    return this.stale;
  }

  /**
   * Fetch fresh numbers. On network failure the previous data is kept
   * and rendered behind a stale banner rather than blanked out.
   */
  async refresh(): Promise<string> {
    try {
      const [progress, agreement, exported] = await Promise.all([
        this.source.progress(),
        this.source.agreement(),
        this.source.exportCorpus(),
      ]);
      this.last = { progress, agreement, matrix: exported.matrix };
      this.stale = false;
    } catch (error) {
      if (!(error instanceof NetworkError)) throw error;
      this.stale = true;
    }
    return renderDashboardHtml(this.last, this.stale);
  }
}
