import { describe, expect, it } from "vitest";

import { ApiError, NetworkError } from "../src/api.js";
import {
  Dashboard,
  type DashboardSource,
  formatKappa,
  renderDashboardHtml,
} from "../src/dashboard.js";
import type {
  AgreementResponse,
  ExportResponse,
  ProgressResponse,
} from "../src/types.js";

const PROGRESS: ProgressResponse = {
  candidates: 3,
  labels: 18,
  events: 18,
  per_annotator: { a1: 3, a2: 3 },
  accepted: 1,
  rejected: 2,
  pending: 0,
};

const AGREEMENT: AgreementResponse = { kappa: 0.372, items: 3, raters: 6 };

const EXPORT: ExportResponse = {
  instances: [],
  matrix: {
    categories: ["1", "2", "neither", "unclear"],
    rows: [
      [5, 1, 0, 0],
      [3, 3, 0, 0],
    ],
  },
  counts: { accepted: 1, rejected: 2, pending: 0 },
};

function workingSource(): DashboardSource {
  return {
    progress: async () => PROGRESS,
    agreement: async () => AGREEMENT,
    exportCorpus: async () => EXPORT,
  };
}

function unreachableSource(): DashboardSource {
  const refuse = async () => {
    throw new NetworkError("ECONNREFUSED");
  };
  return { progress: refuse, agreement: refuse, exportCorpus: refuse };
}

describe("formatKappa", () => {
  it("renders the running value with its item and rater counts", () => {
    expect(formatKappa(AGREEMENT)).toBe("κ = 0.372 over 3 items (6 raters)");
  });

  it("says pending before any item is fully annotated", () => {
    expect(formatKappa({ kappa: null, items: 0, raters: 6 })).toMatch(/pending/);
  });
});

describe("renderDashboardHtml", () => {
  it("shows zeros for an empty store", () => {
    const html = renderDashboardHtml(null, false);
    expect(html).toContain('<div class="stat-value">0</div>');
    expect(html).toMatch(/pending \(no fully annotated items yet\)/);
    expect(html).not.toContain("histogram");
  });

  it("shows counters, kappa and one histogram per finished item", () => {
    const html = renderDashboardHtml(
      { progress: PROGRESS, agreement: AGREEMENT, matrix: EXPORT.matrix },
      false,
    );
    expect(html).toContain("accepted");
    expect(html).toContain("rejected");
    expect(html).toContain("pending");
    expect(html).toContain("κ = 0.372");
    expect(html.match(/class="histogram"/g)).toHaveLength(2);
    expect(html).toContain('title="1: 5"');
    expect(html).toContain('title="2: 3"');
  });

  it("adds the stale banner only when asked", () => {
    const data = { progress: PROGRESS, agreement: AGREEMENT, matrix: EXPORT.matrix };
    expect(renderDashboardHtml(data, true)).toContain("Service unreachable");
    expect(renderDashboardHtml(data, false)).not.toContain("Service unreachable");
  });
});

describe("Dashboard refresh", () => {
  it("collects all three endpoints into one view", async () => {
    const dashboard = new Dashboard(workingSource());
    const html = await dashboard.refresh();
    expect(dashboard.isStale).toBe(false);
    expect(html).toContain("κ = 0.372");
    expect(html).not.toContain("Service unreachable");
  });

  it("keeps the last data behind a banner when the service drops", async () => {
    const source = workingSource();
    let up = true;
    const flaky: DashboardSource = {
      progress: () => (up ? source.progress() : Promise.reject(new NetworkError("down"))),
      agreement: () => (up ? source.agreement() : Promise.reject(new NetworkError("down"))),
      exportCorpus: () => (up ? source.exportCorpus() : Promise.reject(new NetworkError("down"))),
    };
    const dashboard = new Dashboard(flaky);
    await dashboard.refresh();

    up = false;
    const stale = await dashboard.refresh();
    expect(dashboard.isStale).toBe(true);
    expect(stale).toContain("Service unreachable");
    expect(stale).toContain("κ = 0.372");

    up = true;
    const fresh = await dashboard.refresh();
    expect(dashboard.isStale).toBe(false);
    expect(fresh).not.toContain("Service unreachable");
  });

  it("renders the stale banner over zeros when it never reached the service", async () => {
    const dashboard = new Dashboard(unreachableSource());
    const html = await dashboard.refresh();
    expect(html).toContain("Service unreachable");
    expect(html).toContain('<div class="stat-value">0</div>');
  });

  it("propagates genuine service errors instead of masking them", async () => {
    const source: DashboardSource = {
      progress: async () => {
        throw new ApiError(500, "boom");
      },
      agreement: async () => AGREEMENT,
      exportCorpus: async () => EXPORT,
    };
    await expect(new Dashboard(source).refresh()).rejects.toBeInstanceOf(ApiError);
  });
});
