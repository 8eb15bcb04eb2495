import { describe, expect, it } from "vitest";

import { ApiError, ConsoleApi } from "../dist/console/api.js";
import { FixtureServer } from "./fixture-server.js";

describe("ConsoleApi", () => {
  it("sends the bearer token on every request", async () => {
    const fixture = new FixtureServer();
    fixture.token = "sekrit";
    fixture.ingestConfirmed();
    const api = new ConsoleApi({ token: "sekrit", fetchFn: fixture.fetchFn });
    const page = await api.listAlerts();
    expect(page.total).toBe(1);
  });

  it("maps an auth failure to ApiError 401 with the server detail", async () => {
    const fixture = new FixtureServer();
    fixture.token = "sekrit";
    const api = new ConsoleApi({ token: "wrong", fetchFn: fixture.fetchFn });
    const failure = await api.listAlerts().catch((err: unknown) => err);
    expect(failure).toBeInstanceOf(ApiError);
    expect((failure as ApiError).status).toBe(401);
    expect((failure as ApiError).message).toBe("missing or bad bearer token");
  });

  it("passes filters and paging through as query parameters", async () => {
    const fixture = new FixtureServer();
    fixture.ingestConfirmed();
    fixture.ingestSuppressed();
    fixture.ingestConfirmed({ device_id: "cam02" });
    const api = new ConsoleApi({ fetchFn: fixture.fetchFn });

    const suppressed = await api.listAlerts({ disposition: "suppressed" });
    expect(suppressed.total).toBe(1);
    expect(suppressed.alerts[0]?.disposition).toBe("suppressed");

    const cam02 = await api.listAlerts({ device: "cam02" });
    expect(cam02.alerts.map((a) => a.device_id)).toEqual(["cam02"]);

    await api.listAlerts({}, 2, 10);
    const last = fixture.requests.at(-1) ?? "";
    expect(last).toContain("page=2");
    expect(last).toContain("page_size=10");
  });

  it("lists newest alerts first", async () => {
    const fixture = new FixtureServer();
    const first = fixture.ingestConfirmed();
    const second = fixture.ingestConfirmed();
    const api = new ConsoleApi({ fetchFn: fixture.fetchFn });
    const page = await api.listAlerts();
    expect(page.alerts.map((a) => a.report_id)).toEqual([second.report_id, first.report_id]);
  });

  it("raises ApiError 404 for an unknown alert", async () => {
    const fixture = new FixtureServer();
    const api = new ConsoleApi({ fetchFn: fixture.fetchFn });
    const failure = await api.getAlert("r0000000000000000").catch((err: unknown) => err);
    expect(failure).toBeInstanceOf(ApiError);
    expect((failure as ApiError).status).toBe(404);
  });

  it("review returns the updated alert", async () => {
    const fixture = new FixtureServer();
    const alert = fixture.ingestConfirmed();
    const api = new ConsoleApi({ fetchFn: fixture.fetchFn });
    const updated = await api.review(alert.report_id, "acknowledged", "op-7");
    expect(updated.review).toBe("acknowledged");
    expect(updated.reviewer).toBe("op-7");
    expect(updated.reviewed_at_ms).not.toBeNull();
    expect(fixture.alerts.get(alert.report_id)?.review).toBe("acknowledged");
  });

  it("lists devices with liveness flags", async () => {
    const fixture = new FixtureServer();
    fixture.ingestConfirmed();
    fixture.deviceRows.set("cam-stale", {
      name: "cam-stale",
      last_seen_ms: fixture.now - 600_000,
      reports: 4,
    });
    const api = new ConsoleApi({ fetchFn: fixture.fetchFn });
    const devices = await api.listDevices();
    const byId = new Map(devices.map((d) => [d.device_id, d]));
    expect(byId.get("cam01")?.online).toBe(true);
    expect(byId.get("cam-stale")?.online).toBe(false);
  });

  it("propagates transport failures unchanged", async () => {
    const fixture = new FixtureServer();
    fixture.offline = true;
    const api = new ConsoleApi({ fetchFn: fixture.fetchFn });
    const failure = await api.listAlerts().catch((err: unknown) => err);
    expect(failure).toBeInstanceOf(TypeError);
  });
});
