// Form-state invariants: toggles, override exclusivity, shortcuts.

import { readFileSync } from "node:fs";
import { join } from "node:path";
import { beforeEach, describe, expect, it } from "vitest";

import { FormState } from "../src/form.js";
import type { CriteriaSchema } from "../src/types.js";

// the real catalog the service ships, so codes in tests stay honest
const schema: CriteriaSchema = JSON.parse(
  readFileSync(
    join(__dirname, "../../src/pgdetect/data/criteria_v1.json"),
    "utf-8",
  ),
);

describe("form state", () => {
  let form: FormState;

  beforeEach(() => {
    form = new FormState(schema);
    form.loadItem({ id: "p1", text: "ein beitrag" });
  });

  it("starts empty and non-target", () => {
    expect(form.checked.size).toBe(0);
    expect(form.flags.size).toBe(0);
    expect(form.override).toBeNull();
    expect(form.preview()).toBe("non_target");
    expect(form.canSubmit()).toBe(true);
  });

  it("one criterion previews target", () => {
    form.toggleCriterion("pg_chasing_losses");
    expect(form.preview()).toBe("target");
    form.toggleCriterion("pg_chasing_losses");
    expect(form.preview()).toBe("non_target");
  });

  it("flag-only previews target", () => {
    form.toggleFlag("self_identified_addicted");
    expect(form.preview()).toBe("target");
  });

  it("override wins in the preview and disables criteria", () => {
    form.setOverride("inconclusive");
    expect(form.preview()).toBe("inconclusive");
    expect(form.toggleCriterion("pg_chasing_losses")).toBe(false);
    expect(form.checked.size).toBe(0);
    expect(form.canSubmit()).toBe(true);
  });

  it("override with earlier checks is inconsistent until cleared", () => {
    form.toggleCriterion("pg_chasing_losses");
    form.setOverride("excluded_non_user_content");
    expect(form.isConsistent()).toBe(false);
    expect(form.canSubmit()).toBe(false);
    form.setOverride("excluded_non_user_content"); // toggle off
    expect(form.override).toBeNull();
    expect(form.canSubmit()).toBe(true);
  });

  it("unknown codes are rejected", () => {
    expect(form.toggleCriterion("X99")).toBe(false);
    expect(form.toggleFlag("X99")).toBe(false);
  });

  it("payload carries exactly the record fields", () => {
    form.toggleCriterion("pg_chasing_losses");
    form.toggleFlag("seeking_or_in_treatment");
    const payload = form.payload();
    expect(payload).toEqual({
      post_id: "p1",
      checked_criteria: ["pg_chasing_losses"],
      flags: ["seeking_or_in_treatment"],
      manual_label_override: null,
      override_reason: null,
    });
  });

  it("loadItem resets everything", () => {
    form.toggleCriterion("pg_chasing_losses");
    form.setOverride("inconclusive");
    form.loadItem({ id: "p2", text: "der nächste" });
    expect(form.checked.size).toBe(0);
    expect(form.override).toBeNull();
    expect(form.status).toBe("ready");
    form.loadItem(null);
    expect(form.status).toBe("exhausted");
  });

  it("assigns a distinct shortcut to every criterion and flag", () => {
    const shortcuts = form.shortcuts();
    const codes = new Set(
      [...shortcuts.values()].filter((a) => a.code).map((a) => a.code),
    );
    const expected = form.criterionCodes().length + form.flagCodes().length + 2;
    expect(codes.size).toBe(expected); // 14 criteria + 2 flags + 2 overrides
    expect(shortcuts.get("i")).toEqual({ kind: "override", code: "inconclusive" });
    expect(shortcuts.get("Enter")).toEqual({ kind: "submit" });
  });

  it("keyboard toggles criteria and gates submit", () => {
    const action = form.handleKey("1");
    expect(action?.kind).toBe("criterion");
    expect(form.checked.size).toBe(1);
    expect(form.handleKey("Enter")).toEqual({ kind: "submit" });
    form.handleKey("i");
    expect(form.preview()).toBe("inconclusive");
    expect(form.handleKey("1")).toBeNull(); // disabled under override
    form.status = "submitting";
    expect(form.handleKey("Enter")).toBeNull();
  });
});
