// Form state for one queue item: criteria checks, flags, override,
// and the consistency rule that gates submission (an override excludes
// criteria checks; the server would accept either, the form is
// stricter so annotators cannot send ambiguous records).

import { previewLabel } from "./preview.js";
import type {
  CriteriaSchema,
  Override,
  PreviewLabel,
  QueueItem,
  RecordPayload,
} from "./types.js";

export type FormStatus =
  | "loading"
  | "ready"
  | "submitting"
  | "exhausted"
  | "error";

// keys handed to criteria and flags in schema order; i / x / Enter are
// reserved for the overrides and submission
const SHORTCUT_POOL = "1234567890qwertzuoasdfgh".split("");

export interface KeyAction {
  kind: "criterion" | "flag" | "override" | "submit";
  code?: string;
}

export class FormState {
  item: QueueItem | null = null;
  checked = new Set<string>();
  flags = new Set<string>();
  override: Override | null = null;
  overrideReason = "";
  status: FormStatus = "loading";
  errorDetail = "";

  constructor(public schema: CriteriaSchema) {}

  criterionCodes(): string[] {
    return Object.values(this.schema.subdomains).flatMap((group) =>
      group.map((c) => c.code),
    );
  }

  flagCodes(): string[] {
    return this.schema.flags.map((f) => f.code);
  }

  shortcuts(): Map<string, KeyAction> {
    const map = new Map<string, KeyAction>();
    const codes = [...this.criterionCodes(), ...this.flagCodes()];
    const nCriteria = this.criterionCodes().length;
    codes.forEach((code, i) => {
      const key = SHORTCUT_POOL[i];
      if (key === undefined) return;
      map.set(key, { kind: i < nCriteria ? "criterion" : "flag", code });
    });
    map.set("i", { kind: "override", code: "inconclusive" });
    map.set("x", { kind: "override", code: "excluded_non_user_content" });
    map.set("Enter", { kind: "submit" });
    return map;
  }

  loadItem(item: QueueItem | null): void {
    this.item = item;
    this.checked.clear();
    this.flags.clear();
    this.override = null;
    this.overrideReason = "";
    this.errorDetail = "";
    this.status = item === null ? "exhausted" : "ready";
  }

  toggleCriterion(code: string): boolean {
    if (this.override !== null || !this.criterionCodes().includes(code)) {
      return false; // controls are disabled under an override
    }
    this.checked.has(code) ? this.checked.delete(code) : this.checked.add(code);
    return true;
  }

  toggleFlag(code: string): boolean {
    if (this.override !== null || !this.flagCodes().includes(code)) {
      return false;
    }
    this.flags.has(code) ? this.flags.delete(code) : this.flags.add(code);
    return true;
  }

  setOverride(value: Override | null): void {
    this.override = this.override === value ? null : value;
  }

  isConsistent(): boolean {
    if (this.override === null) return true;
    return this.checked.size === 0 && this.flags.size === 0;
  }

  canSubmit(): boolean {
    return this.item !== null && this.status === "ready" && this.isConsistent();
  }

  preview(): PreviewLabel {
    return previewLabel(this.checked, this.flags, this.override);
  }

  payload(): RecordPayload {
    if (this.item === null) {
      throw new Error("no item loaded");
    }
    return {
      post_id: this.item.id,
      checked_criteria: [...this.checked].sort(),
      flags: [...this.flags].sort(),
      manual_label_override: this.override,
      override_reason: this.override ? this.overrideReason || null : null,
    };
  }

  handleKey(key: string): KeyAction | null {
    const action = this.shortcuts().get(key);
    if (!action || this.status !== "ready") return null;
    if (action.kind === "criterion") {
      return this.toggleCriterion(action.code!) ? action : null;
    }
    if (action.kind === "flag") {
      return this.toggleFlag(action.code!) ? action : null;
    }
    if (action.kind === "override") {
      this.setOverride(action.code as Override);
      return action;
    }
    return this.canSubmit() ? action : null;
  }
}
