// DOM rendering. The item view is a pure function of
// {item, schema, form state, progress}: no other item fields exist in
// the payload, so nothing about a post's origin can leak into the DOM.

import type { FormState } from "./form.js";
import type { Criterion, Progress } from "./types.js";

const SUBDOMAIN_TITLES: Record<string, string> = {
  pathological_gambling: "Pathological gambling",
  gambling_related_problems: "Gambling-related problems",
  cognitive_distortions: "Cognitive distortions",
};

function esc(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

function criterionRow(c: Criterion, kind: string, active: boolean, disabled: boolean, key?: string): string {
  return `
    <label class="criterion${disabled ? " disabled" : ""}">
      <input type="checkbox" data-kind="${kind}" data-code="${esc(c.code)}"
             ${active ? "checked" : ""} ${disabled ? "disabled" : ""}>
      <span class="key">${key ? esc(key) : ""}</span>
      <span>${esc(c.description)}</span>
    </label>`;
}

export function render(root: HTMLElement, state: FormState, progress: Progress | null): void {
  if (state.status === "loading") {
    root.innerHTML = `<main class="stage"><p class="status">Loading…</p></main>`;
    return;
  }
  if (state.status === "exhausted") {
    const done = progress ? `${progress.annotated} of ${progress.total} annotated` : "";
    root.innerHTML = `
      <main class="stage">
        <h1>Queue exhausted</h1>
        <p class="status">All items are annotated. ${esc(done)}</p>
      </main>`;
    return;
  }
  const item = state.item;
  if (item === null) {
    root.innerHTML = `<main class="stage"><p class="status">No item.</p></main>`;
    return;
  }
  const shortcuts = state.shortcuts();
  const keyFor = (code: string) => {
    for (const [key, action] of shortcuts) {
      if (action.code === code) return key;
    }
    return undefined;
  };
  const overrideOn = state.override !== null;
  const groups = Object.entries(state.schema.subdomains)
    .map(([name, criteria]) => {
      const rows = criteria
        .map((c) => criterionRow(c, "criterion", state.checked.has(c.code), overrideOn, keyFor(c.code)))
        .join("");
      return `<section class="group"><h2>${esc(SUBDOMAIN_TITLES[name] ?? name)}</h2>${rows}</section>`;
    })
    .join("");
  const flags = state.schema.flags
    .map((f) => criterionRow(f, "flag", state.flags.has(f.code), overrideOn, keyFor(f.code)))
    .join("");
  const progressBar = progress
    ? `<div class="progress" role="progressbar" aria-valuenow="${progress.annotated}"
            aria-valuemax="${progress.total}">
         <div class="bar" style="width:${progress.total ? (100 * progress.annotated) / progress.total : 0}%"></div>
         <span>${progress.annotated}/${progress.total} (${progress.inconclusive_so_far} inconclusive)</span>
       </div>`
    : "";
  const preview = state.preview();
  const consistent = state.isConsistent();
  root.innerHTML = `
    <main class="stage">
      ${progressBar}
      <article class="post">
        <header class="post-id">${esc(item.id)}</header>
        <p class="post-text">${esc(item.text)}</p>
      </article>
      <form class="annotation" onsubmit="return false">
        ${groups}
        <section class="group"><h2>Standalone flags</h2>${flags}</section>
        <section class="group overrides">
          <h2>Override</h2>
          <label class="criterion">
            <input type="radio" name="override" data-kind="override" data-code="inconclusive"
                   ${state.override === "inconclusive" ? "checked" : ""}>
            <span class="key">i</span><span>Inconclusive (too vague to classify)</span>
          </label>
          <label class="criterion">
            <input type="radio" name="override" data-kind="override" data-code="excluded_non_user_content"
                   ${state.override === "excluded_non_user_content" ? "checked" : ""}>
            <span class="key">x</span><span>Excluded (not regular user content)</span>
          </label>
        </section>
        <footer class="actions">
          <span class="preview preview-${esc(preview)}">Preview: ${esc(preview)}</span>
          ${consistent ? "" : `<span class="warn">Clear criteria or the override before submitting.</span>`}
          <button type="button" id="submit" ${state.canSubmit() ? "" : "disabled"}>
            Submit (Enter)
          </button>
          ${state.errorDetail ? `<span class="error">${esc(state.errorDetail)}</span>` : ""}
        </footer>
      </form>
    </main>`;
}
