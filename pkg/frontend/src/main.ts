// Bootstraps the annotation workstation against the service API.

import { Api, ApiRequestError } from "./api.js";
import { FormState } from "./form.js";
import { render } from "./view.js";
import type { Override, Progress } from "./types.js";

export class Workstation {
  form: FormState | null = null;
  progress: Progress | null = null;

  constructor(
    private api: Api,
    private root: HTMLElement,
  ) {}

  async start(): Promise<void> {
    const schema = await this.api.schema();
    this.form = new FormState(schema);
    await this.refreshProgress();
    await this.loadNext();
    this.root.addEventListener("change", (ev) => this.onChange(ev));
    this.root.addEventListener("click", (ev) => {
      if ((ev.target as HTMLElement).id === "submit") void this.submit();
    });
    document.addEventListener("keydown", (ev) => this.onKey(ev));
  }

  private draw(): void {
    if (this.form) render(this.root, this.form, this.progress);
  }

  async refreshProgress(): Promise<void> {
    try {
      this.progress = await this.api.progress();
    } catch {
      this.progress = null; // progress is cosmetic: never block the form
    }
  }

  async loadNext(): Promise<void> {
    if (!this.form) return;
    this.form.status = "loading";
    this.draw();
    try {
      const next = await this.api.nextItem();
      this.form.loadItem(next.item);
    } catch (err) {
      this.form.status = "error";
      this.form.errorDetail = err instanceof Error ? err.message : String(err);
    }
    this.draw();
  }

  private onChange(ev: Event): void {
    const input = ev.target as HTMLInputElement;
    const { kind, code } = input.dataset;
    if (!this.form || !kind || !code) return;
    if (kind === "criterion") this.form.toggleCriterion(code);
    else if (kind === "flag") this.form.toggleFlag(code);
    else if (kind === "override") this.form.setOverride(code as Override);
    this.draw();
  }

  private onKey(ev: KeyboardEvent): void {
    if (!this.form) return;
    const target = ev.target as HTMLElement;
    if (target.tagName === "INPUT" && (target as HTMLInputElement).type === "text") {
      return; // let free-text fields keep their keys
    }
    const action = this.form.handleKey(ev.key);
    if (!action) return;
    ev.preventDefault();
    if (action.kind === "submit") void this.submit();
    else this.draw();
  }

  async submit(): Promise<void> {
    if (!this.form || !this.form.canSubmit()) return;
    this.form.status = "submitting";
    this.draw();
    try {
      await this.api.submit(this.form.payload());
      await this.refreshProgress();
      await this.loadNext();
    } catch (err) {
      if (err instanceof ApiRequestError && err.code === "conflict") {
        // someone already took this one: re-sync with the server
        await this.refreshProgress();
        await this.loadNext();
        return;
      }
      this.form.status = "ready"; // keep the annotator's work intact
      this.form.errorDetail = err instanceof Error ? err.message : String(err);
      this.draw();
    }
  }
}

function tokenFromLocation(): string {
  const params = new URLSearchParams(window.location.search);
  const fromUrl = params.get("token");
  if (fromUrl) {
    sessionStorage.setItem("annotator-token", fromUrl);
    return fromUrl;
  }
  const stored = sessionStorage.getItem("annotator-token");
  if (stored) return stored;
  const typed = window.prompt("Annotator token:") ?? "";
  sessionStorage.setItem("annotator-token", typed);
  return typed;
}

if (typeof document !== "undefined" && document.getElementById("app")) {
  const api = new Api(tokenFromLocation());
  void new Workstation(api, document.getElementById("app")!).start();
}
