// Local duplicate of the server's label-resolution rule, so the form
// can show the label a submission will get before it is sent. Kept in
// lockstep with the backend through shared/resolve_label_vectors.json.

import type { Override, PreviewLabel } from "./types.js";

export function previewLabel(
  checked: ReadonlySet<string> | string[],
  flags: ReadonlySet<string> | string[],
  override: Override | null,
): PreviewLabel {
  if (override !== null) {
    return override;
  }
  const nChecked = Array.isArray(checked) ? checked.length : checked.size;
  const nFlags = Array.isArray(flags) ? flags.length : flags.size;
  return nChecked + nFlags > 0 ? "target" : "non_target";
}
