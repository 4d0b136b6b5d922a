// String-based rendering: views build HTML and the shell swaps innerHTML.
// Every piece of server or user text must pass through esc(), so stored
// post text reaches the page verbatim but inert.

const REPLACEMENTS: Record<string, string> = {
  "&": "&amp;",
  "<": "&lt;",
  ">": "&gt;",
  '"': "&quot;",
  "'": "&#39;",
};

export function esc(text: string): string {
  return text.replace(/[&<>"']/g, (ch) => REPLACEMENTS[ch]);
}

/** Inverse of esc() over its own output; used by tests to prove the
 * rendered text decodes back to the stored original. */
export function unesc(html: string): string {
  return html
    .replace(/&lt;/g, "<")
    .replace(/&gt;/g, ">")
    .replace(/&quot;/g, '"')
    .replace(/&#39;/g, "'")
    .replace(/&amp;/g, "&");
}

export function pct(value: number): string {
  return `${value.toFixed(1)}%`;
}
