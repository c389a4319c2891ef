/** Render a parse-rejection caret under the offending character.
 *
 * The server reports rejections as a character offset into the submitted
 * rule text. The editor shows the text in a monospace block with a caret
 * line directly beneath, so the caret column must equal the offset exactly
 * (clamped to the text length, since "unexpected end of input" style errors
 * point one past the last character).
 */

export interface CaretView {
  text: string;
  caretLine: string;
  column: number;
}

/** Clamp an offset into [0, text.length]. */
export function clampOffset(text: string, offset: number): number {
  if (Number.isNaN(offset)) return 0;
  const n = Math.trunc(offset);
  if (n < 0) return 0;
  if (n > text.length) return text.length;
  return n;
}

/**
 * Build the caret line for `offset` within `text`.
 *
 * Tabs before the caret are preserved in the padding so the caret stays
 * aligned in a monospace rendering even if the text contains them.
 */
export function caretView(text: string, offset: number): CaretView {
  const column = clampOffset(text, offset);
  let pad = "";
  for (let i = 0; i < column; i += 1) {
    pad += text[i] === "\t" ? "\t" : " ";
  }
  return { text, caretLine: `${pad}^`, column };
}

/** One-line human summary, e.g. `offset 34: unclosed '[' constraint`. */
export function describeRejection(message: string, offset: number): string {
  return `offset ${offset}: ${message}`;
}
