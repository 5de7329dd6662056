/** Display formatting. Missing values render as an em-style blank so a dead
 * service visibly blanks every numeric readout. */

export const BLANK = '--';

export function fmtDays(v: number | null | undefined): string {
  return v == null ? BLANK : `${v.toFixed(1)} d`;
}

export function fmtScore(v: number | null | undefined, digits = 3): string {
  return v == null ? BLANK : v.toFixed(digits);
}

export function fmtDelta(v: number | null | undefined): string {
  if (v == null) return BLANK;
  const sign = v > 0 ? '+' : '';
  return `${sign}${v.toFixed(1)} d`;
}

export function fmtWeight(v: number | null | undefined): string {
  return v == null ? BLANK : v.toFixed(4);
}
