/**
 * Scoring rubric shown to annotators.
 *
 * These strings must stay byte-identical to the rubric constants in the
 * Python evaluation package; tests/fixtures/rubric.json is the shared
 * fixture both test suites pin. Task payloads from the eval server carry
 * the same strings, and the client refuses payloads that disagree.
 */

export const RUBRIC_TIERS: readonly [string, string, string] = [
  '1 point: Ignores, mistranslates, or only translates the literal meaning of the idiom.',
  '2 points: Conveys basic figurative meaning but may lack refinement or have minor imperfections.',
  '3 points: Exceptional translation, accurately conveying figurative meaning, context, and cultural nuances.',
];

export const RUBRIC_CRITERIA = RUBRIC_TIERS.join(' ');
