import { readFileSync } from 'node:fs';
import { fileURLToPath } from 'node:url';
import { dirname, resolve } from 'node:path';
import { describe, expect, it } from 'vitest';

import { RUBRIC_CRITERIA, RUBRIC_TIERS } from '../src/rubric.js';

// Shared fixture pinned by both this suite and the Python suite; if either
// side edits its constants the fixture comparison breaks there.
const fixturePath = resolve(dirname(fileURLToPath(import.meta.url)), 'fixtures/rubric.json');
const fixture = JSON.parse(readFileSync(fixturePath, 'utf-8')) as {
  criteria: string;
  tiers: [string, string, string];
};

describe('rubric constants', () => {
  it('tiers are byte-identical to the shared fixture', () => {
    expect(RUBRIC_TIERS.length).toBe(3);
    for (let i = 0; i < 3; i += 1) {
      expect(RUBRIC_TIERS[i]).toBe(fixture.tiers[i]);
    }
  });

  it('criteria line is byte-identical to the shared fixture', () => {
    expect(RUBRIC_CRITERIA).toBe(fixture.criteria);
  });

  it('criteria is the tiers joined with single spaces', () => {
    expect(RUBRIC_CRITERIA).toBe(RUBRIC_TIERS.join(' '));
  });

  it('includes the top-tier wording annotators anchor on', () => {
    expect(RUBRIC_TIERS[2]).toContain('3 points: Exceptional translation');
  });
});
