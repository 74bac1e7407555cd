import * as fs from 'fs';
import * as path from 'path';
import { z } from 'zod';

export class ManifestError extends Error {}

const manifestSchema = z.object({
  imageDir: z.string().min(1),
  images: z.record(z.string().min(1), z.string().min(1)),
  vectorsOut: z.string().min(1),
  tagsOut: z.string().min(1),
  confidenceFloor: z.number().min(0).max(1).default(0.5),
  seed: z.number().int().default(7),
  // optional instances JSONL; when given, every image id must appear in it
  instances: z.string().optional(),
});

export type Manifest = z.infer<typeof manifestSchema>;

export function imagePath(manifest: Manifest, id: string): string {
  return path.join(manifest.imageDir, manifest.images[id]);
}

function instanceIds(jsonlPath: string): Set<string> {
  const ids = new Set<string>();
  const lines = fs.readFileSync(jsonlPath, 'utf-8').split('\n');
  lines.forEach((line, index) => {
    if (!line.trim()) return;
    let obj: unknown;
    try {
      obj = JSON.parse(line);
    } catch {
      throw new ManifestError(`${jsonlPath}: line ${index + 1}: malformed JSON`);
    }
    if (typeof obj !== 'object' || obj === null || !('id' in obj)) {
      throw new ManifestError(`${jsonlPath}: line ${index + 1}: record has no id`);
    }
    ids.add(String((obj as { id: unknown }).id));
  });
  return ids;
}

/** Parse and validate a manifest file.
 *
 * Beyond the schema, every mapped image file must exist, and when an
 * instances file is named, every image id must occur in it.
 */
export function loadManifest(manifestPath: string): Manifest {
  let raw: unknown;
  try {
    raw = JSON.parse(fs.readFileSync(manifestPath, 'utf-8'));
  } catch (err) {
    throw new ManifestError(`${manifestPath}: ${(err as Error).message}`);
  }
  const parsed = manifestSchema.safeParse(raw);
  if (!parsed.success) {
    const first = parsed.error.issues[0];
    throw new ManifestError(
      `${manifestPath}: ${first.path.join('.') || '<root>'}: ${first.message}`,
    );
  }
  const manifest = parsed.data;
  if (Object.keys(manifest.images).length === 0) {
    throw new ManifestError(`${manifestPath}: images map is empty`);
  }
  const missing = Object.entries(manifest.images)
    .filter(([, file]) => !fs.existsSync(path.join(manifest.imageDir, file)))
    .map(([id]) => id);
  if (missing.length > 0) {
    throw new ManifestError(
      `${missing.length} listed image files do not exist (first id: ${missing[0]})`,
    );
  }
  if (manifest.instances) {
    const known = instanceIds(manifest.instances);
    const unknown = Object.keys(manifest.images).filter(id => !known.has(id));
    if (unknown.length > 0) {
      throw new ManifestError(
        `${unknown.length} image ids are not in ${manifest.instances} (first: ${unknown[0]})`,
      );
    }
  }
  return manifest;
}
