import * as fs from 'fs';
import { FeatureExtractor } from './backbone';
import { ImageDecodeError, loadImage } from './images';
import { Manifest, imagePath } from './manifest';

export interface ExtractionResult {
  written: string[];
  skipped: string[];
}

interface EncodedImage {
  id: string;
  vector: Float32Array;
  detections: { label: string; score: number }[];
}

/** One pass over the manifest's images, strongest-detection-first tags.
 *
 * Undecodable images are skipped and logged by id; ids are processed in
 * sorted order so re-runs write identical files.
 */
function encodeAll(
  manifest: Manifest,
  encoder: FeatureExtractor,
  log: (message: string) => void,
): { encoded: EncodedImage[]; skipped: string[] } {
  const encoded: EncodedImage[] = [];
  const skipped: string[] = [];
  for (const id of Object.keys(manifest.images).sort()) {
    let image;
    try {
      image = loadImage(imagePath(manifest, id));
    } catch (err) {
      if (err instanceof ImageDecodeError) {
        skipped.push(id);
        log(`skipping ${id}: ${err.message}`);
        continue;
      }
      throw err;
    }
    const { vector, confidences } = encoder.encode(image);
    image.dispose();
    encoded.push({
      id,
      vector,
      detections: encoder.detections(confidences, manifest.confidenceFloor),
    });
  }
  return { encoded, skipped };
}

function writeVectors(encoded: EncodedImage[], outPath: string): void {
  const lines = encoded.map(e =>
    JSON.stringify({ id: e.id, vector: Array.from(e.vector) }),
  );
  fs.writeFileSync(outPath, lines.map(l => l + '\n').join(''));
}

function writeTags(encoded: EncodedImage[], manifest: Manifest): void {
  const lines = encoded.map(e =>
    JSON.stringify({ id: e.id, detections: e.detections }),
  );
  fs.writeFileSync(manifest.tagsOut, lines.map(l => l + '\n').join(''));
  // the record-per-line format has no header slot, so the run settings
  // land in a sidecar instead
  fs.writeFileSync(
    manifest.tagsOut + '.meta.json',
    JSON.stringify(
      {
        confidenceFloor: manifest.confidenceFloor,
        seed: manifest.seed,
        images: encoded.length,
        detections: encoded.reduce((n, e) => n + e.detections.length, 0),
      },
      null,
      2,
    ) + '\n',
  );
}

export interface RunOptions {
  vectors?: boolean;
  tags?: boolean;
  encoder?: FeatureExtractor;
  log?: (message: string) => void;
}

export function runExtraction(manifest: Manifest, options: RunOptions = {}): ExtractionResult {
  const wantVectors = options.vectors ?? true;
  const wantTags = options.tags ?? true;
  const log = options.log ?? ((message: string) => console.error(message));
  const encoder = options.encoder ?? new FeatureExtractor(manifest.seed);
  try {
    const { encoded, skipped } = encodeAll(manifest, encoder, log);
    if (wantVectors) writeVectors(encoded, manifest.vectorsOut);
    if (wantTags) writeTags(encoded, manifest);
    return { written: encoded.map(e => e.id), skipped };
  } finally {
    if (!options.encoder) encoder.dispose();
  }
}

export function extractVectors(manifest: Manifest, options: RunOptions = {}): ExtractionResult {
  return runExtraction(manifest, { ...options, vectors: true, tags: false });
}

export function extractObjects(manifest: Manifest, options: RunOptions = {}): ExtractionResult {
  return runExtraction(manifest, { ...options, vectors: false, tags: true });
}
