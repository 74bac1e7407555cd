import * as fs from 'fs';
import * as os from 'os';
import * as path from 'path';
import { PNG } from 'pngjs';
import { mulberry32 } from '../src/rng';

function writePng(filePath: string, width: number, height: number,
                  pixel: (x: number, y: number) => [number, number, number]): void {
  const png = new PNG({ width, height });
  for (let y = 0; y < height; y++) {
    for (let x = 0; x < width; x++) {
      const [r, g, b] = pixel(x, y);
      const i = (y * width + x) * 4;
      png.data[i] = r;
      png.data[i + 1] = g;
      png.data[i + 2] = b;
      png.data[i + 3] = 255;
    }
  }
  fs.writeFileSync(filePath, PNG.sync.write(png));
}

export function writeGradientPng(filePath: string, width = 32, height = 24): void {
  writePng(filePath, width, height, (x, y) => [
    Math.round((255 * x) / Math.max(width - 1, 1)),
    Math.round((255 * y) / Math.max(height - 1, 1)),
    128,
  ]);
}

export function writeSolidPng(filePath: string, rgb: [number, number, number],
                              width = 16, height = 16): void {
  writePng(filePath, width, height, () => rgb);
}

export function writeNoisePng(filePath: string, seed: number, width = 48, height = 48): void {
  const rng = mulberry32(seed);
  writePng(filePath, width, height, () => [
    Math.floor(rng() * 256),
    Math.floor(rng() * 256),
    Math.floor(rng() * 256),
  ]);
}

/** Not a PNG at all; decoders must reject it. */
export function writeCorruptPng(filePath: string): void {
  fs.writeFileSync(filePath, 'this is prose, not pixels\n');
}

export interface Workspace {
  dir: string;
  manifestPath: string;
  vectorsOut: string;
  tagsOut: string;
  imageIds: string[];
}

/**
 * Temp directory with three decodable images, one corrupt file, and a
 * manifest referencing all four. Extraction should encode the three and
 * skip the corrupt one.
 */
export function makeWorkspace(overrides: Record<string, unknown> = {}): Workspace {
  const dir = fs.mkdtempSync(path.join(os.tmpdir(), 'extractor-'));
  const imageDir = path.join(dir, 'images');
  fs.mkdirSync(imageDir);
  writeGradientPng(path.join(imageDir, 'grad.png'));
  writeSolidPng(path.join(imageDir, 'teal.png'), [0, 128, 128]);
  writeNoisePng(path.join(imageDir, 'noise.png'), 99);
  writeCorruptPng(path.join(imageDir, 'broken.png'));
  const vectorsOut = path.join(dir, 'vectors.jsonl');
  const tagsOut = path.join(dir, 'tags.jsonl');
  const manifest = {
    imageDir,
    images: {
      'img-grad': 'grad.png',
      'img-teal': 'teal.png',
      'img-noise': 'noise.png',
      'img-broken': 'broken.png',
    },
    vectorsOut,
    tagsOut,
    ...overrides,
  };
  const manifestPath = path.join(dir, 'manifest.json');
  fs.writeFileSync(manifestPath, JSON.stringify(manifest, null, 2));
  return {
    dir,
    manifestPath,
    vectorsOut,
    tagsOut,
    imageIds: ['img-broken', 'img-grad', 'img-noise', 'img-teal'],
  };
}

export function readJsonl(filePath: string): { id: string; [key: string]: unknown }[] {
  return fs
    .readFileSync(filePath, 'utf-8')
    .split('\n')
    .filter(line => line.trim())
    .map(line => JSON.parse(line));
}
