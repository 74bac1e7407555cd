import * as fs from 'fs';
import * as tf from '@tensorflow/tfjs';
import { PNG } from 'pngjs';

export class ImageDecodeError extends Error {}

/** Decode a PNG file into an RGB float tensor scaled to [0, 1]. */
export function loadImage(path: string): tf.Tensor3D {
  let png: PNG;
  try {
    png = PNG.sync.read(fs.readFileSync(path));
  } catch (err) {
    throw new ImageDecodeError(`${path}: ${(err as Error).message}`);
  }
  const { width, height, data } = png;
  const rgb = new Float32Array(width * height * 3);
  for (let i = 0, j = 0; i < data.length; i += 4, j += 3) {
    rgb[j] = data[i] / 255;
    rgb[j + 1] = data[i + 1] / 255;
    rgb[j + 2] = data[i + 2] / 255;
  }
  return tf.tensor3d(rgb, [height, width, 3]);
}
