import * as tf from '@tensorflow/tfjs';
import { OBJECT_LABELS, VECTOR_DIM } from './labels';
import { mulberry32, uniformWeights, Rng } from './rng';

/** All images are resampled to this square size before encoding. */
export const INPUT_SIZE = 64;

/** Sigmoid pre-activations are spread by this factor so detector
 * confidences cover most of [0, 1] instead of hugging 0.5. */
const HEAD_GAIN = 8;

export interface ImageEncoding {
  vector: Float32Array;
  confidences: Float32Array;
}

function convKernel(rng: Rng, k: number, inC: number, outC: number): tf.Tensor4D {
  const data = uniformWeights(rng, k * k * inC * outC, k * k * inC, k * k * outC);
  return tf.tensor4d(data, [k, k, inC, outC]);
}

/**
 * Residual tower with a 2,048-channel penultimate stage, global average
 * pooling, and an 80-way sigmoid detection head.
 *
 * Weights come from one seeded stream, so two encoders with the same
 * seed produce identical files; a run is reproducible without any
 * downloaded checkpoint. Swap the seed to emulate a different set of
 * pretrained weights.
 */
export class FeatureExtractor {
  readonly seed: number;
  private stem: tf.Tensor4D;
  private block1a: tf.Tensor4D;
  private block1b: tf.Tensor4D;
  private down: tf.Tensor4D;
  private block2a: tf.Tensor4D;
  private block2b: tf.Tensor4D;
  private project: tf.Tensor4D;
  private headWeight: tf.Tensor2D;
  private headBias: tf.Tensor1D;

  constructor(seed = 7) {
    this.seed = seed;
    const rng = mulberry32(seed);
    this.stem = convKernel(rng, 3, 3, 16);
    this.block1a = convKernel(rng, 3, 16, 16);
    this.block1b = convKernel(rng, 3, 16, 16);
    this.down = convKernel(rng, 3, 16, 32);
    this.block2a = convKernel(rng, 3, 32, 32);
    this.block2b = convKernel(rng, 3, 32, 32);
    this.project = convKernel(rng, 1, 32, VECTOR_DIM);
    this.headWeight = tf.tensor2d(
      uniformWeights(rng, VECTOR_DIM * OBJECT_LABELS.length, VECTOR_DIM, OBJECT_LABELS.length),
      [VECTOR_DIM, OBJECT_LABELS.length],
    );
    this.headBias = tf.tensor1d(
      uniformWeights(rng, OBJECT_LABELS.length, VECTOR_DIM, OBJECT_LABELS.length),
    );
  }

  /** Pooled penultimate activations plus per-class confidences. */
  encode(image: tf.Tensor3D): ImageEncoding {
    const [vector, confidences] = tf.tidy(() => {
      const resized = tf.image.resizeBilinear(image, [INPUT_SIZE, INPUT_SIZE]);
      const batch = resized.expandDims(0) as tf.Tensor4D;

      let x = tf.relu(tf.conv2d(batch, this.stem, 2, 'same')) as tf.Tensor4D;
      let skip = x;
      x = tf.relu(tf.conv2d(x, this.block1a, 1, 'same')) as tf.Tensor4D;
      x = tf.conv2d(x, this.block1b, 1, 'same');
      x = tf.relu(tf.add(x, skip)) as tf.Tensor4D;

      x = tf.relu(tf.conv2d(x, this.down, 2, 'same')) as tf.Tensor4D;
      skip = x;
      x = tf.relu(tf.conv2d(x, this.block2a, 1, 'same')) as tf.Tensor4D;
      x = tf.conv2d(x, this.block2b, 1, 'same');
      x = tf.relu(tf.add(x, skip)) as tf.Tensor4D;

      x = tf.relu(tf.conv2d(x, this.project, 1, 'same')) as tf.Tensor4D;
      const pooled = tf.mean(x, [1, 2]).squeeze([0]) as tf.Tensor1D;

      const logits = tf.add(
        tf.matMul(pooled.expandDims(0), this.headWeight).squeeze([0]),
        this.headBias,
      );
      const scores = tf.sigmoid(tf.mul(logits, HEAD_GAIN)) as tf.Tensor1D;
      return [pooled, scores];
    });
    const out = {
      vector: vector.dataSync() as Float32Array,
      confidences: confidences.dataSync() as Float32Array,
    };
    vector.dispose();
    confidences.dispose();
    return out;
  }

  /** (label, score) pairs at or above the floor, strongest first. */
  detections(confidences: Float32Array, floor: number): { label: string; score: number }[] {
    const hits: { label: string; score: number }[] = [];
    for (let i = 0; i < OBJECT_LABELS.length; i++) {
      if (confidences[i] >= floor) {
        hits.push({ label: OBJECT_LABELS[i], score: confidences[i] });
      }
    }
    hits.sort((a, b) => b.score - a.score || a.label.localeCompare(b.label));
    return hits;
  }

  dispose(): void {
    for (const t of [this.stem, this.block1a, this.block1b, this.down,
                     this.block2a, this.block2b, this.project,
                     this.headWeight, this.headBias]) {
      t.dispose();
    }
  }
}
