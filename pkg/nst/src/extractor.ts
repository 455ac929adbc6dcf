/**
 * Convolutional feature extractor with the VGG-19 layer topology: five conv
 * blocks (2, 2, 4, 4, 4 conv+relu layers) separated by 2x2 max pooling.
 * Style taps are the first conv of each block (conv1_1 .. conv5_1); the
 * content tap is conv4_1.
 *
 * Weights are deterministic: seeded He-uniform by default, or loaded from a
 * raw little-endian f32 file holding the kernels and biases in declaration
 * order. Pretrained object-recognition weights can be dropped in through
 * that file without code changes.
 */

import * as fs from "fs";
import * as tf from "@tensorflow/tfjs";

import { SplitMix64, deriveSeed } from "./rng";

export interface ExtractorConfig {
  blockChannels: number[];
  convsPerBlock: number[];
  seed: number;
  weightsPath?: string;
}

export const VGG19_CHANNELS = [64, 128, 256, 512, 512];
export const VGG19_CONVS_PER_BLOCK = [2, 2, 4, 4, 4];

export function defaultExtractorConfig(overrides: Partial<ExtractorConfig> = {}): ExtractorConfig {
  return {
    blockChannels: VGG19_CHANNELS.slice(),
    convsPerBlock: VGG19_CONVS_PER_BLOCK.slice(),
    seed: 0,
    ...overrides,
  };
}

interface ConvLayer {
  name: string; // conv<block>_<index>
  block: number;
  kernel: tf.Tensor4D;
  bias: tf.Tensor1D;
}

export class FeatureExtractor {
  readonly cfg: ExtractorConfig;
  readonly layers: ConvLayer[];
  readonly styleTaps: string[];
  readonly contentTap: string;

  constructor(cfg: ExtractorConfig) {
    if (cfg.blockChannels.length !== cfg.convsPerBlock.length) {
      throw new Error("blockChannels and convsPerBlock must align");
    }
    this.cfg = cfg;
    this.layers = [];
    const loader = cfg.weightsPath ? new WeightFileReader(cfg.weightsPath) : null;
    let inChannels = 3;
    for (let b = 0; b < cfg.blockChannels.length; b++) {
      const out = cfg.blockChannels[b];
      for (let c = 0; c < cfg.convsPerBlock[b]; c++) {
        const name = `conv${b + 1}_${c + 1}`;
        const shape: [number, number, number, number] = [3, 3, inChannels, out];
        let kernel: tf.Tensor4D;
        let bias: tf.Tensor1D;
        if (loader) {
          kernel = tf.tensor4d(loader.take(3 * 3 * inChannels * out), shape);
          bias = tf.tensor1d(loader.take(out));
        } else {
          kernel = tf.tensor4d(seededHeUniform(cfg.seed, b, c, shape), shape);
          bias = tf.zeros([out]);
        }
        this.layers.push({ name, block: b + 1, kernel, bias });
        inChannels = out;
      }
    }
    this.styleTaps = cfg.blockChannels.map((_, b) => `conv${b + 1}_1`);
    const contentBlock = Math.min(4, cfg.blockChannels.length);
    this.contentTap = `conv${contentBlock}_1`;
  }

  /**
   * Activations at the requested tap names for a grayscale image in [0, 255].
   * The image is replicated to three channels and scaled to [0, 1]; feature
   * maps come back as [h, w, channels]. Call inside tf.tidy (intermediates
   * stay alive so gradients can flow through the stack).
   */
  features(image: tf.Tensor2D, taps: string[]): Record<string, tf.Tensor3D> {
    const wanted = new Set(taps);
    const last = this.layers.reduce(
      (acc, l, i) => (wanted.has(l.name) ? i : acc), -1
    );
    if (last < 0) {
      throw new Error(`no known tap among ${taps}`);
    }
    const out: Record<string, tf.Tensor3D> = {};
    let x = tf.stack([image, image, image], 2).expandDims(0).div(255.0) as tf.Tensor4D;
    let block = 1;
    for (let i = 0; i <= last; i++) {
      const layer = this.layers[i];
      if (layer.block !== block) {
        x = tf.maxPool(x, [2, 2], [2, 2], "same");
        block = layer.block;
      }
      x = tf.relu(
        tf.add(tf.conv2d(x, layer.kernel, [1, 1], "same"), layer.bias)
      ) as tf.Tensor4D;
      if (wanted.has(layer.name)) {
        out[layer.name] = x.squeeze([0]);
      }
    }
    return out;
  }

  dispose(): void {
    for (const l of this.layers) {
      l.kernel.dispose();
      l.bias.dispose();
    }
  }

  /** Preprocessing description embedded in run reports for reproducibility. */
  preprocessing(): string {
    return "grayscale slice replicated to 3 channels, scaled by 1/255";
  }
}

function seededHeUniform(
  seed: number, block: number, conv: number, shape: [number, number, number, number]
): Float32Array {
  const fanIn = shape[0] * shape[1] * shape[2];
  const bound = Math.sqrt(6.0 / fanIn);
  const rng = new SplitMix64(deriveSeed(seed, 0x766767, block, conv)); // tag 'vgg'
  const n = shape.reduce((a, b) => a * b, 1);
  const vals = new Float32Array(n);
  for (let i = 0; i < n; i++) {
    vals[i] = bound * (2 * rng.uniform() - 1);
  }
  return vals;
}

class WeightFileReader {
  private buf: Buffer;
  private offset = 0;

  constructor(path: string) {
    this.buf = fs.readFileSync(path);
  }

  take(n: number): Float32Array {
    const end = this.offset + 4 * n;
    if (end > this.buf.length) {
      throw new Error(`weights file exhausted at offset ${this.offset}`);
    }
    const out = new Float32Array(n);
    for (let i = 0; i < n; i++) {
      out[i] = this.buf.readFloatLE(this.offset + 4 * i);
    }
    this.offset = end;
    return out;
  }
}
