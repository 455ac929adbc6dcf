/**
 * Slice-wise volume translation: for each axial slice, minimize
 * content + alpha * style over the image, stack the results, smooth along z,
 * and requantize into a VVOL the primary toolkit can train on.
 */

import * as tf from "@tensorflow/tfjs";

import { FeatureExtractor } from "./extractor";
import { GrayImage } from "./pgm";
import { StyleReference, contentLoss, styleLoss, styleReference } from "./losses";
import { sgSmoothZ, quantizeToVolume } from "./smooth";
import { DTYPE_INTENSITY, Vvol, axialSlice } from "./vvol";

export interface TranslateConfig {
  windowRadius: number; // content window, slices k +- radius (truncated)
  styleWeight: number; // alpha
  iterations: number;
  optimizer: "gd" | "adam"; // gd uses backtracking line search (monotone)
  learningRate: number;
  smoothWindow: number;
  layerWeights?: number[]; // per style tap; default uniform 1/taps
}

export function defaultTranslateConfig(overrides: Partial<TranslateConfig> = {}): TranslateConfig {
  return {
    windowRadius: 3,
    styleWeight: 1e5,
    iterations: 40,
    optimizer: "adam",
    learningRate: 2.0,
    smoothWindow: 5,
    ...overrides,
  };
}

export interface SliceReport {
  z: number;
  initialLoss: number;
  finalLoss: number;
  iterations: number;
  substituted: boolean; // non-finite loss -> content slice kept
}

export interface TranslateReport {
  slices: SliceReport[];
  config: TranslateConfig;
  preprocessing: string;
  styleCount: number;
}

export function translateVolume(
  content: Vvol,
  styles: GrayImage[],
  extractor: FeatureExtractor,
  cfg: TranslateConfig
): { volume: Vvol; report: TranslateReport } {
  if (styles.length === 0) {
    throw new Error("style set must not be empty");
  }
  const [nx, ny, nz] = content.dims;
  const refs: StyleReference[] = styles.map((s) =>
    styleReference(extractor, tf.tensor2d(s.data, [s.height, s.width]))
  );

  const stack = new Float64Array(nx * ny * nz);
  const reports: SliceReport[] = [];
  for (let k = 0; k < nz; k++) {
    const windowSlices: tf.Tensor2D[] = [];
    for (let j = Math.max(0, k - cfg.windowRadius); j <= Math.min(nz - 1, k + cfg.windowRadius); j++) {
      windowSlices.push(tf.tensor2d(axialSlice(content, j), [ny, nx]));
    }
    const init = axialSlice(content, k);
    const { image, report } = optimizeSlice(init, [ny, nx], windowSlices, refs, extractor, cfg, k);
    stack.set(Float64Array.from(image), nx * ny * k);
    reports.push(report);
    windowSlices.forEach((t) => t.dispose());
  }
  refs.forEach((r) => r.grams.forEach((g) => g.dispose()));

  const smoothed = sgSmoothZ(stack, content.dims, cfg.smoothWindow);
  return {
    volume: quantizeToVolume(smoothed, content.dims, DTYPE_INTENSITY),
    report: {
      slices: reports,
      config: cfg,
      preprocessing: extractor.preprocessing(),
      styleCount: styles.length,
    },
  };
}

export function sliceObjective(
  target: tf.Tensor2D,
  windowSlices: tf.Tensor2D[],
  refs: StyleReference[],
  extractor: FeatureExtractor,
  cfg: TranslateConfig
): tf.Scalar {
  const c = contentLoss(extractor, target, windowSlices);
  if (cfg.styleWeight === 0) {
    return c;
  }
  const s = styleLoss(extractor, target, refs, cfg.layerWeights);
  return tf.add(c, tf.mul(s, cfg.styleWeight)) as tf.Scalar;
}

function optimizeSlice(
  init: Float32Array,
  shape: [number, number],
  windowSlices: tf.Tensor2D[],
  refs: StyleReference[],
  extractor: FeatureExtractor,
  cfg: TranslateConfig,
  z: number
): { image: Float32Array; report: SliceReport } {
  const objective = (t: tf.Tensor2D) => sliceObjective(t, windowSlices, refs, extractor, cfg);
  const evalLoss = (t: tf.Tensor2D) => tf.tidy(() => objective(t).dataSync()[0]);

  const target = tf.variable(tf.tensor2d(init, shape));
  const initialLoss = evalLoss(target as tf.Tensor2D);
  let lastLoss = initialLoss;
  let substituted = false;
  let iters = 0;

  if (cfg.optimizer === "adam") {
    const opt = tf.train.adam(cfg.learningRate);
    for (; iters < cfg.iterations; iters++) {
      opt.minimize(() => objective(target as tf.Tensor2D), false, [target]);
      lastLoss = evalLoss(target as tf.Tensor2D);
      if (!Number.isFinite(lastLoss)) {
        substituted = true;
        break;
      }
    }
    opt.dispose();
  } else {
    // plain gradient descent with backtracking: never accepts an increase
    for (; iters < cfg.iterations; iters++) {
      const { value, grads } = tf.variableGrads(
        () => objective(target as tf.Tensor2D), [target]
      );
      const lossHere = value.dataSync()[0];
      value.dispose();
      if (!Number.isFinite(lossHere)) {
        substituted = true;
        Object.values(grads).forEach((g) => g.dispose());
        break;
      }
      const grad = grads[Object.keys(grads)[0]] as tf.Tensor2D;
      let step = cfg.learningRate;
      let accepted = false;
      for (let tries = 0; tries < 30; tries++) {
        const candidate = tf.tidy(() => tf.sub(target, tf.mul(grad, step))) as tf.Tensor2D;
        const lc = evalLoss(candidate);
        if (Number.isFinite(lc) && lc <= lossHere) {
          target.assign(candidate);
          candidate.dispose();
          lastLoss = lc;
          accepted = true;
          break;
        }
        candidate.dispose();
        step /= 2;
      }
      grad.dispose();
      if (!accepted) {
        lastLoss = lossHere;
        break; // no feasible descent step left
      }
    }
  }

  let image: Float32Array;
  if (substituted || !Number.isFinite(lastLoss)) {
    substituted = true;
    image = init;
    lastLoss = initialLoss;
  } else {
    image = target.dataSync() as Float32Array;
  }
  target.dispose();
  return {
    image,
    report: { z, initialLoss, finalLoss: lastLoss, iterations: iters, substituted },
  };
}
