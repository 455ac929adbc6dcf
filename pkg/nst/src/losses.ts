/**
 * Content and style objectives over extractor features.
 *
 * Per target slice k:
 *   content = sum over window slices j of ||F(target) - F(content_j)||^2
 *             at the content tap (window k +- radius, truncated at the ends)
 *   style   = sum over style images and taps l of
 *             w_l / (4 H_l^2 W_l^2) * ||G(target, l) - G(style, l)||_F^2
 * where G is the channel Gram matrix of the flattened feature map.
 */

import * as tf from "@tensorflow/tfjs";

import { FeatureExtractor } from "./extractor";

/** Channel-by-channel inner products of a [h, w, c] feature map: [c, c]. */
export function gram(features: tf.Tensor3D): tf.Tensor2D {
  const [h, w, c] = features.shape;
  const flat = features.reshape([h * w, c]);
  return tf.matMul(flat, flat, true, false) as tf.Tensor2D;
}

export interface StyleReference {
  grams: tf.Tensor2D[]; // per style tap, in extractor.styleTaps order
  dims: Array<[number, number]>; // feature-map (H_l, W_l) per tap
}

/** Precompute Gram references for one style image (values 0..255). */
export function styleReference(extractor: FeatureExtractor, image: tf.Tensor2D): StyleReference {
  return tf.tidy(() => {
    const feats = extractor.features(image, extractor.styleTaps);
    const grams: tf.Tensor2D[] = [];
    const dims: Array<[number, number]> = [];
    for (const tap of extractor.styleTaps) {
      const f = feats[tap];
      grams.push(tf.keep(gram(f)) as tf.Tensor2D);
      dims.push([f.shape[0], f.shape[1]]);
    }
    return { grams, dims };
  });
}

export function contentLoss(
  extractor: FeatureExtractor,
  target: tf.Tensor2D,
  windowSlices: tf.Tensor2D[]
): tf.Scalar {
  const tap = extractor.contentTap;
  const targetFeat = extractor.features(target, [tap])[tap];
  let total: tf.Scalar = tf.scalar(0);
  for (const slice of windowSlices) {
    const ref = extractor.features(slice, [tap])[tap];
    total = tf.add(total, tf.sum(tf.square(tf.sub(targetFeat, ref)))) as tf.Scalar;
  }
  return total;
}

export function styleLoss(
  extractor: FeatureExtractor,
  target: tf.Tensor2D,
  references: StyleReference[],
  layerWeights?: number[]
): tf.Scalar {
  if (references.length === 0) {
    throw new Error("style set must not be empty");
  }
  const taps = extractor.styleTaps;
  const w = layerWeights ?? taps.map(() => 1 / taps.length);
  if (w.length !== taps.length) {
    throw new Error(`need ${taps.length} layer weights, got ${w.length}`);
  }
  const feats = extractor.features(target, taps);
  const targetGrams = taps.map((tap) => gram(feats[tap]));
  let total: tf.Scalar = tf.scalar(0);
  for (const ref of references) {
    for (let l = 0; l < taps.length; l++) {
      const [hl, wl] = ref.dims[l];
      const norm = w[l] / (4 * hl * hl * wl * wl);
      const diff = tf.sum(tf.square(tf.sub(targetGrams[l], ref.grams[l])));
      total = tf.add(total, tf.mul(diff, norm)) as tf.Scalar;
    }
  }
  return total;
}
