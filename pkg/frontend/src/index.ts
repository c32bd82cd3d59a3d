/**
 * Dense-array bindings over the batseg CLI.
 *
 * Two operations are exposed for training-loop integration: ground-truth
 * surface distance field generation from label grids, and the
 * boundary-aware loss (value plus gradient) between two field arrays.
 * Inputs are never mutated; results come back as freshly allocated arrays.
 */

import * as path from "node:path";

import { CoreError, coreVersion, runCore, withScratchDir } from "./core";
import {
  NdArray,
  assertSameShape,
  makeArray,
  toDimsChannels,
  validateHandle,
} from "./ndarray";
import { readRawVol, writeRawVol } from "./rawvol";

export const VERSION = "0.1.0";

export { CoreError, coreVersion } from "./core";
export { NdArray, Dtype, makeArray } from "./ndarray";
export { readRawVol, writeRawVol } from "./rawvol";

export type Spacing = [number, number, number];

export interface FieldConfigMap {
  truncation_multiplier?: number;
  class_mode?: "multiclass" | "class_agnostic";
  include_background_channel?: boolean;
  unit_spacing?: boolean;
}

export interface BaLossConfigMap {
  base_term?: "abs" | "squared" | "bce";
  use_squared_weight?: boolean;
  stop_gradient_on_weight?: boolean;
  sign_convention?: "positive" | "paper_literal";
}

function checkConfigKeys(name: string, config: object, allowed: string[]): void {
  for (const key of Object.keys(config)) {
    if (!allowed.includes(key)) {
      throw new TypeError(`${name}: unknown config key "${key}" (allowed: ${allowed.join(", ")})`);
    }
  }
}

function fieldFlags(config: FieldConfigMap): string[] {
  const flags: string[] = [];
  if (config.truncation_multiplier !== undefined) {
    flags.push("--trunc-mult", String(config.truncation_multiplier));
  }
  if (config.class_mode === "class_agnostic") flags.push("--class-agnostic");
  if (config.include_background_channel) flags.push("--include-background");
  if (config.unit_spacing) flags.push("--unit-spacing");
  return flags;
}

const BA_BASE_FLAG: Record<string, string> = { abs: "l1", squared: "l2", bce: "ce" };

function baFlags(config: BaLossConfigMap): string[] {
  const flags: string[] = [];
  if (config.base_term !== undefined) {
    flags.push("--ba-base", BA_BASE_FLAG[config.base_term]);
  }
  if (config.use_squared_weight === false) flags.push("--no-squared-weight");
  if (config.stop_gradient_on_weight) flags.push("--stop-grad-weight");
  if (config.sign_convention === "paper_literal") flags.push("--paper-sign");
  return flags;
}

/**
 * Build the ground-truth surface distance field for a label grid.
 *
 * `labels` must be a rank-3 uint8 handle; the result is a rank-4 float32
 * handle with one channel per tumor class (or one channel in class-agnostic
 * mode), numerically identical to the `dfield` CLI output for the same
 * input.
 */
export function bindBuildField(
  labels: NdArray,
  spacing: Spacing,
  config: FieldConfigMap = {},
): NdArray {
  validateHandle("labels", labels, { dtypes: ["uint8"], rank: 3 });
  checkConfigKeys("bindBuildField", config, [
    "truncation_multiplier",
    "class_mode",
    "include_background_channel",
    "unit_spacing",
  ]);
  spacing.forEach((s, axis) => {
    if (!(s > 0) || !Number.isFinite(s)) {
      throw new RangeError(`spacing[${axis}] must be finite and > 0, got ${s}`);
    }
  });
  return withScratchDir((dir) => {
    const labelsPath = path.join(dir, "labels.rawvol");
    const fieldPath = path.join(dir, "field.rawvol");
    writeRawVol(labelsPath, labels, spacing, {
      dims: [labels.shape[0], labels.shape[1], labels.shape[2]],
      channels: 0,
    });
    runCore(["dfield", "--gt", labelsPath, "--out", fieldPath, ...fieldFlags(config)]);
    const { array } = readRawVol(fieldPath);
    if (array.dtype !== "float32" || array.shape.length !== 4) {
      throw new CoreError(`unexpected field payload: ${array.dtype} rank ${array.shape.length}`);
    }
    return array;
  });
}

/**
 * Boundary-aware loss between a predicted and a ground-truth field.
 *
 * Both handles must be float32 or float64 with identical shapes (up to 4
 * dims). Returns the scalar loss and a float64 gradient with the prediction's
 * shape; both match the `baloss` CLI output for the same inputs.
 */
export function bindBaLoss(
  pred: NdArray,
  gt: NdArray,
  config: BaLossConfigMap = {},
): { value: number; grad: NdArray } {
  validateHandle("pred", pred, { dtypes: ["float32", "float64"] });
  validateHandle("gt", gt, { dtypes: ["float32", "float64"] });
  assertSameShape("pred", pred, "gt", gt);
  checkConfigKeys("bindBaLoss", config, [
    "base_term",
    "use_squared_weight",
    "stop_gradient_on_weight",
    "sign_convention",
  ]);
  return withScratchDir((dir) => {
    const predPath = path.join(dir, "pred.rawvol");
    const gtPath = path.join(dir, "gt.rawvol");
    const gradPath = path.join(dir, "grad.rawvol");
    const layout = toDimsChannels(pred.shape);
    // promote to float64 for the file exchange; float32 -> float64 is exact
    const predArr = makeArray("float64", pred.shape, Float64Array.from(pred.data));
    const gtArr = makeArray("float64", gt.shape, Float64Array.from(gt.data));
    writeRawVol(predPath, predArr, [1, 1, 1], layout);
    writeRawVol(gtPath, gtArr, [1, 1, 1], layout);
    const stdout = runCore([
      "baloss",
      "--pred-field", predPath,
      "--gt-field", gtPath,
      "--grad-out", gradPath,
      ...baFlags(config),
    ]);
    const report = JSON.parse(stdout.trim().split("\n").pop() as string) as { ba: number };
    const { array } = readRawVol(gradPath);
    return { value: report.ba, grad: makeArray("float64", pred.shape, array.data) };
  });
}
