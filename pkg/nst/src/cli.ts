/**
 * Command line: translate a VVOL phantom into a styled volume.
 *
 *   node dist/cli.js --content in.vvol --styles styleDir --out out.vvol
 *     [--iterations 40] [--alpha 1e5] [--optimizer adam|gd] [--lr 2.0]
 *     [--seed 0] [--channels 64,128,256,512,512] [--weights vgg.bin]
 *     [--report report.json]
 */

import * as fs from "fs";
import * as path from "path";

import { FeatureExtractor, defaultExtractorConfig } from "./extractor";
import { readPgm } from "./pgm";
import { defaultTranslateConfig, translateVolume } from "./translate";
import { readVvol, writeVvol } from "./vvol";

function parseArgs(argv: string[]): Map<string, string> {
  const args = new Map<string, string>();
  for (let i = 0; i < argv.length; i += 2) {
    const key = argv[i];
    if (!key.startsWith("--") || i + 1 >= argv.length) {
      throw new Error(`malformed arguments near ${key}`);
    }
    args.set(key.slice(2), argv[i + 1]);
  }
  return args;
}

export function main(argv: string[]): number {
  let args: Map<string, string>;
  try {
    args = parseArgs(argv);
    for (const required of ["content", "styles", "out"]) {
      if (!args.has(required)) {
        throw new Error(`missing --${required}`);
      }
    }
  } catch (e) {
    console.error(`usage error: ${(e as Error).message}`);
    return 2;
  }

  try {
    const content = readVvol(args.get("content")!);
    const styleDir = args.get("styles")!;
    const styleFiles = fs
      .readdirSync(styleDir)
      .filter((f) => f.endsWith(".pgm"))
      .sort();
    if (styleFiles.length === 0) {
      throw new Error(`no .pgm style images in ${styleDir}`);
    }
    const styles = styleFiles.map((f) => readPgm(path.join(styleDir, f)));

    const extractorCfg = defaultExtractorConfig({
      seed: parseInt(args.get("seed") ?? "0", 10),
      weightsPath: args.get("weights"),
    });
    if (args.has("channels")) {
      extractorCfg.blockChannels = args.get("channels")!.split(",").map(Number);
      extractorCfg.convsPerBlock = extractorCfg.blockChannels.map(
        (_, b) => [2, 2, 4, 4, 4][b] ?? 2
      );
    }
    const extractor = new FeatureExtractor(extractorCfg);

    const cfg = defaultTranslateConfig({
      iterations: parseInt(args.get("iterations") ?? "40", 10),
      styleWeight: parseFloat(args.get("alpha") ?? "1e5"),
      optimizer: (args.get("optimizer") ?? "adam") as "adam" | "gd",
      learningRate: parseFloat(args.get("lr") ?? "2.0"),
    });

    console.log(
      `translating ${content.dims.join("x")} volume with ${styles.length} style images, ` +
      `${cfg.iterations} iterations/slice (${cfg.optimizer})`
    );
    const { volume, report } = translateVolume(content, styles, extractor, cfg);
    writeVvol(args.get("out")!, volume);
    if (args.has("report")) {
      fs.writeFileSync(args.get("report")!, JSON.stringify(report, null, 1));
    }
    const substituted = report.slices.filter((s) => s.substituted).length;
    console.log(
      `wrote ${args.get("out")}` +
      (substituted > 0 ? ` (${substituted} slices substituted after non-finite loss)` : "")
    );
    extractor.dispose();
    return 0;
  } catch (e) {
    console.error(`error: ${(e as Error).message}`);
    return 1;
  }
}

if (require.main === module) {
  process.exit(main(process.argv.slice(2)));
}
