#!/usr/bin/env node
import yargs from 'yargs';
import { hideBin } from 'yargs/helpers';
import { runExtraction } from './extract';
import { loadManifest, ManifestError } from './manifest';

export function main(argv: string[]): number {
  let args;
  try {
    args = yargs(argv)
      .usage('$0 --manifest <file> [--vectors-only | --tags-only]')
      .option('manifest', {
        type: 'string',
        demandOption: true,
        describe: 'extraction manifest JSON',
      })
      .option('vectors-only', { type: 'boolean', default: false })
      .option('tags-only', { type: 'boolean', default: false })
      .option('validate-only', {
        type: 'boolean',
        default: false,
        describe: 'check the manifest and referenced files, write nothing',
      })
      .strict()
      .exitProcess(false)
      .parseSync();
  } catch (err) {
    console.error(`usage error: ${(err as Error).message}`);
    return 2;
  }
  // yargs conflicts() trips on boolean defaults, so check by hand
  if (args.vectorsOnly && args.tagsOnly) {
    console.error('usage error: --vectors-only and --tags-only are mutually exclusive');
    return 2;
  }

  let manifest;
  try {
    manifest = loadManifest(args.manifest);
  } catch (err) {
    if (err instanceof ManifestError) {
      console.error(`error: ${err.message}`);
      return 2;
    }
    throw err;
  }
  if (args.validateOnly) {
    console.log(`manifest: ok (${Object.keys(manifest.images).length} images)`);
    return 0;
  }
  const result = runExtraction(manifest, {
    vectors: !args.tagsOnly,
    tags: !args.vectorsOnly,
  });
  console.log(`encoded: ${result.written.length} images, skipped: ${result.skipped.length}`);
  if (!args.tagsOnly) console.log(`vectors: ${manifest.vectorsOut}`);
  if (!args.vectorsOnly) console.log(`tags: ${manifest.tagsOut}`);
  return 0;
}

if (require.main === module) {
  try {
    process.exitCode = main(hideBin(process.argv));
  } catch (err) {
    console.error(`error: ${(err as Error).message}`);
    process.exitCode = 1;
  }
}
