import * as fs from 'fs';
import yargs from 'yargs';
import { hideBin } from 'yargs/helpers';
import { trainEval } from './train';

async function main() {
  const args = await yargs(hideBin(process.argv))
    .scriptName('cnn-harness')
    .usage('$0 --tensor images.tensor --targets targets.csv [options]')
    .option('tensor', { type: 'string', demandOption: true, describe: 'REFINED-TENSOR v1 file' })
    .option('tensor2', { type: 'string', describe: 'second tensor for the two-arm model' })
    .option('targets', { type: 'string', demandOption: true, describe: 'id,value CSV in tensor order' })
    .option('task', { choices: ['regression', 'classification'] as const, default: 'regression' as const })
    .option('epochs', { type: 'number', default: 20 })
    .option('batch-size', { type: 'number', default: 32 })
    .option('learning-rate', { type: 'number', default: 1e-3 })
    .option('seed', { type: 'number', default: 0 })
    .option('out', { type: 'string', describe: 'metric CSV path (default stdout)' })
    .strict()
    .parse();

  const result = await trainEval({
    tensorPath: args.tensor,
    tensorPath2: args.tensor2,
    targetCsv: args.targets,
    task: args.task,
    epochs: args.epochs,
    batchSize: args['batch-size'],
    learningRate: args['learning-rate'],
    seed: args.seed,
  });

  for (const [name, value] of Object.entries(result.report)) {
    console.log(`${name} = ${value.toFixed(6)}`);
  }
  if (args.out) {
    fs.writeFileSync(args.out, result.csv);
    console.log(`wrote ${args.out}`);
  } else {
    process.stdout.write(result.csv);
  }
}

main().catch((err) => {
  console.error(err instanceof Error ? err.message : err);
  process.exit(1);
});
