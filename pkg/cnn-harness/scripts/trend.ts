/**
 * Compares CNN test NRMSE through a learned feature map against a random
 * map, on wide synthetic tables where 80% of the features carry no signal.
 * Five rounds with fresh data and seeds; the learned map should win most.
 *
 * Needs the parent package importable by python3 (pip install -e ..).
 * Run: npm run trend
 */
import { execFileSync } from 'child_process';
import * as fs from 'fs';
import * as os from 'os';
import * as path from 'path';
import { trainEval } from '../src/train';

const SEEDS = [0, 1, 2, 3, 4];
const N = 2000;
const P = 400;
const GRID = Math.ceil(Math.sqrt(P));
// short schedule: separation shows from ~5 epochs; both arms share each
// round's init seed so the comparison is paired
const EPOCHS = 6;

function cli(args: string[]): void {
  execFileSync('python3', ['-m', 'refined', ...args], { stdio: 'inherit' });
}

function mulberry32(seed: number): () => number {
  let a = seed >>> 0;
  return () => {
    a = (a + 0x6d2b79f5) >>> 0;
    let t = Math.imul(a ^ (a >>> 15), 1 | a);
    t = (t + Math.imul(t ^ (t >>> 7), 61 | t)) ^ t;
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

/** A map file assigning features f1..fP to uniformly shuffled pixels. */
function randomMapText(seed: number): string {
  const cells = Array.from({ length: GRID * GRID }, (_, i) => i);
  const rand = mulberry32(seed);
  for (let i = cells.length - 1; i > 0; i--) {
    const j = Math.floor(rand() * (i + 1));
    [cells[i], cells[j]] = [cells[j], cells[i]];
  }
  const lines = ['REFINED-MAP v1', `grid ${GRID} ${GRID}`];
  for (let f = 0; f < P; f++) {
    const cell = cells[f];
    lines.push(`f${f + 1} ${Math.floor(cell / GRID)} ${cell % GRID}`);
  }
  return lines.join('\n') + '\n';
}

async function nrmseFor(dir: string, seed: number): Promise<number> {
  const result = await trainEval({
    tensorPath: path.join(dir, 'images.tensor'),
    targetCsv: path.join(dir, 'targets.csv'),
    task: 'regression',
    epochs: EPOCHS,
    batchSize: 16,
    learningRate: 1e-3,
    seed,
  });
  return result.report.nrmse;
}

async function main() {
  const work = fs.mkdtempSync(path.join(os.tmpdir(), 'trend-'));
  const started = Date.now();
  let wins = 0;
  console.log('seed  learned-map  random-map  winner');
  for (const seed of SEEDS) {
    const dir = path.join(work, `seed${seed}`);
    fs.mkdirSync(dir);
    const data = path.join(dir, 'data.csv');
    const learnedMap = path.join(dir, 'learned.map');
    const randomMap = path.join(dir, 'random.map');
    cli([
      'synth', '--n', `${N}`, '--p', `${P}`, '--gamma', '0.7',
      '--spurious', '0.8', '--seed', `${seed}`, '--out', data,
    ]);
    cli(['fit', '--input', data, '--out', learnedMap, '--skip-bmds', '--seed', `${seed}`]);
    fs.writeFileSync(randomMap, randomMapText(1000 + seed));
    for (const [mapPath, sub] of [[learnedMap, 'learned'], [randomMap, 'random']]) {
      cli([
        'transform', '--input', data, '--map', mapPath,
        '--out-dir', path.join(dir, sub), '--format', 'tensor',
      ]);
    }
    const learned = await nrmseFor(path.join(dir, 'learned'), seed);
    const random = await nrmseFor(path.join(dir, 'random'), seed);
    const won = learned <= random;
    if (won) wins++;
    console.log(
      `${seed}     ${learned.toFixed(4)}       ${random.toFixed(4)}      ` +
        (won ? 'learned' : 'random')
    );
  }
  const minutes = ((Date.now() - started) / 60000).toFixed(1);
  console.log(`\nlearned map wins ${wins}/${SEEDS.length} rounds in ${minutes} min`);
  if (wins < 4) {
    process.exitCode = 1;
  }
}

main().catch((err) => {
  console.error(err.message);
  process.exit(1);
});
