//! Overlap timings for `bethe bench`.

use std::io::Write;
use std::time::Instant;

use bethe_tn::dense::check_oracle;
use bethe_tn::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn median_seconds(reps: usize, mut f: impl FnMut() -> anyhow::Result<()>) -> anyhow::Result<f64> {
    let mut times = Vec::with_capacity(reps);
    for _ in 0..reps {
        let start = Instant::now();
        f()?;
        times.push(start.elapsed().as_secs_f64());
    }
    times.sort_by(f64::total_cmp);
    Ok(times[times.len() / 2])
}

/// One CSV row per (M, N); the dense column is empty beyond the oracle bound.
pub fn run(
    ms: &[usize],
    ns: &[usize],
    reps: usize,
    seed: u64,
    out: &mut impl Write,
) -> anyhow::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    writeln!(out, "M,N,dense_s,mps_s,transfer_s")?;
    for &m in ms {
        let a = BetheData::random(m, &mut rng);
        let b = BetheData::random(m, &mut rng);
        for &n in ns {
            if m > n {
                continue;
            }
            let dense = if check_oracle(n, m).is_ok() {
                let (da, db) = (build_dense(&a, n)?, build_dense(&b, n)?);
                format!(
                    "{:e}",
                    median_seconds(reps, || Ok(inner_product(&da, &db).map(drop)?))?
                )
            } else {
                String::new()
            };
            let single = LatticePartition::uniform(n, 1)?;
            let (ma, mb) = (
                build_mps(&a, &single, false)?,
                build_mps(&b, &single, false)?,
            );
            let mps = median_seconds(reps, || Ok(mps_overlap(&ma, &mb).map(drop)?))?;
            let (ha, hb) = (build_mps(&a, &single, true)?, build_mps(&b, &single, true)?);
            let transfer =
                median_seconds(reps, || Ok(homogeneous_mps_overlap(&ha, &hb, n).map(drop)?))?;
            writeln!(out, "{m},{n},{dense},{mps:e},{transfer:e}")?;
        }
    }
    Ok(())
}
