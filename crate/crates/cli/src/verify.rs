//! Invariant checks behind `bethe verify`.

use std::thread;

use bethe_tn::choice::all_choices;
use bethe_tn::io::{self, Config};
use bethe_tn::prelude::*;
use clap::ValueEnum;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

const ORACLE_TOL: f64 = 1e-10;
const NORM_TOL: f64 = 1e-12;
const SCHMIDT_TOL: f64 = 1e-9;
const FIDELITY_TOL: f64 = 1e-9;

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
pub enum Level {
    Quick,
    Full,
}

#[derive(Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
    Skip,
}

pub struct Check {
    pub name: &'static str,
    pub status: Status,
    pub detail: String,
}

pub struct Report(pub Vec<Check>);

impl Report {
    pub fn passed(&self) -> bool {
        self.0.iter().all(|c| c.status != Status::Fail)
    }
}

type Outcome = std::result::Result<(Status, String), String>;

type Task<'a> = (&'static str, Box<dyn Fn() -> Outcome + Send + Sync + 'a>);

fn pass(detail: String) -> Outcome {
    Ok((Status::Pass, detail))
}

fn skip(detail: &str) -> Outcome {
    Ok((Status::Skip, detail.to_string()))
}

fn fail<T>(detail: String) -> std::result::Result<T, String> {
    Err(detail)
}

fn lib<T>(r: bethe_tn::error::Result<T>) -> std::result::Result<T, String> {
    r.map_err(|e| e.to_string())
}

/// Runs every check, prints one line each and a summary.
pub fn run(
    config: &Config,
    level: Level,
    network: Option<&Value>,
    terms: Option<&Value>,
) -> Report {
    let full = level == Level::Full;
    let tasks: Vec<Task> = vec![
        (
            "tensor normalization",
            Box::new(|| tensor_normalization(config)),
        ),
        (
            "decomposition reconstruction",
            Box::new(|| reconstruction(config, terms, full)),
        ),
        (
            "network vs oracle",
            Box::new(|| networks(config, network, full)),
        ),
        ("schmidt bound", Box::new(|| schmidt_bound(config, full))),
        (
            "circuit fidelity",
            Box::new(|| circuit_fidelity(config, full)),
        ),
    ];
    let checks: Vec<Check> = thread::scope(|s| {
        let handles: Vec<_> = tasks.iter().map(|(_, f)| s.spawn(f)).collect();
        tasks
            .iter()
            .zip(handles)
            .map(|((name, _), h)| {
                let (status, detail) = match h.join() {
                    Ok(Ok(r)) => r,
                    Ok(Err(e)) => (Status::Fail, e),
                    Err(_) => (Status::Fail, "check panicked".into()),
                };
                Check {
                    name,
                    status,
                    detail,
                }
            })
            .collect()
    });
    for c in &checks {
        let tag = match c.status {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Skip => "SKIP",
        };
        println!("{tag} {}: {}", c.name, c.detail);
    }
    let failed = checks.iter().filter(|c| c.status == Status::Fail).count();
    println!("{} checks, {failed} failed", checks.len());
    Report(checks)
}

fn tensor_normalization(config: &Config) -> Outcome {
    if !config.data.real_scattering() {
        return skip("needs real scattering phases");
    }
    let all = all_choices(config.data.m());
    let t = build_t(&config.data, &all, &all, &all);
    let mut worst = 0.0f64;
    for &c in &all {
        let mat = t.matrix(c);
        let err = (mat.iter().map(|z| z.norm_sqr()).sum::<f64>() - (1u64 << c.len()) as f64).abs();
        worst = worst.max(err);
    }
    if worst > NORM_TOL {
        return fail(format!("deviation {worst:.2e}"));
    }
    pass(format!("{} slices, max deviation {worst:.2e}", all.len()))
}

fn reconstruction(config: &Config, terms: Option<&Value>, full: bool) -> Outcome {
    let oracle = lib(build_dense(&config.data, config.n))?;
    let partition = lib(config.partition())?;
    let mut partitions = Vec::new();
    if partition.len() >= 2 {
        partitions.push(partition.clone());
    }
    let cuts: Vec<usize> = if full {
        (1..config.n).collect()
    } else {
        vec![config.n / 2]
    };
    for cut in cuts.into_iter().filter(|&c| c > 0) {
        partitions.push(lib(LatticePartition::new(vec![cut, config.n - cut]))?);
    }
    let mut worst = 0.0f64;
    let mut count = 0;
    if let Some(v) = terms {
        if partition.len() < 2 {
            return fail("terms need a config partition with at least two parts".into());
        }
        let given = lib(io::terms_from_json(v, &partition))?;
        let err = lib(lib(reconstruct(&config.data, &given, config.n))?.rel_error(&oracle))?;
        if err > ORACLE_TOL {
            return fail(format!("supplied terms: rel err {err:.2e}"));
        }
        worst = err;
        count += 1;
    }
    for p in &partitions {
        let t = lib(multipartite_decompose(&config.data, p))?;
        let err = lib(lib(reconstruct(&config.data, &t, config.n))?.rel_error(&oracle))?;
        if err > ORACLE_TOL {
            return fail(format!("parts {:?}: rel err {err:.2e}", p.sizes()));
        }
        worst = worst.max(err);
        count += 1;
    }
    if count == 0 {
        return skip("single-site lattice");
    }
    pass(format!("{count} decompositions, max rel err {worst:.2e}"))
}

fn networks(config: &Config, network: Option<&Value>, full: bool) -> Outcome {
    let oracle = lib(build_dense(&config.data, config.n))?;
    let partition = lib(config.partition())?;
    let mut nets = Vec::new();
    match network {
        Some(v) => nets.push(("supplied network", lib(io::network_from_json(v))?)),
        None => {
            nets.push(("mps", lib(build_mps(&config.data, &partition, false))?));
            if partition.len().is_power_of_two() {
                nets.push((
                    "binary ttn",
                    lib(build_binary_ttn(&config.data, &partition, false))?,
                ));
            }
            if let Some(t) = &config.tree {
                let tree = lib(PlanarTree::parse(t))?;
                nets.push((
                    "planar ttn",
                    lib(build_planar_ttn(&config.data, &partition, &tree))?,
                ));
            }
            if full {
                let mut rng = ChaCha8Rng::seed_from_u64(0);
                for _ in 0..3 {
                    let l = rng.gen_range(1..=config.n.min(6));
                    let p = lib(LatticePartition::new(regroup(config.n, l)))?;
                    let tree = lib(PlanarTree::random(l, &mut rng))?;
                    nets.push((
                        "random planar ttn",
                        lib(build_planar_ttn(&config.data, &p, &tree))?,
                    ));
                }
            }
        }
    }
    let mut worst = 0.0f64;
    for (name, net) in &nets {
        if net.n() != config.n || net.m() != config.data.m() {
            return fail(format!("{name}: built for N={} M={}", net.n(), net.m()));
        }
        let err = lib(lib(contract_to_dense(net))?.rel_error(&oracle))?;
        if err > ORACLE_TOL {
            return fail(format!("{name}: rel err {err:.2e}"));
        }
        worst = worst.max(err);
    }
    pass(format!("{} networks, max rel err {worst:.2e}", nets.len()))
}

/// `l` contiguous groups of nearly equal size.
fn regroup(n: usize, l: usize) -> Vec<usize> {
    (0..l).map(|i| n / l + usize::from(i < n % l)).collect()
}

fn schmidt_bound(config: &Config, full: bool) -> Outcome {
    let state = lib(build_dense(&config.data, config.n))?;
    let bound = 1usize << config.data.m();
    let cuts: Vec<usize> = if full {
        (1..config.n).collect()
    } else {
        vec![config.n / 2]
    };
    let mut top = 0;
    for &cut in cuts.iter().filter(|&&c| c > 0) {
        let r = lib(schmidt_rank(&state, cut, SCHMIDT_TOL))?;
        if r > bound {
            return fail(format!("cut {cut}: rank {r} above {bound}"));
        }
        top = top.max(r);
    }
    pass(format!(
        "max rank {top} <= {bound} over {} cuts",
        cuts.len()
    ))
}

fn circuit_fidelity(config: &Config, full: bool) -> Outcome {
    let Some(data) = config.data.as_bethe() else {
        return skip("needs (k, theta) Bethe data");
    };
    let m = data.m();
    if m == 0 || !config.n.is_multiple_of(m) || !(config.n / m).is_power_of_two() {
        return skip("needs N = M 2^Z with M >= 1");
    }
    let wirings = if full {
        vec![Wiring::Left, Wiring::Right, Wiring::Mixed]
    } else {
        vec![Wiring::Mixed]
    };
    let mut worst = 0.0f64;
    for w in wirings {
        let f = lib(verify_preparation(data, config.n, w))?;
        if f < 1.0 - FIDELITY_TOL {
            return fail(format!("{w:?} wiring: fidelity {f}"));
        }
        worst = worst.max(1.0 - f);
    }
    pass(format!("max infidelity {worst:.2e}"))
}
