//! `bethe`: build, contract, decompose and compile Bethe wavefunctions from
//! JSON configs. See the README for the file formats.

mod bench;
mod verify;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context};
use bethe_tn::dense::schmidt_values;
use bethe_tn::io::{self, Config};
use bethe_tn::network::TensorNetwork;
use bethe_tn::overlap::network_overlap;
use bethe_tn::prelude::*;
use clap::{Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

#[derive(Parser)]
#[command(
    name = "bethe",
    version,
    about = "Exact tensor networks and circuits for Bethe wavefunctions"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a dense state or tensor network from a config.
    Build {
        config: PathBuf,
        #[arg(long, value_enum, default_value = "mps")]
        format: Format,
        /// Planar tree as a bracket string or a file holding one.
        #[arg(long)]
        tree: Option<String>,
        /// Share one tensor per layer (uniform partitions, Bethe data only).
        #[arg(long)]
        homogeneous: bool,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Overlap <a|b> of two states given as configs, networks or dense files.
    Overlap {
        a: PathBuf,
        b: PathBuf,
        #[arg(long, value_enum, default_value = "mps")]
        method: Method,
    },
    /// Schmidt ranks and entanglement entropies across lattice cuts.
    Schmidt {
        input: PathBuf,
        /// Single cut (sites to the left); all cuts when omitted.
        #[arg(long)]
        cut: Option<usize>,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
    },
    /// Decompose over the config partition, or over a ring with --wrap-left.
    Decompose {
        config: PathBuf,
        /// Sites of the first part kept on the left end; the rest wrap to the right end.
        #[arg(long)]
        wrap_left: Option<usize>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Compile the preparation circuit (N = M 2^Z, Bethe data only).
    Circuit {
        config: PathBuf,
        #[arg(long, value_enum, default_value = "mixed")]
        wiring: WiringArg,
        /// Simulate and report the fidelity with the normalized oracle state.
        #[arg(long)]
        verify: bool,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Run the invariant checks; exit code 0 iff every check passes.
    Verify {
        config: PathBuf,
        #[arg(long, value_enum, default_value = "quick")]
        level: verify::Level,
        /// Network file to check against the oracle instead of fresh builds.
        #[arg(long)]
        network: Option<PathBuf>,
        /// Decomposition terms (over the config partition) to check instead of fresh ones.
        #[arg(long)]
        terms: Option<PathBuf>,
    },
    /// Time dense, MPS and transfer-matrix overlaps; CSV on stdout.
    Bench {
        /// Particle numbers: `a..b` or a comma list.
        #[arg(long, default_value = "1..3")]
        m: String,
        /// Lattice sizes: `a..b` or a comma list.
        #[arg(long, default_value = "8,16,32,64,128,256,512,1024")]
        n: String,
        #[arg(long, default_value_t = 5)]
        reps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Print a config with random data.
    Random {
        #[arg(long)]
        m: usize,
        #[arg(long)]
        n: usize,
        /// Complex orbitals and scattering phases.
        #[arg(long)]
        generalized: bool,
        /// Part sizes, comma separated.
        #[arg(long, value_delimiter = ',')]
        partition: Option<Vec<usize>>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Copy, Clone, ValueEnum)]
enum Format {
    Dense,
    Mps,
    Ttn,
    Planar,
}

#[derive(Copy, Clone, PartialEq, ValueEnum)]
enum Method {
    Dense,
    Mps,
    Ttn,
    Transfer,
    All,
}

#[derive(Copy, Clone, ValueEnum)]
enum WiringArg {
    Left,
    Right,
    Mixed,
}

impl From<WiringArg> for Wiring {
    fn from(w: WiringArg) -> Self {
        match w {
            WiringArg::Left => Wiring::Left,
            WiringArg::Right => Wiring::Right,
            WiringArg::Mixed => Wiring::Mixed,
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    match cli.command {
        Command::Build {
            config,
            format,
            tree,
            homogeneous,
            output,
        } => build(&load_config(&config)?, format, tree, homogeneous, output)?,
        Command::Overlap { a, b, method } => overlap(&load_input(&a)?, &load_input(&b)?, method)?,
        Command::Schmidt { input, cut, tol } => schmidt(&load_input(&input)?, cut, tol)?,
        Command::Decompose {
            config,
            wrap_left,
            output,
        } => decompose(&load_config(&config)?, wrap_left, output)?,
        Command::Circuit {
            config,
            wiring,
            verify,
            output,
        } => circuit(&load_config(&config)?, wiring.into(), verify, output)?,
        Command::Verify {
            config,
            level,
            network,
            terms,
        } => {
            let config = load_config(&config)?;
            let network = network.map(|p| read_json(&p)).transpose()?;
            let terms = terms.map(|p| read_json(&p)).transpose()?;
            let report = verify::run(&config, level, network.as_ref(), terms.as_ref());
            return Ok(if report.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            });
        }
        Command::Bench { m, n, reps, seed } => bench::run(
            &parse_list(&m)?,
            &parse_list(&n)?,
            reps.max(1),
            seed,
            &mut std::io::stdout(),
        )?,
        Command::Random {
            m,
            n,
            generalized,
            partition,
            seed,
        } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let data = if generalized {
                AnyData::Generalized(GeneralizedBetheData::random(m, n, &mut rng))
            } else {
                AnyData::Bethe(BetheData::random(m, &mut rng))
            };
            let config = Config {
                data,
                n,
                partition,
                tree: None,
            };
            // validates the partition
            Config::from_json(&config.to_json())?;
            println!("{}", io::to_canonical_string(&config.to_json()));
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn read_json(path: &Path) -> anyhow::Result<Value> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    io::parse_json(&text).with_context(|| format!("in {}", path.display()))
}

fn load_config(path: &Path) -> anyhow::Result<Config> {
    Config::from_json(&read_json(path)?).with_context(|| format!("in {}", path.display()))
}

fn write_output(value: &Value, output: Option<&Path>) -> anyhow::Result<()> {
    let text = io::to_canonical_string(value);
    match output {
        Some(path) => {
            fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
        }
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

/// Summary lines go to stdout when the artifact goes to a file.
fn report(line: &str, output: Option<&Path>) {
    if output.is_some() {
        println!("{line}");
    } else {
        eprintln!("{line}");
    }
}

enum Input {
    Config(Config),
    Network(TensorNetwork),
    Dense(DenseState),
}

fn load_input(path: &Path) -> anyhow::Result<Input> {
    let v = read_json(path)?;
    let input = if v.get("schema_version").is_some() {
        Input::Config(Config::from_json(&v)?)
    } else if v.get("kind").is_some() {
        Input::Network(io::network_from_json(&v)?)
    } else if v.get("amps").is_some() {
        Input::Dense(io::dense_from_json(&v)?)
    } else {
        bail!("{}: not a config, network or dense state", path.display());
    };
    Ok(input)
}

fn parse_list(s: &str) -> anyhow::Result<Vec<usize>> {
    if let Some((a, b)) = s.split_once("..") {
        let (a, b): (usize, usize) = (a.trim().parse()?, b.trim().parse()?);
        return Ok((a..=b).collect());
    }
    s.split(',')
        .map(|x| {
            x.trim()
                .parse()
                .with_context(|| format!("bad number {x:?}"))
        })
        .collect()
}

fn resolve_tree(arg: Option<String>, config: &Config) -> anyhow::Result<PlanarTree> {
    let text = match arg {
        Some(t) if Path::new(&t).is_file() => fs::read_to_string(&t)?.trim().to_string(),
        Some(t) => t,
        None => config
            .tree
            .clone()
            .context("planar format needs --tree or a config tree")?,
    };
    Ok(PlanarTree::parse(&text)?)
}

fn build(
    config: &Config,
    format: Format,
    tree: Option<String>,
    homogeneous: bool,
    output: Option<PathBuf>,
) -> anyhow::Result<()> {
    let out = output.as_deref();
    let partition = config.partition()?;
    let m = config.data.m();
    let net = match format {
        Format::Dense => {
            let state = build_dense(&config.data, config.n)?;
            report(
                &format!(
                    "dense M={m} N={} amplitudes {}",
                    config.n,
                    state.amplitudes().len()
                ),
                out,
            );
            return write_output(&io::dense_to_json(&state), out);
        }
        Format::Mps => build_mps(&config.data, &partition, homogeneous)?,
        Format::Ttn => build_binary_ttn(&config.data, &partition, homogeneous)?,
        Format::Planar => build_planar_ttn(&config.data, &partition, &resolve_tree(tree, config)?)?,
    };
    let mut line = format!(
        "{} M={m} N={} parts {} max bond {} nonzeros {}",
        match &net {
            TensorNetwork::Mps(_) => "mps",
            TensorNetwork::Tree(_) => "ttn",
        },
        config.n,
        partition.len(),
        net.max_bond_dim(),
        net.nnz()
    );
    if let TensorNetwork::Mps(mps) = &net {
        line.push_str(&format!(" bonds {:?}", mps.bond_dims()));
    }
    report(&line, out);
    write_output(&io::network_to_json(&net), out)
}

fn method_name(method: Method) -> &'static str {
    match method {
        Method::Dense => "dense",
        Method::Mps => "mps",
        Method::Ttn => "ttn",
        Method::Transfer => "transfer",
        Method::All => "all",
    }
}

fn dense_of(input: &Input) -> anyhow::Result<DenseState> {
    Ok(match input {
        Input::Config(c) => build_dense(&c.data, c.n)?,
        Input::Network(net) => contract_to_dense(net)?,
        Input::Dense(d) => d.clone(),
    })
}

fn network_of(input: &Input, method: Method) -> anyhow::Result<TensorNetwork> {
    match (input, method) {
        (Input::Config(c), Method::Mps) => Ok(build_mps(&c.data, &c.partition()?, false)?),
        (Input::Config(c), Method::Transfer) => Ok(build_mps(
            &c.data,
            &LatticePartition::uniform(c.n, 1)?,
            true,
        )?),
        (Input::Config(c), Method::Ttn) => Ok(match &c.tree {
            Some(t) => build_planar_ttn(&c.data, &c.partition()?, &PlanarTree::parse(t)?)?,
            None => build_binary_ttn(&c.data, &c.partition()?, false)?,
        }),
        (Input::Network(net), _) => Ok(net.clone()),
        (Input::Dense(_), _) => bail!("a dense state only supports --method dense"),
        (Input::Config(_), _) => unreachable!(),
    }
}

fn overlap_with(a: &Input, b: &Input, method: Method) -> anyhow::Result<(C64, f64, f64)> {
    if method == Method::Dense {
        let (da, db) = (dense_of(a)?, dense_of(b)?);
        return Ok((inner_product(&da, &db)?, da.norm_sqr(), db.norm_sqr()));
    }
    let (na, nb) = (network_of(a, method)?, network_of(b, method)?);
    let pair = |x: &TensorNetwork, y: &TensorNetwork| -> anyhow::Result<C64> {
        Ok(match method {
            Method::Transfer => homogeneous_mps_overlap(x, y, x.n())?,
            Method::Mps if !matches!(x, TensorNetwork::Mps(_)) => {
                bail!("mps method needs MPS inputs")
            }
            Method::Ttn if !matches!(x, TensorNetwork::Tree(_)) => {
                bail!("ttn method needs tree inputs")
            }
            _ => network_overlap(x, y)?,
        })
    };
    Ok((pair(&na, &nb)?, pair(&na, &na)?.re, pair(&nb, &nb)?.re))
}

fn overlap(a: &Input, b: &Input, method: Method) -> anyhow::Result<()> {
    let methods = match method {
        Method::All => vec![Method::Dense, Method::Mps, Method::Ttn, Method::Transfer],
        m => vec![m],
    };
    let mut results = Vec::new();
    let mut values = Vec::new();
    for m in methods {
        let start = Instant::now();
        match overlap_with(a, b, m) {
            Ok((z, na, nb)) => {
                results.push(io::overlap_to_json(
                    z,
                    na,
                    nb,
                    method_name(m),
                    start.elapsed().as_secs_f64(),
                ));
                values.push(z);
            }
            Err(e) if method == Method::All => {
                results.push(json!({"method": method_name(m), "skipped": format!("{e:#}")}));
            }
            Err(e) => return Err(e),
        }
    }
    if method != Method::All {
        return write_output(&results[0], None);
    }
    let spread = values
        .iter()
        .flat_map(|x| values.iter().map(move |y| (x - y).norm()))
        .fold(0.0, f64::max);
    write_output(
        &json!({"results": results, "max_disagreement": spread}),
        None,
    )
}

fn schmidt(input: &Input, cut: Option<usize>, tol: f64) -> anyhow::Result<()> {
    let state = dense_of(input)?;
    let cuts: Vec<usize> = match cut {
        Some(c) => vec![c],
        None => (1..state.n()).collect(),
    };
    let mut rows = Vec::new();
    for c in cuts {
        let values = schmidt_values(&state, c)?;
        let rank = schmidt_rank(&state, c, tol)?;
        let total: f64 = values.iter().map(|s| s * s).sum();
        let entropy = if total > 0.0 {
            -values
                .iter()
                .map(|s| s * s / total)
                .filter(|&p| p > 0.0)
                .map(|p| p * p.ln())
                .sum::<f64>()
        } else {
            0.0
        };
        rows.push(json!({"cut": c, "rank": rank, "entropy": entropy}));
    }
    let bound = 1u64.checked_shl(state.m() as u32).unwrap_or(u64::MAX);
    write_output(
        &json!({"N": state.n(), "M": state.m(), "bound": bound, "cuts": rows}),
        None,
    )
}

fn decompose(
    config: &Config,
    wrap_left: Option<usize>,
    output: Option<PathBuf>,
) -> anyhow::Result<()> {
    let out = output.as_deref();
    let sizes = config.partition()?.sizes().to_vec();
    let oracle = build_dense(&config.data, config.n).ok();
    let (value, count, error) = match wrap_left {
        Some(left) => {
            if sizes.len() < 2 || left > sizes[0] {
                bail!(
                    "ring needs at least two parts and --wrap-left <= {}",
                    sizes[0]
                );
            }
            let ring = RingPartition::new(left, sizes[1..].to_vec(), sizes[0] - left)?;
            let terms = contiguous_decompose(&config.data, &ring)?;
            let error = match &oracle {
                Some(o) => Some(reconstruct_contiguous(&config.data, &ring, &terms)?.rel_error(o)?),
                None => None,
            };
            let value = json!({
                "ring": {"left": left, "middle": &sizes[1..], "right": sizes[0] - left},
                "terms": io::contiguous_terms_to_json(&terms),
            });
            (value, terms.len(), error)
        }
        None => {
            let partition = config.partition()?;
            if partition.len() < 2 {
                bail!("decomposition needs a partition with at least two parts");
            }
            let terms = multipartite_decompose(&config.data, &partition)?;
            let error = match &oracle {
                Some(o) => Some(reconstruct(&config.data, &terms, config.n)?.rel_error(o)?),
                None => None,
            };
            (
                json!({"partition": sizes, "terms": io::terms_to_json(&terms)}),
                terms.len(),
                error,
            )
        }
    };
    let error = error.map_or("not checked (beyond oracle bound)".to_string(), |e| {
        format!("{e:.2e}")
    });
    report(&format!("{count} terms, reconstruction error {error}"), out);
    write_output(&value, out)
}

fn circuit(
    config: &Config,
    wiring: Wiring,
    verify: bool,
    output: Option<PathBuf>,
) -> anyhow::Result<()> {
    let out = output.as_deref();
    let data = config
        .data
        .as_bethe()
        .context("circuits need (k, theta) Bethe data")?;
    let c = compile_circuit(data, config.n, wiring)?;
    report(&c.summary(), out);
    if verify {
        let f = verify_preparation(data, config.n, wiring)?;
        report(&format!("fidelity {f:.15}"), out);
    }
    write_output(&io::circuit_to_json(&c), out)
}
