use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use arrmorse::bounds::{certify_all, default_shells, DEFAULT_PER_SHELL};
use arrmorse::flows::{
    base_points, default_log_epsilon, fibration_return_map, integrate, weight_rank, Guards,
};
use arrmorse::master::{find_critical_points_with, CriticalSet, SolverConfig};
use arrmorse::os_aomoto::check_nonresonance;
use arrmorse::report::svg::render_svg;
use arrmorse::{
    build_lattice, essentialize, full_report, parse_arrangement, verify_identities, Arrangement,
    Complex, Field, Lattice, RankReport, ReportConfig, WeightRank, Weights,
};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

#[derive(Parser)]
#[command(name = "arrmorse", version, about = "Morse and Novikov invariants of complex hyperplane arrangements")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Input {
    /// Arrangement JSON file.
    file: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Intersection lattice, Moebius values, rank and chi(M).
    Analyze(Input),
    /// Certified critical points of the master function.
    Crit {
        #[command(flatten)]
        input: Input,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Multistart rounds before giving up.
        #[arg(long, default_value_t = 50)]
        budget: usize,
    },
    /// Critical count against |chi| plus pointwise gradient identities.
    Verify {
        #[command(flatten)]
        input: Input,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Integrates one of the gradient-like fields.
    Flow {
        #[command(flatten)]
        input: Input,
        /// w, minus_w, iota or y.
        #[arg(long)]
        field: Field,
        /// Start point as "re,im;re,im;...", one pair per coordinate.
        #[arg(long)]
        start: String,
        #[arg(long)]
        tmax: f64,
    },
    /// Period return map of the circle-valued flow on a level set.
    Fibration {
        #[command(flatten)]
        input: Input,
        /// Level `eps` of the fibre; the default is chosen from the geometry.
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long, default_value_t = 20)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Sampled certificates for the gradient inequalities near the arrangement.
    Bounds {
        #[command(flatten)]
        input: Input,
        /// Shell distances, comma separated.
        #[arg(long, value_delimiter = ',')]
        shells: Option<Vec<f64>>,
        #[arg(long, default_value_t = DEFAULT_PER_SHELL)]
        per_shell: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Orlik-Solomon dimensions and Aomoto cohomology ranks.
    Resonance(Input),
    /// Full rank report.
    Report {
        #[command(flatten)]
        input: Input,
        /// Compact single-line JSON.
        #[arg(long, conflicts_with = "pretty")]
        json: bool,
        /// Human-readable summary instead of JSON.
        #[arg(long)]
        pretty: bool,
        /// Write an SVG picture (real arrangements in C^2 only).
        #[arg(long)]
        svg: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn load(path: &Path) -> Result<(Arrangement, Weights)> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    parse_arrangement(&bytes).with_context(|| format!("parsing {}", path.display()))
}

/// Writes to stdout; a closed pipe (`arrmorse ... | head`) is not an error.
fn emit(text: &str) -> Result<()> {
    match io::stdout().lock().write_all(text.as_bytes()) {
        Err(e) if e.kind() != io::ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(()),
    }
}

fn print_json<T: Serialize>(value: &T) -> Result<()> {
    emit(&(serde_json::to_string_pretty(value)? + "\n"))
}

fn parse_point(text: &str, dim: usize) -> Result<Vec<Complex>> {
    let z = text
        .split(';')
        .map(|pair| {
            let parts: Vec<&str> = pair.split(',').map(str::trim).collect();
            match parts.as_slice() {
                [re, im] => Ok(Complex::new(re.parse()?, im.parse()?)),
                _ => bail!("expected \"re,im\", got {pair:?}"),
            }
        })
        .collect::<Result<Vec<_>>>()?;
    if z.len() != dim {
        bail!("start point has {} coordinates, the arrangement lives in C^{dim}", z.len());
    }
    Ok(z)
}

#[derive(Serialize)]
struct Analysis<'a> {
    dim: usize,
    hyperplanes: usize,
    rank: usize,
    essential: bool,
    central: bool,
    chi: i64,
    poincare: Vec<u64>,
    weight_rank: WeightRank,
    lattice: &'a Lattice,
}

#[derive(Serialize)]
struct CritOutput {
    /// Critical points were computed on the essential core and lifted.
    essentialized: bool,
    core_dim: usize,
    #[serde(flatten)]
    set: CriticalSet,
    /// Core points lifted to the input space; each is one point of an affine
    /// family of critical points when the input is not essential.
    lifted: Option<Vec<Vec<Complex>>>,
}

fn crit(arr: &Arrangement, w: &Weights, seed: u64, budget: usize) -> Result<CritOutput> {
    let ess = essentialize(arr)?;
    let lat = build_lattice(&ess.core)?;
    let config = SolverConfig {
        seed,
        max_rounds: budget,
        ..SolverConfig::default()
    };
    let set = find_critical_points_with(&ess.core, w, &lat, &config)?;
    let lifted = (!ess.identity).then(|| set.points.iter().map(|p| ess.lift(&p.location)).collect());
    Ok(CritOutput {
        essentialized: !ess.identity,
        core_dim: ess.core.dim(),
        set,
        lifted,
    })
}

#[derive(Serialize)]
struct Verdict {
    chi: i64,
    target: usize,
    found: usize,
    all_certified: bool,
    count_matches_chi: bool,
    identities: arrmorse::IdentityReport,
    passed: bool,
}

fn pretty_report(r: &RankReport) -> String {
    let yes = |b: bool| if b { "yes" } else { "no" };
    let mut s = String::new();
    s.push_str(&format!("ambient dimension   {}\n", r.ambient_dim));
    s.push_str(&format!("rank l              {}\n", r.rank_l));
    s.push_str(&format!("chi(M)              {}\n", r.chi));
    s.push_str(&format!("Novikov ranks       {:?}\n", r.novikov_ranks));
    s.push_str(&format!("critical points     {}\n", r.critical_count));
    s.push_str(&format!("all Morse (l, l)    {}\n", yes(r.morse_all_index_n)));
    s.push_str(&format!("Aomoto agrees       {}\n", yes(r.aomoto_agrees)));
    s.push_str(&format!("consistent          {}\n", yes(r.consistent)));
    s.push_str(&format!("essentialized       {}\n", yes(r.essentialized)));
    for d in &r.diagnostics {
        s.push_str(&format!("note: {d}\n"));
    }
    s
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Analyze(input) => {
            let (arr, w) = load(&input.file)?;
            let lat = build_lattice(&arr)?;
            let wr = weight_rank(&w);
            if let Some(msg) = &wr.warning {
                eprintln!("warning: {msg}");
            }
            print_json(&Analysis {
                dim: arr.dim(),
                hyperplanes: arr.len(),
                rank: lat.rank(),
                essential: lat.is_essential(),
                central: lat.is_central(),
                chi: lat.euler_characteristic(),
                poincare: lat.poincare_coefficients(),
                weight_rank: wr,
                lattice: &lat,
            })
        }
        Command::Crit { input, seed, budget } => {
            let (arr, w) = load(&input.file)?;
            print_json(&crit(&arr, &w, seed, budget)?)
        }
        Command::Verify { input, seed } => {
            let (arr, w) = load(&input.file)?;
            let out = crit(&arr, &w, seed, SolverConfig::default().max_rounds)?;
            let lat = build_lattice(&arr)?;
            let identities = verify_identities(&arr, &w, &lat, 200, seed)?;
            let chi = lat.euler_characteristic();
            let found = out.set.points.len();
            let all_certified = out.set.points.iter().all(|p| p.certified);
            let count_matches_chi = found as i64 == chi.abs();
            let passed = count_matches_chi && all_certified && identities.passed;
            print_json(&Verdict {
                chi,
                target: out.set.target,
                found,
                all_certified,
                count_matches_chi,
                identities,
                passed,
            })
        }
        Command::Flow { input, field, start, tmax } => {
            let (arr, w) = load(&input.file)?;
            let z0 = parse_point(&start, arr.dim())?;
            print_json(&integrate(&arr, &w, field, &z0, tmax, &Guards::default())?)
        }
        Command::Fibration { input, epsilon, samples, seed } => {
            let (arr, w) = load(&input.file)?;
            let lat = build_lattice(&arr)?;
            let log_eps = match epsilon {
                Some(e) if e > 0.0 => e.ln(),
                Some(e) => bail!("epsilon must be positive, got {e}"),
                None => default_log_epsilon(&arr, &w, &lat, seed)?,
            };
            let base = base_points(&arr, &w, &lat, log_eps, samples, seed)?;
            print_json(&fibration_return_map(&arr, &w, log_eps, &base)?)
        }
        Command::Bounds { input, shells, per_shell, seed } => {
            let (arr, w) = load(&input.file)?;
            let lat = build_lattice(&arr)?;
            let shells = shells.unwrap_or_else(|| default_shells(&lat));
            print_json(&certify_all(&arr, &w, &lat, &shells, per_shell, seed)?)
        }
        Command::Resonance(input) => {
            let (arr, w) = load(&input.file)?;
            let lat = build_lattice(&arr)?;
            print_json(&check_nonresonance(&arr, &lat, &w)?)
        }
        Command::Report { input, json, pretty, svg, seed } => {
            let (arr, w) = load(&input.file)?;
            let config = ReportConfig {
                solver: SolverConfig { seed, ..SolverConfig::default() },
            };
            let report = full_report(&arr, &w, &config)?;
            if let Some(path) = svg {
                let lat = build_lattice(&arr)?;
                // Points of a non-essential input live in core coordinates.
                let points = match &report.critical {
                    Some(set) if !report.essentialized => &set.points[..],
                    _ => &[][..],
                };
                let picture = render_svg(&arr, &lat, points)?;
                fs::write(&path, picture).with_context(|| format!("writing {}", path.display()))?;
            }
            if pretty {
                emit(&pretty_report(&report))?;
            } else if json {
                emit(&(serde_json::to_string(&report)? + "\n"))?;
            } else {
                print_json(&report)?;
            }
            Ok(())
        }
    }
}

fn main() {
    if let Err(e) = run(Cli::parse()) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
