use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use xytr_core::algebra::scalar::fmt_scalar;
use xytr_core::io::{density_json, format_multirat, resolve_curve, Cache, CACHE_ENV};
use xytr_core::laplace::{
    brute_force_hurwitz, hodge_table, hurwitz_number, psi_table, IntersectionTable, LaplaceEngine,
};
use xytr_core::tr::{per_dx, TrEngine};
use xytr_core::xy::{Path, XyTransform};
use xytr_core::Error;

#[derive(Parser)]
#[command(name = "xytr", version, about = "Topological recursion and the x-y swap on genus-zero curves, in exact arithmetic")]
struct Cli {
    /// Directory of the correlator cache; caching is off when unset.
    #[arg(long, global = true, env = CACHE_ENV)]
    cache_dir: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Cmd {
    /// W_{g,n} of a curve; --g and --n take a value or an inclusive range a..b.
    Omega {
        #[arg(long)]
        curve: String,
        #[arg(long, default_value = "0")]
        g: String,
        #[arg(long, default_value = "3")]
        n: String,
        /// Print the density against dz_1...dz_n instead of dx_1...dx_n.
        #[arg(long)]
        dz: bool,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
    /// Compares W_{g,n} from the recursion with the x-y relation.
    XyVerify {
        #[arg(long)]
        curve: String,
        #[arg(long)]
        g: Option<u32>,
        #[arg(long)]
        n: Option<usize>,
    },
    /// psi intersection numbers with 2g+n-2 <= max-chi.
    PsiTable {
        #[arg(long, default_value = "3")]
        max_chi: i32,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
    },
    /// Linear Hodge integrals <Lambda(1)/prod(1-k_i psi_i)>.
    HodgeTable {
        #[arg(long, default_value = "1")]
        max_g: u32,
        #[arg(long, default_value = "4")]
        max_degree: u64,
        #[arg(long, default_value = "3")]
        max_n: usize,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
    },
    /// Simple Hurwitz number h_{g;mu}.
    Hurwitz {
        #[arg(long)]
        g: u32,
        /// Comma-separated parts.
        #[arg(long, value_delimiter = ',', required = true)]
        mu: Vec<u64>,
        /// Count coverings directly instead of using the ELSV formula.
        #[arg(long)]
        brute: bool,
    },
    /// Free energy F^(g), g >= 2.
    FreeEnergy {
        #[arg(long)]
        curve: String,
        #[arg(long)]
        g: u32,
    },
    /// Inspect or clear the correlator cache.
    Cache {
        #[command(subcommand)]
        op: CacheOp,
    },
}

#[derive(Subcommand)]
enum CacheOp {
    List {
        #[arg(long)]
        curve: String,
    },
    Clear {
        #[arg(long)]
        curve: String,
    },
    Path,
}

fn range(text: &str) -> Result<std::ops::RangeInclusive<u64>, Error> {
    let bad = || Error::Parse { pos: 0, msg: format!("bad range {text:?}") };
    match text.split_once("..") {
        Some((a, b)) => {
            let a: u64 = a.trim().parse().map_err(|_| bad())?;
            let b: u64 = b.trim().parse().map_err(|_| bad())?;
            if a > b {
                return Err(bad());
            }
            Ok(a..=b)
        }
        None => {
            let a = text.trim().parse().map_err(|_| bad())?;
            Ok(a..=a)
        }
    }
}

fn kind(e: &Error) -> &'static str {
    match e {
        Error::Undefined(_) => "undefined",
        Error::DivisionByZero => "division-by-zero",
        Error::Truncation(_) => "truncation",
        Error::NonvanishingResidue(_) => "nonvanishing-residue",
        Error::Domain(_) => "domain",
        Error::Unsupported(_) => "unsupported",
        Error::NonSimpleRamification(_) => "non-simple-ramification",
        Error::Parse { .. } => "parse",
        Error::Cache(_) => "cache",
        Error::Io(_) => "io",
    }
}

fn emit_table(t: &IntersectionTable, format: Format) {
    match format {
        Format::Json => println!("{}", t.to_json()),
        _ => print!("{}", t.to_csv()),
    }
}

fn engine(curve: &str, cache: &Option<Cache>) -> Result<TrEngine, Error> {
    let tr = TrEngine::new(resolve_curve(curve)?);
    if let Some(c) = cache {
        c.warm(&tr)?;
    }
    Ok(tr)
}

fn run(cli: Cli) -> Result<bool, Error> {
    let cache = cli.cache_dir.map(Cache::new);
    match cli.cmd {
        Cmd::Omega { curve, g, n, dz, format } => {
            let tr = engine(&curve, &cache)?;
            let jobs: Vec<(u32, usize)> = range(&g)?
                .flat_map(|g| range(&n).into_iter().flatten().map(move |n| (g as u32, n as usize)))
                .collect();
            let single = jobs.len() == 1;
            let results: Vec<Result<String, Error>> = std::thread::scope(|s| {
                let handles: Vec<_> = jobs
                    .iter()
                    .map(|&(g, n)| {
                        let tr = &tr;
                        s.spawn(move || -> Result<String, Error> {
                            let d = tr.density(g, n)?;
                            let f = if dz { d.clone() } else { per_dx(&d, tr.curve(), n)? };
                            Ok(match format {
                                Format::Json => json!({
                                    "curve": tr.curve().name, "g": g, "n": n,
                                    "measure": if dz { "dz" } else { "dx" },
                                    "text": format_multirat(&f), "density": density_json(&f, n)?,
                                })
                                .to_string(),
                                _ if single => format_multirat(&f),
                                _ => format!("g={g} n={n}: {}", format_multirat(&f)),
                            })
                        })
                    })
                    .collect();
                handles.into_iter().map(|h| h.join().expect("worker panicked")).collect()
            });
            for r in results {
                println!("{}", r?);
            }
            if let Some(c) = &cache {
                c.persist(&tr)?;
            }
            Ok(true)
        }
        Cmd::XyVerify { curve, g, n } => {
            let tr = engine(&curve, &cache)?;
            let xy = XyTransform::new(resolve_curve(&curve)?)?;
            let cases: Vec<(u32, usize)> = match (g, n) {
                (Some(g), Some(n)) => vec![(g, n)],
                (None, None) => vec![(0, 3), (1, 1), (0, 4), (1, 2), (2, 1)],
                _ => return Err(Error::Domain("give both --g and --n, or neither".into())),
            };
            let mut all = true;
            for (g, n) in cases {
                let order = 2 * g as i64 + n as i64 - 2;
                let ours = per_dx(&tr.density(g, n)?, tr.curve(), n)?;
                let theirs = xy.wn_via_xy(n, order, Path::General)?.coeff(order)?;
                if ours == theirs {
                    println!("PASS g={g} n={n}");
                } else {
                    all = false;
                    println!("FAIL g={g} n={n}");
                    println!("  tr: {}", format_multirat(&ours));
                    println!("  xy: {}", format_multirat(&theirs));
                }
            }
            if let Some(c) = &cache {
                c.persist(&tr)?;
            }
            Ok(all)
        }
        Cmd::PsiTable { max_chi, format } => {
            emit_table(&psi_table(&LaplaceEngine::airy(), max_chi)?, format);
            Ok(true)
        }
        Cmd::HodgeTable { max_g, max_degree, max_n, format } => {
            emit_table(&hodge_table(&LaplaceEngine::lambert(), max_g, max_degree, max_n)?, format);
            Ok(true)
        }
        Cmd::Hurwitz { g, mu, brute } => {
            let h = if brute { brute_force_hurwitz(g, &mu)? } else { hurwitz_number(&LaplaceEngine::lambert(), g, &mu)? };
            println!("{}", fmt_scalar(&h));
            Ok(true)
        }
        Cmd::FreeEnergy { curve, g } => {
            let tr = engine(&curve, &cache)?;
            println!("{}", fmt_scalar(&tr.free_energy(g)?));
            if let Some(c) = &cache {
                c.persist(&tr)?;
            }
            Ok(true)
        }
        Cmd::Cache { op } => {
            let c = cache.ok_or_else(|| Error::Cache(format!("no cache directory; pass --cache-dir or set {CACHE_ENV}")))?;
            match op {
                CacheOp::List { curve } => {
                    for (g, n) in c.entries(&curve)? {
                        c.load(&curve, g, n)?;
                        println!("g={g} n={n}");
                    }
                }
                CacheOp::Clear { curve } => println!("removed {}", c.clear(&curve)?),
                CacheOp::Path => println!("{}", c.dir().display()),
            }
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("{}", json!({"error": kind(&e), "message": e.to_string()}));
            ExitCode::from(2)
        }
    }
}
