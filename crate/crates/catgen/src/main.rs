//! Writes the labeled curve catalogs bundled under `data/`.

use std::path::PathBuf;

use clap::Parser;

use catgen::{generate_catalog, subsample};
use mnrank::dataset::{write_catalog, CurveCatalog};
use mnrank::primes::sieve_primes;

#[derive(Parser)]
#[command(name = "catgen", about = "Generate labeled elliptic-curve catalogs")]
struct Cli {
    /// Keep curves with conductor (= |discriminant|) below this bound.
    #[arg(long, default_value_t = 1_000_000)]
    max_conductor: u64,
    /// Enumerate a4 in [-range, range].
    #[arg(long, default_value_t = 24)]
    a4_range: i64,
    /// Enumerate a6 in [-range, range].
    #[arg(long, default_value_t = 48)]
    a6_range: i64,
    /// Full catalog output path.
    #[arg(long)]
    out: PathBuf,
    /// Optional subsample output path.
    #[arg(long)]
    sample_out: Option<PathBuf>,
    #[arg(long, default_value_t = 1000)]
    sample_size: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cli = Cli::parse();
    // Dirichlet coefficients need primes up to 3·√max_conductor.
    let limit = (3.0 * (cli.max_conductor as f64).sqrt()).ceil() as u64 + 2;
    let table = sieve_primes(limit.max(100))?;
    let curves = generate_catalog(cli.max_conductor, cli.a4_range, cli.a6_range, &table)?;
    let mut per_rank = [0usize; 4];
    for c in &curves {
        per_rank[c.rank as usize] += 1;
    }
    eprintln!(
        "{} curves (rank 0/1/2/3: {}/{}/{}/{})",
        curves.len(),
        per_rank[0],
        per_rank[1],
        per_rank[2],
        per_rank[3]
    );
    let catalog = CurveCatalog {
        curves,
        source: cli.out.display().to_string(),
    };
    write_catalog(&cli.out, &catalog)?;
    if let Some(sample_out) = cli.sample_out {
        let sample = CurveCatalog {
            curves: subsample(&catalog.curves, cli.sample_size, cli.seed),
            source: sample_out.display().to_string(),
        };
        write_catalog(&sample_out, &sample)?;
    }
    Ok(())
}
