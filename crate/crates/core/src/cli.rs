//! The `qusc` command line: argument definitions and command bodies.

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::io::{CenterFile, Format};
use crate::model::{Metric, ScaledPoint, YoungDiagram};
use crate::oracle::{brute_nearest, random_queries, OracleConfig};
use crate::scattering::{
    build_scattering_with, embed_scattering, verify_points, Truncation, UniformityReport,
};
use crate::search::{nearest_center_with_stats, query_batch, QueryResult};

pub const EXIT_OK: u8 = 0;
pub const EXIT_INPUT: u8 = 2;
pub const EXIT_VERIFY: u8 = 3;

/// Largest euclidean prefix ratio `verify` accepts.
pub const RATIO_LIMIT: f64 = 2.0 + 1e-9;

#[derive(Debug, Parser)]
#[command(name = "qusc", version, about = "Quasi-uniform scatterings on A_n weight polytopes")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a scattering and write its centers.
    Generate(GenerateArgs),
    /// Nearest centers for points given inline or one per line on stdin.
    Query(QueryArgs),
    /// Check quasi-uniformity of a center file.
    Verify(VerifyArgs),
    /// Append a coordinate 1 to every center.
    Embed(EmbedArgs),
    /// Time structured search against a full scan.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
pub struct DiagramArgs {
    /// Nonzero row lengths, e.g. `2,1,1`.
    #[arg(long, value_delimiter = ',', required = true)]
    pub lambda: Vec<i64>,
    /// Rank `n` of `A_n`; rows are padded with zeros to `n + 1`. Defaults to
    /// the number of given rows.
    #[arg(long)]
    pub rank: Option<usize>,
}

impl DiagramArgs {
    fn diagram(&self) -> Result<YoungDiagram> {
        let lambda = YoungDiagram::from_parts(&self.lambda, self.rank)?;
        if lambda.rank() < 2 {
            return Err(Error::InvalidDiagram {
                rows: lambda.rows().to_vec(),
                reason: "rank must be at least 2",
            });
        }
        Ok(lambda)
    }
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[command(flatten)]
    pub diagram: DiagramArgs,
    /// Highest subdivision level `K`.
    #[arg(long, default_value_t = 0)]
    pub levels: u32,
    #[arg(long)]
    pub max_points: Option<usize>,
    /// Truncate only at Weyl orbit boundaries.
    #[arg(long)]
    pub whole_orbits: bool,
    /// binary, jsonl or csv; guessed from the extension by default.
    #[arg(long)]
    pub format: Option<Format>,
    #[arg(long, short)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct QueryArgs {
    #[arg(long)]
    pub centers: PathBuf,
    #[arg(long)]
    pub format: Option<Format>,
    /// Comma-separated coordinates; without it, queries are read from stdin.
    #[arg(long, allow_hyphen_values = true)]
    pub point: Option<String>,
    #[arg(long, short, default_value_t = 1)]
    pub k: usize,
    #[arg(long, default_value = "euclidean")]
    pub metric: Metric,
    /// Re-run every query by full scan and exit 3 on any disagreement.
    #[arg(long)]
    pub verify: bool,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long)]
    pub centers: PathBuf,
    #[arg(long)]
    pub format: Option<Format>,
    /// Also report every `stride`-th prefix; level boundaries are always
    /// reported.
    #[arg(long, default_value_t = 0)]
    pub stride: usize,
    /// Include the per-prefix table in the output.
    #[arg(long)]
    pub prefixes: bool,
}

#[derive(Debug, Args)]
pub struct EmbedArgs {
    #[arg(long)]
    pub centers: PathBuf,
    #[arg(long)]
    pub format: Option<Format>,
    #[arg(long, short)]
    pub out: PathBuf,
    #[arg(long)]
    pub out_format: Option<Format>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[command(flatten)]
    pub diagram: DiagramArgs,
    #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
    pub levels: Vec<u32>,
    #[arg(long, default_value_t = 200)]
    pub queries: usize,
    #[arg(long, short, value_delimiter = ',', default_value = "1,2,4,8")]
    pub k: Vec<usize>,
    #[arg(long, default_value_t = OracleConfig::default().seed)]
    pub seed: u64,
}

/// Runs a parsed command; errors map to exit code 2.
pub fn run(cli: Cli) -> ExitCode {
    let outcome = match cli.command {
        Command::Generate(a) => generate(&a),
        Command::Query(a) => with_threads(|| query(&a)),
        Command::Verify(a) => verify(&a),
        Command::Embed(a) => embed(&a),
        Command::Bench(a) => bench(&a),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_INPUT)
        }
    }
}

/// Applies `QUSC_THREADS` to the worker pool used by batched queries.
fn with_threads<T: Send>(f: impl FnOnce() -> T + Send) -> T {
    #[cfg(feature = "parallel")]
    if let Some(n) = std::env::var("QUSC_THREADS").ok().and_then(|v| v.parse().ok()) {
        if let Ok(pool) = rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            return pool.install(f);
        }
    }
    f()
}

fn read_centers(path: &Path, format: Option<Format>) -> Result<CenterFile> {
    let format = format.unwrap_or_else(|| Format::from_path(path));
    let file = File::open(path)?;
    CenterFile::read(BufReader::new(file), format)
}

fn write_centers(file: &CenterFile, path: &Path, format: Option<Format>) -> Result<()> {
    let format = format.unwrap_or_else(|| Format::from_path(path));
    let out = BufWriter::new(File::create(path)?);
    file.write(out, format)
}

#[derive(Serialize)]
struct GenerateSummary {
    lambda: Vec<i64>,
    levels: u32,
    count: usize,
    per_level: Vec<usize>,
    format: String,
}

fn generate(a: &GenerateArgs) -> Result<u8> {
    let lambda = a.diagram.diagram()?;
    let truncation = if a.whole_orbits {
        Truncation::WholeOrbits
    } else {
        Truncation::Exact
    };
    let s = build_scattering_with(&lambda, a.levels, a.max_points, truncation)?;
    let file = CenterFile::from_scattering(&s);
    write_centers(&file, &a.out, a.format)?;
    let per_level = (0..=a.levels).map(|k| s.level_block(k).len()).collect();
    let summary = GenerateSummary {
        lambda: lambda.rows().to_vec(),
        levels: a.levels,
        count: s.len(),
        per_level,
        format: a.format.unwrap_or_else(|| Format::from_path(&a.out)).to_string(),
    };
    println!("{}", to_json(&summary));
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct NeighborRecord {
    index: usize,
    exact: Vec<String>,
    coords: Vec<f64>,
    distance: f64,
}

#[derive(Serialize)]
struct QueryRecord<'a> {
    query: &'a [f64],
    metric: &'static str,
    neighbors: Vec<NeighborRecord>,
}

fn query_record(r: &QueryResult) -> QueryRecord<'_> {
    QueryRecord {
        query: &r.query,
        metric: r.metric.name(),
        neighbors: r
            .neighbors
            .iter()
            .map(|n| NeighborRecord {
                index: n.index,
                exact: n.point.exact_strings(),
                coords: n.point.to_f64(),
                distance: n.distance,
            })
            .collect(),
    }
}

/// Parses coordinates separated by commas and/or whitespace.
pub fn parse_point(line: &str) -> Result<Vec<f64>> {
    line.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<f64>()
                .map_err(|_| Error::Format(format!("bad coordinate {t:?}")))
        })
        .collect()
}

const QUERY_CHUNK: usize = 4096;

fn query(a: &QueryArgs) -> Result<u8> {
    let s = read_centers(&a.centers, a.format)?.into_scattering()?;
    let stdout = io::stdout();
    let mut out = BufWriter::new(stdout.lock());
    let mut mismatches = 0usize;
    let mut run_chunk = |points: &[Vec<f64>], out: &mut dyn Write| -> Result<()> {
        for (p, r) in points.iter().zip(query_batch(points, &s, a.k, a.metric)) {
            let r = r?;
            if a.verify {
                let want = brute_nearest(p, s.centers(), a.k, a.metric);
                if want.indices() != r.indices() {
                    mismatches += 1;
                }
            }
            writeln!(out, "{}", to_json(&query_record(&r)))?;
        }
        Ok(())
    };
    if let Some(point) = &a.point {
        run_chunk(&[parse_point(point)?], &mut out)?;
    } else {
        let stdin = io::stdin();
        let mut chunk = Vec::with_capacity(QUERY_CHUNK);
        for line in stdin.lock().lines() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            chunk.push(parse_point(&line)?);
            if chunk.len() == QUERY_CHUNK {
                run_chunk(&chunk, &mut out)?;
                chunk.clear();
            }
        }
        run_chunk(&chunk, &mut out)?;
    }
    out.flush()?;
    if mismatches > 0 {
        eprintln!("verification failed: {mismatches} queries disagree with the full scan");
        return Ok(EXIT_VERIFY);
    }
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct VerifySummary<'a> {
    centers: usize,
    worst_euclidean_ratio: f64,
    worst_cosine_ratio: f64,
    shape_ratio: f64,
    cosine_exponent_bound: f64,
    cosine_provable_bound: f64,
    level_equidistant: &'a [bool],
    #[serde(skip_serializing_if = "Option::is_none")]
    prefixes: Option<&'a [crate::scattering::PrefixStat]>,
}

fn verify(a: &VerifyArgs) -> Result<u8> {
    let file = read_centers(&a.centers, a.format)?;
    let offsets = file.level_offsets();
    let report: UniformityReport = verify_points(&file.lambda, &file.centers, &offsets, a.stride)?;
    let summary = VerifySummary {
        centers: report.centers,
        worst_euclidean_ratio: report.worst_euclidean_ratio,
        worst_cosine_ratio: report.worst_cosine_ratio,
        shape_ratio: report.shape_ratio,
        cosine_exponent_bound: report.cosine_exponent_bound,
        cosine_provable_bound: report.cosine_provable_bound,
        level_equidistant: &report.level_equidistant,
        prefixes: a.prefixes.then_some(&report.prefixes[..]),
    };
    println!("{}", to_json(&summary));
    // NaN (two coincident points only) must fail as well.
    if report.worst_euclidean_ratio <= RATIO_LIMIT {
        Ok(EXIT_OK)
    } else {
        eprintln!(
            "verification failed: euclidean ratio {} exceeds {RATIO_LIMIT}",
            report.worst_euclidean_ratio
        );
        Ok(EXIT_VERIFY)
    }
}

fn embed(a: &EmbedArgs) -> Result<u8> {
    let s = read_centers(&a.centers, a.format)?.into_scattering()?;
    let embedded = embed_scattering(&s)?;
    let file = CenterFile::from_scattering(&embedded);
    write_centers(&file, &a.out, a.out_format.or(a.format))?;
    println!(
        "{}",
        to_json(&serde_json::json!({
            "lambda": embedded.lambda().rows(),
            "dimension": embedded.dim(),
            "count": embedded.len(),
        }))
    );
    Ok(EXIT_OK)
}

/// One row of the benchmark table.
#[derive(Debug, Clone, Serialize)]
pub struct BenchRow {
    pub levels: u32,
    pub k: usize,
    pub centers: usize,
    pub structured_us: f64,
    pub brute_us: f64,
    pub speedup: f64,
    pub candidates: f64,
    pub seed_hit_rate: f64,
}

/// Times euclidean queries by the structured search and by a flat scan
/// over precomputed float coordinates.
pub fn bench_rows(
    lambda: &YoungDiagram,
    levels: &[u32],
    ks: &[usize],
    queries: usize,
    seed: u64,
) -> Result<Vec<BenchRow>> {
    let cfg = OracleConfig {
        seed,
        ..Default::default()
    };
    let qs = random_queries(&mut cfg.rng(), lambda, queries.max(1));
    let mut rows = Vec::new();
    for &level in levels {
        let s = crate::scattering::build_scattering(lambda, level, None)?;
        let flat: Vec<f64> = s.centers().iter().flat_map(ScaledPoint::to_f64).collect();
        let d = s.dim();
        for &k in ks {
            let k = k.max(1);
            let (mut candidates, mut hits) = (0usize, 0usize);
            let start = Instant::now();
            for q in &qs {
                let (_, stats) = nearest_center_with_stats(q, &s, k, Metric::Euclidean)?;
                candidates += stats.candidates;
                hits += usize::from(stats.seed_exact);
            }
            let structured = start.elapsed().as_secs_f64();

            let mut scratch = vec![0.0f64; s.len()];
            let mut sink = 0.0;
            let start = Instant::now();
            for q in &qs {
                for (slot, c) in scratch.iter_mut().zip(flat.chunks_exact(d)) {
                    *slot = q.iter().zip(c).map(|(x, y)| (x - y) * (x - y)).sum();
                }
                let kk = k.min(scratch.len()) - 1;
                let (_, kth, _) = scratch.select_nth_unstable_by(kk, f64::total_cmp);
                sink += *kth;
            }
            let brute = start.elapsed().as_secs_f64();
            std::hint::black_box(sink);

            let n = qs.len() as f64;
            rows.push(BenchRow {
                levels: level,
                k,
                centers: s.len(),
                structured_us: structured / n * 1e6,
                brute_us: brute / n * 1e6,
                speedup: brute / structured,
                candidates: candidates as f64 / n,
                seed_hit_rate: hits as f64 / n,
            });
        }
    }
    Ok(rows)
}

fn bench(a: &BenchArgs) -> Result<u8> {
    let lambda = a.diagram.diagram()?;
    let rows = bench_rows(&lambda, &a.levels, &a.k, a.queries, a.seed)?;
    let mut w = csv::Writer::from_writer(io::stdout());
    for row in rows {
        w.serialize(row).map_err(|e| Error::Format(e.to_string()))?;
    }
    w.flush()?;
    Ok(EXIT_OK)
}

fn to_json<T: Serialize>(v: &T) -> String {
    serde_json::to_string(v).expect("plain data serializes")
}
