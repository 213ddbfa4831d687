//! `sat2track`: compile CNF formulas into tracks, solve and check them.
//!
//! Exit status: 0 for a positive answer (complete, solved, satisfiable,
//! all agree), 1 for a negative one, 2 for errors.

use std::fmt;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use sat2track::cnf::{self, Assignment, CnfError};
use sat2track::compile::{self, CompileError};
use sat2track::corpus;
use sat2track::engine::{self, EquivalenceLimits, SolveLimits};
use sat2track::layout;
use sat2track::render;
use sat2track::track::{Certificate, RespawnPolicy, Track};

#[derive(Parser, Debug)]
#[command(name = "sat2track", version, about = "3-SAT to racing-track compiler and track engine")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    options: Options,
}

#[derive(clap::Args, Debug, Clone)]
struct Options {
    /// Output file (or directory, for `render` without `--layer`); stdout if omitted.
    #[arg(short, long, global = true, env = "SAT2TRACK_OUTPUT")]
    output: Option<PathBuf>,
    /// Respawn policy used when driving.
    #[arg(long, global = true, value_parser = parse_policy, default_value = "fixed", env = "SAT2TRACK_RESPAWN")]
    respawn: RespawnPolicy,
    /// Largest variable count the exhaustive SAT oracle accepts.
    #[arg(long, global = true, default_value_t = cnf::DEFAULT_ORACLE_LIMIT, value_parser = positive, env = "SAT2TRACK_MAX_VARS")]
    max_vars: usize,
    /// Largest checkpoint count the solver accepts.
    #[arg(long, global = true, default_value_t = SolveLimits::default().max_checkpoints, value_parser = positive, env = "SAT2TRACK_MAX_CHECKPOINTS")]
    max_checkpoints: usize,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Parse, normalize and compile a DIMACS CNF file into a track.
    Compile {
        cnf: PathBuf,
        #[arg(long, value_enum, default_value = "none", env = "SAT2TRACK_LAYOUT")]
        layout: LayoutChoice,
    },
    /// Search for a shortest certificate completing the track.
    Solve { track: PathBuf },
    /// Check a certificate against a track.
    Verify { track: PathBuf, certificate: PathBuf },
    /// Read the truth assignment off a completing certificate.
    Extract { track: PathBuf, certificate: PathBuf },
    /// Turn an assignment (`v 1 -2 0` lines) into a certificate and check it.
    Drive { track: PathBuf, assignment: PathBuf },
    /// Draw the track as SVG, one image per altitude layer.
    Render {
        track: PathBuf,
        #[arg(long, allow_negative_numbers = true, env = "SAT2TRACK_LAYER")]
        layer: Option<i32>,
    },
    /// Print size figures for a track.
    Stats { track: PathBuf },
    /// Decide a CNF file with the exhaustive oracle.
    Oracle { cnf: PathBuf },
    /// Compare the oracle with the solver over a seeded corpus.
    Equivalence {
        #[arg(long, default_value_t = corpus::DEFAULT_SEED, env = "SAT2TRACK_SEED")]
        seed: u64,
        #[arg(long, default_value_t = corpus::DEFAULT_COUNT, value_parser = positive, env = "SAT2TRACK_COUNT")]
        count: usize,
        /// Largest variable count of the random formulas.
        #[arg(long, default_value_t = corpus::DEFAULT_MAX_VARIABLES, value_parser = positive)]
        corpus_vars: usize,
        /// Largest clause count of the random formulas.
        #[arg(long, default_value_t = corpus::DEFAULT_MAX_CLAUSES, value_parser = positive)]
        corpus_clauses: usize,
        /// Instead of the equivalence check, report where the three respawn
        /// policies disagree on completability.
        #[arg(long)]
        respawn_report: bool,
    },
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum LayoutChoice {
    Comb,
    None,
}

fn parse_policy(s: &str) -> Result<RespawnPolicy, String> {
    s.parse()
}

fn positive(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(0) => Err("must be positive".to_string()),
        Ok(n) => Ok(n),
        Err(e) => Err(e.to_string()),
    }
}

/// An error tagged with the pipeline stage that raised it.
#[derive(Debug)]
struct Failure {
    stage: &'static str,
    message: String,
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.stage, self.message)
    }
}

fn fail(stage: &'static str) -> impl Fn(&dyn fmt::Display) -> Failure {
    move |e| Failure {
        stage,
        message: e.to_string(),
    }
}

fn tagged<T, E: fmt::Display>(r: Result<T, E>, stage: &'static str) -> Result<T, Failure> {
    r.map_err(|e| fail(stage)(&e))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Verdict {
    Positive,
    Negative,
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure {
        stage: "io",
        message: format!("{}: {e}", path.display()),
    })
}

fn emit(output: Option<&Path>, text: &str) -> Result<(), Failure> {
    let result = match output {
        Some(path) => fs::write(path, text),
        None => io::stdout().lock().write_all(text.as_bytes()),
    };
    result.map_err(|e| Failure {
        stage: "io",
        message: e.to_string(),
    })
}

fn load_track(path: &Path) -> Result<Track, Failure> {
    tagged(Track::from_text(&read(path)?), "track")
}

fn load_certificate(path: &Path) -> Result<Certificate, Failure> {
    tagged(Certificate::from_text(&read(path)?), "certificate")
}

fn solve_limits(options: &Options) -> SolveLimits {
    SolveLimits {
        max_checkpoints: options.max_checkpoints,
        ..SolveLimits::default()
    }
}

fn run(cli: Cli) -> Result<Verdict, Failure> {
    let options = &cli.options;
    let output = options.output.as_deref();
    match &cli.command {
        Command::Compile { cnf: path, layout } => {
            let raw = tagged(cnf::parse_dimacs(&read(path)?), "parse")?;
            let normalized = cnf::normalize_to_3cnf(&raw);
            if normalized.fresh_variables() > 0 {
                eprintln!(
                    "note: normalization added {} fresh variables",
                    normalized.fresh_variables()
                );
            }
            let mut track = tagged(
                compile::compile_with_original(
                    &normalized.formula,
                    normalized.original_variables,
                ),
                "compile",
            )?;
            if *layout == LayoutChoice::Comb {
                track = tagged(layout::layout_comb(&track), "layout")?;
            }
            emit(output, &track.to_text())?;
            Ok(Verdict::Positive)
        }
        Command::Solve { track } => {
            let track = load_track(track)?;
            match tagged(engine::solve(&track, options.respawn, solve_limits(options)), "solve")? {
                Some(cert) => {
                    emit(output, &cert.to_text())?;
                    Ok(Verdict::Positive)
                }
                None => {
                    eprintln!("track cannot be completed");
                    Ok(Verdict::Negative)
                }
            }
        }
        Command::Verify { track, certificate } => {
            let track = load_track(track)?;
            let cert = load_certificate(certificate)?;
            let report = engine::verify(&track, &cert, options.respawn);
            emit(output, &report.to_string())?;
            Ok(if report.complete {
                Verdict::Positive
            } else {
                Verdict::Negative
            })
        }
        Command::Extract { track, certificate } => {
            let track = load_track(track)?;
            let cert = load_certificate(certificate)?;
            match compile::extract_assignment(&track, &cert) {
                Ok(assignment) => {
                    let original = track
                        .meta()
                        .map_or(assignment.len(), |m| m.original_variables);
                    let shown = Assignment::new(assignment.values()[..original].to_vec());
                    emit(output, &shown.to_string())?;
                    Ok(Verdict::Positive)
                }
                Err(CompileError::NotComplete) => {
                    eprintln!("certificate does not complete the track");
                    Ok(Verdict::Negative)
                }
                Err(e) => Err(fail("extract")(&e)),
            }
        }
        Command::Drive { track, assignment } => {
            let track = load_track(track)?;
            let assignment: Assignment = tagged(read(assignment)?.parse(), "assignment")?;
            let assignment = extend_with_fresh(&track, assignment);
            let cert = tagged(compile::assignment_to_certificate(&track, &assignment), "drive")?;
            let report = engine::verify(&track, &cert, options.respawn);
            emit(output, &cert.to_text())?;
            if !report.complete {
                eprintln!(
                    "certificate is {} but does not complete the track ({} of {} checkpoints)",
                    if report.valid { "valid" } else { "invalid" },
                    report.collected_at_end.count_ones(..),
                    track.checkpoint_count()
                );
                return Ok(Verdict::Negative);
            }
            Ok(Verdict::Positive)
        }
        Command::Render { track, layer } => {
            let track = load_track(track)?;
            match layer {
                Some(z) => {
                    let svg = tagged(render::render_layer(&track, *z), "render")?;
                    emit(output, &svg)?;
                }
                None => {
                    let dir = output.ok_or_else(|| Failure {
                        stage: "render",
                        message: "rendering every layer needs an output directory (-o)".into(),
                    })?;
                    tagged(fs::create_dir_all(dir), "io")?;
                    for (z, svg) in render::render_all(&track) {
                        let path = dir.join(format!("layer_{z}.svg"));
                        tagged(fs::write(&path, svg), "io")?;
                        println!("{}", path.display());
                    }
                }
            }
            Ok(Verdict::Positive)
        }
        Command::Stats { track } => {
            let track = load_track(track)?;
            emit(output, &stats(&track)?)?;
            Ok(Verdict::Positive)
        }
        Command::Oracle { cnf: path } => {
            let raw = tagged(cnf::parse_dimacs(&read(path)?), "parse")?;
            let normalized = cnf::normalize_to_3cnf(&raw);
            let model = cnf::sat_oracle_with_limit(&normalized.formula, options.max_vars)
                .map_err(|e: CnfError| fail("oracle")(&e))?;
            match model {
                Some(a) => {
                    emit(output, &format!("s SATISFIABLE\n{}", normalized.project(&a)))?;
                    Ok(Verdict::Positive)
                }
                None => {
                    emit(output, "s UNSATISFIABLE\n")?;
                    Ok(Verdict::Negative)
                }
            }
        }
        Command::Equivalence {
            seed,
            count,
            corpus_vars,
            corpus_clauses,
            respawn_report,
        } => {
            let entries = corpus::default_corpus(*seed, *count, *corpus_vars, *corpus_clauses);
            let text = if *respawn_report {
                respawn_report_text(&entries, solve_limits(options))
            } else {
                let limits = EquivalenceLimits {
                    oracle_variables: options.max_vars,
                    solve: solve_limits(options),
                };
                let (text, all_agree) = equivalence_text(&entries, options.respawn, limits);
                emit(output, &text)?;
                return Ok(if all_agree {
                    Verdict::Positive
                } else {
                    Verdict::Negative
                });
            };
            emit(output, &text)?;
            Ok(Verdict::Positive)
        }
    }
}

/// Fresh variables from normalization are not part of a user's assignment;
/// pick values for them that satisfy the split clauses when possible.
fn extend_with_fresh(track: &Track, assignment: Assignment) -> Assignment {
    let Some(meta) = track.meta() else {
        return assignment;
    };
    let n = meta.num_variables();
    if assignment.len() >= n {
        return assignment;
    }
    let given = assignment.len();
    let fresh = n - given;
    if fresh > 12 {
        return Assignment::new((1..=n as u32).map(|v| assignment.value(v)).collect());
    }
    let candidate = |bits: u64| {
        Assignment::new(
            (1..=n as u32)
                .map(|v| {
                    let i = v as usize - 1;
                    if i < given {
                        assignment.value(v)
                    } else {
                        bits >> (i - given) & 1 == 1
                    }
                })
                .collect(),
        )
    };
    (0u64..1 << fresh)
        .map(candidate)
        .find(|a| {
            let cert = compile::assignment_to_certificate(track, a);
            cert.map(|c| engine::verify(track, &c, RespawnPolicy::Fixed).complete)
                .unwrap_or(false)
        })
        .unwrap_or_else(|| candidate(0))
}

fn stats(track: &Track) -> Result<String, Failure> {
    let mut out = String::new();
    let mut line = |k: &str, v: String| out.push_str(&format!("{k} {v}\n"));
    line("pads", track.pads().len().to_string());
    line("links", track.links().len().to_string());
    line(
        "one_way_links",
        track.links().iter().filter(|l| l.is_one_way()).count().to_string(),
    );
    line("checkpoints", track.checkpoint_count().to_string());
    if let Some(meta) = track.meta() {
        let (n, m) = (meta.num_variables(), meta.clauses.len());
        line("variables", n.to_string());
        line("original_variables", meta.original_variables.to_string());
        line("clauses", m.to_string());
        line("expected_pads", compile::expected_pads(n, m).to_string());
        line("expected_links", compile::expected_links(n, m).to_string());
        if track.blocks().is_some() {
            line("block_bound", layout::block_bound(n, m).to_string());
        }
    }
    if let Some(blocks) = track.blocks() {
        line("blocks", blocks.len().to_string());
        line(
            "crossings",
            tagged(layout::crossing_count(track), "layout")?.to_string(),
        );
        line("layers", render::layers(track).len().to_string());
        let faithful = match layout::block_pad_graph(track) {
            Ok(moves) => moves == layout::abstract_pad_graph(track),
            Err(_) => false,
        };
        line("faithful", faithful.to_string());
    }
    Ok(out)
}

fn equivalence_text(
    entries: &[corpus::CorpusEntry],
    policy: RespawnPolicy,
    limits: EquivalenceLimits,
) -> (String, bool) {
    let mut out = String::new();
    let (mut agree, mut skipped, mut bad) = (0, 0, 0);
    for entry in entries {
        match engine::equivalence_check(&entry.formula, policy, limits) {
            Ok(r) if r.agree && (!r.completable || r.witness_cross_checked) => agree += 1,
            Ok(r) => {
                bad += 1;
                out.push_str(&format!(
                    "counterexample {}: sat {} completable {} witness {}\n{}",
                    entry.label, r.sat, r.completable, r.witness_cross_checked, entry.formula
                ));
            }
            Err(e) if e.is_limit() => {
                skipped += 1;
                out.push_str(&format!("skipped {}: {e}\n", entry.label));
            }
            Err(e) => {
                bad += 1;
                out.push_str(&format!("error {}: {e}\n", entry.label));
            }
        }
    }
    let checked = entries.len() - skipped;
    out.push_str(&format!("agree {agree}/{checked}, skipped {skipped}\n"));
    (out, bad == 0)
}

fn respawn_report_text(entries: &[corpus::CorpusEntry], limits: SolveLimits) -> String {
    let mut out = String::new();
    let mut divergent = 0;
    for entry in entries {
        let track = match compile::compile(&entry.formula) {
            Ok(t) => t,
            Err(e) => {
                out.push_str(&format!("error {}: {e}\n", entry.label));
                continue;
            }
        };
        match engine::compare_respawn_policies(&track, limits) {
            Ok(c) if c.diverges() => {
                divergent += 1;
                out.push_str(&format!(
                    "divergence {}: disabled {} fixed {} any-touch {}\n",
                    entry.label, c.disabled, c.fixed, c.any_touch
                ));
            }
            Ok(_) => {}
            Err(e) => out.push_str(&format!("skipped {}: {e}\n", entry.label)),
        }
    }
    out.push_str(&format!(
        "respawn policies diverge on {divergent}/{}\n",
        entries.len()
    ));
    out
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(Verdict::Positive) => ExitCode::SUCCESS,
        Ok(Verdict::Negative) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
