use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};
use ferenczi_core::dimgroup::{realize_with, FerencziTypeData, DEFAULT_LOOKAHEAD};
use ferenczi_core::measure::default_width;
use ferenczi_core::params::{Letter, ParameterSchedule};
use ferenczi_core::presets::{self, PRESETS};
use ferenczi_core::spectra::Alpha;
use ferenczi_core::words::Subshift;
use num_bigint::BigUint;
use num_rational::BigRational;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

const CITE_RANK: &str = "a letter belongs to A_mu when its tower keeps a positive share of the mass";
const CITE_DIMGROUP: &str = "dimension group of a minimal rank-one subshift: Z^B x Z[(q_n + 1)] with the cone x.z > 0";
const CITE_OE: &str = "orbit equivalence class: the image group of the normalized state";
const CITE_REALIZE: &str = "every dimension group of Ferenczi type is realized by a rank-one subshift";

#[derive(Parser, Debug)]
#[command(name = "ferenczi", version, about = "Exact analysis of minimal rank-one subshifts")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Args, Debug, Clone, Serialize)]
#[group(required = true, multiple = false, id = "source")]
struct Source {
    /// A named example schedule (see `ferenczi presets`).
    #[arg(long)]
    preset: Option<String>,
    /// A JSON schedule file.
    #[arg(long)]
    schedule: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Serialize)]
struct RealizationParams {
    /// Prime p for the measurable-realization preset.
    #[arg(long)]
    p: Option<u64>,
    /// d for the measurable-realization preset.
    #[arg(long)]
    d: Option<usize>,
    /// d' for the measurable-realization preset.
    #[arg(long = "d-prime")]
    d_prime: Option<usize>,
    /// Base of g(n) = g_base^n for the measurable-realization preset.
    #[arg(long = "g-base")]
    g_base: Option<u64>,
}

#[derive(Args, Debug, Clone, Serialize)]
struct Input {
    #[command(flatten)]
    source: Source,
    #[command(flatten)]
    realization: RealizationParams,
}

#[derive(Subcommand, Debug, Clone, Serialize)]
#[serde(tag = "name", rename_all = "lowercase")]
enum Command {
    /// The generating word w_n.
    Words {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        level: usize,
    },
    /// All factors of a given length.
    Language {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        length: usize,
    },
    /// Addresses of a position of w_level in the natural decompositions down to --target.
    Locate {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        #[serde(serialize_with = "display")]
        position: BigUint,
        #[arg(long)]
        level: usize,
        #[arg(long, default_value_t = 0)]
        target: usize,
    },
    /// The common right tail of the asymptotic pair.
    Tail {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        length: usize,
    },
    /// Composition matrix of one level, or products over [m, n) with closed forms.
    Matrices {
        #[command(flatten)]
        input: Input,
        #[arg(long, conflicts_with_all = ["m", "n"], required_unless_present_all = ["m", "n"])]
        level: Option<usize>,
        #[arg(long, requires = "n")]
        m: Option<usize>,
        #[arg(long, requires = "m")]
        n: Option<usize>,
    },
    /// Tower heights h_n.
    Heights {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        level: usize,
    },
    /// Measure vector and tower masses at a level, or the measure of a cylinder.
    Measure {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        level: Option<usize>,
        /// A {0,1} word whose cylinder measure is wanted.
        #[arg(long)]
        word: Option<String>,
        /// Target bracket width for cylinders and growth tails, as "p/q".
        #[arg(long)]
        #[serde(serialize_with = "display_opt")]
        width: Option<BigRational>,
    },
    /// Exact finite rank and the letters of A_mu.
    Rank {
        #[command(flatten)]
        input: Input,
    },
    /// Continuous and measurable eigenvalues.
    Spectra {
        #[command(flatten)]
        input: Input,
    },
    /// Veech necessary condition for exp(2 pi i alpha).
    Veech {
        #[command(flatten)]
        input: Input,
        /// "p/q", or "a/q~eps" for an irrational alpha within eps of a/q.
        #[arg(long)]
        alpha: Alpha,
        #[arg(long, default_value_t = 12)]
        level: usize,
    },
    /// Sums of lambda^(suffix height) over occurrences of a in tau_[m,n)(b).
    Sufficiency {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        m: usize,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        a: Letter,
        #[arg(long)]
        b: Letter,
        /// Rational phase "p/q" of lambda = exp(2 pi i p/q).
        #[arg(long)]
        #[serde(serialize_with = "display")]
        alpha: BigRational,
    },
    /// Certificate that the subshift is not topologically mixing.
    Mixing {
        #[command(flatten)]
        input: Input,
        #[arg(long, default_value_t = 6)]
        level: usize,
    },
    /// Dimension group descriptor.
    Dimgroup {
        #[command(flatten)]
        input: Input,
    },
    /// Orbit equivalence descriptor.
    Oe {
        #[command(flatten)]
        input: Input,
    },
    /// Build a schedule from Ferenczi-type data (JSON file).
    Realize {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value_t = DEFAULT_LOOKAHEAD)]
        lookahead: usize,
    },
    /// List the named schedules.
    Presets,
}

fn display<T: std::fmt::Display, S: serde::Serializer>(x: &T, s: S) -> Result<S::Ok, S::Error> {
    s.collect_str(x)
}

fn display_opt<T: std::fmt::Display, S: serde::Serializer>(x: &Option<T>, s: S) -> Result<S::Ok, S::Error> {
    match x {
        Some(x) => s.collect_str(x),
        None => s.serialize_none(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Report {
    tool: String,
    version: String,
    command: Value,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    notes: Vec<String>,
    results: Value,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    citations: Vec<String>,
}

/// What a command produced, before it is wrapped in a [`Report`].
struct Outcome {
    results: Value,
    text: String,
    citations: Vec<String>,
    notes: Vec<String>,
}

impl Outcome {
    fn new(results: Value, text: impl Into<String>) -> Self {
        Outcome { results, text: text.into(), citations: Vec::new(), notes: Vec::new() }
    }

    fn cite(mut self, citations: impl IntoIterator<Item = impl Into<String>>) -> Self {
        self.citations.extend(citations.into_iter().map(Into::into));
        self
    }
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Domain { kind: &'static str, message: String },
}

fn domain(kind: &'static str) -> impl Fn(&dyn std::fmt::Display) -> Failure {
    move |e| Failure::Domain { kind, message: e.to_string() }
}

macro_rules! fail {
    ($kind:literal) => {
        |e| domain($kind)(&e)
    };
}

fn to_value<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("reports serialize to JSON")
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let started = Instant::now();
    let command = to_value(&cli.command);
    match run(&cli.command) {
        Ok(out) => {
            let report = Report {
                tool: "ferenczi".into(),
                version: env!("CARGO_PKG_VERSION").into(),
                command,
                notes: out.notes,
                results: out.results,
                citations: out.citations,
            };
            let body = match cli.format {
                Format::Json => serde_json::to_string_pretty(&report).expect("serializable") + "\n",
                Format::Text => {
                    let mut body = String::new();
                    for note in &report.notes {
                        let _ = writeln!(body, "note: {note}");
                    }
                    body.push_str(&out.text);
                    if !body.ends_with('\n') {
                        body.push('\n');
                    }
                    for c in &report.citations {
                        let _ = writeln!(body, "cite: {c}");
                    }
                    body
                }
            };
            emit(&body);
            if cli.format == Format::Text {
                eprintln!("elapsed: {:.3}s", started.elapsed().as_secs_f64());
            }
            ExitCode::SUCCESS
        }
        Err(Failure::Usage(msg)) => Cli::command().error(clap::error::ErrorKind::ArgumentConflict, msg).exit(),
        Err(Failure::Domain { kind, message }) => {
            let err = json!({ "error": { "kind": kind, "message": message } });
            emit(&(serde_json::to_string_pretty(&err).expect("serializable") + "\n"));
            ExitCode::from(1)
        }
    }
}

/// Writes to stdout, ignoring a closed pipe.
fn emit(body: &str) {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(body.as_bytes()).and_then(|_| out.flush());
}

fn load(input: &Input) -> Result<(Subshift, Vec<String>), Failure> {
    let r = &input.realization;
    let has_realization = r.p.is_some() || r.d.is_some() || r.d_prime.is_some() || r.g_base.is_some();
    let schedule = match (&input.source.preset, &input.source.schedule) {
        (Some(name), _) if name == "measurable-realization" => {
            presets::measurable_realization(r.p.unwrap_or(2), r.d.unwrap_or(3), r.d_prime.unwrap_or(1), r.g_base.unwrap_or(2))
                .map_err(fail!("invalid_parameters"))?
        }
        _ if has_realization => {
            return Err(Failure::Usage("--p, --d, --d-prime and --g-base apply only to --preset measurable-realization".into()))
        }
        (Some(name), _) => presets::preset(name).ok_or_else(|| Failure::Domain {
            kind: "unknown_preset",
            message: format!("unknown preset {name:?}; run `ferenczi presets`"),
        })?,
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path).map_err(|e| Failure::Domain {
                kind: "io",
                message: format!("{}: {e}", path.display()),
            })?;
            ParameterSchedule::from_json(&text).map_err(fail!("malformed_schedule"))?
        }
        (None, None) => unreachable!("clap requires a schedule source"),
    };
    let mut notes = Vec::new();
    let schedule = if schedule.is_standard() {
        schedule
    } else {
        notes.push("schedule standardized: stages with one spacer were merged into the next stage, so levels refer to the standardized schedule".into());
        schedule.standardize()
    };
    Ok((Subshift::new(schedule), notes))
}

fn run(command: &Command) -> Result<Outcome, Failure> {
    match command {
        Command::Presets => {
            let text = PRESETS.iter().fold(String::new(), |mut t, p| {
                let _ = writeln!(t, "{:<24} {}", p.name, p.description);
                t
            });
            Ok(Outcome::new(to_value(&PRESETS), text))
        }
        Command::Realize { data, lookahead } => {
            let text = std::fs::read_to_string(data).map_err(|e| Failure::Domain {
                kind: "io",
                message: format!("{}: {e}", data.display()),
            })?;
            let data: FerencziTypeData = serde_json::from_str(&text).map_err(fail!("malformed_data"))?;
            data.validate().map_err(fail!("invalid_data"))?;
            let schedule = realize_with(&data, *lookahead).map_err(fail!("realization"))?;
            let dg = Subshift::new(schedule.clone()).dimension_group().map_err(fail!("dimension_group"))?;
            let schedule_json: Value = serde_json::from_str(&schedule.to_json()).expect("schedule JSON");
            let text = format!("schedule: {}\ngroup: {}\na': {}\n", schedule.to_json(), dg.group, dg.a_prime);
            Ok(Outcome::new(json!({ "schedule": schedule_json, "dimension_group": to_value(&dg) }), text).cite([CITE_REALIZE]))
        }
        other => {
            let input = input_of(other);
            let (s, notes) = load(input)?;
            let mut out = analyze(other, &s)?;
            out.notes.splice(0..0, notes);
            Ok(out)
        }
    }
}

fn input_of(command: &Command) -> &Input {
    match command {
        Command::Words { input, .. }
        | Command::Language { input, .. }
        | Command::Locate { input, .. }
        | Command::Tail { input, .. }
        | Command::Matrices { input, .. }
        | Command::Heights { input, .. }
        | Command::Measure { input, .. }
        | Command::Rank { input }
        | Command::Spectra { input }
        | Command::Veech { input, .. }
        | Command::Sufficiency { input, .. }
        | Command::Mixing { input, .. }
        | Command::Dimgroup { input }
        | Command::Oe { input } => input,
        Command::Realize { .. } | Command::Presets => unreachable!("no schedule input"),
    }
}

fn analyze(command: &Command, s: &Subshift) -> Result<Outcome, Failure> {
    Ok(match command {
        Command::Words { level, .. } => {
            let w = s.generating_word(*level).map_err(fail!("cap_exceeded"))?;
            Outcome::new(json!({ "level": level, "length": w.len(), "word": w }), w)
        }
        Command::Language { length, .. } => {
            let set = s.language(*length).map_err(fail!("language"))?;
            let text = format!(
                "{} factors of length {} (from w_{})\n{}\n",
                set.words.len(),
                length,
                set.level,
                set.words.iter().cloned().collect::<Vec<_>>().join("\n")
            );
            Outcome::new(to_value(&set), text)
        }
        Command::Locate { position, level, target, .. } => {
            let chain = s.locate(position, *target, *level).map_err(fail!("locate"))?;
            let text = render(&to_value(&chain));
            let mut out = Outcome::new(json!({ "position": position.to_string(), "addresses": chain }), text);
            out.notes.push("addresses use the natural decomposition w_{m+1} = w_m 1^a w_m ... w_m, not the rotated towers".into());
            out
        }
        Command::Tail { length, .. } => {
            let t = s.asymptotic_tail(*length).map_err(fail!("tail"))?;
            Outcome::new(json!({ "length": length, "tail": t }), t)
        }
        Command::Matrices { level: Some(n), .. } => {
            let m = s.composition_matrix(*n).map_err(fail!("matrices"))?;
            let text = format!("M_tau_{n}:\n{m}");
            Outcome::new(json!({ "level": n, "matrix": m }), text)
        }
        Command::Matrices { m: Some(m), n: Some(n), .. } => {
            if m >= n {
                return Err(Failure::Usage(format!("--m ({m}) must be less than --n ({n})")));
            }
            let direct = s.direct_product(*m, *n).map_err(fail!("matrices"))?;
            let mut results = json!({ "m": m, "n": n, "product": direct });
            let mut text = format!("product over [{m}, {n}):\n{direct}");
            if *m >= s.alphabets().stabilization.max(1) {
                let closed = s.product_closed_form(*m, *n).map_err(fail!("matrices"))?;
                let inverse = s.inverse_closed_form(*m, *n).map_err(fail!("matrices"))?;
                let f = s.f_range(*m, *n).map_err(fail!("matrices"))?;
                let _ = write!(text, "closed form agrees: {}\ninverse:\n{inverse}", closed == direct);
                results["closed_form"] = to_value(&closed);
                results["inverse"] = to_value(&inverse);
                results["f_range"] = f.iter().map(|(a, x)| (a.to_string(), Value::String(x.to_string()))).collect();
            }
            Outcome::new(results, text)
        }
        Command::Matrices { .. } => unreachable!("clap enforces --level or --m/--n"),
        Command::Heights { level, .. } => {
            let h = s.heights(*level);
            let v = to_value(&h);
            Outcome::new(v.clone(), render(&v["values"]))
        }
        Command::Measure { level, word, width, .. } => measure(s, *level, word.as_deref(), width.clone())?,
        Command::Rank { .. } => {
            let r = s.rank_report().map_err(fail!("measure"))?;
            let text = format!(
                "A_W = {:?}\nA_mu = {:?}\nexact finite rank: {}\n{}",
                r.stable_alphabet,
                r.a_mu,
                to_value(&r.exact_finite_rank).as_str().unwrap_or_default(),
                render(&to_value(&r.letters))
            );
            Outcome::new(to_value(&r), text).cite([CITE_RANK])
        }
        Command::Spectra { .. } => {
            let cont = s.continuous_eigenvalues();
            let factor = s.max_equicontinuous_factor();
            let measurable = s.measurable_eigenvalue_report().map_err(fail!("spectra"))?;
            let mixing = s.mixing_certificate(4);
            let results = json!({
                "continuous": cont,
                "equicontinuous_factor": factor,
                "measurable": measurable,
                "topologically_mixing": false,
                "mixing": mixing,
            });
            let text = format!(
                "continuous rational eigenvalues: denominators {:?}\nq_max = {}\nweakly mixing: {}\nmaximal equicontinuous factor: {}\n{}\n{}\n",
                cont.rational_denominators,
                cont.q_max,
                cont.weakly_mixing,
                factor.description,
                mixing.conclusion,
                render(&json!({ "measurable": measurable }))
            );
            let mut citations = cont.citations.clone();
            citations.extend(measurable.citations.iter().cloned());
            citations.extend(mixing.citations.iter().cloned());
            citations.dedup();
            Outcome::new(results, text).cite(citations)
        }
        Command::Veech { alpha, level, .. } => {
            let t = s.veech_test(alpha, *level).map_err(fail!("veech"))?;
            let text = render(&to_value(&t));
            let citations = t.citations.clone();
            Outcome::new(to_value(&t), text).cite(citations)
        }
        Command::Sufficiency { m, n, a, b, alpha, .. } => {
            let sum = s.sufficiency_sum(*m, *n, *a, *b, alpha).map_err(fail!("sufficiency"))?;
            Outcome::new(to_value(&sum), render(&to_value(&sum)))
        }
        Command::Mixing { level, .. } => {
            let c = s.mixing_certificate(*level);
            let text = render(&to_value(&c));
            let citations = c.citations.clone();
            Outcome::new(to_value(&c), text).cite(citations)
        }
        Command::Dimgroup { .. } => {
            let dg = s.dimension_group().map_err(fail!("dimension_group"))?;
            let normal = dg.cone_normal.as_ref().map(|v| {
                let coords = dg.coordinates();
                v.iter().zip(&coords).map(|(c, a)| format!("{c}*x_{a}")).collect::<Vec<_>>().join(" + ") + " > 0"
            });
            let text = format!(
                "group: {}\ncoordinates: {:?} (last is a' = {})\npositive cone: {}\nunit: ({})\nz: {}\ntopological rank: {}\n",
                dg.group,
                dg.coordinates(),
                dg.a_prime,
                normal.unwrap_or_else(|| "x.z > 0 (z bracketed)".into()),
                dg.unit().iter().map(|u| u.to_string()).collect::<Vec<_>>().join(", "),
                render(&to_value(&dg.z)).trim_end().replace('\n', ", "),
                dg.topological_rank
            );
            Outcome::new(to_value(&dg), text).cite([CITE_DIMGROUP])
        }
        Command::Oe { .. } => {
            let oe = s.orbit_equivalence().map_err(fail!("orbit_equivalence"))?;
            Outcome::new(to_value(&oe), render(&to_value(&oe))).cite([CITE_OE])
        }
        Command::Realize { .. } | Command::Presets => unreachable!("handled in run"),
    })
}

fn measure(s: &Subshift, level: Option<usize>, word: Option<&str>, width: Option<BigRational>) -> Result<Outcome, Failure> {
    let width = width.unwrap_or_else(default_width);
    if let Some(u) = word {
        let c = s.cylinder_measure(u, &width).map_err(fail!("measure"))?;
        return Ok(Outcome::new(to_value(&c), render(&to_value(&c))));
    }
    let m = level.unwrap_or_else(|| s.alphabets().stabilization.max(1));
    let mu = s.measure_vector_within(m, &width).map_err(fail!("measure"))?;
    let (masses, total) = s.tower_masses(m).map_err(fail!("measure"))?;
    let results = json!({ "level": m, "measure": mu, "tower_masses": masses, "total_mass": total });
    Ok(Outcome::new(results.clone(), render(&results)))
}

/// Indented `key: value` lines for a JSON value.
fn render(v: &Value) -> String {
    let mut out = String::new();
    render_into(v, 0, &mut out);
    out
}

fn scalar(v: &Value) -> Option<String> {
    match v {
        Value::Null => Some("-".into()),
        Value::Bool(b) => Some(b.to_string()),
        Value::Number(n) => Some(n.to_string()),
        Value::String(s) => Some(s.clone()),
        // Degenerate intervals print as their value.
        Value::Array(xs) if xs.len() == 2 && xs[0].is_string() && xs[0] == xs[1] => scalar(&xs[0]),
        Value::Array(xs) if xs.iter().all(|x| !x.is_object() && !x.is_array()) => {
            Some(format!("[{}]", xs.iter().filter_map(scalar).collect::<Vec<_>>().join(", ")))
        }
        Value::Array(xs) if xs.len() == 2 && xs.iter().all(Value::is_string) => {
            Some(format!("[{}, {}]", xs[0].as_str().unwrap(), xs[1].as_str().unwrap()))
        }
        _ => None,
    }
}

fn render_into(v: &Value, depth: usize, out: &mut String) {
    let pad = "  ".repeat(depth);
    match v {
        Value::Object(map) => {
            for (k, x) in map {
                match scalar(x) {
                    Some(s) => {
                        let _ = writeln!(out, "{pad}{k}: {s}");
                    }
                    None => {
                        let _ = writeln!(out, "{pad}{k}:");
                        render_into(x, depth + 1, out);
                    }
                }
            }
        }
        Value::Array(xs) => {
            for x in xs {
                match scalar(x) {
                    Some(s) => {
                        let _ = writeln!(out, "{pad}- {s}");
                    }
                    None => {
                        let _ = writeln!(out, "{pad}-");
                        render_into(x, depth + 1, out);
                    }
                }
            }
        }
        other => {
            let _ = writeln!(out, "{pad}{}", scalar(other).unwrap_or_default());
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn render_flattens_objects() {
        let v = json!({ "a": 1, "b": { "c": [1, 2] }, "d": [{ "e": "x" }] });
        assert_eq!(render(&v), "a: 1\nb:\n  c: [1, 2]\nd:\n  -\n    e: x\n");
    }

    #[test]
    fn report_round_trips() {
        let r = Report {
            tool: "ferenczi".into(),
            version: "0".into(),
            command: json!({ "name": "rank" }),
            notes: vec![],
            results: json!({ "x": "1/3" }),
            citations: vec!["c".into()],
        };
        let text = serde_json::to_string(&r).unwrap();
        assert_eq!(serde_json::from_str::<Report>(&text).unwrap(), r);
    }

    #[test]
    fn realization_flags_need_the_realization_preset() {
        let cli = Cli::try_parse_from(["ferenczi", "rank", "--preset", "chacon", "--p", "3"]).unwrap();
        assert!(matches!(run(&cli.command), Err(Failure::Usage(_))));
    }
}
