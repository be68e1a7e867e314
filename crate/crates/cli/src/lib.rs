//! Argument handling, report construction, and rendering for the
//! `bifree` binary. One decision query per invocation; the verdict maps
//! to the exit code (0 decided, 2 out of budget, 1 input error) and the
//! report serializes identically in text and JSON modes.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::Instant;

use bifree::text::{format_product_boundary_point, parse_endo_text, parse_product_element};
use bifree::{
    boundary_apply, classify_point, cm_defect, decide_conj, decide_eq, hnn_normalize,
    is_uniformly_continuous, tcp, two_brcp, Decision, HnnFactor, OracleConfig, PointClass,
    ProductEndo, SampleSpec,
};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

#[derive(Parser, Debug)]
#[command(
    name = "bifree",
    version,
    about = "Decision procedures for orbit problems of endomorphisms of a product of two free groups",
    long_about = "Words are written with lowercase generators and uppercase inverses \
                  (a, b, ... or indexed a1, b2, ...); a product element is `<first>|<second>`. \
                  An endomorphism file starts with the ranks `n m`, followed by lines \
                  `a1 -> <word>|<word>` for every generator of both factors."
)]
pub struct Cli {
    #[command(subcommand)]
    pub cmd: Cmd,
    /// Output format for the report.
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    pub format: Format,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
}

#[derive(Args, Debug)]
pub struct BudgetArgs {
    /// Iteration budget for orbit scans.
    #[arg(long)]
    pub max_steps: Option<u64>,
    /// Cap on intermediate word length.
    #[arg(long)]
    pub max_len: Option<usize>,
    /// Radius of the conjugator search ball.
    #[arg(long)]
    pub conj_bound: Option<usize>,
}

impl BudgetArgs {
    fn to_config(&self) -> OracleConfig {
        let mut cfg = OracleConfig::default();
        if let Some(s) = self.max_steps {
            cfg.max_steps = s;
        }
        if let Some(l) = self.max_len {
            cfg.max_word_length = l;
        }
        if let Some(b) = self.conj_bound {
            cfg.conjugator_length_bound = b;
        }
        cfg
    }
}

#[derive(Args, Debug)]
pub struct OrbitArgs {
    /// Endomorphism description file.
    #[arg(long)]
    pub endo: PathBuf,
    /// Starting element `<first>|<second>`.
    #[arg(long)]
    pub from: String,
    /// Target element `<first>|<second>`.
    #[arg(long)]
    pub to: String,
    #[command(flatten)]
    pub budget: BudgetArgs,
}

#[derive(Subcommand, Debug)]
pub enum Cmd {
    /// Validate an endomorphism file and report its structural type.
    Classify {
        #[arg(long)]
        endo: PathBuf,
    },
    /// Decide whether some iterate maps `from` onto `to` exactly.
    Brp(OrbitArgs),
    /// Decide whether some iterate maps `from` into the conjugacy class of `to`.
    Brcp(OrbitArgs),
    /// Decide whether iterates of both sides ever become conjugate:
    /// find (r, s) with `from` after r steps conjugate to `to` after s.
    #[command(name = "2brcp")]
    TwoBrcp(OrbitArgs),
    /// Find a twisted conjugator: (u,v) with from = Phi(u,v)^-1 to (u,v).
    Tcp(OrbitArgs),
    /// Rewrite a word over the base group and the stable letter into
    /// the reduced form t^i g t^-j.
    ///
    /// Tokens are whitespace-separated: `t` and `T` are the stable
    /// letter and its inverse, anything containing `|` is a base
    /// element. Conjugacy in the extension is not decided here: powers
    /// of t conjugate base elements along the map, so use `2brcp` for
    /// the conjugate-iterates question and `tcp` for twisted
    /// conjugators.
    #[command(name = "hnn-normalize")]
    HnnNormalize {
        #[arg(long)]
        endo: PathBuf,
        /// Token word, e.g. "T a|b t aB|1".
        #[arg(long)]
        word: String,
    },
    /// Compare two stable-letter words via their reduced forms.
    #[command(name = "hnn-eq")]
    HnnEq {
        #[arg(long)]
        endo: PathBuf,
        #[arg(long)]
        left: String,
        #[arg(long)]
        right: String,
    },
    /// Report whether the map extends continuously to the completion.
    #[command(name = "uc-check")]
    UcCheck {
        #[arg(long)]
        endo: PathBuf,
    },
    /// Sample triples and measure the worst median displacement.
    #[command(name = "cm-defect")]
    CmDefect {
        #[arg(long)]
        endo: PathBuf,
        /// Longest sampled factor word.
        #[arg(long, default_value_t = 8)]
        max_len: usize,
        /// Number of sampled triples.
        #[arg(long, default_value_t = 200)]
        samples: usize,
        /// RNG seed; required with --format json.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Classify the orbit of a rational completion point under an
    /// automorphism extension: periodic with a certified period, or
    /// undecided within budget (a genuinely non-periodic point is
    /// wandering, which no finite run certifies).
    #[command(name = "boundary-orbit")]
    BoundaryOrbit {
        #[arg(long)]
        endo: PathBuf,
        /// Product point `u:(v)|w:(z)`; `u:` or a bare word is finite.
        #[arg(long)]
        point: String,
        /// Iteration budget.
        #[arg(long, default_value_t = 100)]
        budget: u64,
    },
}

/// Budget echo embedded in every report.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub max_steps: u64,
    pub max_word_length: usize,
    pub conjugator_length_bound: usize,
}

impl From<&OracleConfig> for ConfigEcho {
    fn from(cfg: &OracleConfig) -> Self {
        ConfigEcho {
            max_steps: cfg.max_steps,
            max_word_length: cfg.max_word_length,
            conjugator_length_bound: cfg.conjugator_length_bound,
        }
    }
}

/// Three-valued outcome plus the always-decided informational case.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Verdict {
    Found { value: Value },
    Refuted,
    BoundExceeded { bound: u64 },
    Info { value: Value },
}

impl Verdict {
    pub fn exit_code(&self) -> i32 {
        match self {
            Verdict::Found { .. } | Verdict::Refuted | Verdict::Info { .. } => 0,
            Verdict::BoundExceeded { .. } => 2,
        }
    }

    fn headline(&self) -> String {
        match self {
            Verdict::Found { value } => format!("FOUND {}", compact(value)),
            Verdict::Refuted => "REFUTED".into(),
            Verdict::BoundExceeded { bound } => format!("UNDECIDED (budget {bound} exhausted)"),
            Verdict::Info { value } => format!("OK {}", compact(value)),
        }
    }
}

fn compact(v: &Value) -> String {
    serde_json::to_string(v).unwrap_or_default()
}

/// The full machine-readable outcome of one invocation. Serializing
/// and re-parsing a report reproduces it exactly.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub subcommand: String,
    pub inputs: BTreeMap<String, String>,
    pub config: ConfigEcho,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub seed: Option<u64>,
    pub verdict: Verdict,
    pub trace: Vec<String>,
    pub timing_ms: u64,
}

impl Report {
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("{}: {}\n", self.subcommand, self.verdict.headline()));
        for (k, v) in &self.inputs {
            out.push_str(&format!("  {k}: {v}\n"));
        }
        if !self.trace.is_empty() {
            out.push_str("trace:\n");
            for line in &self.trace {
                out.push_str(&format!("  {line}\n"));
            }
        }
        out.push_str(&format!("time: {} ms\n", self.timing_ms));
        out
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Text => self.render_text(),
            Format::Json => {
                let mut s = serde_json::to_string_pretty(self).expect("report serializes");
                s.push('\n');
                s
            }
        }
    }
}

pub struct RunOutcome {
    pub report: Report,
    pub exit_code: i32,
}

fn load_endo(path: &PathBuf) -> Result<(ProductEndo, String), String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    let endo = parse_endo_text(&text).map_err(|e| format!("{}: {e}", path.display()))?;
    Ok((endo, text))
}

fn parse_hnn_word(endo: &ProductEndo, input: &str) -> Result<Vec<HnnFactor>, String> {
    let mut word = Vec::new();
    for token in input.split_whitespace() {
        if token == "t" {
            word.push(HnnFactor::T(1));
        } else if token == "T" {
            word.push(HnnFactor::T(-1));
        } else if token.contains('|') {
            let g = parse_product_element(token, endo.n(), endo.m())
                .map_err(|e| format!("token {token:?}: {e}"))?;
            word.push(HnnFactor::G(g));
        } else {
            return Err(format!(
                "token {token:?} is neither `t`, `T`, nor a `<first>|<second>` element"
            ));
        }
    }
    Ok(word)
}

fn decision_verdict<T, F: FnOnce(T) -> Value>(d: Decision<T>, value: F) -> Verdict {
    match d {
        Decision::Found(t) => Verdict::Found { value: value(t) },
        Decision::Refuted => Verdict::Refuted,
        Decision::BoundExceeded(b) => Verdict::BoundExceeded { bound: b },
    }
}

/// Executes one parsed invocation. `Err` is an input problem (exit 1).
pub fn run(cli: &Cli) -> Result<RunOutcome, String> {
    let started = Instant::now();
    let default_cfg = OracleConfig::default();
    let mut inputs = BTreeMap::new();
    let mut trace: Vec<String> = Vec::new();
    let mut seed_echo = None;
    let mut config = ConfigEcho::from(&default_cfg);

    let (name, verdict) = match &cli.cmd {
        Cmd::Classify { endo } => {
            let (endo, _) = load_endo(endo)?;
            inputs.insert("endo".into(), format!("{} {}", endo.n(), endo.m()));
            let value = json!({
                "type": endo.type_tag().to_string(),
                "n": endo.n(),
                "m": endo.m(),
                "injective": endo.is_injective(),
                "automorphism": endo.is_automorphism(),
            });
            ("classify", Verdict::Info { value })
        }
        Cmd::Brp(args) | Cmd::Brcp(args) => {
            let conjugacy = matches!(cli.cmd, Cmd::Brcp(_));
            let (endo, _) = load_endo(&args.endo)?;
            let cfg = args.budget.to_config();
            config = ConfigEcho::from(&cfg);
            let from = parse_product_element(&args.from, endo.n(), endo.m())
                .map_err(|e| format!("--from: {e}"))?;
            let to = parse_product_element(&args.to, endo.n(), endo.m())
                .map_err(|e| format!("--to: {e}"))?;
            inputs.insert("from".into(), from.to_string());
            inputs.insert("to".into(), to.to_string());
            inputs.insert("endo_type".into(), endo.type_tag().to_string());
            let outcome = if conjugacy {
                decide_conj(&endo, &from, &to, &cfg)
            } else {
                decide_eq(&endo, &from, &to, &cfg)
            }
            .map_err(|e| e.to_string())?;
            trace = outcome.trace.render_text().lines().map(String::from).collect();
            let name = if conjugacy { "brcp" } else { "brp" };
            (name, decision_verdict(outcome.decision, |k| json!({ "k": k })))
        }
        Cmd::TwoBrcp(args) => {
            let (endo, _) = load_endo(&args.endo)?;
            let cfg = args.budget.to_config();
            config = ConfigEcho::from(&cfg);
            let from = parse_product_element(&args.from, endo.n(), endo.m())
                .map_err(|e| format!("--from: {e}"))?;
            let to = parse_product_element(&args.to, endo.n(), endo.m())
                .map_err(|e| format!("--to: {e}"))?;
            inputs.insert("from".into(), from.to_string());
            inputs.insert("to".into(), to.to_string());
            inputs.insert("endo_type".into(), endo.type_tag().to_string());
            let d = two_brcp(&endo, &from, &to, &cfg).map_err(|e| e.to_string())?;
            (
                "2brcp",
                decision_verdict(d, |(r, s)| json!({ "r": r, "s": s })),
            )
        }
        Cmd::Tcp(args) => {
            let (endo, _) = load_endo(&args.endo)?;
            let cfg = args.budget.to_config();
            config = ConfigEcho::from(&cfg);
            let from = parse_product_element(&args.from, endo.n(), endo.m())
                .map_err(|e| format!("--from: {e}"))?;
            let to = parse_product_element(&args.to, endo.n(), endo.m())
                .map_err(|e| format!("--to: {e}"))?;
            inputs.insert("from".into(), from.to_string());
            inputs.insert("to".into(), to.to_string());
            inputs.insert("endo_type".into(), endo.type_tag().to_string());
            let d = tcp(&endo, &from, &to, &cfg).map_err(|e| e.to_string())?;
            (
                "tcp",
                decision_verdict(d, |w| json!({ "conjugator": w.to_string() })),
            )
        }
        Cmd::HnnNormalize { endo, word } => {
            let (endo, _) = load_endo(endo)?;
            let factors = parse_hnn_word(&endo, word)?;
            inputs.insert("word".into(), word.clone());
            let e = hnn_normalize(&endo, &factors).map_err(|e| e.to_string())?;
            let value = json!({
                "i": e.i,
                "g": e.g.to_string(),
                "j": e.j,
                "rendered": format!("t^{} ({}) t^-{}", e.i, e.g, e.j),
            });
            ("hnn-normalize", Verdict::Info { value })
        }
        Cmd::HnnEq { endo, left, right } => {
            let (endo, _) = load_endo(endo)?;
            let lw = parse_hnn_word(&endo, left).map_err(|e| format!("--left: {e}"))?;
            let rw = parse_hnn_word(&endo, right).map_err(|e| format!("--right: {e}"))?;
            inputs.insert("left".into(), left.clone());
            inputs.insert("right".into(), right.clone());
            let le = hnn_normalize(&endo, &lw).map_err(|e| e.to_string())?;
            let re = hnn_normalize(&endo, &rw).map_err(|e| e.to_string())?;
            let value = json!({
                "equal": bifree::hnn_equal(&le, &re),
                "left_form": format!("t^{} ({}) t^-{}", le.i, le.g, le.j),
                "right_form": format!("t^{} ({}) t^-{}", re.i, re.g, re.j),
            });
            ("hnn-eq", Verdict::Info { value })
        }
        Cmd::UcCheck { endo } => {
            let (endo, _) = load_endo(endo)?;
            inputs.insert("endo_type".into(), endo.type_tag().to_string());
            let v = is_uniformly_continuous(&endo);
            let value = json!({
                "uniformly_continuous": v.holds,
                "reason": v.reason,
            });
            ("uc-check", Verdict::Info { value })
        }
        Cmd::CmDefect { endo, max_len, samples, seed } => {
            if cli.format == Format::Json && seed.is_none() {
                return Err("--seed is required with --format json so the report is reproducible".into());
            }
            let (endo, _) = load_endo(endo)?;
            let seed = seed.unwrap_or(0);
            seed_echo = Some(seed);
            let spec = SampleSpec { samples: *samples, max_len: *max_len, seed };
            inputs.insert("endo_type".into(), endo.type_tag().to_string());
            inputs.insert("samples".into(), samples.to_string());
            inputs.insert("max_len".into(), max_len.to_string());
            let report = cm_defect(&endo, &spec).map_err(|e| e.to_string())?;
            let witness = report.witness.as_ref().map(|(x, y, z)| {
                json!([x.to_string(), y.to_string(), z.to_string()])
            });
            let value = json!({
                "triples": report.triples,
                "max_defect": report.max_defect,
                "witness": witness,
            });
            ("cm-defect", Verdict::Info { value })
        }
        Cmd::BoundaryOrbit { endo, point, budget } => {
            let (endo, _) = load_endo(endo)?;
            let p = bifree::text::parse_product_boundary_point(point, endo.n(), endo.m())
                .map_err(|e| format!("--point: {e}"))?;
            inputs.insert("point".into(), format_product_boundary_point(&p));
            inputs.insert("endo_type".into(), endo.type_tag().to_string());
            inputs.insert("budget".into(), budget.to_string());
            let class = classify_point(&endo, &p, *budget).map_err(|e| e.to_string())?;
            let verdict = match class {
                PointClass::Periodic(k) => {
                    let mut cur = p.clone();
                    for _ in 0..k {
                        cur = boundary_apply(&endo, &cur).map_err(|e| e.to_string())?;
                    }
                    trace.push(format!(
                        "period {k} re-verified: the orbit returns to {}",
                        format_product_boundary_point(&cur)
                    ));
                    Verdict::Found { value: json!({ "period": k }) }
                }
                PointClass::Undecided { steps } => {
                    trace.push(
                        "no return within budget; every point is periodic or wandering, so a \
                         genuinely non-periodic point is wandering (not certified here)"
                            .into(),
                    );
                    Verdict::BoundExceeded { bound: steps }
                }
            };
            ("boundary-orbit", verdict)
        }
    };

    let report = Report {
        subcommand: name.to_string(),
        inputs,
        config,
        seed: seed_echo,
        verdict,
        trace,
        timing_ms: started.elapsed().as_millis() as u64,
    };
    let exit_code = report.verdict.exit_code();
    Ok(RunOutcome { report, exit_code })
}
