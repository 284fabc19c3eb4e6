use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use bisect_bayes::bounds::{
    aux_lemma_suite, default_c, hellinger_affinity, ks_equivalence_sandwich, rho_upper_bound,
    thm41_ch_sufficient, thm41_dense_bound, thm41_uniform_bound, thm42_bound, thm42_ks_bound,
    BoundReport,
};
use bisect_bayes::experiments::{run_experiment, write_outputs, ExperimentConfig};
use bisect_bayes::inference::{
    class_size_test, enlarge, hpd_credible_set, Alternative, OddsBoundInputs,
};
use bisect_bayes::model::{sample_graph, LabelVector};
use bisect_bayes::posterior::{exact_posterior, marginals_to_csv, mcmc_posterior, McmcConfig};
use bisect_bayes::priors::g_constant;
use bisect_bayes::{EdgeModel, Error, Graph, PosteriorTable, PriorSpec};

/// Bayesian community detection for the planted bi-section model.
#[derive(Parser, Debug)]
#[command(name = "bisect-bayes", version)]
struct Cli {
    /// Worker threads for parallel sections (default: all cores).
    #[arg(long, global = true, env = "BISECT_BAYES_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Draw a graph from the planted bi-section model.
    Sample(SampleArgs),
    /// Compute the posterior over labelings for a graph.
    Posterior(PosteriorArgs),
    /// Highest-posterior-density credible set, optionally enlarged.
    Credible(CredibleArgs),
    /// Posterior-odds test between class-size hypotheses.
    Test(TestArgs),
    /// Evaluate a closed-form bound.
    Bounds(BoundsArgs),
    /// Run a Monte Carlo experiment from a JSON config.
    Experiment(ExperimentArgs),
    /// Run the auxiliary inequality grid checks.
    Verify(VerifyArgs),
}

#[derive(Args, Debug)]
struct ModelArgs {
    /// Within-class edge probability, in (0, 1).
    #[arg(long)]
    p: f64,
    /// Between-class edge probability, in (0, 1).
    #[arg(long)]
    q: f64,
}

impl ModelArgs {
    fn model(&self) -> Result<EdgeModel, Error> {
        EdgeModel::new(self.p, self.q)
    }
}

#[derive(Args, Debug)]
struct SampleArgs {
    /// Number of vertices.
    #[arg(long)]
    n: usize,
    #[command(flatten)]
    model: ModelArgs,
    /// Size of the planted class (the last m vertices).
    #[arg(long, conflicts_with = "theta")]
    m: Option<usize>,
    /// Planted labeling as a canonical 0/1 string.
    #[arg(long)]
    theta: Option<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output path for the graph JSON (stdout when absent).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Mode {
    Exact,
    Mcmc,
}

#[derive(Args, Debug)]
struct PosteriorArgs {
    /// Graph JSON file.
    #[arg(long)]
    graph: PathBuf,
    /// Prior: `bernoulli:r=R`, `beta:alpha=A,beta=B` or `uniform-m`.
    #[arg(long, default_value = "bernoulli:r=0.5")]
    prior: PriorSpec,
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, value_enum, default_value_t = Mode::Exact)]
    mode: Mode,
    /// Posterior CSV (exact) or marginals CSV (mcmc); stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write vertex inclusion probabilities (exact mode).
    #[arg(long)]
    marginals: Option<PathBuf>,
    /// MCMC seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// MCMC burn-in steps (default 10 n^2).
    #[arg(long)]
    burn_in: Option<usize>,
    /// MCMC sample count (default 10000).
    #[arg(long)]
    samples: Option<usize>,
    /// MCMC thinning interval (default n).
    #[arg(long)]
    thin: Option<usize>,
    /// Write the emitted MCMC samples, one labeling per line.
    #[arg(long)]
    samples_out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct GraphModelArgs {
    /// Graph JSON file.
    #[arg(long)]
    graph: Option<PathBuf>,
    #[arg(long, default_value = "bernoulli:r=0.5")]
    prior: PriorSpec,
    /// Within-class edge probability, in (0, 1).
    #[arg(long)]
    p: Option<f64>,
    /// Between-class edge probability, in (0, 1).
    #[arg(long)]
    q: Option<f64>,
}

impl GraphModelArgs {
    fn model(&self) -> Result<EdgeModel, Error> {
        match (self.p, self.q) {
            (Some(p), Some(q)) => EdgeModel::new(p, q),
            _ => Err(Error::InvalidConfig("--p and --q are required".into())),
        }
    }

    fn table(&self) -> Result<PosteriorTable, Error> {
        let path = self
            .graph
            .as_ref()
            .ok_or_else(|| Error::InvalidConfig("--graph is required".into()))?;
        exact_posterior(&read_graph(path)?, &self.prior, &self.model()?)
    }
}

#[derive(Args, Debug)]
struct CredibleArgs {
    /// Posterior CSV written by `posterior`.
    #[arg(long, conflicts_with = "graph")]
    posterior: Option<PathBuf>,
    #[command(flatten)]
    source: GraphModelArgs,
    /// Credible deficiency, in (0, 1).
    #[arg(long, default_value_t = 0.05)]
    gamma: f64,
    /// Enlargement radius k.
    #[arg(long, default_value_t = 0)]
    enlarge: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct TestArgs {
    #[command(flatten)]
    source: GraphModelArgs,
    /// Null class size.
    #[arg(long)]
    m0: usize,
    /// Alternative class size.
    #[arg(long, required_unless_present = "complement", conflicts_with = "complement")]
    m1: Option<usize>,
    /// Use the complement of the null slice as the alternative.
    #[arg(long)]
    complement: bool,
    /// Rejection threshold t (reject when F > t).
    #[arg(long, default_value_t = 1.0)]
    threshold: f64,
    /// Override a_n (default: dense exact-recovery bound).
    #[arg(long)]
    a_n: Option<f64>,
    /// Optional b_n for the two-term bound.
    #[arg(long)]
    b_n: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum BoundKind {
    Hellinger,
    RhoUpper,
    Thm41Uniform,
    Thm41Dense,
    Thm41Ch,
    Thm42,
    Thm42Ks,
    KsSandwich,
}

#[derive(Args, Debug)]
struct BoundsArgs {
    #[arg(long, value_enum)]
    kind: BoundKind,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    q: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    /// Dense-phase c, or the KS first parameter (default -log rho(p, q)).
    #[arg(long)]
    c: Option<f64>,
    #[arg(long)]
    d: Option<f64>,
    #[arg(long)]
    a: Option<f64>,
    #[arg(long)]
    b: Option<f64>,
    /// Prior constant g (default: derived from --prior).
    #[arg(long)]
    g: Option<f64>,
    #[arg(long, default_value = "bernoulli:r=0.5")]
    prior: PriorSpec,
}

#[derive(Args, Debug)]
struct ExperimentArgs {
    /// Experiment config JSON.
    #[arg(long)]
    config: PathBuf,
    /// Results CSV path (defaults to the config's `output`).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug)]
enum Failure {
    Invalid(String),
    Io(String),
    Violations,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Io(e) => Failure::Io(e.to_string()),
            other => Failure::Invalid(other.to_string()),
        }
    }
}

fn io_err(path: &Path, e: std::io::Error) -> Failure {
    Failure::Io(format!("{}: {e}", path.display()))
}

fn read_text(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| io_err(path, e))
}

fn read_graph(path: &Path) -> Result<Graph, Error> {
    let text = fs::read_to_string(path)?;
    Graph::from_json(&text).map_err(|e| Error::InvalidGraph(format!("{}: {e}", path.display())))
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| io_err(p, e)),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn json_line(value: &serde_json::Value) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("json values serialize");
    s.push('\n');
    s
}

fn need<T: Copy>(value: Option<T>, flag: &str) -> Result<T, Failure> {
    value.ok_or_else(|| Failure::Invalid(format!("--{flag} is required for this bound")))
}

fn cmd_sample(a: &SampleArgs) -> Result<(), Failure> {
    let model = a.model.model()?;
    let theta = match (&a.theta, a.m) {
        (Some(t), _) => {
            let t: LabelVector = t.parse()?;
            if t.n() != a.n {
                return Err(Error::DimensionMismatch { left: a.n, right: t.n() }.into());
            }
            t
        }
        (None, Some(m)) => LabelVector::planted(a.n, m)?,
        (None, None) => return Err(Failure::Invalid("one of --m or --theta is required".into())),
    };
    let g = sample_graph(&theta, &model, a.seed);
    emit(a.out.as_deref(), &format!("{}\n", g.to_json()))
}

fn cmd_posterior(a: &PosteriorArgs) -> Result<(), Failure> {
    let model = a.model.model()?;
    let x = read_graph(&a.graph)?;
    match a.mode {
        Mode::Exact => {
            let table = exact_posterior(&x, &a.prior, &model)?;
            if let Some(path) = &a.marginals {
                emit(Some(path), &table.marginals_csv())?;
            }
            emit(a.out.as_deref(), &table.to_csv())
        }
        Mode::Mcmc => {
            let n = x.n();
            let d = McmcConfig::default_for(n, a.seed);
            let cfg = McmcConfig::new(
                a.burn_in.unwrap_or(d.burn_in),
                a.samples.unwrap_or(d.samples),
                a.thin.unwrap_or(d.thin),
                a.seed,
            )?;
            let out = mcmc_posterior(&x, &a.prior, &model, &cfg)?;
            if let Some(path) = &a.samples_out {
                let lines: String = out.samples.iter().map(|s| format!("{s}\n")).collect();
                emit(Some(path), &lines)?;
            }
            eprintln!(
                "approximate (mcmc): acceptance rate {:.4}, {} samples",
                out.acceptance_rate,
                out.samples.len()
            );
            emit(a.out.as_deref(), &marginals_to_csv(&out.inclusion))
        }
    }
}

fn cmd_credible(a: &CredibleArgs) -> Result<(), Failure> {
    let table = match &a.posterior {
        Some(path) => PosteriorTable::from_csv(&read_text(path)?)
            .map_err(|e| Failure::Invalid(format!("{}: {e}", path.display())))?,
        None => a.source.table()?,
    };
    let base = hpd_credible_set(&table, a.gamma)?;
    let set = enlarge(&base, a.enlarge)?;
    let mass = table.mass_where(|t| set.contains(t));
    let members: Vec<String> = set.members.iter().map(|m| m.to_string()).collect();
    let value = json!({
        "members": members,
        "achieved_mass": mass,
        "gamma": a.gamma,
        "radius": a.enlarge,
        "base_size": base.len(),
        "base_mass": base.achieved_mass,
    });
    emit(a.out.as_deref(), &json_line(&value))
}

fn cmd_test(a: &TestArgs) -> Result<(), Failure> {
    let path = a
        .source
        .graph
        .as_ref()
        .ok_or_else(|| Failure::Invalid("--graph is required".into()))?;
    let x = read_graph(path)?;
    let alternative = match a.m1 {
        Some(m1) => Alternative::ClassSize(m1),
        None => Alternative::Complement,
    };
    let inputs = OddsBoundInputs {
        a_n: a.a_n,
        b_n: a.b_n,
    };
    let res = class_size_test(
        &x,
        &a.source.prior,
        &a.source.model()?,
        a.m0,
        alternative,
        a.threshold,
        inputs,
    )?;
    emit(
        a.out.as_deref(),
        &json_line(&serde_json::to_value(&res).expect("result serializes")),
    )
}

fn cmd_bounds(a: &BoundsArgs) -> Result<(), Failure> {
    let g = || a.g.unwrap_or_else(|| g_constant(&a.prior).value());
    let model = || -> Result<EdgeModel, Failure> { Ok(EdgeModel::new(need(a.p, "p")?, need(a.q, "q")?)?) };
    let report = match a.kind {
        BoundKind::Hellinger => {
            let (p, q) = (need(a.p, "p")?, need(a.q, "q")?);
            BoundReport::new("hellinger_affinity", hellinger_affinity(p, q)?, &[("p", p), ("q", q)])
        }
        BoundKind::RhoUpper => {
            let (p, q) = (need(a.p, "p")?, need(a.q, "q")?);
            BoundReport::new("rho_upper", rho_upper_bound(p, q)?, &[("p", p), ("q", q)])
        }
        BoundKind::Thm41Uniform => thm41_uniform_bound(need(a.n, "n")?, need(a.alpha, "alpha")?)?,
        BoundKind::Thm41Dense => {
            let c = match a.c {
                Some(c) => c,
                None => default_c(&model()?),
            };
            thm41_dense_bound(need(a.n, "n")?, c, g())?
        }
        BoundKind::Thm41Ch => {
            let (n, ca, cb) = (need(a.n, "n")?, need(a.a, "a")?, need(a.b, "b")?);
            let v = thm41_ch_sufficient(ca, cb, n)?;
            BoundReport::new("thm41_ch_sufficient", v, &[("n", n as f64), ("a", ca), ("b", cb)])
        }
        BoundKind::Thm42 => {
            let n = need(a.n, "n")?;
            let beta = match a.beta {
                Some(b) => b,
                None => bisect_bayes::bounds::default_beta(&model()?, n),
            };
            thm42_bound(n, need(a.alpha, "alpha")?, beta, g())?
        }
        BoundKind::Thm42Ks => thm42_ks_bound(
            need(a.n, "n")?,
            need(a.alpha, "alpha")?,
            need(a.c, "c")?,
            need(a.d, "d")?,
            g(),
        )?,
        BoundKind::KsSandwich => {
            let (c, d) = (need(a.c, "c")?, need(a.d, "d")?);
            let (lower, mid, upper) = ks_equivalence_sandwich(c, d)?;
            let value = json!({
                "name": "ks_equivalence_sandwich",
                "lower": lower,
                "mid": mid,
                "upper": upper,
                "inputs": {"c": c, "d": d},
            });
            return emit(None, &json_line(&value));
        }
    };
    emit(None, &format!("{}\n", report.to_json()))
}

fn cmd_experiment(a: &ExperimentArgs) -> Result<(), Failure> {
    let cfg = ExperimentConfig::from_json(&read_text(&a.config)?)
        .map_err(|e| Failure::Invalid(format!("{}: {e}", a.config.display())))?;
    let out = match (&a.out, &cfg.output) {
        (Some(p), _) => p.clone(),
        (None, Some(p)) => PathBuf::from(p),
        (None, None) => return Err(Failure::Invalid("no output path: pass --out or set `output`".into())),
    };
    let result = run_experiment(&cfg)?;
    let meta = write_outputs(&cfg, &result, &out)?;
    eprintln!("wrote {} rows to {} ({})", result.rows.len(), out.display(), meta.display());
    Ok(())
}

fn cmd_verify(a: &VerifyArgs) -> Result<(), Failure> {
    let report = aux_lemma_suite();
    let text = serde_json::to_string_pretty(&report).expect("report serializes") + "\n";
    emit(a.out.as_deref(), &text)?;
    for c in &report.checks {
        eprintln!("{:<12} points {:>8}  violations {}", c.name, c.points, c.violations);
    }
    if report.passed() {
        Ok(())
    } else {
        Err(Failure::Violations)
    }
}

fn run(cli: &Cli) -> Result<(), Failure> {
    if let Some(t) = cli.threads {
        if t == 0 {
            return Err(Failure::Invalid("--threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| Failure::Invalid(e.to_string()))?;
    }
    match &cli.command {
        Command::Sample(a) => cmd_sample(a),
        Command::Posterior(a) => cmd_posterior(a),
        Command::Credible(a) => cmd_credible(a),
        Command::Test(a) => cmd_test(a),
        Command::Bounds(a) => cmd_bounds(a),
        Command::Experiment(a) => cmd_experiment(a),
        Command::Verify(a) => cmd_verify(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            if !e.use_stderr() {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let rendered = e.to_string();
            let line = rendered.lines().find(|l| !l.trim().is_empty()).unwrap_or("invalid arguments");
            eprintln!("{line}");
            return ExitCode::from(2);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Invalid(msg)) => {
            eprintln!("error: {}", msg.replace('\n', " "));
            ExitCode::from(2)
        }
        Err(Failure::Io(msg)) => {
            eprintln!("error: {}", msg.replace('\n', " "));
            ExitCode::from(1)
        }
        Err(Failure::Violations) => {
            eprintln!("error: auxiliary inequality violations found");
            ExitCode::from(1)
        }
    }
}
