use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use rqc::kak::{kak_decompose, KakDecomposition};
use rqc::lcc::{run_lcc, SpecFile};
use rqc::protocol::{analytic_detection_rate, run_session, success_probability_account, Scenario, SendLabel};
use rqc::qcore::{format_complex, format_matrix, format_state, haar_random_unitary, parse_matrix, phase_aligned_distance};
use rqc::registry::{named_spec, GATE_NAMES};
use rqc::tomography::{bootstrap_error, ideal_chi, process_fidelity, reconstruct_mle, simulate_dataset, DataMode, Noise};
use rqc::{rng_from_seed, CMatrix, Error, C64};

#[derive(Parser)]
#[command(name = "rqc", version, about = "Remote linear-combination quantum processing simulator")]
struct Cli {
    /// Seed for every stochastic step. Required by stochastic commands.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Write the primary output here instead of stdout. For `protocol` this
    /// is the JSONL transcript and the report still goes to stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Run a linear combination of operations from a JSON spec file.
    Lcc { spec: PathBuf },
    /// KAK-decompose a 4x4 unitary, or a batch of random ones.
    Kak(KakArgs),
    /// Simulate a client/server session from a JSON scenario file.
    Protocol { scenario: PathBuf },
    /// Process tomography of named operations.
    Tomography(TomographyArgs),
}

#[derive(Args)]
struct KakArgs {
    /// Matrix literal file.
    matrix: Option<PathBuf>,
    /// Decompose this many Haar-random unitaries instead.
    #[arg(long, conflicts_with = "matrix")]
    random: Option<usize>,
}

#[derive(Args)]
struct TomographyArgs {
    /// File with one operation name per line. Defaults to U1..U12.
    operations: Option<PathBuf>,
    #[arg(long, default_value_t = 1000)]
    shots: u64,
    /// Depolarizing strength applied after each operation.
    #[arg(long, default_value_t = 0.0)]
    depolarizing: f64,
    /// Sample counts instead of using exact expectations.
    #[arg(long)]
    sampled: bool,
    #[arg(long, default_value_t = 20)]
    resamples: usize,
}

#[derive(Debug)]
enum CliError {
    Core(Error),
    Usage(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Core(Error::Parse(_)) => 2,
            CliError::Core(
                Error::NotUnitary(_)
                | Error::NotNormalized(_)
                | Error::InvalidParameter(_)
                | Error::InvalidInput(_)
                | Error::Diagonalization(_),
            ) => 3,
            CliError::Core(
                Error::Dimension(_) | Error::DuplicateIndex(_) | Error::IndexOutOfRange { .. } | Error::InvalidLabel { .. },
            ) => 4,
            CliError::Core(Error::UnknownName(_)) => 5,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Usage(m) => f.write_str(m),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn read(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

fn require_seed(seed: Option<u64>, what: &str) -> CliResult<u64> {
    seed.ok_or_else(|| CliError::Usage(format!("{what} is stochastic and needs --seed")))
}

fn pair(z: C64) -> [f64; 2] {
    [z.re, z.im]
}

fn emit<T: Serialize>(format: Format, report: &T, text: impl FnOnce() -> String) -> String {
    match format {
        Format::Json => serde_json::to_string_pretty(report).expect("reports serialize") + "\n",
        Format::Text => text(),
    }
}

#[derive(Serialize)]
struct LccReport {
    n: usize,
    d: usize,
    success_probability: f64,
    residual: f64,
    output_state: Option<Vec<[f64; 2]>>,
    non_unitary_terms: Vec<usize>,
}

fn cmd_lcc(cli: &Cli, path: &Path) -> CliResult<String> {
    let file = SpecFile::parse(&read(path)?)?;
    let spec = file.spec()?;
    let input = file.input(spec.d())?;
    let run = run_lcc(&spec, &input)?;
    let direct = input
        .amplitudes()
        .map(|psi| spec.combination() * psi)
        .ok_or_else(|| Error::InvalidInput("input must be a statevector".into()))?;
    let column = |v: &rqc::CVector| CMatrix::from_column_slice(v.len(), 1, v.as_slice());
    let residual = match &run.output_state {
        Some(out) => {
            let want = column(&direct) / rqc::C64::new(direct.norm(), 0.0);
            phase_aligned_distance(&column(out.amplitudes().expect("pure run")), &want)?
        }
        None => direct.norm(),
    };
    let report = LccReport {
        n: spec.n(),
        d: spec.d(),
        success_probability: run.success_probability,
        residual,
        output_state: run.output_state.as_ref().and_then(|s| s.amplitudes()).map(|v| v.iter().copied().map(pair).collect()),
        non_unitary_terms: spec.non_unitary_terms(),
    };
    Ok(emit(cli.format, &report, || {
        let mut s = String::new();
        writeln!(s, "terms               {}", report.n).unwrap();
        writeln!(s, "dimension           {}", report.d).unwrap();
        writeln!(s, "success probability {}", report.success_probability).unwrap();
        writeln!(s, "residual            {:e}", report.residual).unwrap();
        if !report.non_unitary_terms.is_empty() {
            writeln!(s, "non-unitary terms   {:?}", report.non_unitary_terms).unwrap();
        }
        match &run.output_state {
            Some(out) => {
                s.push_str("output state\n");
                s.push_str(&format_state(out));
            }
            None => s.push_str("output state        none (zero-probability branch)\n"),
        }
        s
    }))
}

#[derive(Serialize)]
struct KakReport {
    k: [f64; 3],
    alpha: Vec<[f64; 2]>,
    global_phase: f64,
    u1: String,
    v1: String,
    u2: String,
    v2: String,
    residual: f64,
}

impl KakReport {
    fn new(dec: &KakDecomposition, u: &CMatrix) -> CliResult<Self> {
        Ok(Self {
            k: dec.k,
            alpha: dec.alpha.iter().copied().map(pair).collect(),
            global_phase: dec.global_phase,
            u1: format_matrix(&dec.u1),
            v1: format_matrix(&dec.v1),
            u2: format_matrix(&dec.u2),
            v2: format_matrix(&dec.v2),
            residual: phase_aligned_distance(&dec.reconstruct(), u)?,
        })
    }
}

#[derive(Serialize)]
struct KakBatchReport {
    count: usize,
    seed: u64,
    residuals: Vec<f64>,
    max_residual: f64,
}

fn cmd_kak(cli: &Cli, args: &KakArgs) -> CliResult<String> {
    if let Some(count) = args.random {
        let seed = require_seed(cli.seed, "kak --random")?;
        let mut rng = rng_from_seed(seed);
        let mut residuals = Vec::with_capacity(count);
        for _ in 0..count {
            let u = haar_random_unitary(4, &mut rng)?;
            residuals.push(phase_aligned_distance(&kak_decompose(&u)?.reconstruct(), &u)?);
        }
        let max_residual = residuals.iter().copied().fold(0.0, f64::max);
        let report = KakBatchReport { count, seed, residuals, max_residual };
        return Ok(emit(cli.format, &report, || {
            let mut s = String::new();
            for (i, r) in report.residuals.iter().enumerate() {
                writeln!(s, "{i:>6} {r:e}").unwrap();
            }
            writeln!(s, "max residual {:e}", report.max_residual).unwrap();
            s
        }));
    }
    let path = args.matrix.as_ref().ok_or_else(|| CliError::Usage("kak needs a matrix file or --random".into()))?;
    let u = parse_matrix(&read(path)?)?;
    let dec = kak_decompose(&u)?;
    let report = KakReport::new(&dec, &u)?;
    Ok(emit(cli.format, &report, || {
        let mut s = String::new();
        writeln!(s, "k        {} {} {}", report.k[0], report.k[1], report.k[2]).unwrap();
        let alpha: Vec<String> = dec.alpha.iter().map(|z| format_complex(*z)).collect();
        writeln!(s, "alpha    {}", alpha.join(" ")).unwrap();
        writeln!(s, "phase    {}", report.global_phase).unwrap();
        writeln!(s, "residual {:e}", report.residual).unwrap();
        for (name, m) in [("U1", &report.u1), ("V1", &report.v1), ("U2", &report.u2), ("V2", &report.v2)] {
            writeln!(s, "{name}").unwrap();
            s.push_str(m);
        }
        s
    }))
}

#[derive(Serialize)]
struct DetectionPoint {
    rounds: usize,
    verify_rounds: usize,
    verify_failures: usize,
    analytic_undetected: f64,
}

#[derive(Serialize)]
struct ProtocolReport {
    seed: u64,
    rounds: usize,
    compute_rounds: usize,
    decoy_rounds: usize,
    verify_rounds: usize,
    failed_rounds: usize,
    p_compute: f64,
    p_decoy: f64,
    p_verify: f64,
    analytic_success: f64,
    empirical_lcc_success: f64,
    empirical_teleport_success: f64,
    empirical_input_teleport_success: Option<f64>,
    verify_failures: usize,
    first_detection_round: Option<usize>,
    detection_rate_per_verify: f64,
    min_compute_fidelity: Option<f64>,
    detection_curve: Vec<DetectionPoint>,
}

fn checkpoints(rounds: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut scale = 10;
    while scale <= rounds {
        for m in [1, 2, 5] {
            if m * scale <= rounds {
                out.push(m * scale);
            }
        }
        scale *= 10;
    }
    if out.last() != Some(&rounds) && rounds > 0 {
        out.push(rounds);
    }
    out
}

fn cmd_protocol(cli: &Cli, path: &Path) -> CliResult<(String, Option<String>)> {
    let scenario = Scenario::parse(&read(path)?)?.resolve()?;
    let seed = match (cli.seed, scenario.seed) {
        (Some(s), _) | (None, Some(s)) => s,
        (None, None) => return Err(CliError::Usage("protocol needs --seed or a `seed` in the scenario".into())),
    };
    let mut rng = rng_from_seed(seed);
    let config = &scenario.config;
    let transcript = run_session(&scenario.spec, &scenario.input, &scenario.policy, scenario.behavior, config, &mut rng)?;
    let q = analytic_detection_rate(&scenario.spec, &scenario.input, scenario.behavior, config.verify)?;
    let tau = scenario.policy.tau();
    let per_round = (1.0 - tau) * q;
    let detection_curve = checkpoints(transcript.records.len())
        .into_iter()
        .map(|r| {
            let seen = &transcript.records[..r];
            DetectionPoint {
                rounds: r,
                verify_rounds: seen.iter().filter(|x| matches!(x.label, SendLabel::Verify(_))).count(),
                verify_failures: seen.iter().filter(|x| x.verify_passed == Some(false)).count(),
                analytic_undetected: (1.0 - per_round).powi(r as i32),
            }
        })
        .collect();
    let s = &transcript.summary;
    let report = ProtocolReport {
        seed,
        rounds: s.rounds,
        compute_rounds: s.compute_rounds,
        decoy_rounds: s.decoy_rounds,
        verify_rounds: s.verify_rounds,
        failed_rounds: s.failed_rounds,
        p_compute: scenario.policy.p_control(),
        p_decoy: scenario.policy.p_decoy(),
        p_verify: 1.0 - tau,
        analytic_success: success_probability_account(&scenario.spec, config.include_input_teleport, config.include_output_teleport),
        empirical_lcc_success: s.empirical_lcc_success,
        empirical_teleport_success: s.empirical_teleport_success,
        empirical_input_teleport_success: config
            .include_input_teleport
            .then(|| s.attempts as f64 / s.input_teleport_runs.max(1) as f64),
        verify_failures: s.verify_failures,
        first_detection_round: s.first_detection_round,
        detection_rate_per_verify: q,
        min_compute_fidelity: s.min_compute_fidelity,
        detection_curve,
    };
    let text = emit(cli.format, &report, || {
        let mut t = String::new();
        let opt = |v: Option<f64>| v.map_or("-".to_string(), |x| x.to_string());
        writeln!(t, "seed                      {}", report.seed).unwrap();
        writeln!(t, "rounds                    {}", report.rounds).unwrap();
        writeln!(t, "compute/decoy/verify      {}/{}/{}", report.compute_rounds, report.decoy_rounds, report.verify_rounds).unwrap();
        writeln!(t, "failed rounds             {}", report.failed_rounds).unwrap();
        writeln!(t, "p_compute                 {}", report.p_compute).unwrap();
        writeln!(t, "p_decoy                   {}", report.p_decoy).unwrap();
        writeln!(t, "p_verify                  {}", report.p_verify).unwrap();
        writeln!(t, "analytic success          {}", report.analytic_success).unwrap();
        writeln!(t, "empirical lcc success     {}", report.empirical_lcc_success).unwrap();
        writeln!(t, "empirical teleport        {}", report.empirical_teleport_success).unwrap();
        writeln!(t, "empirical input teleport  {}", opt(report.empirical_input_teleport_success)).unwrap();
        writeln!(t, "verify failures           {}", report.verify_failures).unwrap();
        writeln!(t, "first detection round     {}", report.first_detection_round.map_or("-".to_string(), |r| r.to_string())).unwrap();
        writeln!(t, "detection rate per verify {}", report.detection_rate_per_verify).unwrap();
        writeln!(t, "min compute fidelity      {}", opt(report.min_compute_fidelity)).unwrap();
        writeln!(t, "{:>8} {:>8} {:>8} {:>20}", "rounds", "verify", "failed", "analytic_undetected").unwrap();
        for p in &report.detection_curve {
            writeln!(t, "{:>8} {:>8} {:>8} {:>20.12e}", p.rounds, p.verify_rounds, p.verify_failures, p.analytic_undetected).unwrap();
        }
        t
    });
    Ok((text, Some(transcript.to_jsonl())))
}

#[derive(Serialize)]
struct TomographyRow {
    name: String,
    fidelity: f64,
    std: f64,
    resamples: usize,
    seed: Option<u64>,
    converged: bool,
    chi: String,
}

fn operation_list(path: Option<&Path>) -> CliResult<Vec<String>> {
    let names: Vec<String> = match path {
        None => GATE_NAMES.iter().filter(|n| n.starts_with('U')).map(|n| n.to_string()).collect(),
        Some(p) => read(p)?
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(str::to_string)
            .collect(),
    };
    if names.is_empty() {
        return Err(Error::UnknownName("empty operation list".into()).into());
    }
    Ok(names)
}

fn cmd_tomography(cli: &Cli, args: &TomographyArgs) -> CliResult<String> {
    let names = operation_list(args.operations.as_deref())?;
    let ops = names
        .iter()
        .map(|n| Ok((n.clone(), named_spec(n)?.combination())))
        .collect::<CliResult<Vec<_>>>()?;
    let mode = if args.sampled { DataMode::Sampled } else { DataMode::Analytic };
    let seed = if args.sampled { Some(require_seed(cli.seed, "sampled tomography")?) } else { cli.seed };
    let mut rng = rng_from_seed(seed.unwrap_or(0));
    let noise = if args.depolarizing > 0.0 { Noise::Depolarizing(args.depolarizing) } else { Noise::None };
    let mut rows = Vec::with_capacity(ops.len());
    for (name, op) in ops {
        let ideal = ideal_chi(&op, true)?;
        let data = simulate_dataset(&op, args.shots, noise, mode, &mut rng)?;
        let fit = reconstruct_mle(&data)?;
        let boot = bootstrap_error(&data, &ideal, args.resamples, &mut rng)?;
        rows.push(TomographyRow {
            name,
            fidelity: process_fidelity(&fit.chi, &ideal)?,
            std: boot.std,
            resamples: boot.resamples,
            seed,
            converged: fit.converged,
            chi: format_matrix(&fit.chi.matrix()),
        });
    }
    Ok(emit(cli.format, &rows, || {
        let mut s = format!("{:<6} {:>12} {:>12} {:>9} {:>6}\n", "name", "fidelity", "std", "resamples", "seed");
        for r in &rows {
            let seed = r.seed.map_or("-".to_string(), |x| x.to_string());
            writeln!(s, "{:<6} {:>12.8} {:>12.3e} {:>9} {:>6}", r.name, r.fidelity, r.std, r.resamples, seed).unwrap();
        }
        s
    }))
}

fn write_out(path: &Path, text: &str) -> CliResult<()> {
    std::fs::write(path, text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

fn run(cli: &Cli) -> CliResult<()> {
    let (report, primary) = match &cli.command {
        Command::Lcc { spec } => (cmd_lcc(cli, spec)?, None),
        Command::Kak(args) => (cmd_kak(cli, args)?, None),
        Command::Protocol { scenario } => cmd_protocol(cli, scenario)?,
        Command::Tomography(args) => (cmd_tomography(cli, args)?, None),
    };
    match (&cli.out, primary) {
        (Some(path), Some(transcript)) => {
            write_out(path, &transcript)?;
            print!("{report}");
        }
        (Some(path), None) => write_out(path, &report)?,
        (None, _) => print!("{report}"),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
