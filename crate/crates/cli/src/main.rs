//! `tsrl`: generate games, train teachers and students, evaluate and
//! analyze. Failures print one line, `error: <category>: <message>`, and
//! exit 1; usage errors exit 2 with category `usage`.

use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;

use tsrl_core::curriculum::{collect_with_teacher, read_pool, write_pool, CollectConfig};
use tsrl_core::dqn_teacher::{train_teacher, TrainingConfig};
use tsrl_core::encoder::Checkpoint;
use tsrl_core::engine::{
    self, generate_game_with, solve_optimal, GameSpec, GameState, GenOptions, Genre, Profile, SolverConfig,
    Status, Transcript,
};
use tsrl_core::harness::{
    analyze_confidence, evaluate_games, kl_summaries_csv, read_suite, write_suite, Agent, ConstantAgent,
    EpisodeRecord, EvalOptions, EvalReport, NeuralAgent, OracleAgent,
};
use tsrl_core::policy::{PolicyConfig, PolicyKind};
use tsrl_core::student::{train_student, EvalSuites, StudentConfig, StudentVariant};
use tsrl_core::text::{
    build_word_vectors, engine_corpus, load_word_vectors, CorpusConfig, VectorConfig, Vocabulary,
};
use tsrl_core::{Error, Result};

#[derive(Parser)]
#[command(name = "tsrl", version, about = "Teacher-student imitation learning for text games")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a suite of generated games.
    GenerateGames(GenerateArgs),
    /// Train a DQN teacher on a suite.
    TrainTeacher(TeacherArgs),
    /// Roll out a teacher and record full Q-tables.
    CollectCurriculum(CollectArgs),
    /// Train a student from a curriculum pool.
    TrainStudent(StudentArgs),
    /// Play a suite with an agent and write reports.
    Evaluate(EvaluateArgs),
    /// KL-confidence summaries of evaluation runs.
    Analyze(AnalyzeArgs),
    /// Step through a game, reading actions from stdin.
    Play(PlayArgs),
    /// Solve a game exactly.
    Solve(SolveArgs),
    /// Build distributional word vectors from engine text.
    BuildVectors(VectorArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum ProfileArg {
    Standard,
    Micro,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long)]
    genre: Genre,
    #[arg(long)]
    count: u64,
    #[arg(long, default_value_t = 1)]
    difficulty: u8,
    /// First seed; games use consecutive seeds.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "standard")]
    profile: ProfileArg,
    #[arg(long)]
    suite_id: Option<String>,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args)]
struct TeacherArgs {
    #[arg(long)]
    games_dir: PathBuf,
    /// Suite scored at each checkpoint; the training suite by default.
    #[arg(long)]
    eval_dir: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    total_steps: Option<u64>,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args)]
struct CollectArgs {
    #[arg(long)]
    teacher_ckpt: PathBuf,
    #[arg(long)]
    games_dir: PathBuf,
    #[arg(long)]
    episodes: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = engine::DEFAULT_STEP_CAP)]
    step_cap: u32,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct StudentArgs {
    #[arg(long)]
    variant: StudentVariant,
    #[arg(long)]
    pool: PathBuf,
    #[arg(long)]
    config: Option<PathBuf>,
    /// Word vectors for the embedding table, frozen.
    #[arg(long)]
    embeddings: Option<PathBuf>,
    #[arg(long)]
    in_domain_dir: Option<PathBuf>,
    #[arg(long)]
    out_domain_dir: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    total_steps: Option<u64>,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum BuiltinAgent {
    /// Q = 0 for every action.
    Constant,
    /// Exact Q-values from the solver.
    Oracle,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long, conflicts_with = "agent", required_unless_present = "agent")]
    checkpoint: Option<PathBuf>,
    #[arg(long, value_enum)]
    agent: Option<BuiltinAgent>,
    #[arg(long)]
    games_dir: PathBuf,
    #[arg(long, default_value = "greedy")]
    policy: PolicyKind,
    #[arg(long, default_value_t = 1.0)]
    temperature: f64,
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Evaluation output directories; each needs report.json and episodes.jsonl.
    #[arg(long = "run", required = true)]
    runs: Vec<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct PlayArgs {
    #[arg(long)]
    game: PathBuf,
    /// Writes the finished transcript here.
    #[arg(long)]
    transcript: Option<PathBuf>,
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    game: PathBuf,
    /// Expand only progress actions.
    #[arg(long)]
    prune: bool,
}

#[derive(Args)]
struct VectorArgs {
    #[arg(long, default_value_t = 50)]
    dim: usize,
    #[arg(long, default_value_t = 2)]
    window: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let text = e.to_string();
            let summary: Vec<&str> = text
                .lines()
                .map(str::trim)
                .take_while(|l| !l.starts_with("Usage:"))
                .filter(|l| !l.is_empty())
                .collect();
            eprintln!("error: usage: {}", summary.join(" ").trim_start_matches("error: "));
            return ExitCode::from(2);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let message = e.to_string().replace('\n', " ");
            eprintln!("error: {}: {message}", e.category());
            ExitCode::from(1)
        }
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::GenerateGames(a) => generate(a),
        Command::TrainTeacher(a) => teacher(a),
        Command::CollectCurriculum(a) => curriculum(a),
        Command::TrainStudent(a) => student(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Analyze(a) => analyze(a),
        Command::Play(a) => play(a),
        Command::Solve(a) => solve(a),
        Command::BuildVectors(a) => vectors(a),
    }
}

fn read_json<T: DeserializeOwned + Default>(path: Option<&Path>) -> Result<T> {
    match path {
        None => Ok(T::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
            Ok(serde_json::from_str(&text)?)
        }
    }
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn suite(dir: &Path) -> Result<Vec<GameSpec>> {
    Ok(read_suite(dir)?.1)
}

fn read_game(path: &Path) -> Result<GameSpec> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    GameSpec::from_json(&text)
}

fn generate(a: GenerateArgs) -> Result<()> {
    let profile = match a.profile {
        ProfileArg::Standard => Profile::Standard,
        ProfileArg::Micro => Profile::Micro,
    };
    let games = (a.seed..a.seed + a.count)
        .map(|s| generate_game_with(a.genre, s, a.difficulty, &GenOptions { profile }))
        .collect::<Result<Vec<_>>>()?;
    let id = a.suite_id.unwrap_or_else(|| {
        let p = if profile == Profile::Micro { "-micro" } else { "" };
        format!("{}{p}-d{}-s{}-n{}", a.genre.as_str(), a.difficulty, a.seed, a.count)
    });
    write_suite(&a.out_dir, &id, &games)?;
    println!("wrote {} games to {}", games.len(), a.out_dir.display());
    Ok(())
}

fn teacher(a: TeacherArgs) -> Result<()> {
    let mut config: TrainingConfig = read_json(a.config.as_deref())?;
    if let Some(s) = a.seed {
        config.seed = s;
    }
    if let Some(n) = a.total_steps {
        config.total_steps = n;
    }
    let games = suite(&a.games_dir)?;
    let eval = match &a.eval_dir {
        Some(d) => suite(d)?,
        None => games.clone(),
    };
    let run = train_teacher(&config, &games, &eval, Some(&a.out_dir))?;
    let last = run.metrics.last().map_or(0.0, |m| m.eval_score_pct);
    println!(
        "teacher: {} gradient steps, {} episodes, eval {last:.1}%",
        run.gradient_steps, run.episodes
    );
    Ok(())
}

fn curriculum(a: CollectArgs) -> Result<()> {
    let teacher = Checkpoint::load(&a.teacher_ckpt)?;
    let config = CollectConfig {
        episodes: a.episodes,
        step_cap: a.step_cap,
        seed: a.seed,
        ..CollectConfig::default()
    };
    let pool = collect_with_teacher(&teacher, &suite(&a.games_dir)?, &config)?;
    if let Some(dir) = a.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    write_pool(&pool, &a.out)?;
    println!("wrote {} records to {}", pool.len(), a.out.display());
    Ok(())
}

fn student(a: StudentArgs) -> Result<()> {
    let mut config: StudentConfig = match &a.config {
        Some(p) => read_json(Some(p))?,
        None => StudentConfig::for_variant(a.variant),
    };
    config.variant = a.variant;
    if let Some(s) = a.seed {
        config.seed = s;
    }
    if let Some(n) = a.total_steps {
        config.total_steps = n;
    }
    let vocab = Vocabulary::engine_default();
    let table = a.embeddings.as_deref().map(|p| load_word_vectors(p, &vocab)).transpose()?;
    let pool = read_pool(&a.pool)?;
    let in_domain = a.in_domain_dir.as_deref().map(suite).transpose()?.unwrap_or_default();
    let out_domain = a.out_domain_dir.as_deref().map(suite).transpose()?.unwrap_or_default();
    let suites = EvalSuites {
        in_domain: &in_domain,
        out_domain: &out_domain,
    };
    let run = train_student(&config, &pool, &vocab, table.as_ref(), suites, Some(&a.out_dir))?;
    let last = run.metrics.last().expect("at least one checkpoint");
    println!("{}: {} steps, loss {:.4e}", a.variant.as_str(), last.step, last.loss);
    Ok(())
}

fn evaluate(a: EvaluateArgs) -> Result<()> {
    let policy = PolicyConfig {
        kind: a.policy,
        temperature: a.temperature,
        alpha: a.alpha,
        seed: a.seed,
    };
    policy.validate()?;
    let (manifest, games) = read_suite(&a.games_dir)?;
    let checkpoint = a.checkpoint.as_deref().map(Checkpoint::load).transpose()?;
    let mut constant = ConstantAgent::default();
    let mut oracle = OracleAgent::new(SolverConfig {
        prune: false,
        ..SolverConfig::default()
    });
    let mut neural;
    let (agent, label): (&mut dyn Agent, String) = match (&checkpoint, a.agent) {
        (Some(c), _) => {
            neural = NeuralAgent::new(&c.encoder, &c.vocab, tsrl_core::text::DEFAULT_MAX_TOKENS)?;
            (&mut neural, c.label.clone())
        }
        (None, Some(BuiltinAgent::Oracle)) => (&mut oracle, "oracle".into()),
        (None, _) => (&mut constant, "constant".into()),
    };
    let (report, episodes) = evaluate_games(agent, &label, &manifest.suite_id, &games, &EvalOptions::with_policy(policy))?;
    report.write(&a.out_dir)?;
    let mut lines = String::new();
    for ep in &episodes {
        lines.push_str(&serde_json::to_string(ep)?);
        lines.push('\n');
    }
    write_file(&a.out_dir.join("episodes.jsonl"), &lines)?;
    let t = &report.tallies;
    println!(
        "{label} {}: {:.1}% (win {}, fail {}, step_limit {})",
        policy.label(),
        report.percent,
        t.win,
        t.fail,
        t.step_limit
    );
    Ok(())
}

fn analyze(a: AnalyzeArgs) -> Result<()> {
    let mut runs = Vec::new();
    for dir in &a.runs {
        let report = EvalReport::read(&dir.join("report.json"))?;
        let path = dir.join("episodes.jsonl");
        let file = std::fs::File::open(&path).map_err(|e| Error::io(&path, e))?;
        let mut episodes = Vec::new();
        for (i, line) in std::io::BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| Error::io(&path, e))?;
            let ep: EpisodeRecord = serde_json::from_str(&line).map_err(|e| Error::Parse {
                line: i + 1,
                message: e.to_string(),
            })?;
            episodes.push(ep);
        }
        runs.push((format!("{}/{}", report.agent, report.policy.label()), episodes));
    }
    let csv = kl_summaries_csv(&analyze_confidence(&runs)?);
    write_file(&a.out, &csv)?;
    print!("{csv}");
    Ok(())
}

fn play(a: PlayArgs) -> Result<()> {
    let spec = read_game(&a.game)?;
    let mut state = GameState::initial(&spec);
    let mut transcript = Transcript::new(&spec, &state);
    let mut out = std::io::stdout().lock();
    let io = |e| Error::io("<stdout>", e);
    writeln!(out, "{}\n{}", engine::intro_text(&spec), engine::render(&spec, &state, "")).map_err(io)?;
    let stdin = std::io::stdin();
    let mut lines = stdin.lock().lines();
    while state.status == Status::Ongoing {
        let actions = state.admissible_actions(&spec);
        for (i, act) in actions.iter().enumerate() {
            writeln!(out, "  {i:>2}. {act}").map_err(io)?;
        }
        write!(out, "> ").map_err(io)?;
        out.flush().map_err(io)?;
        let Some(line) = lines.next() else { break };
        let line = line.map_err(|e| Error::io("<stdin>", e))?;
        let input = line.trim();
        if input.is_empty() {
            continue;
        }
        let action = match input.parse::<usize>() {
            Ok(i) if i < actions.len() => actions[i].clone(),
            _ => input.to_string(),
        };
        match state.apply(&spec, &action) {
            Ok(outcome) => {
                transcript.record(&action, &outcome.feedback, &spec, &state);
                writeln!(out, "\n{}\n", engine::render(&spec, &state, &outcome.feedback)).map_err(io)?;
            }
            Err(e) => writeln!(out, "{e}").map_err(io)?,
        }
    }
    writeln!(out, "\nscore {} of {}, {:?}", state.score, spec.max_score, state.status).map_err(io)?;
    if let Some(path) = &a.transcript {
        write_file(path, &transcript.finish(&spec, &state))?;
    }
    Ok(())
}

fn solve(a: SolveArgs) -> Result<()> {
    let spec = read_game(&a.game)?;
    let config = SolverConfig {
        prune: a.prune,
        ..SolverConfig::default()
    };
    let solution = solve_optimal(&spec, &config)?;
    let summary = serde_json::json!({
        "game_id": spec.id(),
        "max_score": spec.max_score,
        "optimal_return": solution.optimal_return(),
        "states": solution.state_count(),
        "path_score": solution.path_score,
        "path": solution.path,
    });
    println!("{}", serde_json::to_string_pretty(&summary)?);
    Ok(())
}

fn vectors(a: VectorArgs) -> Result<()> {
    let corpus = engine_corpus(&CorpusConfig {
        seed: a.seed,
        ..CorpusConfig::default()
    });
    let vectors = build_word_vectors(
        &corpus,
        &VectorConfig {
            dim: a.dim,
            window: a.window,
        },
    )?;
    if let Some(dir) = a.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    tsrl_core::text::write_word_vectors(&a.out, &vectors)?;
    println!("wrote {} vectors of dim {} to {}", vectors.len(), a.dim, a.out.display());
    Ok(())
}
