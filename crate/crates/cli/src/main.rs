use std::cell::RefCell;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use qcss_core::agent::{
    join, run_agent_loop, AgentBehavior, ArchetypeKind, Echo, LoopEnd, LoopOptions, PlayerArchetype, ReferencePlayer,
    ReferenceSupporter, SystemClock,
};
use qcss_core::model::{Pitch, Role, Team};
use qcss_core::net::UdpConnection;
use qcss_core::runner::{
    bench_swarm, home_advantage_experiment, replay, run_match, ExperimentOptions, MatchStats, RunConfig, StatsBuilder,
    TraceHeader, TraceReader, TraceWriter,
};

// stdout that exits quietly once the reader goes away
macro_rules! out {
    ($($t:tt)*) => {{
        use std::io::Write;
        match writeln!(std::io::stdout().lock(), $($t)*) {
            Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => std::process::exit(0),
            r => r?,
        }
    }};
}

#[derive(Parser)]
#[command(name = "qcss", version, about = "Tick-based soccer simulator driven by agent proposals")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a match described by a TOML config.
    Run(RunArgs),
    /// Re-run the scheduler over a recorded trace and compare every tick.
    Replay { trace: PathBuf },
    /// Print the statistics of a recorded trace as JSON.
    Stats { trace: PathBuf },
    /// Paired match experiments.
    #[command(subcommand)]
    Experiment(Experiment),
    /// Timing runs.
    #[command(subcommand)]
    Bench(Bench),
    /// Join a running UDP match as a single agent.
    Agent(AgentArgs),
}

#[derive(Args)]
struct RunArgs {
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// Do not pace ticks in real time (in-process transport only).
    #[arg(long)]
    virtual_clock: bool,
    /// Write the trace here.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Print the full statistics as JSON.
    #[arg(long)]
    json: bool,
}

#[derive(Subcommand)]
enum Experiment {
    /// Symmetric supporters against home-only supporters.
    HomeAdvantage {
        config: PathBuf,
        #[arg(long, default_value_t = 20)]
        reps: u32,
        #[arg(long)]
        ticks: Option<u32>,
        #[arg(long, default_value_t = 10)]
        supporters_per_side: u32,
        #[arg(long, default_value_t = 1.0)]
        bias: f64,
        #[arg(long, default_value_t = 10_000)]
        resamples: u32,
        #[arg(long)]
        json: bool,
    },
}

#[derive(Subcommand)]
enum Bench {
    /// Time the scheduler against an in-process supporter swarm.
    Swarm {
        #[arg(long, default_value_t = 10_000)]
        supporters: usize,
        #[arg(long, default_value_t = 100)]
        ticks: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum RoleArg {
    Player,
    Supporter,
}

#[derive(Clone, Copy, ValueEnum)]
enum TeamArg {
    Home,
    Guest,
}

#[derive(Clone, Copy, ValueEnum)]
enum BehaviorArg {
    Echo,
    Reference,
}

#[derive(Clone, Copy, ValueEnum)]
enum ArchetypeArg {
    Attacker,
    Midfielder,
    Defender,
}

#[derive(Args)]
struct AgentArgs {
    /// Scheduler address, host:port.
    #[arg(long)]
    addr: String,
    #[arg(long, value_enum)]
    role: RoleArg,
    #[arg(long, value_enum)]
    team: TeamArg,
    #[arg(long)]
    shirt: Option<u8>,
    #[arg(long, value_enum, default_value = "reference")]
    behavior: BehaviorArg,
    /// Players only; defaults to the one the shirt implies.
    #[arg(long, value_enum)]
    archetype: Option<ArchetypeArg>,
    #[arg(long)]
    max_speed: Option<f64>,
    /// Supporters only: meters the ball is pushed per proposal.
    #[arg(long, default_value_t = 1.0)]
    bias: f64,
    #[arg(long, default_value_t = 10)]
    margin_ms: u64,
    /// Must match the server's pitch, which the protocol does not carry.
    #[arg(long, default_value_t = 105.0)]
    pitch_length: f64,
    #[arg(long, default_value_t = 68.0)]
    pitch_width: f64,
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Run(args) => run(args),
        Command::Replay { trace } => replay_trace(&trace),
        Command::Stats { trace } => {
            let stats = trace_stats(&trace)?;
            out!("{}", serde_json::to_string_pretty(&stats)?);
            Ok(ExitCode::SUCCESS)
        }
        Command::Experiment(Experiment::HomeAdvantage {
            config,
            reps,
            ticks,
            supporters_per_side,
            bias,
            resamples,
            json,
        }) => {
            let base = RunConfig::load(&config)?;
            let opts = ExperimentOptions { repetitions: reps, ticks, supporters_per_side, bias, resamples };
            let r = home_advantage_experiment(&base, &opts)?;
            if json {
                out!("{}", serde_json::to_string_pretty(&r)?);
            } else {
                for arm in [&r.control, &r.treatment] {
                    out!(
                        "{:<9} budget {:.2}/{:.2}  away half {:.4}  home supporter share {:.5} (analytic {:.5} ± {:.5})",
                        arm.name,
                        arm.home_budget,
                        arm.guest_budget,
                        arm.mean_away_half_share,
                        arm.home_supporter_share,
                        arm.home_supporter_expected_share,
                        arm.home_supporter_standard_error
                    );
                }
                out!("away-half difference {:.4}, 95% interval [{:.4}, {:.4}]", r.occupancy_difference, r.ci95_low, r.ci95_high);
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Bench(Bench::Swarm { supporters, ticks, seed }) => {
            let b = bench_swarm(supporters, ticks, seed)?;
            out!(
                "{} supporters, {} ticks: scheduler median {:.3} ms, p90 {:.3} ms, max {:.3} ms; swarm median {:.3} ms; {} stalls",
                b.supporters, b.ticks, b.median_tick_ms, b.p90_tick_ms, b.max_tick_ms, b.median_swarm_ms, b.stalls
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Agent(args) => agent(args),
    }
}

fn run(args: RunArgs) -> Result<ExitCode> {
    let mut cfg = RunConfig::load(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    cfg.virtual_clock |= args.virtual_clock;

    let writer = RefCell::new(None);
    let outcome = run_match(
        &cfg,
        |config| {
            if let Some(path) = &args.trace {
                *writer.borrow_mut() = Some(TraceWriter::create(path, &TraceHeader::new(config.clone()))?);
            }
            Ok(())
        },
        |rec| {
            if let Some(w) = writer.borrow_mut().as_mut() {
                w.write(rec)?;
            }
            Ok(())
        },
    )?;
    if let Some(w) = writer.into_inner() {
        w.finish()?;
    }

    if args.json {
        out!("{}", serde_json::to_string_pretty(&outcome.stats)?);
    } else {
        print_summary(&outcome.stats)?;
        out!("elapsed {:.2?}", outcome.elapsed);
    }
    Ok(ExitCode::SUCCESS)
}

fn print_summary(s: &MatchStats) -> Result<()> {
    out!("ticks {}  stalls {} ({:.2}%)", s.ticks, s.stalls, s.stall_share * 100.0);
    out!(
        "ball mean ({:.2}, {:.2})  home half {:.3}  away half {:.3}",
        s.ball_mean.x, s.ball_mean.y, s.home_half_share, s.away_half_share
    );
    for (name, g) in [
        ("home players", &s.home_players),
        ("guest players", &s.guest_players),
        ("home supporters", &s.home_supporters),
        ("guest supporters", &s.guest_supporters),
    ] {
        if g.members > 0 {
            out!(
                "{name:<16} {:>5} agents  share {:.4}  expected {:.4}",
                g.members, g.share, g.expected_share
            );
        }
    }
    Ok(())
}

fn trace_stats(path: &Path) -> Result<MatchStats> {
    let reader = TraceReader::open(path)?;
    let mut b = StatsBuilder::new(&reader.header().config);
    for rec in reader {
        b.push(&rec?);
    }
    Ok(b.finish())
}

fn replay_trace(path: &Path) -> Result<ExitCode> {
    let reader = TraceReader::open(path)?;
    let config = reader.header().config.clone();
    let records = reader.collect::<Result<Vec<_>, _>>()?;
    let report = replay(&config, &records)?;
    if report.is_exact() {
        out!("{} ticks replayed, every record identical", report.ticks);
        return Ok(ExitCode::SUCCESS);
    }
    out!(
        "{} ticks replayed, {} records differ (first at tick {}), {} winners differ",
        report.ticks,
        report.mismatched.len(),
        report.mismatched[0],
        report.winner_mismatches.len()
    );
    Ok(ExitCode::from(1))
}

fn agent(args: AgentArgs) -> Result<ExitCode> {
    let role = match args.role {
        RoleArg::Player => Role::Player,
        RoleArg::Supporter => Role::Supporter,
    };
    let team = match args.team {
        TeamArg::Home => Team::Home,
        TeamArg::Guest => Team::Guest,
    };
    if role == Role::Supporter && args.shirt.is_some() {
        bail!("--shirt is for players");
    }
    if role == Role::Player && args.shirt.is_none() && matches!(args.behavior, BehaviorArg::Reference) {
        bail!("reference players need --shirt");
    }
    let mut conn = UdpConnection::connect(args.addr.as_str()).with_context(|| format!("connecting to {}", args.addr))?;
    let session = join(&mut conn, role, team, args.shirt, 20, Duration::from_millis(500))?;
    eprintln!(
        "joined as {} ({:?}, {}{}), will {}",
        session.identity.agent,
        role,
        team,
        session.identity.shirt.map(|s| format!(" #{s}")).unwrap_or_default(),
        session.initial_will
    );
    let opts = LoopOptions { deadline_margin: Duration::from_millis(args.margin_ms), ..LoopOptions::default() };
    let clock = SystemClock::new();
    let pitch = Pitch::new(args.pitch_length, args.pitch_width);
    if !(pitch.length > 0.0 && pitch.width > 0.0 && pitch.length.is_finite() && pitch.width.is_finite()) {
        bail!("pitch dimensions must be positive and finite");
    }
    let report = match (args.behavior, role) {
        (BehaviorArg::Echo, _) => drive(Echo, &mut conn, &clock, &session, opts)?,
        (BehaviorArg::Reference, Role::Supporter) => {
            if !(args.bias >= 0.0 && args.bias.is_finite()) {
                bail!("--bias must be finite and non-negative");
            }
            drive(ReferenceSupporter::new(team, args.bias, pitch), &mut conn, &clock, &session, opts)?
        }
        (BehaviorArg::Reference, Role::Player) => {
            let shirt = session.identity.shirt.or(args.shirt).context("reference players need --shirt")?;
            let mut arch = PlayerArchetype::for_shirt(team, shirt, &pitch);
            if let Some(k) = args.archetype {
                arch.kind = match k {
                    ArchetypeArg::Attacker => ArchetypeKind::Attacker,
                    ArchetypeArg::Midfielder => ArchetypeKind::Midfielder,
                    ArchetypeArg::Defender => ArchetypeKind::Defender,
                };
            }
            if let Some(v) = args.max_speed {
                arch.max_speed = v;
            }
            if !arch.is_valid() {
                bail!("--max-speed must be positive and finite");
            }
            drive(ReferencePlayer::new(arch, pitch), &mut conn, &clock, &session, opts)?
        }
    };
    eprintln!("{} proposals sent", report.proposals_sent);
    match report.end {
        LoopEnd::MatchEnded { final_tick } => {
            eprintln!("match ended at tick {final_tick}");
            Ok(ExitCode::SUCCESS)
        }
        LoopEnd::ConnectionLost { silence } => {
            eprintln!("no word from the scheduler for {silence:.1?}");
            Ok(ExitCode::from(1))
        }
    }
}

fn drive<B: AgentBehavior>(
    mut behavior: B,
    conn: &mut UdpConnection,
    clock: &SystemClock,
    session: &qcss_core::agent::Session,
    opts: LoopOptions,
) -> Result<qcss_core::agent::AgentReport> {
    Ok(run_agent_loop(&mut behavior, conn, clock, session, opts)?)
}
