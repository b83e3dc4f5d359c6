use std::io::{BufRead, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use spark_core::convert::{from_host, to_host};
use spark_core::decompose::DecomposerConfig;
use spark_core::dialog::{converse, Deps, FunctionStore, Lexicon};
use spark_core::interp::execute;
use spark_core::sim::SimRobot;
use spark_core::spl::{render, validate_text, Numbering};
use spark_core::wire::{serve, ServerConfig, DEFAULT_PORT};
use spark_core::{Decomposer, DialogState, World};
use spark_gateway::{Gateway, GatewayConfig, RegistryStore};

#[derive(Debug, Parser)]
#[command(name = "spark", version, about = "Conversational robot programming for children")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the HTTP and WebSocket gateway.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        listen: SocketAddr,
        #[command(flatten)]
        files: Files,
        /// Simulator to drive instead of starting an embedded one.
        #[arg(long, env = "SPARK_SIM_ADDR")]
        sim_addr: Option<SocketAddr>,
    },
    /// Run only the robot simulator on the wire protocol.
    Sim {
        #[arg(long, env = "SPARK_SIM_ADDR")]
        listen: Option<SocketAddr>,
        #[arg(long, env = "SPARK_WORLD_FILE")]
        world_file: Option<PathBuf>,
    },
    /// Chat in the terminal with the offline decomposer and an in-process
    /// simulator.
    Repl {
        #[command(flatten)]
        files: Files,
    },
    /// Check an SPL file against the built-ins and the saved functions.
    Validate {
        file: PathBuf,
        #[arg(long, env = "SPARK_REGISTRY_FILE")]
        registry_file: Option<PathBuf>,
    },
    /// Translate between SPL and the host-language form.
    Convert {
        #[arg(long, conflicts_with = "to_spl", required_unless_present = "to_spl")]
        to_host: bool,
        #[arg(long)]
        to_spl: bool,
        file: PathBuf,
    },
    /// Turn one instruction into an SPL program.
    Decompose {
        /// Use the rule-based decomposer regardless of configuration.
        #[arg(long)]
        offline: bool,
        instruction: String,
        #[arg(long, env = "SPARK_REGISTRY_FILE")]
        registry_file: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
struct Files {
    #[arg(long, env = "SPARK_REGISTRY_FILE")]
    registry_file: Option<PathBuf>,
    #[arg(long, env = "SPARK_WORLD_FILE")]
    world_file: Option<PathBuf>,
}

/// Problems with the input itself, reported with exit code 2.
#[derive(Debug)]
struct Invalid(String);

impl std::fmt::Display for Invalid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Invalid {}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()))
        .with_writer(std::io::stderr)
        .init();

    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.is::<Invalid>() => {
            eprintln!("{e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Serve {
            listen,
            files,
            sim_addr,
        } => serve_gateway(listen, files, sim_addr),
        Command::Sim { listen, world_file } => run_sim(listen, world_file.as_deref()),
        Command::Repl { files } => repl(files),
        Command::Validate { file, registry_file } => {
            let text = read(&file)?;
            let store = open_store(registry_file)?;
            let (_, report) = validate_text(&text, &store.registry().catalogue());
            if !report.ok() {
                return Err(Invalid(report.to_string()).into());
            }
            println!("ok");
            Ok(())
        }
        Command::Convert {
            to_host: host, file, ..
        } => {
            let text = read(&file)?;
            let out = if host {
                let program = spark_core::spl::parse(&text).map_err(|e| Invalid(e.to_string()))?;
                to_host(&program)
            } else {
                let program = from_host(&text).map_err(|e| Invalid(e.to_string()))?;
                render(&program, Numbering::None)
            };
            println!("{out}");
            Ok(())
        }
        Command::Decompose {
            offline,
            instruction,
            registry_file,
        } => {
            let decomposer = if offline {
                Decomposer::rules()
            } else {
                Decomposer::from_config(&DecomposerConfig::from_env()?)?
            };
            let store = open_store(registry_file)?;
            let program = decomposer
                .decompose(&instruction, store.registry())
                .map_err(|e| Invalid(e.to_string()))?;
            println!("{}", render(&program, Numbering::None));
            Ok(())
        }
    }
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn open_store(path: Option<PathBuf>) -> Result<RegistryStore> {
    Ok(match path {
        Some(p) => RegistryStore::open(p)?,
        None => RegistryStore::in_memory(),
    })
}

fn load_world(path: Option<&Path>) -> Result<World> {
    Ok(match path {
        Some(p) => World::load(p)?,
        None => World::default_world(),
    })
}

fn serve_gateway(listen: SocketAddr, files: Files, sim_addr: Option<SocketAddr>) -> Result<()> {
    let config = GatewayConfig {
        registry_file: files.registry_file,
        world_file: files.world_file,
        sim_addr,
        ..GatewayConfig::from_env()?
    };
    let gateway = Gateway::new(&config)?;
    let rt = tokio::runtime::Runtime::new()?;
    rt.block_on(async move {
        let listener = tokio::net::TcpListener::bind(listen)
            .await
            .with_context(|| format!("binding {listen}"))?;
        tracing::info!(addr = %listener.local_addr()?, robot = %gateway.state().robot.server(), "gateway listening");
        let shutdown = async {
            let _ = tokio::signal::ctrl_c().await;
        };
        gateway.serve(listener, shutdown).await?;
        Ok(())
    })
}

fn run_sim(listen: Option<SocketAddr>, world_file: Option<&Path>) -> Result<()> {
    let addr = listen.unwrap_or_else(|| SocketAddr::from(([127, 0, 0, 1], DEFAULT_PORT)));
    let server = serve(load_world(world_file)?, addr, ServerConfig::default())?;
    tracing::info!(addr = %server.local_addr(), "simulator listening");
    server.join();
    Ok(())
}

fn repl(files: Files) -> Result<()> {
    let decomposer = Decomposer::rules();
    let lexicon = Lexicon::default();
    let mut store = open_store(files.registry_file)?;
    let mut robot = SimRobot::new(load_world(files.world_file.as_deref())?);
    let mut state = DialogState::new();
    let stdin = std::io::stdin();
    let mut out = std::io::stdout();

    print!("> ");
    out.flush()?;
    for line in stdin.lock().lines() {
        let line = line?;
        let mut deps = Deps {
            decomposer: &decomposer,
            store: &mut store,
            lexicon: &lexicon,
        };
        let mut run = |p: &spark_core::Program, reg: &spark_core::FunctionRegistry| {
            execute(p, &mut robot, reg, Default::default())
        };
        for reply in converse(&mut state, &line, &mut deps, &mut run) {
            println!("{}", reply.text);
        }
        let r = &robot.world.state.robot;
        println!("[robot at ({:.2}, {:.2}) heading {:.0}]", r.x, r.y, r.heading);
        print!("> ");
        out.flush()?;
    }
    println!();
    Ok(())
}
