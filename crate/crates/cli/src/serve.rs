use std::io::{BufReader, Write};
use std::net::TcpListener;

use pairx_core::remote::{conformance_check, serve_connection, ConformanceReport, Faults};

use crate::config::{CheckArgs, ServeArgs};
use crate::error::{CliError, CliResult};
use crate::oracle::{load_game_file, remote_config};
use crate::run::Inputs;

/// Serves a game file over stdio, or over TCP with one thread per client.
/// In TCP mode the first stdout line is `listening tcp://ADDR`.
pub fn serve(args: ServeArgs) -> CliResult<()> {
    if args.max_batch == 0 {
        return Err(CliError::Usage("--max-batch must be positive".into()));
    }
    let game = load_game_file(args.oracle, &args.game, &mut Inputs::default())?;
    let faults = Faults {
        reverse_order: args.reverse_order,
        noise: args.noise,
        drop_value: args.drop_value,
    };
    let Some(addr) = args.tcp else {
        let stdin = std::io::stdin();
        serve_connection(game.as_ref(), args.max_batch, faults, stdin.lock(), std::io::stdout().lock())?;
        return Ok(());
    };
    let listener = TcpListener::bind(&addr)?;
    let mut stdout = std::io::stdout();
    writeln!(stdout, "listening tcp://{}", listener.local_addr()?)?;
    stdout.flush()?;
    for stream in listener.incoming() {
        let stream = stream?;
        let game = game.clone();
        let max_batch = args.max_batch;
        std::thread::spawn(move || {
            let Ok(reader) = stream.try_clone() else { return };
            // A client hanging up mid-request is not the server's problem.
            let _ = serve_connection(game.as_ref(), max_batch, faults, BufReader::new(reader), stream);
        });
    }
    Ok(())
}

pub fn oracle_check(args: CheckArgs) -> CliResult<ConformanceReport> {
    let config = remote_config(&args.endpoint, args.timeout_secs)?;
    Ok(conformance_check(config, args.seed))
}
