use super::{open_workspace, Globals};
use crate::args::IngestArgs;
use crate::failure::{CmdResult, Failure};

pub fn run(globals: &Globals, args: &IngestArgs) -> CmdResult {
    let dir = match &args.dir {
        Some(dir) if dir.is_dir() => dir.clone(),
        Some(dir) => return Err(Failure::usage(format!("workspace {} does not exist", dir.display()))),
        None => globals.workspace_dir()?,
    };
    let ws = open_workspace(&dir)?;
    let fallback = ws
        .resources()
        .iter()
        .filter(|r| ws.resource_minutes(&r.id).is_some_and(|(_, f)| f))
        .count();
    say!("workspace {} is valid", dir.display());
    say!("  courses:          {}", ws.courses().len());
    say!("  learners:         {}", ws.profiles().len());
    say!("  knowledge points: {}", ws.graph().len());
    say!("  prerequisites:    {}", ws.graph().edges().len());
    say!("  resources:        {} ({fallback} using duration estimates)", ws.resources().len());
    say!("  events:           {}", ws.events().len());
    match ws.risk() {
        Some(series) => say!("  risk series:      {}", series.len()),
        None => say!("  risk series:      none (estimated from answers)"),
    }
    Ok(())
}
