use anyhow::Context;
use pathplan_core::ingest::{save_workspace, synth_cohort, CourseSpec, SynthSpec};

use super::Globals;
use crate::args::SynthArgs;
use crate::config::pick;
use crate::failure::{Classify, CmdResult, Failure};

pub fn run(globals: &Globals, args: &SynthArgs) -> CmdResult {
    let file = &globals.file;
    let out = globals.out_dir()?;
    let learners = pick(args.learners, file.learners, 20);
    let resources = pick(args.resources, file.resources, 30);
    let kps = pick(args.kps, file.kps, 15);
    let courses = pick(args.courses, file.courses, 1);
    let seed = globals.seed().unwrap_or(0);
    if learners == 0 || resources == 0 || kps == 0 || courses == 0 {
        return Err(Failure::usage("learners, resources, kps and courses must be positive"));
    }
    let mut spec = SynthSpec::single(learners, resources, kps, seed);
    spec.courses = (1..=courses)
        .map(|c| CourseSpec {
            course_id: format!("c{c:02}"),
            learners,
            resources,
            knowledge_points: kps,
        })
        .collect();
    spec.weeks = pick(args.weeks, file.weeks, spec.weeks);
    spec.at_risk_fraction = pick(args.at_risk_fraction, file.at_risk_fraction, spec.at_risk_fraction);
    if !(0.0..=1.0).contains(&spec.at_risk_fraction) {
        return Err(Failure::usage("--at-risk-fraction must lie in [0, 1]"));
    }

    let ws = synth_cohort(&spec);
    save_workspace(&ws, &out)
        .with_context(|| format!("writing {}", out.display()))
        .data_err()?;
    say!(
        "wrote {}: {} courses, {} learners, {} resources, {} knowledge points, {} events",
        out.display(),
        ws.courses().len(),
        ws.profiles().len(),
        ws.resources().len(),
        ws.graph().len(),
        ws.events().len()
    );
    Ok(())
}
