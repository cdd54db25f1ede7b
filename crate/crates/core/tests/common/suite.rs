//! The generated-program soundness suite, shared by the acceptance and mutation checks.

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use rand::rngs::StdRng;
use rand::SeedableRng;
use refpta::annotations::ResolvedAnnotations;
use refpta::ir::parse_program;
use refpta::oracle::check_soundness;
use refpta::pta::solve;
use refpta::reflection::EngineConfig;
use refpta::soundness::{build_report, Verdict};

use super::gen::{generate, random_env, GenMode};

pub const SEEDS: u64 = 400;
pub const ENVS: usize = 12;

#[derive(Debug, Default)]
pub struct SuiteRun {
    pub programs: usize,
    pub sound: usize,
    pub checked: usize,
    pub excluded: usize,
    pub counterexamples: usize,
    pub first_failure: Option<String>,
    pub rule_hits: BTreeMap<&'static str, u64>,
    pub elapsed: Duration,
}

/// Generates `seeds` programs, solves each under `cfg`, and checks every Sound one
/// against `envs` random environments.
pub fn run_suite(cfg: &EngineConfig, seeds: u64, envs: usize) -> SuiteRun {
    let start = Instant::now();
    let mut run = SuiteRun::default();
    for seed in 0..seeds {
        let mut rng = StdRng::seed_from_u64(seed);
        let g = generate(&mut rng, GenMode::General);
        let src = g.render();
        let p = parse_program(&src).unwrap_or_else(|e| panic!("seed {seed}: {e}\n{src}"));
        let st = solve(&p, cfg, &ResolvedAnnotations::default()).expect("solver budget");
        run.programs += 1;
        for (r, n) in st.rule_hits() {
            *run.rule_hits.entry(r.name()).or_default() += n;
        }
        if build_report(&p, &st, cfg).verdict != Verdict::Sound {
            continue;
        }
        run.sound += 1;
        let pools = g.pools();
        let envs: Vec<_> = (0..envs)
            .map(|_| random_env(&mut rng, &p, &pools))
            .collect();
        let check = check_soundness(&p, &envs, &st);
        run.checked += check.checked;
        run.excluded += check.excluded;
        if let Some(c) = &check.counterexample {
            run.counterexamples += 1;
            run.first_failure.get_or_insert_with(|| {
                format!(
                    "seed {seed}: {}\n{src}\n{:?}",
                    c.missing.describe(&p),
                    envs[c.env]
                )
            });
        }
    }
    run.elapsed = start.elapsed();
    run
}
