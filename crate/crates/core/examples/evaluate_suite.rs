//! Evaluates the shipped suite with the rulebook mock and prints the tables.

use shapegrasp::eval::{ablation, default_sweep_grid, evaluate, render_table, sweep_suite};
use shapegrasp::reasoner::{MockBackend, Rulebook};
use shapegrasp::synth::Suite;
use shapegrasp::{PipelineConfig, ReasonerConfig};

fn main() -> shapegrasp::Result<()> {
    let suite = Suite::shipped();
    let backend = MockBackend::new(Rulebook::shipped());
    let pipeline = PipelineConfig::default();
    let reasoner = ReasonerConfig::default();
    let mut report = evaluate(&suite, &pipeline, &reasoner, &backend)?;
    report.sweeps = sweep_suite(&suite, &default_sweep_grid(), None)?;
    println!("{}", render_table(&report));
    for (stages, rate) in ablation(&suite, &pipeline, &reasoner, &backend)? {
        println!("{stages:<12} {rate:.2}");
    }
    Ok(())
}
