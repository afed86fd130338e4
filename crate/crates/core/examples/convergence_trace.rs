//! Prints the energy terms, penalty weight and step size of every outer
//! iteration.

use diffreg::registration::{multilevel_register, SolverConfig};
use diffreg::synth::{generate, ExampleKind, ExampleSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (t, r) = generate(ExampleSpec::square(ExampleKind::CircleSquare, 64)?)?;
    let res = multilevel_register(&r, &t, &SolverConfig::default())?;
    println!(
        "{:>3} {:>4} {:>9} {:>11} {:>11} {:>11} {:>11} {:>9} {:>3}",
        "lvl", "it", "lambda", "data", "constraint", "total", "u_max", "det_mean", "bt"
    );
    for rec in &res.trace {
        let e = &rec.energy;
        println!(
            "{:>3} {:>4} {:>9.4} {:>11.4e} {:>11.4e} {:>11.4e} {:>11.4e} {:>9.5} {:>3}",
            rec.level,
            rec.iter,
            rec.lambda,
            e.data,
            e.constraint,
            e.total,
            rec.u_max,
            rec.det_mean,
            rec.backtracks
        );
    }
    for l in &res.level_traces {
        println!(
            "level {} stopped after {} iterations: {:?}",
            l.level, l.iterations, l.stop
        );
    }
    Ok(())
}
