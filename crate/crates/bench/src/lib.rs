//! Workloads shared by the criterion benches.

use hbvm::{
    builtin, Builtin, FdepcaProblem, Overrides, RecordRetention, SolveConfig, StepSize,
    CASSINI_PERIOD,
};

/// A named integration to time.
pub struct Workload {
    pub name: &'static str,
    pub problem: FdepcaProblem,
    pub config: SolveConfig,
}

fn default(which: Builtin) -> FdepcaProblem {
    builtin(which, &Overrides::default()).expect("built-in defaults are valid")
}

/// One representative run per test problem, records dropped.
pub fn workloads() -> Vec<Workload> {
    let h3 = CASSINI_PERIOD / 100.0;
    vec![
        Workload {
            name: "problem1_hbvm10_2_nu20_t2",
            problem: default(Builtin::Problem1),
            config: SolveConfig::new(10, 2, StepSize::Aligned { nu: 20 }, 2.0),
        },
        Workload {
            name: "problem2_hbvm15_3_nu2_t50",
            problem: default(Builtin::Problem2),
            config: SolveConfig::new(15, 3, StepSize::Aligned { nu: 2 }, 50.0),
        },
        Workload {
            name: "problem3_hbvm4_2_1000_steps",
            problem: default(Builtin::Problem3),
            config: SolveConfig::new(4, 2, StepSize::General { h: h3 }, 1000.0 * h3),
        },
    ]
    .into_iter()
    .map(|mut w| {
        w.config = w.config.with_retention(RecordRetention::LastOnly);
        w
    })
    .collect()
}
