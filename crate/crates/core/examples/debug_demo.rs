use quori::config::PlatformConfig;
use quori::scenario::{emit_report, museum_demo_csv, run_scenario, Scenario};

fn main() {
    let config = PlatformConfig::default();
    let scenario = Scenario::from_csv(museum_demo_csv()).unwrap();
    let log = run_scenario(&scenario, &config, 40.0).unwrap();
    let mut prev = None;
    for step in &log.steps {
        if prev != Some(step.mode) {
            println!(
                "t={:7.3} mode={:13} waist={:6.2}deg tt={:6.2}deg torque={:6.3}",
                step.t,
                step.mode.as_str(),
                step.waist_angle.to_degrees(),
                step.base.theta_t.to_degrees(),
                step.waist_torque
            );
            prev = Some(step.mode);
        }
    }
    let report = emit_report(&log, &config);
    print!("{report}");

    if std::env::args().any(|a| a == "--write-golden") {
        std::fs::create_dir_all("crates/core/tests/golden").unwrap();
        std::fs::write(
            "crates/core/tests/golden/museum_demo_command_log.csv",
            log.command_log_csv(),
        )
        .unwrap();
        std::fs::write("crates/core/data/default.cfg", config.serialize()).unwrap();
        println!("golden + default.cfg written");
    }
}
