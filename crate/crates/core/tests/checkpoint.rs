use atmodg::adapt::Driver;
use atmodg::io::{csv, Checkpoint, RunConfig, SCHEMA_VERSION};
use atmodg::Error;

fn small_config() -> RunConfig {
    RunConfig::parse("case = bubble_smooth-desk\ncells = 60\nT = 4\nTOL = inf\n", &[]).unwrap()
}

#[test]
fn restored_run_repeats_the_log() {
    let cfg = small_config();
    let mut full = Driver::new(cfg.case.clone(), cfg.run.clone()).unwrap();
    let mut saved = None;
    let mut lines = Vec::new();
    full.run(|d, r| {
        lines.push(csv::step_line(r));
        if r.m == 3 {
            saved = Some(Checkpoint::capture(&cfg, &d.state).to_json()?);
        }
        Ok(())
    })
    .unwrap();
    assert!(lines.len() > 4, "only {} steps", lines.len());

    let cp = Checkpoint::from_json(&saved.unwrap()).unwrap();
    let (cfg2, state) = cp.restore().unwrap();
    assert_eq!(cfg2.echo(), cfg.echo());
    let mut resumed = Driver::resume(cfg2.case, cfg2.run, state).unwrap();
    let mut again = Vec::new();
    resumed
        .run(|_, r| {
            again.push(csv::step_line(r));
            Ok(())
        })
        .unwrap();
    assert_eq!(again, lines[3..]);
}

#[test]
fn other_schema_is_rejected() {
    let cfg = small_config();
    let d = Driver::new(cfg.case.clone(), cfg.run.clone()).unwrap();
    let json = Checkpoint::capture(&cfg, &d.state).to_json().unwrap();
    let bumped = json.replacen(&format!("\"schema_version\":{SCHEMA_VERSION}"), "\"schema_version\":99", 1);
    match Checkpoint::from_json(&bumped) {
        Err(Error::VersionMismatch { found, expected }) => {
            assert_eq!(found, 99);
            assert_eq!(expected, SCHEMA_VERSION);
        }
        other => panic!("{other:?}"),
    }
}
