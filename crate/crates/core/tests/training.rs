use nalm_core::datagen::{Operation, RangeSpec, TaskSpec};
use nalm_core::nalm::ModuleKind;
use nalm_core::training::{train_run, write_trace_csv, RunStatus, TrainConfig};

fn multiply() -> TaskSpec {
    TaskSpec::shared(
        2,
        Operation::Multiply,
        vec![0, 1],
        RangeSpec::uniform(1.0, 2.0),
        RangeSpec::uniform(2.0, 6.0),
    )
}

fn trace_bytes(config: &TrainConfig) -> Vec<u8> {
    let record = train_run(config).unwrap();
    let mut out = Vec::new();
    write_trace_csv(&mut out, &record.trace).unwrap();
    out
}

#[test]
fn nmu_learns_multiplication() {
    let mut c = TrainConfig::new(ModuleKind::Nmu, multiply(), 5000, 1e-2);
    c.eval_every = 500;
    let r = train_run(&c).unwrap();
    assert_eq!(r.status, RunStatus::Completed);
    assert!(
        r.extrapolation_mse_at_best < 1e-5,
        "extrapolation mse {}",
        r.extrapolation_mse_at_best
    );
    assert!(r.success);
    for w in r.best_params.weights.as_slice() {
        assert!((w - 1.0).abs() < 1e-2, "weights {:?}", r.best_params.weights.as_slice());
    }
}

#[test]
fn config_round_trip_reproduces_trace() {
    let mut c = TrainConfig::new(ModuleKind::Nru, multiply(), 3000, 1e-2);
    c.eval_every = 500;
    c.seed = 11;
    let text = toml::to_string(&c).unwrap();
    let back = TrainConfig::from_toml(&text).unwrap();
    assert_eq!(trace_bytes(&c), trace_bytes(&back));

    let mut other = c.clone();
    other.seed = 12;
    assert_ne!(trace_bytes(&c), trace_bytes(&other));
}

#[test]
fn reported_extrapolation_comes_from_best_validation_checkpoint() {
    let mut c = TrainConfig::new(ModuleKind::Nmu, multiply(), 4000, 0.5);
    c.eval_every = 250;
    let r = train_run(&c).unwrap();
    let best = r.trace.iter().min_by(|a, b| a.val_mse.total_cmp(&b.val_mse)).unwrap();
    assert_eq!(r.best_iteration, best.iteration);
    assert_eq!(r.best_val_loss, best.val_mse);
    assert_eq!(r.extrapolation_mse_at_best, best.extrap_mse);
    assert_eq!(r.trace.first().unwrap().iteration, 0);
    assert_eq!(r.trace.last().unwrap().iteration, 4000);
}
