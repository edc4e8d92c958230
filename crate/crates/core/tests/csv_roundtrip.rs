use drem::cli::{csv_header, read_csv, write_run_csv};
use drem::scenarios::{
    run_identification, run_tracking, DeltaKind, IdentificationSetup, InputKind, NamedRun, TrackingSetup,
};

fn assert_roundtrip(run: &NamedRun) {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("run.csv");
    write_run_csv(&path, run).unwrap();
    let table = read_csv(&path).unwrap();
    assert_eq!(table.header, csv_header(run));
    assert_eq!(table.rows.len(), run.theta_hat.len());
    let m = run.theta_hat.dim();
    for (k, row) in table.rows.iter().enumerate() {
        assert_eq!(row[0].to_bits(), run.theta_hat.grid().time(k).to_bits());
        for i in 0..m {
            assert_eq!(
                row[1 + i].to_bits(),
                run.theta_hat.get(k)[i].to_bits(),
                "{} row {k}",
                run.name
            );
            assert_eq!(row[1 + m + i].to_bits(), run.theta_tilde.get(k)[i].to_bits());
        }
        for (j, (_, aux)) in run.aux.iter().enumerate() {
            assert_eq!(row[1 + 2 * m + j].to_bits(), aux.get(k).to_bits());
        }
    }
}

#[test]
fn identification_runs_roundtrip_bit_exact() {
    let mut setup = IdentificationSetup::preset(InputKind::Rich);
    setup.horizon = 2.0;
    for run in &run_identification(&setup).unwrap().runs {
        assert_roundtrip(run);
    }
}

#[test]
fn tracking_runs_roundtrip_bit_exact() {
    let mut setup = TrackingSetup::preset(DeltaKind::Pe);
    setup.horizon = 2.0;
    let result = run_tracking(&setup).unwrap().slice(0.5, 1.5).unwrap();
    for run in &result.runs {
        assert_roundtrip(run);
    }
}

#[test]
fn extreme_values_roundtrip() {
    use drem::signals::{SignalKind, TimeGrid, Trajectory};
    use nalgebra::dvector;
    let g = TimeGrid::new(0.0, 0.1, 6).unwrap();
    let vals = [f64::MIN_POSITIVE, -0.0, 1e308, -5e-324, 0.1 + 0.2, std::f64::consts::PI];
    let hat = Trajectory::new(g, SignalKind::Continuous, vals.iter().map(|v| dvector![*v]).collect()).unwrap();
    let truth = Trajectory::from_fn(g, SignalKind::Continuous, |_| dvector![0.0]).unwrap();
    let run = NamedRun::new("x", hat, &truth).unwrap();
    assert_roundtrip(&run);
}
