//! Decode-progress shape: the recovered fraction climbs slowly with the
//! asymptotic fixed-point curve, then jumps sharply to 1 near the
//! threshold overhead.

use riblt::analysis::de_fixed_point;
use riblt::mapping::MappingProfile;
use riblt::sim::run_progress;

#[test]
fn progress_curve_has_the_sharp_final_jump() {
    const D: u64 = 1024;
    let rows = run_progress(&MappingProfile::regular(), D, 100, 42).unwrap();
    let fraction_at = |eta: f64| {
        let cell = ((eta * D as f64).round() as usize).min(rows.len()) - 1;
        rows[cell].mean_recovered_fraction
    };

    // Before the jump the decoder has recovered only a minority...
    assert!(fraction_at(1.2) < 0.95, "at 1.2d: {}", fraction_at(1.2));
    // ...and just past the threshold it is essentially done.
    assert!(fraction_at(1.45) > 0.99, "at 1.45d: {}", fraction_at(1.45));

    // Away from the critical point the mean tracks the fixed-point curve.
    for eta in [0.4, 0.8, 1.0, 1.2] {
        let de = 1.0 - de_fixed_point(0.5, eta).unwrap();
        let sim = fraction_at(eta);
        assert!(
            (sim - de).abs() < 0.05,
            "eta={eta}: sim {sim} vs fixed point {de}"
        );
    }
}
