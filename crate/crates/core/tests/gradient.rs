mod common;

use std::time::Instant;

#[test]
fn total_loss_gradient_matches_central_differences() {
    let start = Instant::now();
    let (worst, params) = common::gradient_check();
    assert!(params <= 500, "{params} parameters");
    assert!(worst <= 1e-5, "worst relative error {worst:e}");
    assert!(start.elapsed().as_secs_f64() < 60.0);
}
