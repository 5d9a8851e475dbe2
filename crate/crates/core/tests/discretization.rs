mod common;

#[test]
fn kovasznay_momentum_residual_is_second_order() {
    let errs = common::kovasznay_scaled_residuals(40.0, &[0.04, 0.02, 0.01]);
    let orders = common::observed_orders(&errs);
    assert!(orders.iter().all(|&o| o >= 1.8), "errors {errs:?}, orders {orders:?}");
}

#[test]
fn taylor_green_continuity_is_exact() {
    let worst = common::taylor_green_max_continuity();
    assert!(worst <= 1e-13, "{worst:e}");
}

