use num_complex::Complex64;

/// Magnitude gain of `symbols` relative to a signal of power `signal_power`
/// observed in additive noise of power `noise_power`.
pub fn estimate_gain(symbols: &[Complex64], signal_power: f64, noise_power: f64) -> f64 {
    let p = symbols.iter().map(|s| s.norm_sqr()).sum::<f64>() / symbols.len().max(1) as f64;
    let sig = (p - noise_power).max(1e-300);
    (sig / signal_power).sqrt()
}

/// Divides `symbols` by their average gain. Sample-to-sample gain variation is
/// left in place.
pub fn slow_agc(symbols: &[Complex64], signal_power: f64, noise_power: f64) -> (Vec<Complex64>, f64) {
    let g = estimate_gain(symbols, signal_power, noise_power);
    (symbols.iter().map(|s| s / g).collect(), g)
}
