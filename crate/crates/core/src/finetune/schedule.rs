use super::optim::TrainConfig;

/// Fraction of the peak rate reached at the end of cosine decay.
pub const FINAL_LR_FRACTION: f64 = 0.1;

/// Learning rate for a 0-based step: linear warmup from 0, then cosine
/// decay towards `FINAL_LR_FRACTION × peak` at `max_iterations`.
pub fn lr_at(iteration: usize, cfg: &TrainConfig) -> f64 {
    let peak = cfg.learning_rate;
    if iteration < cfg.warmup_iterations {
        return peak * iteration as f64 / cfg.warmup_iterations as f64;
    }
    if iteration == cfg.warmup_iterations {
        return peak;
    }
    let span = cfg.max_iterations.saturating_sub(cfg.warmup_iterations).max(1) as f64;
    let progress = ((iteration - cfg.warmup_iterations) as f64 / span).min(1.0);
    let cosine = 0.5 * (1.0 + (std::f64::consts::PI * progress).cos());
    peak * (FINAL_LR_FRACTION + (1.0 - FINAL_LR_FRACTION) * cosine)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(peak: f64, warmup: usize, max: usize) -> TrainConfig {
        TrainConfig { learning_rate: peak, warmup_iterations: warmup, max_iterations: max, ..Default::default() }
    }

    #[test]
    fn warmup_and_decay() {
        let c = cfg(0.0006, 100, 1000);
        assert_eq!(lr_at(0, &c), 0.0);
        assert_eq!(lr_at(100, &c), 0.0006);
        let last = lr_at(999, &c);
        assert!((0.00006..=0.0006).contains(&last));
        let mut prev = f64::INFINITY;
        for i in 100..1000 {
            let lr = lr_at(i, &c);
            assert!(lr <= prev);
            prev = lr;
        }
        // continuity at the boundary
        assert!((lr_at(99, &c) - lr_at(100, &c)).abs() <= 0.0006 / 100.0 + 1e-15);
    }

    #[test]
    fn no_warmup_starts_at_peak() {
        assert_eq!(lr_at(0, &cfg(0.05, 0, 200)), 0.05);
    }
}
