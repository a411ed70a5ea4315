//! Shared simulated-annealing machinery: cooling schedule, adaptive cooling
//! coefficient, acceptance rule, and the two-pronged stall detector. Used by
//! both the partitioner and the placer.

/// Tunable annealing parameters. The temperature itself lives in the run
/// loop; T0 is always the cost of the initial solution.
#[derive(Debug, Clone, Copy)]
pub struct SaConfig {
    /// Minimum temperature, cost units.
    pub t_min: f64,
    /// Moves per temperature; `None` means 10x the instance size.
    pub moves_per_temperature: Option<usize>,
    /// Cooling coefficient used when a temperature saw fewer than two
    /// improving acceptances.
    pub alpha_fallback: f64,
    /// Clamp range for the adaptive alpha.
    pub alpha_min: f64,
    pub alpha_max: f64,
    /// Stall prong 1: best cost must improve by this relative amount over
    /// `stall_temperatures` consecutive temperatures.
    pub stall_improvement: f64,
    pub stall_temperatures: usize,
    /// Stall prong 2: this many times N consecutive candidate moves with no
    /// acceptance.
    pub stall_reject_factor: usize,
    pub seed: u64,
}

impl Default for SaConfig {
    fn default() -> Self {
        SaConfig {
            t_min: 0.5,
            moves_per_temperature: None,
            alpha_fallback: 0.9,
            alpha_min: 0.5,
            alpha_max: 0.99,
            stall_improvement: 0.001,
            stall_temperatures: 5,
            stall_reject_factor: 20,
            seed: 1,
        }
    }
}

impl SaConfig {
    pub fn with_seed(seed: u64) -> Self {
        SaConfig {
            seed,
            ..Default::default()
        }
    }

    pub fn moves_for(&self, instance_size: usize) -> usize {
        self.moves_per_temperature
            .unwrap_or_else(|| 10 * instance_size.max(1))
    }
}

/// Cooling coefficient for the just-finished temperature.
///
/// `first` and `last` are the tracked cost values at the first and last
/// improving (delta < 0) acceptances within that temperature; either may be
/// absent. The ratio last/first is clamped; undefined cases fall back.
pub fn cooling_alpha(cfg: &SaConfig, first: Option<f64>, last: Option<f64>) -> f64 {
    let alpha = match (first, last) {
        (Some(f), Some(l)) if f > 0.0 => l / f,
        _ => cfg.alpha_fallback,
    };
    alpha.clamp(cfg.alpha_min, cfg.alpha_max)
}

/// The acceptance rule: downhill moves always, otherwise the Boltzmann test
/// r < exp(-delta/T). A zero delta passes for any r in [0, 1).
pub fn accept_move(delta: f64, temperature: f64, r: f64) -> bool {
    delta < 0.0 || r < (-delta / temperature).exp()
}

/// Tracks both stall prongs across a run.
#[derive(Debug, Clone)]
pub struct StallDetector {
    window: Vec<f64>,
    max_temps: usize,
    rel_improvement: f64,
    consecutive_rejections: usize,
    rejection_limit: usize,
}

impl StallDetector {
    pub fn new(cfg: &SaConfig, moves_per_temperature: usize) -> Self {
        StallDetector {
            window: Vec::new(),
            max_temps: cfg.stall_temperatures,
            rel_improvement: cfg.stall_improvement,
            consecutive_rejections: 0,
            rejection_limit: cfg.stall_reject_factor * moves_per_temperature.max(1),
        }
    }

    pub fn record_move(&mut self, accepted: bool) -> bool {
        if accepted {
            self.consecutive_rejections = 0;
        } else {
            self.consecutive_rejections += 1;
        }
        self.consecutive_rejections >= self.rejection_limit
    }

    /// Record the best cost seen up to the end of a temperature; true when
    /// the improvement over the window is below the threshold.
    pub fn record_temperature(&mut self, best_cost: f64) -> bool {
        self.window.push(best_cost);
        if self.window.len() <= self.max_temps {
            return false;
        }
        self.window.remove(0);
        let oldest = self.window[0];
        let newest = *self.window.last().unwrap();
        if oldest <= 0.0 {
            return true;
        }
        (oldest - newest) / oldest < self.rel_improvement
    }
}

/// Why an annealing run ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    TemperatureFloor,
    StallTemperatures,
    StallRejections,
    ZeroInitialCost,
}

/// Per-temperature trace entry, exposed so the schedule mechanics are
/// testable from outside.
#[derive(Debug, Clone, Copy)]
pub struct TemperatureRecord {
    pub temperature: f64,
    pub alpha: f64,
    pub accepted: usize,
    pub attempted: usize,
}

#[derive(Debug, Clone)]
pub struct AnnealReport {
    pub t0: f64,
    pub t_min: f64,
    pub temperatures: Vec<TemperatureRecord>,
    pub stop: StopReason,
    pub best_cost: f64,
}
