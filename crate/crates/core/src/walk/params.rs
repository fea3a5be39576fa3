use serde::Serialize;

use super::WalkError;

/// Whether each step may stay put with probability one half.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Laziness {
    None,
    Half,
}

/// Bucket organisation during stitching.
///
/// `Theory` keeps one bucket per first label and scales budgets by `τ^(3k-3)`.
/// `Practical` pools each vertex's segments without labels and scales by
/// `τ^popcount(k-1)`, which peaks at `τ^log2(ℓ)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Theory,
    Practical,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FailPolicy {
    /// Any exhausted bucket fails the whole run.
    Abort,
    /// Unservable requests drop their walk; the run continues.
    Tolerate,
}

/// Parameters of the budgeting loop and of each stitch.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StitchParams {
    /// Walk length, always a power of two.
    pub ell: usize,
    /// `B*`: rooted walks wanted per root.
    pub target: u64,
    /// Per-cycle growth of the root budget, `> 1`.
    pub lambda: f64,
    /// Confidence constant `C`.
    pub confidence: f64,
    /// Visit count above which the empirical estimate is trusted.
    pub theta: f64,
    /// Base budget per unit of degree.
    pub b0: f64,
    /// Surplus factor, `≥ 1`.
    pub tau: f64,
    /// Multiplier applied to the theory-mode `θ` and `B₀` (1 when unscaled or custom).
    pub scale: f64,
    /// `ln n` the theory constants were derived from, if any.
    pub ln_n: Option<f64>,
    pub laziness: Laziness,
    pub mode: Mode,
    pub fail_policy: FailPolicy,
}

/// Smallest power of two `≥ ell` (and at least 1).
pub(crate) fn round_up_pow2(ell: usize) -> usize {
    ell.max(1).next_power_of_two()
}

impl StitchParams {
    /// Theory constants: `θ = 10Cℓ² ln n`, `B₀ = 30Cλℓ³ ln n`, `τ = 1 + √(20C ln n / θ)`.
    pub fn theory(n: usize, ell: usize, lambda: f64, confidence: f64) -> Result<Self, WalkError> {
        if n < 2 {
            return Err(WalkError::param("n", format!("need at least 2 vertices, got {n}")));
        }
        Self::theory_from_ln((n as f64).ln(), ell, lambda, confidence)
    }

    /// As [`StitchParams::theory`] with `ln n` supplied directly.
    pub fn theory_from_ln(ln_n: f64, ell: usize, lambda: f64, confidence: f64) -> Result<Self, WalkError> {
        if !(ln_n > 0.0) {
            return Err(WalkError::param("n", "ln n must be positive"));
        }
        if ell == 0 {
            return Err(WalkError::param("ell", "walk length must be at least 1"));
        }
        check_lambda(lambda)?;
        if !(confidence >= 1.0) {
            return Err(WalkError::param("confidence", format!("C must be at least 1, got {confidence}")));
        }
        let mut p = Self {
            ell: round_up_pow2(ell),
            target: 1,
            lambda,
            confidence,
            theta: 0.0,
            b0: 0.0,
            tau: 0.0,
            scale: 1.0,
            ln_n: Some(ln_n),
            laziness: Laziness::None,
            mode: Mode::Theory,
            fail_policy: FailPolicy::Abort,
        };
        p.derive_theory_constants();
        Ok(p)
    }

    fn derive_theory_constants(&mut self) {
        let ln_n = self.ln_n.expect("theory constants need ln n");
        let l = self.ell as f64;
        let c = self.confidence;
        self.theta = self.scale * 10.0 * c * l * l * ln_n;
        self.b0 = self.scale * 30.0 * c * self.lambda * l * l * l * ln_n;
        self.tau = 1.0 + (20.0 * c * ln_n / self.theta).sqrt();
    }

    /// Shrinks (or grows) `θ` and `B₀` together; `τ` follows its formula.
    pub fn with_scale(mut self, scale: f64) -> Result<Self, WalkError> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(WalkError::param("scale", format!("must be positive, got {scale}")));
        }
        if self.ln_n.is_none() {
            return Err(WalkError::param("scale", "only theory-derived constants can be scaled"));
        }
        self.scale = scale;
        self.derive_theory_constants();
        Ok(self)
    }

    /// Freely chosen constants ("desk" settings for small experiments).
    pub fn custom(ell: usize, lambda: f64, theta: f64, b0: f64, tau: f64) -> Result<Self, WalkError> {
        if ell == 0 {
            return Err(WalkError::param("ell", "walk length must be at least 1"));
        }
        let p = Self {
            ell: round_up_pow2(ell),
            target: 1,
            lambda,
            confidence: 1.0,
            theta,
            b0,
            tau,
            scale: 1.0,
            ln_n: None,
            laziness: Laziness::None,
            mode: Mode::Theory,
            fail_policy: FailPolicy::Abort,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_target(mut self, target: u64) -> Self {
        self.target = target;
        self
    }

    pub fn with_laziness(mut self, laziness: Laziness) -> Self {
        self.laziness = laziness;
        self
    }

    pub fn with_mode(mut self, mode: Mode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_fail_policy(mut self, fail_policy: FailPolicy) -> Self {
        self.fail_policy = fail_policy;
        self
    }

    pub fn lazy(&self) -> bool {
        self.laziness == Laziness::Half
    }

    pub fn validate(&self) -> Result<(), WalkError> {
        if !self.ell.is_power_of_two() {
            return Err(WalkError::param("ell", format!("{} is not a power of two", self.ell)));
        }
        check_lambda(self.lambda)?;
        if !(self.tau >= 1.0 && self.tau.is_finite()) {
            return Err(WalkError::param("tau", format!("must be finite and at least 1, got {}", self.tau)));
        }
        if !(self.b0 >= 0.0 && self.b0.is_finite()) {
            return Err(WalkError::param("b0", format!("must be finite and non-negative, got {}", self.b0)));
        }
        if !(self.theta >= 0.0) {
            return Err(WalkError::param("theta", format!("must be non-negative, got {}", self.theta)));
        }
        if self.target == 0 {
            return Err(WalkError::param("target", "B* must be at least 1"));
        }
        Ok(())
    }

    /// Surplus multiplier for first label `k` (1-based).
    pub fn multiplier(&self, k: usize) -> f64 {
        debug_assert!(k >= 1);
        match self.mode {
            Mode::Theory => self.tau.powi(3 * (k as i32 - 1)),
            Mode::Practical => self.tau.powi((k - 1).count_ones() as i32),
        }
    }

    /// `B₀ ≥ 3λθ·√(θ / (20 C ln n))`, the inequality the no-fail argument relies on.
    pub fn no_fail_condition(&self, ln_n: f64) -> bool {
        let rhs = 3.0 * self.lambda * self.theta * (self.theta / (20.0 * self.confidence * ln_n)).sqrt();
        self.b0 >= rhs
    }

    pub fn phases(&self) -> u32 {
        self.ell.trailing_zeros()
    }

    /// `⌊log_λ B*⌋`, computed without floating-point logarithms.
    pub fn calibration_cycles(&self) -> u32 {
        let target = self.target as f64;
        let mut cycles = 0;
        let mut power = self.lambda;
        while power <= target * (1.0 + 1e-12) {
            cycles += 1;
            power *= self.lambda;
        }
        cycles
    }

    /// Exponent used by the last calibration cycle: `⌈log_λ B*⌉`, so the final stitch yields at least `B*`.
    pub fn final_exponent(&self) -> u32 {
        let target = self.target as f64;
        let mut e = 0;
        let mut power = 1.0;
        while power < target * (1.0 - 1e-12) {
            e += 1;
            power *= self.lambda;
        }
        e
    }
}

fn check_lambda(lambda: f64) -> Result<(), WalkError> {
    if !(lambda > 1.0 && lambda.is_finite()) {
        return Err(WalkError::param("lambda", format!("must exceed 1, got {lambda}")));
    }
    Ok(())
}
