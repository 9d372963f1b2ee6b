//! Counter-based pseudo-random streams for reproducible parallel simulation.
//!
//! Each [`Stream`] is keyed by a `(seed, task)` pair and generates its output
//! by hashing a counter, so any worker can recreate the stream for a given
//! task independently of scheduling order. Estimates built from per-task
//! streams and combined in a fixed order are bit-identical across thread
//! counts.

/// Output of a 64-bit finalizing hash over `(key, counter)`.
///
/// The mixer is the splitmix64 finalizer, which passes standard statistical
/// batteries and has no observable correlation between nearby keys.
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// A deterministic random stream addressed by `(seed, task)`.
#[derive(Debug, Clone)]
pub struct Stream {
    key: u64,
    ctr: u64,
    spare_normal: Option<f64>,
}

impl Stream {
    /// Open the stream for a given task id under a global seed.
    pub fn new(seed: u64, task: u64) -> Stream {
        // Pre-mix the pair so that (seed, task) and (seed+1, task-1) collide
        // only with hash-level probability.
        let key = mix(seed ^ 0x9e37_79b9_7f4a_7c15).wrapping_add(mix(task.wrapping_mul(0xd1b5_4a32_d192_ed03)));
        Stream {
            key: mix(key),
            ctr: 0,
            spare_normal: None,
        }
    }

    /// Next raw 64-bit word.
    pub fn next_u64(&mut self) -> u64 {
        let out = mix(self.key.wrapping_add(self.ctr.wrapping_mul(0x9e37_79b9_7f4a_7c15)));
        self.ctr = self.ctr.wrapping_add(1);
        out
    }

    /// Uniform draw in `[0, 1)` with 53 random bits.
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / 9007199254740992.0)
    }

    /// Uniform draw in `[lo, hi)`.
    pub fn uniform_in(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    /// Standard normal draw (Box-Muller, with the second coordinate cached).
    pub fn normal(&mut self) -> f64 {
        if let Some(z) = self.spare_normal.take() {
            return z;
        }
        // 1 - u keeps the logarithm argument in (0, 1], never 0.
        let r = (-2.0 * (1.0 - self.uniform()).ln()).sqrt();
        let theta = 2.0 * std::f64::consts::PI * self.uniform();
        self.spare_normal = Some(r * theta.sin());
        r * theta.cos()
    }

    /// Normal draw with given mean and standard deviation.
    pub fn normal_with(&mut self, mean: f64, sd: f64) -> f64 {
        mean + sd * self.normal()
    }

    /// Standard Laplace draw (density `exp(-|x|)/2`) by inverse CDF.
    pub fn laplace(&mut self) -> f64 {
        let u = self.uniform() - 0.5;
        // Signed inverse of the two-sided exponential CDF.
        -u.signum() * (1.0 - 2.0 * u.abs()).ln()
    }

    /// Uniform integer in `[0, n)`.
    pub fn below(&mut self, n: u64) -> u64 {
        // Multiply-shift rejection-free mapping; bias is 2^-64 * n, negligible
        // for the small n used here.
        ((self.next_u64() as u128 * n as u128) >> 64) as u64
    }
}

/// Sum `values` by pairwise recursion, independent of thread count.
///
/// Pairwise summation has O(log n) error growth and, unlike a parallel
/// reduction with arbitrary split points, a fixed association order — the
/// same input slice always produces the same bits.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    match values.len() {
        0 => 0.0,
        1 => values[0],
        2 => values[0] + values[1],
        n => {
            let mid = n / 2;
            pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
        }
    }
}

/// Mean and standard error of the mean via pairwise sums.
pub fn mean_and_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = pairwise_sum(values) / n as f64;
    if n == 1 {
        return (mean, f64::INFINITY);
    }
    let sq: Vec<f64> = values.iter().map(|v| (v - mean) * (v - mean)).collect();
    let var = pairwise_sum(&sq) / (n as f64 - 1.0);
    (mean, (var / n as f64).sqrt())
}
