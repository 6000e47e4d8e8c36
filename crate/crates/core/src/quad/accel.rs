use num_complex::Complex64;

/// Repeated neighbour averaging of a partial-sum sequence.
///
/// `m` rounds of `Sₙ ← (Sₙ + Sₙ₊₁)/2` collapse into a binomial-weighted mean
/// of the last `m + 1` partial sums, so only that window is kept. For sums of
/// alternating terms with smooth magnitude each round gains one order in the
/// slice index.
#[derive(Clone, Debug)]
pub struct IteratedAverage {
    rounds: usize,
    window: Vec<Complex64>,
    weights: Vec<f64>,
    history: Vec<Complex64>,
}

impl IteratedAverage {
    pub fn new(rounds: usize) -> Self {
        let mut weights = vec![1.0f64];
        for _ in 0..rounds {
            let mut next = vec![0.0; weights.len() + 1];
            for (i, w) in weights.iter().enumerate() {
                next[i] += 0.5 * w;
                next[i + 1] += 0.5 * w;
            }
            weights = next;
        }
        IteratedAverage { rounds, window: Vec::with_capacity(rounds + 1), weights, history: Vec::new() }
    }

    pub fn push(&mut self, partial_sum: Complex64) {
        if self.window.len() == self.rounds + 1 {
            self.window.remove(0);
        }
        self.window.push(partial_sum);
        if let Some(v) = self.value() {
            self.history.push(v);
        }
    }

    /// Current accelerated value, once `rounds + 1` partial sums are in.
    pub fn value(&self) -> Option<Complex64> {
        (self.window.len() == self.rounds + 1)
            .then(|| self.window.iter().zip(&self.weights).map(|(s, w)| s * *w).sum())
    }

    /// Difference between the last two accelerated values.
    pub fn residual(&self) -> Option<f64> {
        match self.history.as_slice() {
            [.., a, b] => Some((b - a).norm()),
            _ => None,
        }
    }

    pub fn residuals(&self) -> Vec<f64> {
        self.history.windows(2).map(|w| (w[1] - w[0]).norm()).collect()
    }
}
