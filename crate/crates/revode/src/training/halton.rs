//! Halton low-discrepancy sequence for spreading initial conditions.

const PRIMES: [u64; 20] = [
    2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71,
];

/// Radical inverse of `index` in the given base; `index` starts at 1, so the
/// base-2 sequence opens with 1/2, 1/4, 3/4, ...
pub fn radical_inverse(mut index: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut f = 1.0;
    let mut r = 0.0;
    while index > 0 {
        f *= inv;
        r += f * (index % base) as f64;
        index /= base;
    }
    r
}

/// Deterministic point stream in the unit cube, one prime base per axis.
pub struct Halton {
    bases: Vec<u64>,
    index: u64,
}

impl Halton {
    pub fn new(dim: usize) -> Self {
        assert!(
            dim >= 1 && dim <= PRIMES.len(),
            "halton sampler supports 1..={} axes, asked for {dim}",
            PRIMES.len()
        );
        Self { bases: PRIMES[..dim].to_vec(), index: 0 }
    }

    pub fn next_point(&mut self) -> Vec<f64> {
        self.index += 1;
        self.bases
            .iter()
            .map(|&b| radical_inverse(self.index, b))
            .collect()
    }
}

/// First `n` Halton points mapped affinely into the box `[lo, hi]`.
pub fn halton_box(n: usize, lo: &[f64], hi: &[f64]) -> Vec<Vec<f64>> {
    assert_eq!(lo.len(), hi.len());
    let mut seq = Halton::new(lo.len());
    (0..n)
        .map(|_| {
            seq.next_point()
                .iter()
                .zip(lo.iter().zip(hi))
                .map(|(&u, (&a, &b))| a + u * (b - a))
                .collect()
        })
        .collect()
}
