use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The independent random streams a run draws from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum StreamName {
    Placement,
    Mobility,
    Loss,
    ProtocolDelay,
    Sr,
    Traffic,
}

impl StreamName {
    pub const ALL: [StreamName; 6] = [
        StreamName::Placement,
        StreamName::Mobility,
        StreamName::Loss,
        StreamName::ProtocolDelay,
        StreamName::Sr,
        StreamName::Traffic,
    ];

    pub fn label(self) -> &'static str {
        match self {
            StreamName::Placement => "placement",
            StreamName::Mobility => "mobility",
            StreamName::Loss => "loss",
            StreamName::ProtocolDelay => "protocol_delay",
            StreamName::Sr => "sr",
            StreamName::Traffic => "traffic",
        }
    }
}

/// A named, keyed random stream.
///
/// Draws are addressed by a key path instead of by position in a sequence:
/// `uniform(&[nwb, sender, receiver])` returns the same value no matter how
/// many other draws happened before it. Two runs that differ only in, say,
/// the SR mode therefore see identical loss outcomes on every transmission
/// they share.
#[derive(Clone, Debug)]
pub struct RngStream {
    name: StreamName,
    key: u64,
}

impl RngStream {
    pub fn new(seed: u64, name: StreamName) -> Self {
        let mut key = mix(seed ^ 0x6a09_e667_f3bc_c908);
        for b in name.label().bytes() {
            key = mix(key ^ u64::from(b));
        }
        Self { name, key }
    }

    pub fn name(&self) -> StreamName {
        self.name
    }

    fn derive(&self, path: &[u64]) -> u64 {
        path.iter()
            .fold(self.key, |acc, &part| mix(acc.wrapping_add(mix(part))))
    }

    /// One uniform draw in `[0, 1)` addressed by `path`.
    pub fn uniform(&self, path: &[u64]) -> f64 {
        (self.derive(path) >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// A full generator addressed by `path`, for call sites that need many draws.
    pub fn fork(&self, path: &[u64]) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.derive(path))
    }
}

/// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn same_seed_and_name_reproduce() {
        let a = RngStream::new(7, StreamName::Loss);
        let b = RngStream::new(7, StreamName::Loss);
        assert_eq!(a.uniform(&[1, 2, 3]), b.uniform(&[1, 2, 3]));
        let xa: Vec<u64> = a.fork(&[9]).sample_iter(rand::distributions::Standard).take(8).collect();
        let xb: Vec<u64> = b.fork(&[9]).sample_iter(rand::distributions::Standard).take(8).collect();
        assert_eq!(xa, xb);
    }

    #[test]
    fn names_and_paths_separate() {
        let draws: Vec<f64> = StreamName::ALL
            .iter()
            .map(|&n| RngStream::new(7, n).uniform(&[1]))
            .collect();
        for i in 0..draws.len() {
            for j in (i + 1)..draws.len() {
                assert_ne!(draws[i], draws[j]);
            }
        }
        let s = RngStream::new(7, StreamName::Loss);
        assert_ne!(s.uniform(&[1, 2]), s.uniform(&[2, 1]));
    }

    #[test]
    fn streams_are_uncorrelated() {
        let a = RngStream::new(3, StreamName::Loss);
        let b = RngStream::new(3, StreamName::Sr);
        let n = 20_000;
        let xs: Vec<f64> = (0..n).map(|i| a.uniform(&[i])).collect();
        let ys: Vec<f64> = (0..n).map(|i| b.uniform(&[i])).collect();
        let mx = xs.iter().sum::<f64>() / n as f64;
        let my = ys.iter().sum::<f64>() / n as f64;
        let cov: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>() / n as f64;
        let corr = cov / (1.0 / 12.0);
        // sd of the sample correlation is ~ 1/sqrt(n) = 0.007
        assert!(corr.abs() < 0.03, "corr = {corr}");
        assert!((mx - 0.5).abs() < 0.01);
    }
}
