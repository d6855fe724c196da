use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Binomial, Distribution, Poisson};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{born_probabilities, DensityMatrix, TomographyError};
use crate::direction_design::DirectionSet;

/// Per-setting outcome counts. Only non-zero outcomes are stored.
///
/// JSON form: `{"settings": "<id>", "n": 6, "counts": [{"setting": 0, "outcomes": {"++-+--": 17}}]}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountsRecord {
    pub settings: String,
    pub n: usize,
    pub counts: Vec<SettingCounts>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SettingCounts {
    pub setting: usize,
    pub outcomes: BTreeMap<String, u64>,
}

impl CountsRecord {
    pub fn num_settings(&self) -> usize {
        self.counts.len()
    }

    /// Total counts of each setting.
    pub fn totals(&self) -> Vec<u64> {
        self.counts.iter().map(|c| c.outcomes.values().sum()).collect()
    }

    /// Counts of setting `a` indexed by outcome bits.
    pub fn dense(&self, a: usize) -> Result<Vec<u64>, TomographyError> {
        let mut out = vec![0; 1 << self.n];
        for (s, &c) in &self.counts[a].outcomes {
            out[outcome_index(s, self.n)?] += c;
        }
        Ok(out)
    }

    fn from_dense(settings: String, n: usize, dense: Vec<Vec<u64>>) -> Self {
        let counts = dense
            .into_iter()
            .enumerate()
            .map(|(a, row)| SettingCounts {
                setting: a,
                outcomes: row.into_iter().enumerate().filter(|(_, c)| *c > 0).map(|(o, c)| (outcome_string(o, n), c)).collect(),
            })
            .collect();
        CountsRecord { settings, n, counts }
    }

    /// Checks outcome strings and setting numbering.
    pub fn validate(&self) -> Result<(), TomographyError> {
        for (a, c) in self.counts.iter().enumerate() {
            if c.setting != a {
                return Err(TomographyError::InvalidParameter(format!("setting index {} at position {a}", c.setting)));
            }
            for s in c.outcomes.keys() {
                outcome_index(s, self.n)?;
            }
        }
        Ok(())
    }

    /// Each count replaced by a Poisson draw with the count as mean, using
    /// stream `stream` of the seeded generator.
    pub fn poisson_resample(&self, seed: u64, stream: u64) -> Result<Self, TomographyError> {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        let mut dense = Vec::with_capacity(self.counts.len());
        for a in 0..self.counts.len() {
            let row = self.dense(a)?;
            dense.push(row.into_iter().map(|c| poisson(&mut rng, c as f64)).collect());
        }
        Ok(CountsRecord::from_dense(self.settings.clone(), self.n, dense))
    }
}

/// `+`/`-` string for outcome bits `o` (qubit 0 first).
pub fn outcome_string(o: usize, n: usize) -> String {
    (0..n).map(|i| if (o >> (n - 1 - i)) & 1 == 0 { '+' } else { '-' }).collect()
}

fn outcome_index(s: &str, n: usize) -> Result<usize, TomographyError> {
    if s.len() != n {
        return Err(TomographyError::InvalidParameter(format!("outcome {s:?} for {n} qubits")));
    }
    s.chars().try_fold(0usize, |acc, c| match c {
        '+' => Ok(acc << 1),
        '-' => Ok((acc << 1) | 1),
        _ => Err(TomographyError::InvalidParameter(format!("outcome {s:?}"))),
    })
}

/// Content hash of a direction set, `sha256:` plus 16 hex digits.
pub fn settings_id(ds: &DirectionSet) -> String {
    let text = crate::json::to_canonical_string(ds).expect("direction sets serialize");
    let digest = Sha256::digest(text.as_bytes());
    let hex: String = digest.iter().take(8).map(|b| format!("{b:02x}")).collect();
    format!("sha256:{hex}")
}

/// Fixed shot number per setting, or independent Poisson counts per outcome.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SamplingModel {
    Multinomial,
    Poisson,
}

fn poisson(rng: &mut ChaCha20Rng, mean: f64) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean).expect("positive finite mean").sample(rng) as u64
}

/// Samples counts for every setting of `ds`; setting `a` uses stream `a` of
/// the seeded generator.
pub fn simulate_counts(
    rho: &DensityMatrix,
    ds: &DirectionSet,
    shots: u64,
    seed: u64,
    model: SamplingModel,
) -> Result<CountsRecord, TomographyError> {
    if shots == 0 {
        return Err(TomographyError::InvalidParameter("shots must be positive".into()));
    }
    if ds.n() != rho.n_qubits() {
        return Err(TomographyError::Dimension(format!("{} qubits in settings, {} in state", ds.n(), rho.n_qubits())));
    }
    let mut dense = Vec::with_capacity(ds.m());
    for a in 0..ds.m() {
        let p = born_probabilities(rho, &ds.setting(a))?;
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        rng.set_stream(a as u64);
        let row = match model {
            SamplingModel::Poisson => p.iter().map(|&pi| poisson(&mut rng, shots as f64 * pi)).collect(),
            SamplingModel::Multinomial => {
                // conditional binomials over the outcomes in index order
                let mut left = shots;
                let mut mass = 1.0;
                let mut row = vec![0u64; p.len()];
                for (o, &pi) in p.iter().enumerate() {
                    if left == 0 {
                        break;
                    }
                    let q = if o + 1 == p.len() || mass <= pi { 1.0 } else { (pi / mass).clamp(0.0, 1.0) };
                    let c = Binomial::new(left, q).expect("probability in [0, 1]").sample(&mut rng);
                    row[o] = c;
                    left -= c;
                    mass -= pi;
                }
                row
            }
        };
        dense.push(row);
    }
    Ok(CountsRecord::from_dense(settings_id(ds), ds.n(), dense))
}

/// Counts summed over the qubits outside `subset`, per setting.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarginalCounts {
    pub subset: Vec<usize>,
    /// `counts[a][o]`, outcome bits over the subset in subset order.
    pub counts: Vec<Vec<u64>>,
    pub totals: Vec<u64>,
    pub frequencies: Vec<Vec<f64>>,
}

/// Marginal count tables and normalized frequencies on `subset`.
pub fn marginalize_counts(rec: &CountsRecord, subset: &[usize]) -> Result<MarginalCounts, TomographyError> {
    if subset.is_empty() || subset.iter().any(|&q| q >= rec.n) || {
        let mut s = subset.to_vec();
        s.sort_unstable();
        s.dedup();
        s.len() != subset.len()
    } {
        return Err(TomographyError::InvalidParameter(format!("subset {subset:?} for {} qubits", rec.n)));
    }
    let n = rec.n;
    let mut counts = Vec::with_capacity(rec.counts.len());
    let mut totals = Vec::with_capacity(rec.counts.len());
    let mut frequencies = Vec::with_capacity(rec.counts.len());
    for (a, c) in rec.counts.iter().enumerate() {
        let mut row = vec![0u64; 1 << subset.len()];
        for (s, &k) in &c.outcomes {
            let full = outcome_index(s, n)?;
            let o = subset.iter().fold(0usize, |acc, &q| (acc << 1) | ((full >> (n - 1 - q)) & 1));
            row[o] += k;
        }
        let total: u64 = row.iter().sum();
        if total == 0 {
            return Err(TomographyError::EmptySetting(a));
        }
        frequencies.push(row.iter().map(|&k| k as f64 / total as f64).collect());
        totals.push(total);
        counts.push(row);
    }
    Ok(MarginalCounts { subset: subset.to_vec(), counts, totals, frequencies })
}

/// Counts proportional to exact probabilities, `round(total * p)` per outcome.
pub fn expected_counts(rho: &DensityMatrix, ds: &DirectionSet, total: u64) -> Result<CountsRecord, TomographyError> {
    let mut dense = Vec::with_capacity(ds.m());
    for a in 0..ds.m() {
        let p = born_probabilities(rho, &ds.setting(a))?;
        dense.push(p.iter().map(|&pi| (pi * total as f64).round() as u64).collect());
    }
    Ok(CountsRecord::from_dense(settings_id(ds), ds.n(), dense))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::direction_design::pauli_to_directions;
    use crate::marginal_design::{presets, PauliSet};
    use crate::tomography_sim::{dicke_state, partial_trace};

    #[test]
    fn outcome_strings() {
        assert_eq!(outcome_string(0b0110, 4), "+--+");
        assert_eq!(outcome_index("+--+", 4).unwrap(), 0b0110);
        assert!(outcome_index("+x", 2).is_err());
    }

    #[test]
    fn multinomial_totals_and_determinism() {
        let rho = dicke_state(2, 1).unwrap();
        let ds = pauli_to_directions(&presets::pauli9_2q());
        let rec = simulate_counts(&rho, &ds, 10, 7, SamplingModel::Multinomial).unwrap();
        assert_eq!(rec.num_settings(), 9);
        assert!(rec.totals().iter().all(|&t| t == 10));
        assert_eq!(rec, simulate_counts(&rho, &ds, 10, 7, SamplingModel::Multinomial).unwrap());
        let text = serde_json::to_string(&rec).unwrap();
        assert_eq!(serde_json::from_str::<CountsRecord>(&text).unwrap(), rec);
    }

    #[test]
    fn large_samples_match_probabilities() {
        let rho = dicke_state(3, 1).unwrap();
        let ds = pauli_to_directions(&PauliSet::parse_strings(&["XYZ", "ZZZ"]).unwrap());
        for model in [SamplingModel::Multinomial, SamplingModel::Poisson] {
            let rec = simulate_counts(&rho, &ds, 1_000_000, 3, model).unwrap();
            for a in 0..2 {
                let p = born_probabilities(&rho, &ds.setting(a)).unwrap();
                let row = rec.dense(a).unwrap();
                let total: u64 = row.iter().sum();
                for (c, pi) in row.iter().zip(&p) {
                    assert!((*c as f64 / total as f64 - pi).abs() < 5e-3);
                }
            }
        }
    }

    #[test]
    fn marginals_commute_with_partial_trace() {
        let rho = dicke_state(4, 2).unwrap();
        let ds = pauli_to_directions(&presets::pauli9_4q());
        let rec = expected_counts(&rho, &ds, 1 << 40).unwrap();
        let marg = marginalize_counts(&rec, &[1, 3]).unwrap();
        let reduced = partial_trace(&rho, &[1, 3]).unwrap();
        for a in 0..ds.m() {
            let setting = [ds.direction(1, a), ds.direction(3, a)];
            let p = born_probabilities(&reduced, &setting).unwrap();
            for (f, pi) in marg.frequencies[a].iter().zip(&p) {
                assert!((f - pi).abs() < 1e-10);
            }
            assert_eq!(marg.totals[a], rec.totals()[a]);
        }
    }

    #[test]
    fn empty_setting_is_named() {
        let rec = CountsRecord {
            settings: "x".into(),
            n: 2,
            counts: vec![
                SettingCounts { setting: 0, outcomes: [("++".to_string(), 3)].into() },
                SettingCounts { setting: 1, outcomes: BTreeMap::new() },
            ],
        };
        assert_eq!(marginalize_counts(&rec, &[0]), Err(TomographyError::EmptySetting(1)));
        assert!(marginalize_counts(&rec, &[2]).is_err());
    }

    #[test]
    fn uniform_counts_give_uniform_marginals() {
        let dense = vec![vec![5u64; 8]; 3];
        let rec = CountsRecord::from_dense("u".into(), 3, dense);
        let m = marginalize_counts(&rec, &[0, 2]).unwrap();
        assert!(m.frequencies.iter().flatten().all(|&f| (f - 0.25).abs() < 1e-15));
    }
}
