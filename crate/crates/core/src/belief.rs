//! Layered predictive belief update with belief resonance.
//!
//! A layer holds a discrete belief over its states. Each update blends the
//! previous posterior with a top-down prediction and a bottom-up evidence
//! distribution (two fixed Kalman gains), then integrates the two with a gain
//! derived from free energy and the precision of the prediction error.
//! Resonance inserts a third source, the belief inferred for a partner, with
//! its own gain (the susceptibility parameter).
//!
//! Every function here is pure over its inputs; [`LayerState`] only records
//! the diagnostics of the last update.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Lower bound applied to every probability after normalization.
pub const PROB_FLOOR: f64 = 1e-12;

/// Lower bound on the prediction-error variance before taking `ln(1/var)`.
pub const VARIANCE_FLOOR: f64 = 1e-6;

/// Tolerance used when validating externally supplied distributions and tables.
pub const STOCHASTIC_TOL: f64 = 1e-9;

/// Normalized probability vector over a named discrete domain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BeliefDistribution {
    domain: String,
    probs: Vec<f64>,
}

impl BeliefDistribution {
    /// Builds a distribution from non-negative weights, normalizing them.
    pub fn new(domain: impl Into<String>, weights: Vec<f64>) -> Result<Self> {
        let domain = domain.into();
        if weights.is_empty() {
            return Err(Error::InvalidDistribution(format!(
                "domain `{domain}` has no states"
            )));
        }
        if let Some(w) = weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
            return Err(Error::InvalidDistribution(format!(
                "weight {w} in domain `{domain}` is negative or not finite"
            )));
        }
        if weights.iter().sum::<f64>() <= 0.0 {
            return Err(Error::InvalidDistribution(format!(
                "weights in domain `{domain}` sum to zero"
            )));
        }
        let mut probs = weights;
        normalize_floored(&mut probs);
        Ok(Self { domain, probs })
    }

    pub fn uniform(domain: impl Into<String>, len: usize) -> Self {
        assert!(len > 0, "uniform distribution needs at least one state");
        Self {
            domain: domain.into(),
            probs: vec![1.0 / len as f64; len],
        }
    }

    /// All mass on `index`, other states at the probability floor.
    pub fn point_mass(domain: impl Into<String>, len: usize, index: usize) -> Self {
        assert!(index < len, "point mass index out of range");
        let mut probs = vec![0.0; len];
        probs[index] = 1.0;
        normalize_floored(&mut probs);
        Self {
            domain: domain.into(),
            probs,
        }
    }

    /// Wraps raw values, clipping negatives and renormalizing with the floor.
    pub(crate) fn from_raw(domain: &str, mut values: Vec<f64>) -> Self {
        normalize_floored(&mut values);
        Self {
            domain: domain.to_string(),
            probs: values,
        }
    }

    pub fn domain(&self) -> &str {
        &self.domain
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn get(&self, index: usize) -> f64 {
        self.probs[index]
    }

    /// Index of the largest probability; the lowest index wins ties.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, p) in self.probs.iter().enumerate() {
            if *p > self.probs[best] {
                best = i;
            }
        }
        best
    }

    pub fn entropy(&self) -> f64 {
        self.probs
            .iter()
            .map(|p| {
                let p = p.max(PROB_FLOOR);
                -p * p.ln()
            })
            .sum()
    }

    /// L1 distance to another distribution over the same domain.
    pub fn l1_distance(&self, other: &Self) -> Result<f64> {
        check_same_domain(self, other)?;
        Ok(self
            .probs
            .iter()
            .zip(&other.probs)
            .map(|(a, b)| (a - b).abs())
            .sum())
    }

    /// Multiplies each entry by a weight and renormalizes.
    pub fn reweighted(&self, weights: &[f64]) -> Result<Self> {
        if weights.len() != self.len() {
            return Err(Error::SizeMismatch {
                domain: self.domain.clone(),
                expected: self.len(),
                found: weights.len(),
            });
        }
        let values = self.probs.iter().zip(weights).map(|(p, w)| p * w).collect();
        Ok(Self::from_raw(&self.domain, values))
    }
}

/// Clips negatives and non-finite entries to zero, then normalizes so that the
/// vector sums to one with every entry at least [`PROB_FLOOR`].
///
/// Entries that would fall below the floor are pinned to it and the remaining
/// mass is redistributed proportionally over the rest.
pub(crate) fn normalize_floored(values: &mut [f64]) {
    let n = values.len();
    if n == 0 {
        return;
    }
    for v in values.iter_mut() {
        if !v.is_finite() || *v < 0.0 {
            *v = 0.0;
        }
    }
    let mut pinned = vec![false; n];
    let mut pinned_count = 0usize;
    loop {
        let free_mass = 1.0 - PROB_FLOOR * pinned_count as f64;
        let free_sum: f64 = values
            .iter()
            .zip(&pinned)
            .filter(|(_, p)| !**p)
            .map(|(v, _)| *v)
            .sum();
        if pinned_count == n || free_sum <= 0.0 {
            values.fill(1.0 / n as f64);
            return;
        }
        let scale = free_mass / free_sum;
        let mut changed = false;
        for i in 0..n {
            if !pinned[i] && values[i] * scale < PROB_FLOOR {
                pinned[i] = true;
                pinned_count += 1;
                changed = true;
            }
        }
        if !changed {
            for i in 0..n {
                values[i] = if pinned[i] {
                    PROB_FLOOR
                } else {
                    values[i] * scale
                };
            }
            return;
        }
    }
}

fn check_same_domain(a: &BeliefDistribution, b: &BeliefDistribution) -> Result<()> {
    if a.domain != b.domain {
        return Err(Error::DomainMismatch {
            expected: a.domain.clone(),
            found: b.domain.clone(),
        });
    }
    if a.len() != b.len() {
        return Err(Error::SizeMismatch {
            domain: a.domain.clone(),
            expected: a.len(),
            found: b.len(),
        });
    }
    Ok(())
}

fn check_gain(name: &str, gain: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&gain) {
        return Err(Error::config(format!("{name} {gain} outside [0, 1]")));
    }
    Ok(())
}

/// Conditional probability table `P(to | from)`; one row per `from` state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LikelihoodMatrix {
    from_domain: String,
    to_domain: String,
    rows: Vec<Vec<f64>>,
}

impl LikelihoodMatrix {
    /// Validates that every row is a probability vector (within 1e-9).
    pub fn new(
        from_domain: impl Into<String>,
        to_domain: impl Into<String>,
        rows: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let from_domain = from_domain.into();
        let to_domain = to_domain.into();
        let width = rows.first().map(Vec::len).unwrap_or(0);
        if rows.is_empty() || width == 0 {
            return Err(Error::InvalidDistribution(format!(
                "table {from_domain} -> {to_domain} is empty"
            )));
        }
        for (i, row) in rows.iter().enumerate() {
            if row.len() != width {
                return Err(Error::SizeMismatch {
                    domain: to_domain,
                    expected: width,
                    found: row.len(),
                });
            }
            let sum: f64 = row.iter().sum();
            if row.iter().any(|p| !p.is_finite() || *p < 0.0) || (sum - 1.0).abs() > STOCHASTIC_TOL
            {
                return Err(Error::InvalidDistribution(format!(
                    "row {i} of table {from_domain} -> {to_domain} is not stochastic (sum {sum})"
                )));
            }
        }
        Ok(Self {
            from_domain,
            to_domain,
            rows,
        })
    }

    /// Normalizes each row of non-negative weights. All-zero rows are an error.
    pub fn from_weights(
        from_domain: impl Into<String>,
        to_domain: impl Into<String>,
        weights: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let from_domain = from_domain.into();
        let mut rows = weights;
        for (i, row) in rows.iter_mut().enumerate() {
            let sum: f64 = row.iter().sum();
            if sum <= 0.0 || !sum.is_finite() {
                return Err(Error::InvalidDistribution(format!(
                    "row {i} of table from `{from_domain}` has no mass"
                )));
            }
            row.iter_mut().for_each(|w| *w /= sum);
        }
        Self::new(from_domain, to_domain, rows)
    }

    pub fn identity(domain: impl Into<String>, len: usize) -> Self {
        let domain = domain.into();
        let rows = (0..len)
            .map(|i| (0..len).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        Self {
            from_domain: domain.clone(),
            to_domain: domain,
            rows,
        }
    }

    pub fn from_domain(&self) -> &str {
        &self.from_domain
    }

    pub fn to_domain(&self) -> &str {
        &self.to_domain
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    /// `P(to = column | from = row)`.
    pub fn get(&self, row: usize, column: usize) -> f64 {
        self.rows[row][column]
    }

    pub fn to_len(&self) -> usize {
        self.rows[0].len()
    }
}

/// `prior + gain * (incoming - prior)`, renormalized.
pub fn kalman_blend(
    prior: &BeliefDistribution,
    incoming: &BeliefDistribution,
    gain: f64,
) -> Result<BeliefDistribution> {
    check_same_domain(prior, incoming)?;
    check_gain("blend gain", gain)?;
    let values = prior
        .probs
        .iter()
        .zip(&incoming.probs)
        .map(|(p, q)| p + gain * (q - p))
        .collect();
    Ok(BeliefDistribution::from_raw(&prior.domain, values))
}

/// Soft-evidence propagation: `result[t] = sum_s P(t | s) * source[s]`.
pub fn propagate_likelihood(
    source: &BeliefDistribution,
    table: &LikelihoodMatrix,
) -> Result<BeliefDistribution> {
    if source.domain != table.from_domain {
        return Err(Error::DomainMismatch {
            expected: table.from_domain.clone(),
            found: source.domain.clone(),
        });
    }
    if source.len() != table.rows.len() {
        return Err(Error::SizeMismatch {
            domain: source.domain.clone(),
            expected: table.rows.len(),
            found: source.len(),
        });
    }
    let mut out = vec![0.0; table.to_len()];
    for (row, p) in table.rows.iter().zip(&source.probs) {
        for (o, l) in out.iter_mut().zip(row) {
            *o += l * p;
        }
    }
    Ok(BeliefDistribution::from_raw(&table.to_domain, out))
}

/// Entropy of the prediction plus its KL divergence from the evidence
/// (natural log). Both inputs are floored at [`PROB_FLOOR`] before the logs.
pub fn free_energy(prediction: &BeliefDistribution, evidence: &BeliefDistribution) -> Result<f64> {
    check_same_domain(prediction, evidence)?;
    let mut entropy = 0.0;
    let mut divergence = 0.0;
    for (p, e) in prediction.probs.iter().zip(&evidence.probs) {
        let p = p.max(PROB_FLOOR);
        let e = e.max(PROB_FLOOR);
        entropy -= p * p.ln();
        divergence += p * (p / e).ln();
    }
    Ok((entropy + divergence).max(0.0))
}

/// Population variance of a signed vector.
pub fn population_variance(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n
}

/// `ln(1 / var(PE))` with the variance floored at [`VARIANCE_FLOOR`].
pub fn precision(prediction_error: &[f64]) -> f64 {
    let var = population_variance(prediction_error).max(VARIANCE_FLOOR);
    (1.0 / var).ln()
}

/// `F / (F + pi)` clamped to `[0, 1]`.
pub fn integration_gain(free_energy: f64, precision: f64) -> f64 {
    let denom = free_energy + precision;
    if denom <= 0.0 {
        return if free_energy > 0.0 { 1.0 } else { 0.0 };
    }
    (free_energy / denom).clamp(0.0, 1.0)
}

/// Susceptibility to a partner's inferred beliefs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResonanceConfig {
    sp: f64,
}

impl ResonanceConfig {
    pub fn new(sp: f64) -> Result<Self> {
        check_gain("susceptibility", sp)?;
        Ok(Self { sp })
    }

    pub fn sp(&self) -> f64 {
        self.sp
    }
}

/// A partner belief together with how strongly it should pull the layer.
#[derive(Clone, Copy, Debug)]
pub struct Resonance<'a> {
    pub inferred: &'a BeliefDistribution,
    pub config: ResonanceConfig,
}

/// Direction of the final precision-weighted step.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignConvention {
    /// `P' + k_t (evidence - P')`: the posterior moves toward the evidence.
    #[default]
    TowardEvidence,
    /// `P' + k_t (P' - evidence)`: the literal printed form, moving away from
    /// the evidence. Debug only.
    Literal,
}

/// One predictive layer: its prior, fixed gains and the diagnostics of the
/// most recent update.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayerState {
    pub prior: BeliefDistribution,
    pub prediction: BeliefDistribution,
    pub evidence: BeliefDistribution,
    pub prediction_gain: f64,
    pub evidence_gain: f64,
    pub integration_gain: f64,
    pub free_energy: f64,
    pub precision: f64,
    pub prediction_error: Vec<f64>,
    #[serde(default)]
    pub sign_convention: SignConvention,
}

impl LayerState {
    /// A layer with a uniform prior over `len` states.
    pub fn new(domain: &str, len: usize, prediction_gain: f64, evidence_gain: f64) -> Result<Self> {
        check_gain("prediction gain", prediction_gain)?;
        check_gain("evidence gain", evidence_gain)?;
        let uniform = BeliefDistribution::uniform(domain, len);
        Ok(Self {
            prior: uniform.clone(),
            prediction: uniform.clone(),
            evidence: uniform,
            prediction_gain,
            evidence_gain,
            integration_gain: 0.0,
            free_energy: 0.0,
            precision: 0.0,
            prediction_error: vec![0.0; len],
            sign_convention: SignConvention::default(),
        })
    }

    pub fn domain(&self) -> &str {
        self.prior.domain()
    }

    pub fn len(&self) -> usize {
        self.prior.len()
    }

    pub fn is_empty(&self) -> bool {
        self.prior.is_empty()
    }

    /// Resets the prior to uniform.
    pub fn reset(&mut self) {
        self.prior = BeliefDistribution::uniform(self.prior.domain.clone(), self.len());
    }

    /// Makes `posterior` the prior for the next update.
    pub fn commit(&mut self, posterior: BeliefDistribution) {
        self.prior = posterior;
    }

    /// Steps 1-3 shared by both integration orders: prediction, evidence,
    /// prediction error, precision, free energy and the integration gain.
    fn integrate_sources(
        &mut self,
        top_down: &BeliefDistribution,
        bottom_up: &BeliefDistribution,
    ) -> Result<()> {
        check_same_domain(&self.prior, top_down)?;
        check_same_domain(&self.prior, bottom_up)?;
        let prediction = kalman_blend(&self.prior, top_down, self.prediction_gain)?;
        let evidence = kalman_blend(&self.prior, bottom_up, self.evidence_gain)?;
        self.prediction_error = evidence
            .probs
            .iter()
            .zip(&prediction.probs)
            .map(|(e, p)| e - p)
            .collect();
        self.precision = precision(&self.prediction_error);
        self.free_energy = free_energy(&prediction, &evidence)?;
        self.integration_gain = integration_gain(self.free_energy, self.precision);
        self.prediction = prediction;
        self.evidence = evidence;
        Ok(())
    }

    fn final_step(&self, intermediate: &BeliefDistribution) -> BeliefDistribution {
        let k = self.integration_gain;
        let values = intermediate
            .probs
            .iter()
            .zip(&self.evidence.probs)
            .map(|(m, e)| match self.sign_convention {
                SignConvention::TowardEvidence => m + k * (e - m),
                SignConvention::Literal => m + k * (m - e),
            })
            .collect();
        BeliefDistribution::from_raw(self.domain(), values)
    }
}

/// Standard integration order: resonance acts on the top-down prediction, and
/// the result is then validated against the agent's own evidence.
///
/// Updates the diagnostics held in `layer` but leaves its prior untouched;
/// call [`LayerState::commit`] to carry the posterior forward.
pub fn layer_update(
    layer: &mut LayerState,
    top_down: &BeliefDistribution,
    bottom_up: &BeliefDistribution,
    resonance: Option<Resonance<'_>>,
) -> Result<BeliefDistribution> {
    layer.integrate_sources(top_down, bottom_up)?;
    let intermediate = match resonance {
        Some(r) => kalman_blend(&layer.prediction, r.inferred, r.config.sp())?,
        None => layer.prediction.clone(),
    };
    Ok(layer.final_step(&intermediate))
}

/// Ablation order: the agent first integrates its own prediction and evidence,
/// then blends the partner belief in last with the susceptibility gain.
pub fn swapped_layer_update(
    layer: &mut LayerState,
    top_down: &BeliefDistribution,
    bottom_up: &BeliefDistribution,
    resonance: Option<Resonance<'_>>,
) -> Result<BeliefDistribution> {
    layer.integrate_sources(top_down, bottom_up)?;
    let own = layer.final_step(&layer.prediction);
    match resonance {
        Some(r) => kalman_blend(&own, r.inferred, r.config.sp()),
        None => Ok(own),
    }
}

/// Which of the two integration orders a layer uses.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntegrationOrder {
    #[default]
    Standard,
    Swapped,
}

impl IntegrationOrder {
    pub fn update(
        self,
        layer: &mut LayerState,
        top_down: &BeliefDistribution,
        bottom_up: &BeliefDistribution,
        resonance: Option<Resonance<'_>>,
    ) -> Result<BeliefDistribution> {
        match self {
            IntegrationOrder::Standard => layer_update(layer, top_down, bottom_up, resonance),
            IntegrationOrder::Swapped => swapped_layer_update(layer, top_down, bottom_up, resonance),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn dist(p: &[f64]) -> BeliefDistribution {
        BeliefDistribution::new("d", p.to_vec()).unwrap()
    }

    fn assert_close(a: &[f64], b: &[f64], tol: f64) {
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() <= tol, "{a:?} vs {b:?}");
        }
    }

    #[test]
    fn blend_examples() {
        let p = dist(&[0.8, 0.2]);
        let q = dist(&[0.2, 0.8]);
        assert_close(kalman_blend(&p, &p, 0.5).unwrap().probs(), &[0.8, 0.2], 1e-12);
        assert_close(kalman_blend(&p, &q, 0.0).unwrap().probs(), &[0.8, 0.2], 1e-12);
        assert_close(kalman_blend(&p, &q, 1.0).unwrap().probs(), &[0.2, 0.8], 1e-12);
        assert_close(kalman_blend(&p, &q, 0.5).unwrap().probs(), &[0.5, 0.5], 1e-12);
    }

    #[test]
    fn blend_rejects_bad_inputs() {
        let p = dist(&[0.8, 0.2]);
        let other = BeliefDistribution::new("e", vec![0.5, 0.5]).unwrap();
        assert!(matches!(
            kalman_blend(&p, &other, 0.5),
            Err(Error::DomainMismatch { .. })
        ));
        assert!(matches!(kalman_blend(&p, &p, 1.5), Err(Error::Config(_))));
        assert!(matches!(kalman_blend(&p, &p, -0.1), Err(Error::Config(_))));
    }

    #[test]
    fn propagate_examples() {
        let src = dist(&[0.3, 0.7]);
        let id = LikelihoodMatrix::identity("d", 2);
        assert_close(propagate_likelihood(&src, &id).unwrap().probs(), &[0.3, 0.7], 1e-12);

        let uniform_rows = LikelihoodMatrix::new("d", "t", vec![vec![0.25; 4]; 2]).unwrap();
        assert_close(
            propagate_likelihood(&src, &uniform_rows).unwrap().probs(),
            &[0.25; 4],
            1e-12,
        );

        // Brute-force double loop over the table.
        let rows = vec![vec![1.0, 0.0], vec![0.5, 0.5]];
        let table = LikelihoodMatrix::new("d", "t", rows.clone()).unwrap();
        let half = dist(&[0.5, 0.5]);
        let mut expected = [0.0; 2];
        for s in 0..2 {
            for t in 0..2 {
                expected[t] += rows[s][t] * 0.5;
            }
        }
        assert_close(&expected, &[0.75, 0.25], 1e-15);
        assert_close(propagate_likelihood(&half, &table).unwrap().probs(), &expected, 1e-12);
    }

    #[test]
    fn propagate_domain_mismatch() {
        let table = LikelihoodMatrix::identity("x", 2);
        assert!(matches!(
            propagate_likelihood(&dist(&[0.5, 0.5]), &table),
            Err(Error::DomainMismatch { .. })
        ));
    }

    #[test]
    fn table_must_be_row_stochastic() {
        assert!(LikelihoodMatrix::new("a", "b", vec![vec![0.5, 0.4]]).is_err());
        assert!(LikelihoodMatrix::new("a", "b", vec![vec![0.5, 0.5], vec![1.0]]).is_err());
        assert!(LikelihoodMatrix::from_weights("a", "b", vec![vec![0.0, 0.0]]).is_err());
        let t = LikelihoodMatrix::from_weights("a", "b", vec![vec![2.0, 6.0]]).unwrap();
        assert_close(&t.rows()[0], &[0.25, 0.75], 1e-15);
    }

    #[test]
    fn free_energy_examples() {
        let half = dist(&[0.5, 0.5]);
        // Entropy of [0.5, 0.5] by direct summation.
        let h: f64 = -(0.5f64 * 0.5f64.ln()) * 2.0;
        assert!((free_energy(&half, &half).unwrap() - h).abs() < 1e-12);
        assert!((h - std::f64::consts::LN_2).abs() < 1e-15);

        let eps = 1e-9;
        let sharp = dist(&[1.0 - eps, eps]);
        assert!(free_energy(&sharp, &sharp).unwrap() < 1e-6);

        let skew = dist(&[0.9, 0.1]);
        let kl = 0.5 * (0.5f64 / 0.9).ln() + 0.5 * (0.5f64 / 0.1).ln();
        assert!((free_energy(&half, &skew).unwrap() - (h + kl)).abs() < 1e-12);
    }

    #[test]
    fn precision_examples() {
        assert!((precision(&[0.0, 0.0, 0.0]) - (1e6f64).ln()).abs() < 1e-9);
        assert!((precision(&[0.0, 0.0, 0.0]) - 13.815_510_557_964_274).abs() < 1e-9);
        // Population variance of [0.5, -0.5] is 0.25.
        assert!((population_variance(&[0.5, -0.5]) - 0.25).abs() < 1e-15);
        assert!((precision(&[0.5, -0.5]) - 4f64.ln()).abs() < 1e-12);
        assert!(precision(&[0.6, -0.6]) < precision(&[0.5, -0.5]));
    }

    #[test]
    fn uniform_is_a_fixed_point() {
        let u = BeliefDistribution::uniform("d", 3);
        let mut layer = LayerState::new("d", 3, 0.5, 0.5).unwrap();
        let r = Resonance {
            inferred: &u,
            config: ResonanceConfig::new(0.7).unwrap(),
        };
        let post = layer_update(&mut layer, &u, &u, Some(r)).unwrap();
        assert_close(post.probs(), u.probs(), 1e-12);
    }

    #[test]
    fn zero_sp_matches_no_resonance() {
        let mut a = LayerState::new("d", 3, 0.5, 0.5).unwrap();
        a.prior = dist(&[0.2, 0.3, 0.5]);
        let mut b = a.clone();
        let td = dist(&[0.6, 0.3, 0.1]);
        let bu = dist(&[0.1, 0.1, 0.8]);
        let q = dist(&[0.9, 0.05, 0.05]);
        let r = Resonance {
            inferred: &q,
            config: ResonanceConfig::new(0.0).unwrap(),
        };
        let with = layer_update(&mut a, &td, &bu, Some(r)).unwrap();
        let without = layer_update(&mut b, &td, &bu, None).unwrap();
        assert_close(with.probs(), without.probs(), 1e-12);
    }

    #[test]
    fn full_sp_with_zero_error_returns_partner_belief() {
        // Identical prior, top-down and bottom-up give PE = 0. The variance
        // floor then caps precision at ln(1e6) so k_t is small but not zero;
        // forcing k_t = 0 means the final step is the identity.
        let p = dist(&[0.7, 0.3]);
        let q = dist(&[0.1, 0.9]);
        let mut layer = LayerState::new("d", 2, 0.5, 0.5).unwrap();
        layer.prior = p.clone();
        let r = Resonance {
            inferred: &q,
            config: ResonanceConfig::new(1.0).unwrap(),
        };
        let post = layer_update(&mut layer, &p, &p, Some(r)).unwrap();
        assert!(layer.prediction_error.iter().all(|e| e.abs() < 1e-15));
        assert!((layer.precision - 1e6f64.ln()).abs() < 1e-9);
        // Hand trace: intermediate = q; posterior = q + k_t (p - q).
        let k = layer.integration_gain;
        let expected: Vec<f64> = (0..2).map(|s| q.get(s) + k * (p.get(s) - q.get(s))).collect();
        assert_close(post.probs(), &expected, 1e-12);

        layer.integration_gain = 0.0;
        let forced = layer.final_step(&q);
        assert_close(forced.probs(), q.probs(), 1e-12);
    }

    #[test]
    fn swapped_order_examples() {
        let mut base = LayerState::new("d", 2, 0.5, 0.5).unwrap();
        base.prior = dist(&[0.6, 0.4]);
        let td = dist(&[0.8, 0.2]);
        let bu = dist(&[0.3, 0.7]);
        let q = dist(&[0.05, 0.95]);
        let res = |sp| Resonance {
            inferred: &q,
            config: ResonanceConfig::new(sp).unwrap(),
        };

        let a = layer_update(&mut base.clone(), &td, &bu, Some(res(0.0))).unwrap();
        let b = swapped_layer_update(&mut base.clone(), &td, &bu, Some(res(0.0))).unwrap();
        assert_close(a.probs(), b.probs(), 1e-12);

        let c = swapped_layer_update(&mut base.clone(), &td, &bu, Some(res(1.0))).unwrap();
        assert_close(c.probs(), q.probs(), 1e-12);

        let d = layer_update(&mut base.clone(), &td, &bu, Some(res(0.5))).unwrap();
        let e = swapped_layer_update(&mut base.clone(), &td, &bu, Some(res(0.5))).unwrap();
        assert!((d.get(0) - e.get(0)).abs() > 1e-3, "{d:?} vs {e:?}");
    }

    #[test]
    fn literal_sign_moves_away_from_evidence() {
        let mut layer = LayerState::new("d", 2, 0.5, 0.5).unwrap();
        let td = dist(&[0.5, 0.5]);
        let bu = dist(&[0.9, 0.1]);
        let toward = layer_update(&mut layer.clone(), &td, &bu, None).unwrap();
        layer.sign_convention = SignConvention::Literal;
        let away = layer_update(&mut layer, &td, &bu, None).unwrap();
        assert!(toward.get(0) > 0.5);
        assert!(away.get(0) < 0.5);
    }

    #[test]
    fn floor_keeps_entries_positive() {
        let d = BeliefDistribution::new("d", vec![1.0, 0.0, 0.0]).unwrap();
        assert!(d.probs().iter().all(|p| *p >= PROB_FLOOR));
        assert!((d.probs().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(BeliefDistribution::new("d", vec![]).is_err());
        assert!(BeliefDistribution::new("d", vec![0.0, 0.0]).is_err());
        assert!(BeliefDistribution::new("d", vec![-1.0, 2.0]).is_err());
    }

    fn prob_vec(n: usize) -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(0.0f64..1.0, n).prop_map(|mut v| {
            v[0] += 1e-3;
            v
        })
    }

    proptest! {
        #[test]
        fn outputs_are_normalized(
            (p, q, r, s) in (2usize..7).prop_flat_map(|n| (prob_vec(n), prob_vec(n), prob_vec(n), prob_vec(n))),
            gain in 0.0f64..=1.0,
            sp in 0.0f64..=1.0,
        ) {
            let (p, q, r, s) = (dist(&p), dist(&q), dist(&r), dist(&s));
            let blended = kalman_blend(&p, &q, gain).unwrap();
            let mut layer = LayerState::new("d", p.len(), 0.5, 0.5).unwrap();
            layer.prior = p.clone();
            let res = Resonance { inferred: &s, config: ResonanceConfig::new(sp).unwrap() };
            let post = layer_update(&mut layer, &q, &r, Some(res)).unwrap();
            let swapped = swapped_layer_update(&mut layer.clone(), &q, &r, Some(res)).unwrap();
            for d in [&blended, &post, &swapped] {
                prop_assert!((d.probs().iter().sum::<f64>() - 1.0).abs() <= 1e-9);
                prop_assert!(d.probs().iter().all(|x| *x >= PROB_FLOOR * (1.0 - 1e-9)));
            }
            prop_assert!((0.0..=1.0).contains(&layer.integration_gain));
            prop_assert!(layer.free_energy >= 0.0);
        }

        #[test]
        fn gain_identities(
            (p, q) in (2usize..7).prop_flat_map(|n| (prob_vec(n), prob_vec(n))),
        ) {
            let (p, q) = (dist(&p), dist(&q));
            let zero = kalman_blend(&p, &q, 0.0).unwrap();
            let one = kalman_blend(&p, &q, 1.0).unwrap();
            for i in 0..p.len() {
                prop_assert!((zero.get(i) - p.get(i)).abs() <= 1e-12);
                prop_assert!((one.get(i) - q.get(i)).abs() <= 1e-12);
            }
        }

        #[test]
        fn convex_combination_of_sources(
            (p, q, r, s) in (2usize..6).prop_flat_map(|n| (prob_vec(n), prob_vec(n), prob_vec(n), prob_vec(n))),
            sp in 0.0f64..=1.0,
        ) {
            let (p, q, r, s) = (dist(&p), dist(&q), dist(&r), dist(&s));
            let mut layer = LayerState::new("d", p.len(), 0.5, 0.5).unwrap();
            layer.prior = p.clone();
            let res = Resonance { inferred: &s, config: ResonanceConfig::new(sp).unwrap() };
            let post = layer_update(&mut layer, &q, &r, Some(res)).unwrap();
            for i in 0..p.len() {
                let vals = [p.get(i), q.get(i), r.get(i), s.get(i)];
                let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
                let hi = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                prop_assert!(post.get(i) >= lo - 1e-9 && post.get(i) <= hi + 1e-9);
            }
        }

        #[test]
        fn free_energy_equals_entropy_on_agreement(p in (2usize..7).prop_flat_map(prob_vec)) {
            let p = dist(&p);
            let f = free_energy(&p, &p).unwrap();
            prop_assert!(f >= 0.0);
            prop_assert!((f - p.entropy()).abs() < 1e-9);
        }
    }
}
