//! Monte Carlo studies: coverage of the confidence sets and agreement of
//! finite-sample statistics with their limit laws.

use rand::Rng;
use rand_distr::{Binomial, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::confidence::{confidence_set, map_region, project_onto, ConfidenceRegion, RegionJson};
use crate::error::{Error, Result};
use crate::geometry::{hausdorff, min_norm_point, SphereGrid};
use crate::limits::{distance_statistic, sample_unique_limit, DirectionalLimit, GSampler};
use crate::linalg::{psd_factor, Matrix};
use crate::lp_core::{optimal_vertices, LpJson, Polytope, StandardLp};
use crate::rng::{stream, StreamRng, DEFAULT_SEED};
use crate::simplex::solve;
use crate::stats::{ks_two_sample, normal_two_sided_quantile};

/// How the estimate `bₙ` of `b` is drawn.
#[derive(Debug, Clone, PartialEq)]
pub enum BSampler {
    /// `n·r̂ ~ Mult(n, p)` written into `rows`; other rows keep their true values.
    Multinomial { p: Vec<f64>, rows: Vec<usize> },
    /// `bₙ = b + rₙ⁻¹ L z` with `LLᵀ = cov` and `z` standard normal.
    Gaussian { cov: Matrix<f64> },
}

impl BSampler {
    /// Covariance of the limit `𝔾` of `rₙ(bₙ − b)` when `rₙ = √n`.
    pub fn limit_covariance(&self, k: usize) -> Matrix<f64> {
        match self {
            BSampler::Gaussian { cov } => cov.clone(),
            BSampler::Multinomial { p, rows } => {
                let mut cov = Matrix::zeros(k, k);
                for (a, &ra) in rows.iter().enumerate() {
                    for (b, &rb) in rows.iter().enumerate() {
                        cov[(ra, rb)] = if a == b { p[a] * (1.0 - p[a]) } else { -p[a] * p[b] };
                    }
                }
                cov
            }
        }
    }

    fn check(&self, k: usize) -> Result<()> {
        match self {
            BSampler::Multinomial { p, rows } => {
                if p.len() != rows.len() || rows.iter().any(|&r| r >= k) {
                    return Err(Error::Dimension("multinomial rows do not match the program".into()));
                }
                let total: f64 = p.iter().sum();
                if p.iter().any(|&v| v < 0.0) || (total - 1.0).abs() > 1e-9 {
                    return Err(Error::InvalidInput("multinomial probabilities must be nonnegative and sum to 1".into()));
                }
            }
            BSampler::Gaussian { cov } => {
                if cov.nrows() != k || cov.ncols() != k {
                    return Err(Error::Dimension(format!("covariance must be {k}×{k}")));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub name: String,
    /// The program at the true right-hand side.
    pub lp: StandardLp<f64>,
    pub truth_b: Vec<f64>,
    /// `rₙ = n^rate_exponent`.
    pub rate_exponent: f64,
    pub b_sampler: BSampler,
    pub limit_law: GSampler<f64>,
    pub region: ConfidenceRegion<f64>,
    pub n_values: Vec<u64>,
    pub replicates: usize,
    pub seed: u64,
}

impl ExperimentConfig {
    pub fn rate(&self, n: u64) -> f64 {
        (n as f64).powf(self.rate_exponent)
    }

    /// Replaces the seed of both the finite-sample draws and the limit law.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self.limit_law.seed = limit_seed(seed);
        self
    }

    /// `bₙ` for replicate stream `rng`.
    pub fn sample_b(&self, n: u64, rng: &mut StreamRng) -> Result<Vec<f64>> {
        let mut b = self.truth_b.clone();
        match &self.b_sampler {
            BSampler::Multinomial { p, rows } => {
                let mut left = n;
                let mut mass = 1.0;
                for (j, (&pj, &row)) in p.iter().zip(rows).enumerate() {
                    let count = if j + 1 == p.len() || mass <= 0.0 {
                        left
                    } else {
                        let q = (pj / mass).clamp(0.0, 1.0);
                        let d = Binomial::new(left, q).map_err(|e| Error::InvalidInput(e.to_string()))?;
                        rng.sample(d)
                    };
                    b[row] = count as f64 / n as f64;
                    left -= count;
                    mass -= pj;
                }
            }
            BSampler::Gaussian { cov } => {
                let l = psd_factor(cov, 1e-12 * cov.max_abs().max(1.0))?;
                let z: Vec<f64> = (0..l.ncols()).map(|_| rng.sample(StandardNormal)).collect();
                let r = self.rate(n);
                for (bi, gi) in b.iter_mut().zip(l.mul_vec(&z)) {
                    *bi += gi / r;
                }
            }
        }
        Ok(b)
    }
}

fn limit_seed(seed: u64) -> u64 {
    seed ^ 0x11A1_7000_0000_0001
}

/// The 2×2 transport instance with both marginals `(½, ½)` and cost
/// `c = (0, 1, 1, 0)`; row marginals are estimated from multinomial counts.
pub fn build_ot_2x2() -> Result<ExperimentConfig> {
    let truth_b = vec![0.5, 0.5, 0.5];
    let lp = StandardLp::from_rows(
        &[vec![1.0, 1.0, 0.0, 0.0], vec![0.0, 0.0, 1.0, 1.0], vec![1.0, 0.0, 1.0, 0.0]],
        &truth_b,
        &[0.0, 1.0, 1.0, 0.0],
    )?;
    let z = normal_two_sided_quantile(0.95)?;
    Ok(ExperimentConfig {
        name: "ot2x2".into(),
        lp,
        truth_b,
        rate_exponent: 0.5,
        b_sampler: BSampler::Multinomial { p: vec![0.5, 0.5], rows: vec![0, 1] },
        limit_law: GSampler::multinomial_clt(vec![0.5, 0.5], 3, limit_seed(DEFAULT_SEED))?,
        region: ConfidenceRegion::segment(vec![1.0, -1.0, 0.0], z / 2.0, 0.95)?,
        n_values: vec![1, 3, 5, 10, 50, 100, 500, 10_000],
        replicates: 1000,
        seed: DEFAULT_SEED,
    })
}

/// Arcs `(from, to, capacity, cost)` of the five-node network.
pub const MCF_ARCS: [(usize, usize, f64, f64); 9] = [
    (1, 2, 15.0, 4.0),
    (1, 3, 8.0, 4.0),
    (2, 3, 50.0, 2.0),
    (2, 4, 4.0, 2.0),
    (2, 5, 10.0, 6.0),
    (3, 4, 15.0, 1.0),
    (3, 5, 4.0, 3.0),
    (4, 5, 50.0, 2.0),
    (5, 3, 4.0, 1.0),
];

/// Supplies of nodes 1, 2, 4 and 5; the balance row of node 3 is dropped.
pub const MCF_SUPPLY: [f64; 4] = [20.0, 0.0, -5.0, -15.0];

/// Arc flows of the two optimal vertices, in the order of [`MCF_ARCS`].
pub const MCF_SOLUTIONS: [[f64; 9]; 2] = [
    [12.0, 8.0, 8.0, 4.0, 0.0, 15.0, 1.0, 14.0, 0.0],
    [12.0, 8.0, 8.0, 4.0, 0.0, 12.0, 4.0, 11.0, 0.0],
];

/// Full `(x, y)` vertex for arc flows `x`, with `y = u − x`.
pub fn mcf_vertex(flows: &[f64; 9]) -> Vec<f64> {
    let mut v = flows.to_vec();
    v.extend(MCF_ARCS.iter().zip(flows).map(|(a, x)| a.2 - x));
    v
}

/// Min-cost flow with capacity slacks `x + y = u`, supplies estimated with
/// Gaussian noise of covariance `diag(4, 1, 1, 3)`.
pub fn build_min_cost_flow() -> Result<ExperimentConfig> {
    let nodes = [1, 2, 4, 5];
    let (k, m) = (nodes.len() + MCF_ARCS.len(), 2 * MCF_ARCS.len());
    let mut a = Matrix::zeros(k, m);
    for (row, &node) in nodes.iter().enumerate() {
        for (j, &(from, to, _, _)) in MCF_ARCS.iter().enumerate() {
            if from == node {
                a[(row, j)] = 1.0;
            } else if to == node {
                a[(row, j)] = -1.0;
            }
        }
    }
    for j in 0..MCF_ARCS.len() {
        a[(nodes.len() + j, j)] = 1.0;
        a[(nodes.len() + j, MCF_ARCS.len() + j)] = 1.0;
    }
    let mut truth_b = MCF_SUPPLY.to_vec();
    truth_b.extend(MCF_ARCS.iter().map(|a| a.2));
    let mut c: Vec<f64> = MCF_ARCS.iter().map(|a| a.3).collect();
    c.resize(m, 0.0);
    let lp = StandardLp::new(a, truth_b.clone(), c)?;

    let optimal = optimal_vertices(&lp)?;
    let expected: Vec<Vec<f64>> = MCF_SOLUTIONS.iter().map(mcf_vertex).collect();
    let same = |u: &[f64], v: &[f64]| u.iter().zip(v).all(|(a, b)| (a - b).abs() <= 1e-9);
    let all_listed = optimal.polytope.len() == expected.len()
        && expected.iter().all(|e| optimal.polytope.vertices().iter().any(|v| same(v, e)));
    if !all_listed {
        return Err(Error::InstanceMismatch(format!(
            "expected exactly the two listed optimal vertices, enumeration found {}",
            optimal.polytope.len()
        )));
    }

    let g0 = [4.0, 1.0, 1.0, 3.0];
    let mut cov = Matrix::zeros(k, k);
    for (i, &v) in g0.iter().enumerate() {
        cov[(i, i)] = v;
    }
    Ok(ExperimentConfig {
        name: "mcf".into(),
        lp,
        truth_b,
        rate_exponent: 0.5,
        b_sampler: BSampler::Gaussian { cov: cov.clone() },
        limit_law: GSampler::gaussian(&cov, limit_seed(DEFAULT_SEED))?,
        region: ConfidenceRegion::ellipsoid_on_rows(Matrix::from_diagonal(&g0), 0.95, (0..4).collect(), k)?,
        n_values: vec![10, 50, 100, 500, 1000, 10_000],
        replicates: 1000,
        seed: DEFAULT_SEED,
    })
}

/// Experiment description as read from JSON.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigJson {
    pub name: String,
    pub lp: LpJson,
    #[serde(default = "half")]
    pub rate_exponent: f64,
    pub b_sampler: BSamplerJson,
    pub region: RegionJson,
    pub n_values: Vec<u64>,
    #[serde(default = "thousand")]
    pub replicates: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

fn half() -> f64 {
    0.5
}

fn thousand() -> usize {
    1000
}

fn default_seed() -> u64 {
    DEFAULT_SEED
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum BSamplerJson {
    Multinomial { p: Vec<f64>, rows: Vec<usize> },
    Gaussian { cov: Vec<Vec<f64>> },
}

impl ConfigJson {
    pub fn to_config(&self) -> Result<ExperimentConfig> {
        let lp: StandardLp<f64> = self.lp.to_lp()?;
        let b_sampler = match &self.b_sampler {
            BSamplerJson::Multinomial { p, rows } => BSampler::Multinomial { p: p.clone(), rows: rows.clone() },
            BSamplerJson::Gaussian { cov } => BSampler::Gaussian { cov: Matrix::from_rows(cov)? },
        };
        b_sampler.check(lp.k())?;
        let region = self.region.to_region()?;
        if region.dim() != lp.k() {
            return Err(Error::Dimension(format!("region has dimension {} but the program has {} rows", region.dim(), lp.k())));
        }
        let limit_law = GSampler::gaussian(&b_sampler.limit_covariance(lp.k()), limit_seed(self.seed))?;
        Ok(ExperimentConfig {
            name: self.name.clone(),
            truth_b: lp.b().to_vec(),
            lp,
            rate_exponent: self.rate_exponent,
            b_sampler,
            limit_law,
            region,
            n_values: self.n_values.clone(),
            replicates: self.replicates,
            seed: self.seed,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoverageRow {
    pub n: u64,
    pub replicates: usize,
    pub covered: usize,
    pub coverage: f64,
    pub std_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplicateLog {
    pub n: u64,
    pub replicate: usize,
    pub covered: bool,
    /// Indices of the true optimal vertices contained in the set.
    pub targets: Vec<usize>,
    pub basis: Vec<usize>,
    /// Coordinates whose confidence interval is a single point.
    pub singletons: Vec<usize>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoverageReport {
    pub rows: Vec<CoverageRow>,
    pub log: Vec<ReplicateLog>,
}

impl CoverageReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("n,replicates,covered,coverage,std_error\n");
        for r in &self.rows {
            s += &format!("{},{},{},{},{}\n", r.n, r.replicates, r.covered, r.coverage, r.std_error);
        }
        s
    }

    pub fn log_csv(&self) -> String {
        let mut s = String::from("n,replicate,covered,targets,basis,singletons,error\n");
        let join = |v: &[usize]| v.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(" ");
        for r in &self.log {
            s += &format!(
                "{},{},{},{},{},{},{}\n",
                r.n,
                r.replicate,
                r.covered,
                join(&r.targets),
                join(&r.basis),
                join(&r.singletons),
                r.error.as_deref().unwrap_or("").replace(',', ";")
            );
        }
        s
    }

    pub fn row(&self, n: u64) -> Option<&CoverageRow> {
        self.rows.iter().find(|r| r.n == n)
    }
}

fn replicate(config: &ExperimentConfig, targets: &Polytope<f64>, n: u64, rep: usize) -> ReplicateLog {
    let mut log = ReplicateLog { n, replicate: rep, covered: false, targets: vec![], basis: vec![], singletons: vec![], error: None };
    let outcome = (|| -> Result<()> {
        let mut rng = stream(config.seed, &[n, rep as u64]);
        let b = config.sample_b(n, &mut rng)?;
        let lp_n = config.lp.with_rhs(b)?;
        let result = solve(&lp_n)?;
        log.basis = result.basis.indices().to_vec();
        let mapped = map_region(&lp_n, &result.basis, &config.region)?;
        let cs = confidence_set(&result, config.rate(n), mapped)?;
        log.singletons = cs.intervals().iter().enumerate().filter(|(_, iv)| iv.0 == iv.1).map(|(i, _)| i).collect();
        log.targets = (0..targets.len()).filter(|&i| cs.contains(&targets.vertices()[i])).collect();
        let projected = project_onto(targets, &config.lp, &result.basis)?;
        log.covered = !log.targets.is_empty() || cs.contains(&projected);
        Ok(())
    })();
    log.error = outcome.err().map(|e| e.to_string());
    log
}

/// Coverage of `Cₙ` for every `n` in the config; replicates run in parallel
/// and each draws from its own stream, so the report is thread-count independent.
pub fn run_coverage(config: &ExperimentConfig) -> Result<CoverageReport> {
    config.b_sampler.check(config.lp.k())?;
    let targets = optimal_vertices(&config.lp)?.polytope;
    let jobs: Vec<(u64, usize)> = config
        .n_values
        .iter()
        .flat_map(|&n| (0..config.replicates).map(move |r| (n, r)))
        .collect();
    let log: Vec<ReplicateLog> = jobs.into_par_iter().map(|(n, r)| replicate(config, &targets, n, r)).collect();
    let rows = config
        .n_values
        .iter()
        .map(|&n| {
            let covered = log.iter().filter(|l| l.n == n && l.covered).count();
            let p = covered as f64 / config.replicates as f64;
            CoverageRow {
                n,
                replicates: config.replicates,
                covered,
                coverage: p,
                std_error: (p * (1.0 - p) / config.replicates as f64).sqrt(),
            }
        })
        .collect();
    Ok(CoverageReport { rows, log })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimitComparison {
    /// `"distance"` for a unique target, `"hausdorff"` otherwise.
    pub statistic: String,
    pub finite: Vec<f64>,
    pub limit: Vec<f64>,
    pub ks_distance: f64,
}

/// Kolmogorov–Smirnov distance between `rₙ·d(x*(bₙ), x*(b))` over `draws`
/// replicates and its limit law over `draws` draws. For a non-unique target
/// the Hausdorff distance is compared with the grid supremum of `|Ĥ_𝔾|`.
pub fn run_limit_comparison(config: &ExperimentConfig, n: u64, draws: usize, grid_resolution: usize) -> Result<LimitComparison> {
    let truth = optimal_vertices(&config.lp)?.polytope;
    let unique = truth.len() == 1;
    let rate = config.rate(n);
    let finite = (0..draws)
        .into_par_iter()
        .map(|rep| {
            let mut rng = stream(config.seed, &[n, rep as u64]);
            let b = config.sample_b(n, &mut rng)?;
            let set = optimal_vertices(&config.lp.with_rhs(b)?)?.polytope;
            let d = if unique {
                min_norm_point(&set, &truth.vertices()[0], config.lp.tol().wolfe)?.distance
            } else {
                hausdorff(&set, &truth, config.lp.tol().wolfe)?
            };
            Ok(rate * d)
        })
        .collect::<Result<Vec<f64>>>()?;
    let limit = if unique {
        sample_unique_limit(&config.lp, &truth.vertices()[0], &config.limit_law, draws)?
            .iter()
            .map(distance_statistic)
            .collect::<Result<Vec<f64>>>()?
    } else {
        let grid = SphereGrid::new(config.lp.m(), grid_resolution)?;
        let dl = DirectionalLimit::with_targets(&config.lp, truth, grid)?;
        (0..draws as u64)
            .into_par_iter()
            .map(|i| {
                let values = dl.evaluate(&config.limit_law.draw(i))?;
                Ok(values.into_iter().flatten().map(f64::abs).fold(0.0, f64::max))
            })
            .collect::<Result<Vec<f64>>>()?
    };
    Ok(LimitComparison {
        statistic: if unique { "distance" } else { "hausdorff" }.into(),
        ks_distance: ks_two_sample(&finite, &limit)?,
        finite,
        limit,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ot_config_shape() {
        let c = build_ot_2x2().unwrap();
        let opt = optimal_vertices(&c.lp).unwrap();
        assert_eq!(opt.polytope.vertices(), &[vec![0.5, 0.0, 0.0, 0.5]]);
        assert_eq!(opt.bases.len(), 2);
        assert_eq!(c.rate(100), 10.0);
    }

    #[test]
    fn multinomial_draws_are_frequencies() {
        let c = build_ot_2x2().unwrap();
        let mut rng = stream(1, &[7]);
        for _ in 0..20 {
            let b = c.sample_b(7, &mut rng).unwrap();
            assert!(((b[0] + b[1]) - 1.0).abs() < 1e-15);
            assert_eq!((b[0] * 7.0).round(), b[0] * 7.0);
            assert_eq!(b[2], 0.5);
        }
    }

    #[test]
    fn mcf_instance_has_the_two_listed_optima() {
        let c = build_min_cost_flow().unwrap();
        let v: Vec<Vec<f64>> = MCF_SOLUTIONS.iter().map(mcf_vertex).collect();
        assert_eq!(c.lp.objective(&v[0]), c.lp.objective(&v[1]));
        assert_eq!(c.lp.k(), 13);
        assert_eq!(c.lp.m(), 18);
    }

    #[test]
    fn whole_space_region_always_covers() {
        let json = r#"{
            "name": "identity",
            "lp": {"A": [[1, 0], [0, 1]], "b": [100, 100], "c": [1, 1]},
            "b_sampler": {"kind": "gaussian", "cov": [[1, 0], [0, 1]]},
            "region": {"kind": "box", "lower": [-1e300, -1e300], "upper": [1e300, 1e300], "coverage_target": 1.0},
            "n_values": [1, 100],
            "replicates": 50
        }"#;
        let c = serde_json::from_str::<ConfigJson>(json).unwrap().to_config().unwrap();
        let r = run_coverage(&c).unwrap();
        for row in &r.rows {
            assert_eq!(row.coverage, 1.0);
        }
    }

    #[test]
    fn coverage_is_reproducible() {
        let mut c = build_ot_2x2().unwrap();
        c.n_values = vec![10, 100];
        c.replicates = 100;
        let a = run_coverage(&c).unwrap();
        let b = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap().install(|| run_coverage(&c).unwrap());
        assert_eq!(a, b);
        for l in &a.log {
            assert_eq!(l.singletons.len(), 2, "{l:?}");
        }
    }
}
