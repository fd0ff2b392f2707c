use rand::distr::{Distribution, OpenClosed01};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Gamma, Open01};

use crate::error::{Error, Result};
use crate::nn::Dataset;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SizeLaw {
    /// Fractions drawn from density `3x^2` on (0, 1), then normalised.
    PowerLaw,
    Uniform,
}

/// How a client's label proportions turn into concrete samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelSampler {
    /// Each sample's label is an independent draw from the client's proportions.
    #[default]
    Multinomial,
    /// Label counts are the proportions rounded by largest remainder.
    Proportional,
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PartitionSpec {
    pub dirichlet_alpha: f64,
    pub num_clients: usize,
    pub size_law: SizeLaw,
    #[serde(default)]
    pub sampler: LabelSampler,
}

impl PartitionSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.dirichlet_alpha > 0.0 && self.dirichlet_alpha.is_finite()) {
            return Err(Error::Config(format!(
                "Dirichlet concentration must be positive, got {}",
                self.dirichlet_alpha
            )));
        }
        if self.num_clients == 0 {
            return Err(Error::Config("need at least one client".into()));
        }
        Ok(())
    }
}

/// One client's private data plus its heterogeneity attributes.
#[derive(Debug, Clone, PartialEq)]
pub struct ClientShard {
    pub client: usize,
    pub dataset: Dataset,
    /// Row indices into the pooled training data, in draw order.
    pub indices: Vec<usize>,
    pub is_straggler: bool,
    pub sigma: f64,
}

impl ClientShard {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

/// Inverse CDF of the density `3x^2` on (0, 1): `x = u^(1/3)`.
pub fn power_law_inverse_cdf(u: f64) -> f64 {
    u.cbrt()
}

/// Normalised power-law fractions `q_k`; all strictly positive.
pub fn power_law_fractions<R: Rng + ?Sized>(num_clients: usize, rng: &mut R) -> Vec<f64> {
    let xs: Vec<f64> = (0..num_clients)
        .map(|_| power_law_inverse_cdf(OpenClosed01.sample(rng)))
        .collect();
    let total: f64 = xs.iter().sum();
    xs.into_iter().map(|x| x / total).collect()
}

/// Rounds `fractions * total` to integers summing to `total` (largest
/// remainder), then lifts any zero to one by taking from the largest count.
pub fn round_sizes(fractions: &[f64], total: usize) -> Vec<usize> {
    let raw: Vec<f64> = fractions.iter().map(|q| q * total as f64).collect();
    let mut sizes: Vec<usize> = raw.iter().map(|r| r.floor() as usize).collect();
    let assigned: usize = sizes.iter().sum();
    let mut order: Vec<usize> = (0..raw.len()).collect();
    order.sort_by(|&a, &b| {
        let fa = raw[a] - raw[a].floor();
        let fb = raw[b] - raw[b].floor();
        fb.total_cmp(&fa).then(a.cmp(&b))
    });
    for &i in order.iter().take(total.saturating_sub(assigned)) {
        sizes[i] += 1;
    }
    if total >= sizes.len() {
        while let Some(z) = sizes.iter().position(|&s| s == 0) {
            let donor = (0..sizes.len()).max_by(|&a, &b| sizes[a].cmp(&sizes[b]).then(b.cmp(&a))).unwrap();
            sizes[donor] -= 1;
            sizes[z] += 1;
        }
    }
    sizes
}

/// Client sizes `n_k = round(q_k * n_train)` with `q_k` power-law distributed.
pub fn sample_power_law_sizes<R: Rng + ?Sized>(num_clients: usize, n_train: usize, rng: &mut R) -> Result<Vec<usize>> {
    if num_clients == 0 {
        return Err(Error::Input("need at least one client".into()));
    }
    if n_train < num_clients {
        return Err(Error::Input(format!(
            "{n_train} training samples cannot give each of {num_clients} clients one sample"
        )));
    }
    Ok(round_sizes(&power_law_fractions(num_clients, rng), n_train))
}

pub fn uniform_sizes(num_clients: usize, n_train: usize) -> Result<Vec<usize>> {
    if num_clients == 0 || n_train < num_clients {
        return Err(Error::Input(format!(
            "{n_train} training samples cannot give each of {num_clients} clients one sample"
        )));
    }
    Ok(round_sizes(&vec![1.0 / num_clients as f64; num_clients], n_train))
}

/// Draws from `Dirichlet(alpha * 1_k)` in log space.
///
/// Uses `Gamma(a) = Gamma(a + 1) * U^(1/a)`, so tiny concentrations such as
/// 1e-4 (where plain gamma draws underflow to zero) still give a valid point
/// on the simplex.
pub fn sample_dirichlet<R: Rng + ?Sized>(alpha: f64, k: usize, rng: &mut R) -> Vec<f64> {
    let gamma = Gamma::new(alpha + 1.0, 1.0).expect("alpha + 1 is a valid shape");
    let logs: Vec<f64> = (0..k)
        .map(|_| {
            let g: f64 = gamma.sample(rng);
            let u: f64 = Open01.sample(rng);
            g.ln() + u.ln() / alpha
        })
        .collect();
    let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logs.iter().map(|l| (l - max).exp()).collect();
    let z: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / z).collect()
}

fn categorical<R: Rng + ?Sized>(p: &[f64], rng: &mut R) -> usize {
    let target: f64 = rng.random();
    let mut acc = 0.0;
    for (i, &pi) in p.iter().enumerate() {
        acc += pi;
        if target < acc {
            return i;
        }
    }
    p.iter().rposition(|&pi| pi > 0.0).unwrap_or(p.len() - 1)
}

struct Pools {
    by_label: Vec<Vec<usize>>,
    remaining: usize,
}

impl Pools {
    /// Pops from `label`'s pool, or from a uniformly chosen remaining sample
    /// when that pool is dry.
    fn take<R: Rng + ?Sized>(&mut self, label: usize, rng: &mut R) -> usize {
        self.remaining -= 1;
        if let Some(i) = self.by_label[label].pop() {
            return i;
        }
        let mut r = rng.random_range(0..=self.remaining);
        for pool in &mut self.by_label {
            if r < pool.len() {
                return pool.swap_remove(r);
            }
            r -= pool.len();
        }
        unreachable!("remaining count tracks pool sizes")
    }
}

/// Splits `data` into disjoint label-skewed shards of the requested sizes.
pub fn dirichlet_partition<R: Rng + ?Sized>(
    data: &Dataset,
    spec: &PartitionSpec,
    sizes: &[usize],
    rng: &mut R,
) -> Result<Vec<ClientShard>> {
    spec.validate()?;
    if sizes.len() != spec.num_clients {
        return Err(Error::Config(format!(
            "{} sizes for {} clients",
            sizes.len(),
            spec.num_clients
        )));
    }
    let requested: usize = sizes.iter().sum();
    if requested > data.len() {
        return Err(Error::Input(format!(
            "shards request {requested} samples but only {} are available",
            data.len()
        )));
    }

    let classes = data.num_classes();
    let mut by_label = vec![Vec::new(); classes];
    for i in 0..data.len() {
        by_label[data.label(i)].push(i);
    }
    for pool in &mut by_label {
        pool.shuffle(rng);
    }
    let mut pools = Pools {
        by_label,
        remaining: data.len(),
    };

    let mut shards = Vec::with_capacity(sizes.len());
    for (client, &n_k) in sizes.iter().enumerate() {
        let p = sample_dirichlet(spec.dirichlet_alpha, classes, rng);
        let mut indices = Vec::with_capacity(n_k);
        match spec.sampler {
            LabelSampler::Multinomial => {
                for _ in 0..n_k {
                    let label = categorical(&p, rng);
                    indices.push(pools.take(label, rng));
                }
            }
            LabelSampler::Proportional => {
                let mut counts = vec![0usize; classes];
                let raw: Vec<f64> = p.iter().map(|q| q * n_k as f64).collect();
                let mut assigned = 0;
                for (c, r) in counts.iter_mut().zip(&raw) {
                    *c = r.floor() as usize;
                    assigned += *c;
                }
                let mut order: Vec<usize> = (0..classes).collect();
                order.sort_by(|&a, &b| (raw[b] - raw[b].floor()).total_cmp(&(raw[a] - raw[a].floor())).then(a.cmp(&b)));
                for &c in order.iter().take(n_k - assigned) {
                    counts[c] += 1;
                }
                for (label, &count) in counts.iter().enumerate() {
                    for _ in 0..count {
                        indices.push(pools.take(label, rng));
                    }
                }
            }
        }
        shards.push(ClientShard {
            client,
            dataset: data.subset(&indices),
            indices,
            is_straggler: false,
            sigma: 0.0,
        });
    }
    Ok(shards)
}
