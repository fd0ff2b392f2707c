use std::collections::HashMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use crate::error::{Error, Result};
use crate::nn::{model_average, Architecture, AveragingEntry, Dataset, ParamVector};

/// A set function over client indices.
///
/// `subset` is always passed sorted ascending; implementations must return the
/// same value every time the same subset is evaluated.
pub trait CoalitionUtility {
    fn eval(&self, subset: &[usize]) -> Result<f64>;
}

impl<F> CoalitionUtility for F
where
    F: Fn(&[usize]) -> Result<f64>,
{
    fn eval(&self, subset: &[usize]) -> Result<f64> {
        self(subset)
    }
}

/// Wraps a utility and counts calls to `eval`.
pub struct CountingUtility<U> {
    inner: U,
    calls: AtomicUsize,
}

impl<U: CoalitionUtility> CountingUtility<U> {
    pub fn new(inner: U) -> Self {
        CountingUtility {
            inner,
            calls: AtomicUsize::new(0),
        }
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }
}

impl<U: CoalitionUtility> CoalitionUtility for CountingUtility<U> {
    fn eval(&self, subset: &[usize]) -> Result<f64> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        self.inner.eval(subset)
    }
}

/// `U(S) = -L(ModelAverage(S); D_val)`, with `U(empty) = -L(server; D_val)`.
///
/// Values are memoised per subset, so repeated coalitions across sampled
/// permutations cost one forward pass.
pub struct ValidationUtility<'a> {
    arch: &'a Architecture,
    server: &'a ParamVector,
    updates: Vec<AveragingEntry<'a>>,
    validation: &'a Dataset,
    cache: Mutex<HashMap<Vec<usize>, f64>>,
}

impl<'a> ValidationUtility<'a> {
    pub fn new(
        arch: &'a Architecture,
        server: &'a ParamVector,
        updates: Vec<AveragingEntry<'a>>,
        validation: &'a Dataset,
    ) -> Self {
        ValidationUtility {
            arch,
            server,
            updates,
            validation,
            cache: Mutex::new(HashMap::new()),
        }
    }

    pub fn players(&self) -> Vec<usize> {
        let mut p: Vec<usize> = self.updates.iter().map(|e| e.client).collect();
        p.sort_unstable();
        p
    }

    pub fn cached_empty(&self) -> Option<f64> {
        self.cache.lock().unwrap().get(&Vec::new()).copied()
    }

    pub fn cached_grand(&self) -> Option<f64> {
        self.cache.lock().unwrap().get(&self.players()).copied()
    }

    fn compute(&self, subset: &[usize]) -> Result<f64> {
        if subset.is_empty() {
            return Ok(-self.arch.evaluate(self.server, self.validation)?.loss);
        }
        let mut entries = Vec::with_capacity(subset.len());
        for &k in subset {
            let e = self
                .updates
                .iter()
                .find(|e| e.client == k)
                .ok_or_else(|| Error::Logic(format!("client {k} has no update this round")))?;
            entries.push(*e);
        }
        let avg = model_average(&entries)?;
        Ok(-self.arch.evaluate(&avg, self.validation)?.loss)
    }
}

impl CoalitionUtility for ValidationUtility<'_> {
    fn eval(&self, subset: &[usize]) -> Result<f64> {
        if let Some(&v) = self.cache.lock().unwrap().get(subset) {
            return Ok(v);
        }
        let v = self.compute(subset)?;
        self.cache.lock().unwrap().insert(subset.to_vec(), v);
        Ok(v)
    }
}

/// Evaluates `u` on `subset`, attaching the subset to any failure.
pub(crate) fn eval_with_context<U: CoalitionUtility + ?Sized>(u: &U, subset: &[usize]) -> Result<f64> {
    u.eval(subset).map_err(|e| Error::Utility {
        subset: subset.to_vec(),
        source: Box::new(e),
    })
}
