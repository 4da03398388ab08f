use alloc::vec::Vec;

use crate::hilbert::C64;

/// Observables recorded at one output time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    /// `<a†a>`
    pub nbar_a: f64,
    /// `<b†b>`
    pub nbar_b: f64,
    /// `<a†b>`
    pub cross: C64,
    /// `|tr R − 1|`; zero for moment propagation.
    pub trace_error: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub samples: Vec<Sample>,
}

impl Trajectory {
    pub fn with_capacity(n: usize) -> Self {
        Self { times: Vec::with_capacity(n), samples: Vec::with_capacity(n) }
    }

    pub fn push(&mut self, t: f64, sample: Sample) {
        self.times.push(t);
        self.samples.push(sample);
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, &Sample)> {
        self.times.iter().copied().zip(self.samples.iter())
    }

    pub fn nbar_a(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.nbar_a).collect()
    }

    pub fn nbar_b(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.nbar_b).collect()
    }

    pub fn last(&self) -> Option<(f64, &Sample)> {
        Some((*self.times.last()?, self.samples.last()?))
    }

    pub fn max_trace_error(&self) -> f64 {
        self.samples.iter().map(|s| s.trace_error).fold(0.0, f64::max)
    }
}
