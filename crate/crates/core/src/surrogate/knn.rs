use serde::{Deserialize, Serialize};

/// k-nearest-neighbour regressor over stored (standardized) points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KNearest {
    pub k: usize,
    pub points: Vec<Vec<f64>>,
    pub targets: Vec<f64>,
}

impl KNearest {
    pub fn new(k: usize, points: Vec<Vec<f64>>, targets: Vec<f64>) -> Self {
        KNearest { k, points, targets }
    }

    /// Mean target of the `k` closest points; distance ties go to the
    /// earlier point.
    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut by_distance: Vec<(f64, usize)> = self
            .points
            .iter()
            .enumerate()
            .map(|(i, p)| (p.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum(), i))
            .collect();
        by_distance.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let k = self.k.min(by_distance.len());
        by_distance[..k].iter().map(|&(_, i)| self.targets[i]).sum::<f64>() / k as f64
    }
}
