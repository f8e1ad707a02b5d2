//! Time grids for the Volterra solver.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Sorted grid of dimensionless times starting at zero. Uniform grids keep
/// their step so the solver can cache weights per lag.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    nodes: Vec<f64>,
    uniform_step: Option<f64>,
}

impl Grid {
    /// Uniform grid over `[0, tau_max]`. The step is adjusted to the nearest
    /// divisor so that `step * (count - 1) = tau_max` holds exactly in the
    /// grid arithmetic; `tau_max = 0` yields the single node `{0}`.
    pub fn uniform(tau_max: f64, step: f64) -> Result<Grid> {
        if !(tau_max >= 0.0) || !tau_max.is_finite() {
            return Err(Error::InvalidInput(format!("tau_max must be >= 0, got {tau_max}")));
        }
        if tau_max == 0.0 {
            return Ok(Grid {
                nodes: vec![0.0],
                uniform_step: None,
            });
        }
        if !(step > 0.0) || !step.is_finite() {
            return Err(Error::InvalidInput(format!("step must be positive, got {step}")));
        }
        let intervals = (tau_max / step).round().max(1.0);
        if intervals > 2e8 {
            return Err(Error::InvalidInput(format!(
                "grid would need {intervals} intervals; refusing"
            )));
        }
        let count = intervals as usize + 1;
        let h = tau_max / intervals;
        let nodes = (0..count)
            .map(|k| if k + 1 == count { tau_max } else { k as f64 * h })
            .collect();
        Ok(Grid {
            nodes,
            uniform_step: Some(h),
        })
    }

    /// Graded grid from explicit nodes; must start at 0 and increase strictly.
    pub fn graded(nodes: Vec<f64>) -> Result<Grid> {
        if nodes.is_empty() || nodes[0] != 0.0 {
            return Err(Error::InvalidInput("graded grid must start at 0".into()));
        }
        for w in nodes.windows(2) {
            if !(w[1] > w[0]) || !w[1].is_finite() {
                return Err(Error::InvalidInput("graded grid nodes must increase strictly".into()));
            }
        }
        Ok(Grid {
            nodes,
            uniform_step: None,
        })
    }

    /// Geometric grading: dense uniform head `[0, split]` with `head_step`,
    /// then a coarser uniform tail up to `tau_max`.
    pub fn two_segment(split: f64, head_step: f64, tau_max: f64, tail_step: f64) -> Result<Grid> {
        if !(split > 0.0 && tau_max > split) {
            return Err(Error::InvalidInput("need 0 < split < tau_max".into()));
        }
        let head = Grid::uniform(split, head_step)?;
        let tail_n = ((tau_max - split) / tail_step).round().max(1.0) as usize;
        let h = (tau_max - split) / tail_n as f64;
        let mut nodes = head.nodes;
        for k in 1..=tail_n {
            nodes.push(split + k as f64 * h);
        }
        Grid::graded(nodes)
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn tau_max(&self) -> f64 {
        *self.nodes.last().unwrap()
    }

    pub fn uniform_step(&self) -> Option<f64> {
        self.uniform_step
    }

    pub fn first_step(&self) -> Option<f64> {
        (self.nodes.len() > 1).then(|| self.nodes[1] - self.nodes[0])
    }

    pub fn max_step(&self) -> f64 {
        self.nodes
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(0.0, f64::max)
    }

    /// Same span with midpoints inserted in every interval.
    pub fn halved(&self) -> Grid {
        if let Some(h) = self.uniform_step {
            return Grid::uniform(self.tau_max(), h * 0.5).expect("halving a valid grid");
        }
        if self.nodes.len() == 1 {
            return self.clone();
        }
        let mut nodes = Vec::with_capacity(self.nodes.len() * 2 - 1);
        for w in self.nodes.windows(2) {
            nodes.push(w[0]);
            nodes.push(0.5 * (w[0] + w[1]));
        }
        nodes.push(*self.nodes.last().unwrap());
        Grid {
            nodes,
            uniform_step: None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_grid_invariants() {
        let g = Grid::uniform(40.0, 1e-3).unwrap();
        assert_eq!(g.len(), 40001);
        assert_eq!(g.tau_max(), 40.0);
        let h = g.uniform_step().unwrap();
        assert!((h * (g.len() - 1) as f64 - 40.0).abs() < 1e-12);
        let g0 = Grid::uniform(0.0, 1.0).unwrap();
        assert_eq!(g0.nodes(), &[0.0]);
    }

    #[test]
    fn graded_validation_and_halving() {
        assert!(Grid::graded(vec![0.1, 0.2]).is_err());
        assert!(Grid::graded(vec![0.0, 0.2, 0.2]).is_err());
        let g = Grid::two_segment(0.1, 0.01, 1.0, 0.1).unwrap();
        assert_eq!(g.nodes()[0], 0.0);
        assert_eq!(g.tau_max(), 1.0);
        let gh = g.halved();
        assert_eq!(gh.len(), g.len() * 2 - 1);
        // original nodes sit at even indices
        for (i, &t) in g.nodes().iter().enumerate() {
            assert_eq!(gh.nodes()[2 * i], t);
        }
        let u = Grid::uniform(1.0, 0.25).unwrap().halved();
        assert_eq!(u.len(), 9);
    }
}
