use rayon::prelude::*;

/// A symmetric linear map applied without storing a matrix.
pub trait LinearOperator: Sync {
    fn dim(&self) -> usize;

    /// Writes `A x` into `out`.
    fn apply(&self, x: &[f64], out: &mut [f64]);
}

/// The identity map, mostly useful in tests.
#[derive(Debug, Clone, Copy)]
pub struct Identity(pub usize);

impl LinearOperator for Identity {
    fn dim(&self) -> usize {
        self.0
    }

    fn apply(&self, x: &[f64], out: &mut [f64]) {
        out.copy_from_slice(x);
    }
}

/// Diagonal operator.
#[derive(Debug, Clone)]
pub struct Diagonal(pub Vec<f64>);

impl LinearOperator for Diagonal {
    fn dim(&self) -> usize {
        self.0.len()
    }

    fn apply(&self, x: &[f64], out: &mut [f64]) {
        for ((o, d), v) in out.iter_mut().zip(&self.0).zip(x) {
            *o = d * v;
        }
    }
}

/// `A = Id + lambda * D^T W D` on a `width x height` grid, where `D` stacks
/// forward differences along rows and columns and `W` holds one weight per
/// grid edge. No differences are taken across the border.
#[derive(Debug, Clone)]
pub struct SmoothnessSystem {
    pub width: usize,
    pub height: usize,
    pub lambda: f64,
    /// Weights of horizontal edges `(x, y) - (x + 1, y)`, indexed `y * (width - 1) + x`.
    pub horizontal: Vec<f64>,
    /// Weights of vertical edges `(x, y) - (x, y + 1)`, indexed `y * width + x`.
    pub vertical: Vec<f64>,
    pub rhs: Vec<f64>,
}

impl SmoothnessSystem {
    fn h_weight(&self, x: usize, y: usize) -> f64 {
        self.horizontal[y * (self.width - 1) + x]
    }

    fn v_weight(&self, x: usize, y: usize) -> f64 {
        self.vertical[y * self.width + x]
    }

    /// Main diagonal of `A`.
    pub fn diagonal(&self) -> Vec<f64> {
        let (w, h) = (self.width, self.height);
        let mut d = vec![1.0; w * h];
        for y in 0..h {
            for x in 0..w {
                let mut s = 0.0;
                if x > 0 {
                    s += self.h_weight(x - 1, y);
                }
                if x + 1 < w {
                    s += self.h_weight(x, y);
                }
                if y > 0 {
                    s += self.v_weight(x, y - 1);
                }
                if y + 1 < h {
                    s += self.v_weight(x, y);
                }
                d[y * w + x] += self.lambda * s;
            }
        }
        d
    }
}

impl LinearOperator for SmoothnessSystem {
    fn dim(&self) -> usize {
        self.width * self.height
    }

    fn apply(&self, x: &[f64], out: &mut [f64]) {
        let (w, h) = (self.width, self.height);
        out.par_chunks_mut(w).enumerate().for_each(|(y, row)| {
            for (cx, o) in row.iter_mut().enumerate() {
                let i = y * w + cx;
                let xi = x[i];
                let mut acc = 0.0;
                if cx > 0 {
                    acc += self.h_weight(cx - 1, y) * (xi - x[i - 1]);
                }
                if cx + 1 < w {
                    acc += self.h_weight(cx, y) * (xi - x[i + 1]);
                }
                if y > 0 {
                    acc += self.v_weight(cx, y - 1) * (xi - x[i - w]);
                }
                if y + 1 < h {
                    acc += self.v_weight(cx, y) * (xi - x[i + w]);
                }
                *o = xi + self.lambda * acc;
            }
        });
    }
}
