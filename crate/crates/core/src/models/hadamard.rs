use crate::design::ExactDesign;
use crate::error::{Error, Result};

/// Sylvester Hadamard matrix of order `n` (1, 2 or a power of two).
pub fn hadamard_matrix(n: usize) -> Result<Vec<Vec<f64>>> {
    if n == 0 || !n.is_power_of_two() {
        return Err(Error::UnsupportedOrder(n));
    }
    let mut h = vec![vec![1.0]];
    while h.len() < n {
        let m = h.len();
        let mut next = vec![vec![0.0; 2 * m]; 2 * m];
        for i in 0..m {
            for j in 0..m {
                next[i][j] = h[i][j];
                next[i][j + m] = h[i][j];
                next[i + m][j] = h[i][j];
                next[i + m][j + m] = -h[i][j];
            }
        }
        h = next;
    }
    Ok(h)
}

/// Weighing design whose rows are the rows of a Hadamard matrix.
pub fn hadamard_design(n: usize) -> Result<ExactDesign> {
    ExactDesign::new(hadamard_matrix(n)?)
}
