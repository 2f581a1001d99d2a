//! Product-form basis inverse: `B^-1 = E_k^-1 ... E_1^-1` where each eta
//! matrix differs from the identity in a single column.

const DROP_TOL: f64 = 1e-14;

#[derive(Debug, Clone)]
struct Eta {
    row: usize,
    pivot: f64,
    index: Vec<usize>,
    value: Vec<f64>,
}

#[derive(Debug, Clone, Default)]
pub(crate) struct EtaFile {
    etas: Vec<Eta>,
}

impl EtaFile {
    pub fn clear(&mut self) {
        self.etas.clear();
    }

    /// Appends the eta for pivoting column `alpha` (already `B^-1 a`) into `row`.
    pub fn push(&mut self, row: usize, alpha: &[f64]) {
        let mut index = Vec::new();
        let mut value = Vec::new();
        for (i, &v) in alpha.iter().enumerate() {
            if i != row && v.abs() > DROP_TOL {
                index.push(i);
                value.push(v);
            }
        }
        self.etas.push(Eta {
            row,
            pivot: alpha[row],
            index,
            value,
        });
    }

    /// Pivot on a column that is a scaled unit vector at `row`.
    pub fn push_unit(&mut self, row: usize, pivot: f64) {
        if pivot != 1.0 {
            self.etas.push(Eta {
                row,
                pivot,
                index: Vec::new(),
                value: Vec::new(),
            });
        }
    }

    /// `x <- B^-1 x`
    pub fn ftran(&self, x: &mut [f64]) {
        for e in &self.etas {
            let xr = x[e.row];
            if xr == 0.0 {
                continue;
            }
            let t = xr / e.pivot;
            x[e.row] = t;
            for (&i, &v) in e.index.iter().zip(&e.value) {
                x[i] -= v * t;
            }
        }
    }

    /// `y^T <- y^T B^-1`
    pub fn btran(&self, y: &mut [f64]) {
        for e in self.etas.iter().rev() {
            let mut s = y[e.row];
            for (&i, &v) in e.index.iter().zip(&e.value) {
                s -= v * y[i];
            }
            y[e.row] = s / e.pivot;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ftran_and_btran_invert_a_two_by_two() {
        // B = [[2, 1], [1, 3]] built from identity by two column pivots.
        let mut f = EtaFile::default();
        let mut a0 = vec![2.0, 1.0];
        f.ftran(&mut a0);
        f.push(0, &a0);
        let mut a1 = vec![1.0, 3.0];
        f.ftran(&mut a1);
        f.push(1, &a1);

        let mut x = vec![3.0, 4.0];
        f.ftran(&mut x);
        assert!((2.0 * x[0] + x[1] - 3.0).abs() < 1e-12);
        assert!((x[0] + 3.0 * x[1] - 4.0).abs() < 1e-12);

        let mut y = vec![1.0, 1.0];
        f.btran(&mut y);
        // y^T B = (1, 1)
        assert!((2.0 * y[0] + y[1] - 1.0).abs() < 1e-12);
        assert!((y[0] + 3.0 * y[1] - 1.0).abs() < 1e-12);
    }
}
