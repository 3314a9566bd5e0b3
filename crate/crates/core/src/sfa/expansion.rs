use nalgebra::DMatrix;

/// Length of the degree-1-and-2 monomial expansion of an `n`-vector.
pub fn expansion_dim(n: usize) -> usize {
    n + n * (n + 1) / 2
}

/// `[x_1, …, x_n, x_1², x_1x_2, …, x_1x_n, x_2², …, x_n²]`.
pub fn expand(x: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(expansion_dim(x.len()));
    expand_into(x, &mut out);
    out
}

fn expand_into(x: &[f64], out: &mut Vec<f64>) {
    out.extend_from_slice(x);
    for (i, &xi) in x.iter().enumerate() {
        out.extend(x[i..].iter().map(|&xj| xi * xj));
    }
}

/// Row-wise expansion of a `K × n` sample matrix into `K × M`.
pub fn expand_rows(x: &DMatrix<f64>) -> DMatrix<f64> {
    let (k, n) = x.shape();
    let m = expansion_dim(n);
    let mut out = DMatrix::zeros(k, m);
    let mut row = Vec::with_capacity(n);
    let mut buf = Vec::with_capacity(m);
    for t in 0..k {
        row.clear();
        row.extend(x.row(t).iter().copied());
        buf.clear();
        expand_into(&row, &mut buf);
        for (c, &val) in buf.iter().enumerate() {
            out[(t, c)] = val;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dims_from_rank_table() {
        let ms = [2, 4, 8, 10, 12, 20, 30];
        let expected = [5, 14, 44, 65, 90, 230, 495];
        for (m, e) in ms.iter().zip(expected) {
            assert_eq!(expansion_dim(*m), e);
        }
    }

    #[test]
    fn zero_vector() {
        assert_eq!(expand(&[0.0, 0.0]), vec![0.0; 5]);
    }

    #[test]
    fn pair_pattern() {
        let (a, b) = (1.5, -2.0);
        assert_eq!(expand(&[a, b]), vec![a, b, a * a, a * b, b * b]);
    }

    #[test]
    fn three_components() {
        assert_eq!(
            expand(&[1.0, 2.0, 3.0]),
            vec![1.0, 2.0, 3.0, 1.0, 2.0, 3.0, 4.0, 6.0, 9.0]
        );
    }

    #[test]
    fn rows_match_single() {
        let x = DMatrix::from_row_slice(2, 3, &[1.0, 2.0, 3.0, -1.0, 0.5, 4.0]);
        let v = expand_rows(&x);
        assert_eq!(v.shape(), (2, 9));
        for t in 0..2 {
            let single = expand(&x.row(t).iter().copied().collect::<Vec<_>>());
            assert_eq!(v.row(t).iter().copied().collect::<Vec<_>>(), single);
        }
    }
}
