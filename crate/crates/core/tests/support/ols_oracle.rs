//! Least squares through the raw normal equations `X'X b = X'y`, solved by
//! Gaussian elimination with partial pivoting. Deliberately unlike the
//! centered-sum formulas in the library.

#![allow(dead_code)]

pub fn normal_equations(points: &[(f64, f64)]) -> (f64, f64) {
    let mut m = [[0.0f64; 3]; 2];
    for &(x, y) in points {
        let row = [1.0, x];
        for i in 0..2 {
            for j in 0..2 {
                m[i][j] += row[i] * row[j];
            }
            m[i][2] += row[i] * y;
        }
    }
    if m[1][0].abs() > m[0][0].abs() {
        m.swap(0, 1);
    }
    let f = m[1][0] / m[0][0];
    for j in 0..3 {
        m[1][j] -= f * m[0][j];
    }
    let slope = m[1][2] / m[1][1];
    let intercept = (m[0][2] - m[0][1] * slope) / m[0][0];
    (intercept, slope)
}
