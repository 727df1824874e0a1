//! Synthetic data generators and the per-worker CSV formats.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, Poisson, StudentT};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::format_decimal;
use crate::linalg::{cholesky, lower_transpose_solve};
use crate::models::{cox_precision, split_ranges, LogisticData};
use crate::rng::{std_normal, uniform};
use crate::scalar::{lit, to_f64, Real};

/// Splits rows into `m` near-equal contiguous chunks.
pub fn split_rows<R: Clone>(rows: &[R], m: usize) -> Vec<Vec<R>> {
    split_ranges(rows.len(), m).into_iter().map(|r| rows[r].to_vec()).collect()
}

/// `y_i ~ N(μ₀, α² I)`.
pub fn gaussian_data<T: Real, R: Rng + ?Sized>(n: usize, mu0: &[T], alpha: T, rng: &mut R) -> Vec<Vec<T>> {
    (0..n).map(|_| mu0.iter().map(|&m| m + alpha * std_normal::<T, _>(rng)).collect()).collect()
}

/// Covariates i.i.d. standard normal with a leading 1, true parameter
/// drawn standard normal, labels `η ~ Bernoulli(σ(ξᵀx*))`.
pub fn logistic_data<T: Real, R: Rng + ?Sized>(n: usize, d: usize, rng: &mut R) -> (LogisticData<T>, Vec<T>) {
    let truth: Vec<T> = (0..d).map(|_| std_normal(rng)).collect();
    let mut xi = Vec::with_capacity(n * d);
    let mut eta = Vec::with_capacity(n);
    for _ in 0..n {
        let row: Vec<T> = (0..d).map(|j| if j == 0 { T::one() } else { std_normal(rng) }).collect();
        let z: T = row.iter().zip(&truth).map(|(&a, &b)| a * b).sum();
        let u: T = uniform(rng);
        eta.push(if u < super::logistic::sigmoid(z) { T::one() } else { T::zero() });
        xi.extend(row);
    }
    (LogisticData { dim: d, xi, eta }, truth)
}

/// Trajectories `y_0 = 0, y_k = c₀ + x₀ y_{k−1} + ε_k`, `ε_k ~ t_ν`.
pub fn ar1_data<T: Real, R: Rng + ?Sized>(n: usize, k: usize, nu: T, x0: T, c0: T, rng: &mut R) -> Result<Vec<Vec<T>>> {
    let t = StudentT::new(to_f64(nu)).map_err(|e| Error::invalid(format!("Student-t: {e}")))?;
    Ok((0..n)
        .map(|_| {
            let mut y = Vec::with_capacity(k + 1);
            y.push(T::zero());
            for step in 1..=k {
                let eps: f64 = t.sample(rng);
                y.push(c0 + x0 * y[step - 1] + lit(eps));
            }
            y
        })
        .collect())
}

/// Latent field `x ~ N(0, P⁻¹)` and counts `y ~ Poisson(e^x)`.
pub fn cox_data<T: Real, R: Rng + ?Sized>(side: usize, alpha: T, beta: T, rng: &mut R) -> Result<(Vec<T>, Vec<T>)> {
    let n = side * side;
    let l = cholesky(&cox_precision(side, alpha, beta), n)?;
    // P = L Lᵀ, so x = L⁻ᵀ z has covariance P⁻¹
    let z: Vec<T> = (0..n).map(|_| std_normal(rng)).collect();
    let x = lower_transpose_solve(&l, &z);
    let mut counts = Vec::with_capacity(n);
    for &xi in &x {
        let rate = to_f64(xi).exp();
        let y: f64 = Poisson::new(rate).map_err(|e| Error::invalid(format!("Poisson: {e}")))?.sample(rng);
        counts.push(lit(y));
    }
    Ok((x, counts))
}

fn numbered(prefix: &str, n: usize, start: usize) -> Vec<String> {
    (start..start + n).map(|i| format!("{prefix}{i}")).collect()
}

fn parse_field<T: Real>(s: &str, line: u64) -> Result<T> {
    s.trim()
        .parse::<f64>()
        .map(lit)
        .map_err(|_| Error::Data(format!("line {line}: cannot parse {s:?} as a number")))
}

fn read_rows<T: Real, Rd: Read>(r: Rd, expected: &[String]) -> Result<Vec<Vec<T>>> {
    let mut rdr = csv::Reader::from_reader(r);
    let headers: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();
    if headers != expected {
        return Err(Error::Data(format!("expected header {:?}, found {:?}", expected.join(","), headers.join(","))));
    }
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        rows.push(rec.iter().map(|f| parse_field(f, line)).collect::<Result<Vec<T>>>()?);
    }
    Ok(rows)
}

fn write_rows<T: Real, W: Write>(w: W, header: &[String], rows: impl Iterator<Item = Vec<T>>) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(header)?;
    for row in rows {
        wtr.write_record(row.iter().map(|&v| format_decimal(to_f64(v))))?;
    }
    wtr.flush()?;
    Ok(())
}

/// Gaussian observations, header `y1..yd`.
pub fn write_gaussian_csv<T: Real, W: Write>(w: W, rows: &[Vec<T>]) -> Result<()> {
    let d = rows.first().map(Vec::len).ok_or(Error::EmptyInput("observations"))?;
    write_rows(w, &numbered("y", d, 1), rows.iter().cloned())
}

pub fn read_gaussian_csv<T: Real, Rd: Read>(r: Rd, d: usize) -> Result<Vec<Vec<T>>> {
    read_rows(r, &numbered("y", d, 1))
}

/// Logistic observations, header `xi1..xid,eta`.
pub fn write_logistic_csv<T: Real, W: Write>(w: W, data: &LogisticData<T>) -> Result<()> {
    let mut header = numbered("xi", data.dim, 1);
    header.push("eta".into());
    write_rows(
        w,
        &header,
        (0..data.len()).map(|i| {
            let mut row = data.row(i).to_vec();
            row.push(data.eta[i]);
            row
        }),
    )
}

pub fn read_logistic_csv<T: Real, Rd: Read>(r: Rd, d: usize) -> Result<LogisticData<T>> {
    let mut header = numbered("xi", d, 1);
    header.push("eta".into());
    let rows = read_rows::<T, _>(r, &header)?;
    let mut xi = Vec::with_capacity(rows.len() * d);
    let mut eta = Vec::with_capacity(rows.len());
    for row in rows {
        xi.extend_from_slice(&row[..d]);
        eta.push(row[d]);
    }
    LogisticData::new(d, xi, eta)
}

/// AR(1) trajectories, header `y0..yK`.
pub fn write_ar1_csv<T: Real, W: Write>(w: W, trajectories: &[Vec<T>]) -> Result<()> {
    let len = trajectories.first().map(Vec::len).ok_or(Error::EmptyInput("trajectories"))?;
    write_rows(w, &numbered("y", len, 0), trajectories.iter().cloned())
}

pub fn read_ar1_csv<T: Real, Rd: Read>(r: Rd, k: usize) -> Result<Vec<Vec<T>>> {
    read_rows(r, &numbered("y", k + 1, 0))
}

/// Cox counts for the listed nodes, header `i,j,count` (zero-based grid indices).
pub fn write_cox_csv<T: Real, W: Write>(w: W, side: usize, counts: &[T], nodes: &[usize]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["i", "j", "count"])?;
    for &k in nodes {
        let c = to_f64(counts[k]);
        wtr.write_record([(k / side).to_string(), (k % side).to_string(), format!("{c:.0}")])?;
    }
    wtr.flush()?;
    Ok(())
}

/// Reads `(node, count)` pairs.
pub fn read_cox_csv<T: Real, Rd: Read>(r: Rd, side: usize) -> Result<Vec<(usize, T)>> {
    let rows = read_rows::<f64, _>(r, &["i".to_string(), "j".to_string(), "count".to_string()])?;
    rows.into_iter()
        .map(|row| {
            let (i, j) = (row[0], row[1]);
            if i < 0.0 || j < 0.0 || i.fract() != 0.0 || j.fract() != 0.0 || i as usize >= side || j as usize >= side {
                return Err(Error::Data(format!("grid index ({i}, {j}) outside a {side}x{side} grid")));
            }
            Ok((i as usize * side + j as usize, lit(row[2])))
        })
        .collect()
}

/// Maps workers to their data files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataManifest {
    pub model: String,
    /// Worker id (1-based) to file path, relative to the manifest.
    pub workers: BTreeMap<usize, String>,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
    pub seed: u64,
}

impl DataManifest {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)? + "\n")?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    #[test]
    fn csv_round_trips() {
        let mut rng = stream(5, 9);
        let ys = gaussian_data(4, &[0.5, 0.5], 1.0, &mut rng);
        let mut buf = Vec::new();
        write_gaussian_csv(&mut buf, &ys).unwrap();
        assert_eq!(read_gaussian_csv::<f64, _>(&buf[..], 2).unwrap(), ys);

        let (data, _) = logistic_data::<f64, _>(5, 3, &mut rng);
        let mut buf = Vec::new();
        write_logistic_csv(&mut buf, &data).unwrap();
        assert_eq!(read_logistic_csv::<f64, _>(&buf[..], 3).unwrap(), data);

        let tr = ar1_data(3, 4, 4.0, 0.5, 1.0, &mut rng).unwrap();
        let mut buf = Vec::new();
        write_ar1_csv(&mut buf, &tr).unwrap();
        assert_eq!(read_ar1_csv::<f64, _>(&buf[..], 4).unwrap(), tr);

        let (_, counts) = cox_data(3, 0.1, 1.0, &mut rng).unwrap();
        let mut buf = Vec::new();
        write_cox_csv(&mut buf, 3, &counts, &[0, 4, 8]).unwrap();
        let back = read_cox_csv::<f64, _>(&buf[..], 3).unwrap();
        assert_eq!(back, vec![(0, counts[0]), (4, counts[4]), (8, counts[8])]);
    }

    #[test]
    fn bad_header_reports() {
        let err = read_gaussian_csv::<f64, _>(&b"a,b\n1,2\n"[..], 2).unwrap_err();
        assert!(err.to_string().contains("y1,y2"));
    }

    #[test]
    fn logistic_first_covariate_is_one() {
        let mut rng = stream(1, 2);
        let (data, truth) = logistic_data::<f64, _>(50, 4, &mut rng);
        assert_eq!(truth.len(), 4);
        assert!((0..50).all(|i| data.row(i)[0] == 1.0));
    }

    #[test]
    fn split_is_contiguous() {
        let rows: Vec<usize> = (0..10).collect();
        let parts = split_rows(&rows, 3);
        assert_eq!(parts, vec![vec![0, 1, 2, 3], vec![4, 5, 6], vec![7, 8, 9]]);
    }
}
