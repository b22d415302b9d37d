//! Intertopic geometry: Jensen-Shannon divergence between topic-word
//! distributions, a 2-D embedding by classical (Torgerson) multidimensional
//! scaling, and topic prevalence for circle areas.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::labeling::TopicLabel;
use crate::topicmodel::LdaModel;

const NORMALIZATION_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("distribution lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("input is not a probability distribution (sum {0})")]
    NotNormalized(f64),
    #[error("distance matrix is not symmetric at ({0},{1})")]
    NotSymmetric(usize, usize),
    #[error("distance matrix has nonzero diagonal at {0}")]
    NonzeroDiagonal(usize),
    #[error("distance matrix has a negative entry at ({0},{1})")]
    NegativeDistance(usize, usize),
}

/// Everything needed to draw the intertopic map: 2-D coordinates, topic
/// prevalence (circle areas), and the full pairwise JSD matrix.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TopicMap {
    pub coords: Vec<[f64; 2]>,
    pub prevalence: Vec<f64>,
    pub distance: Vec<Vec<f64>>,
}

/// Jensen-Shannon divergence, base-2 logarithm so the result lies in
/// [0, 1]. `0·log 0` is taken as 0.
pub fn jsd(p: &[f64], q: &[f64]) -> Result<f64, GeometryError> {
    if p.len() != q.len() {
        return Err(GeometryError::LengthMismatch(p.len(), q.len()));
    }
    for &(sum) in &[p.iter().sum::<f64>(), q.iter().sum::<f64>()] {
        if (sum - 1.0).abs() > NORMALIZATION_TOLERANCE {
            return Err(GeometryError::NotNormalized(sum));
        }
    }
    let mut acc = 0.0;
    for (&pi, &qi) in p.iter().zip(q) {
        let mi = 0.5 * (pi + qi);
        if pi > 0.0 {
            acc += 0.5 * pi * (pi / mi).log2();
        }
        if qi > 0.0 {
            acc += 0.5 * qi * (qi / mi).log2();
        }
    }
    Ok(acc)
}

/// Classical MDS: double-center the squared distances,
/// `B = -1/2 · J D² J`, and embed along the top eigenpairs (negative
/// eigenvalues clamped to zero). Coordinates come back centered. When the
/// matrix is smaller than the requested dimension the extra columns are
/// zero.
pub fn classical_mds(distance: &[Vec<f64>], dim: usize) -> Result<Vec<Vec<f64>>, GeometryError> {
    let n = distance.len();
    for (i, row) in distance.iter().enumerate() {
        if row.len() != n {
            return Err(GeometryError::LengthMismatch(row.len(), n));
        }
        if row[i] != 0.0 {
            return Err(GeometryError::NonzeroDiagonal(i));
        }
        for (j, &d) in row.iter().enumerate() {
            if d < 0.0 {
                return Err(GeometryError::NegativeDistance(i, j));
            }
            if (d - distance[j][i]).abs() > 1e-12 {
                return Err(GeometryError::NotSymmetric(i, j));
            }
        }
    }
    if n == 0 {
        return Ok(Vec::new());
    }

    // B = -1/2 J D^2 J via row/column/grand means of D^2.
    let mut sq = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            sq[i][j] = distance[i][j] * distance[i][j];
        }
    }
    let row_mean: Vec<f64> = sq.iter().map(|r| r.iter().sum::<f64>() / n as f64).collect();
    let grand_mean: f64 = row_mean.iter().sum::<f64>() / n as f64;
    let mut b = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            b[i][j] = -0.5 * (sq[i][j] - row_mean[i] - row_mean[j] + grand_mean);
        }
    }

    let (eigenvalues, eigenvectors) = symmetric_eigen(&b);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &c| eigenvalues[c].partial_cmp(&eigenvalues[a]).unwrap());

    let mut coords = vec![vec![0.0; dim]; n];
    for (col, &e) in order.iter().take(dim).enumerate() {
        let scale = eigenvalues[e].max(0.0).sqrt();
        for i in 0..n {
            coords[i][col] = eigenvectors[i][e] * scale;
        }
    }
    // Double-centering already zeroes the column means up to rounding;
    // re-center so the invariant holds exactly.
    for col in 0..dim {
        let mean: f64 = coords.iter().map(|r| r[col]).sum::<f64>() / n as f64;
        for row in &mut coords {
            row[col] -= mean;
        }
    }
    Ok(coords)
}

/// Cyclic Jacobi eigendecomposition of a symmetric matrix. Returns
/// (eigenvalues, eigenvectors as columns). Sizes here are at most a few
/// hundred, where Jacobi is plenty.
fn symmetric_eigen(matrix: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = matrix.len();
    let mut a: Vec<Vec<f64>> = matrix.to_vec();
    let mut v = vec![vec![0.0; n]; n];
    for (i, row) in v.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    if n <= 1 {
        return (a.iter().enumerate().map(|(i, r)| r[i]).collect(), v);
    }
    let scale: f64 = a
        .iter()
        .flatten()
        .map(|x| x * x)
        .sum::<f64>()
        .sqrt()
        .max(f64::MIN_POSITIVE);
    const MAX_SWEEPS: usize = 100;
    for _ in 0..MAX_SWEEPS {
        let mut off = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                off += a[i][j] * a[i][j];
            }
        }
        if off.sqrt() <= 1e-14 * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                if a[p][q].abs() <= 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for i in 0..n {
                    let aip = a[i][p];
                    let aiq = a[i][q];
                    a[i][p] = c * aip - s * aiq;
                    a[i][q] = s * aip + c * aiq;
                }
                for j in 0..n {
                    let apj = a[p][j];
                    let aqj = a[q][j];
                    a[p][j] = c * apj - s * aqj;
                    a[q][j] = s * apj + c * aqj;
                }
                for i in 0..n {
                    let vip = v[i][p];
                    let viq = v[i][q];
                    v[i][p] = c * vip - s * viq;
                    v[i][q] = s * vip + c * viq;
                }
            }
        }
    }
    let eigenvalues = (0..n).map(|i| a[i][i]).collect();
    (eigenvalues, v)
}

/// Build the intertopic map of a trained model: pairwise JSD between the
/// topic-word rows, classical MDS to 2-D, and token-mass prevalence.
pub fn intertopic_map(model: &LdaModel) -> Result<TopicMap, GeometryError> {
    let k = model.num_topics;
    let mut distance = vec![vec![0.0; k]; k];
    for i in 0..k {
        for j in (i + 1)..k {
            let d = jsd(&model.phi[i], &model.phi[j])?;
            distance[i][j] = d;
            distance[j][i] = d;
        }
    }
    let coords = classical_mds(&distance, 2)?;
    Ok(TopicMap {
        coords: coords.into_iter().map(|r| [r[0], r[1]]).collect(),
        prevalence: model.prevalence(),
        distance,
    })
}

/// Render the map as a standalone SVG: one circle per topic with area
/// proportional to prevalence, labeled at its center.
pub fn render_svg(map: &TopicMap, labels: Option<&[TopicLabel]>) -> String {
    const SIZE: f64 = 640.0;
    const MARGIN: f64 = 70.0;
    let k = map.coords.len();
    let extent = map
        .coords
        .iter()
        .flat_map(|c| c.iter())
        .fold(0.0f64, |m, &v| m.max(v.abs()))
        .max(1e-9);
    let scale = (SIZE / 2.0 - MARGIN) / extent;
    let max_prev = map.prevalence.iter().cloned().fold(0.0f64, f64::max).max(1e-12);
    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{s}\" height=\"{s}\" viewBox=\"0 0 {s} {s}\">\n",
        s = SIZE
    ));
    svg.push_str(&format!(
        "  <rect width=\"{s}\" height=\"{s}\" fill=\"white\"/>\n",
        s = SIZE
    ));
    for t in 0..k {
        let x = SIZE / 2.0 + map.coords[t][0] * scale;
        let y = SIZE / 2.0 - map.coords[t][1] * scale;
        // area proportional to prevalence
        let r = 40.0 * (map.prevalence[t] / max_prev).sqrt() + 3.0;
        let label = labels
            .and_then(|ls| ls.get(t))
            .map(|l| l.label.clone())
            .unwrap_or_else(|| format!("topic-{t}"));
        svg.push_str(&format!(
            "  <circle cx=\"{x:.2}\" cy=\"{y:.2}\" r=\"{r:.2}\" fill=\"steelblue\" fill-opacity=\"0.5\" stroke=\"navy\"/>\n"
        ));
        svg.push_str(&format!(
            "  <text x=\"{x:.2}\" y=\"{y:.2}\" font-size=\"12\" text-anchor=\"middle\">{}</text>\n",
            xml_escape(&label)
        ));
    }
    svg.push_str("</svg>\n");
    svg
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jsd_identity_is_zero() {
        let p = vec![0.2, 0.3, 0.5];
        assert_eq!(jsd(&p, &p).unwrap(), 0.0);
    }

    #[test]
    fn jsd_disjoint_support_is_one() {
        let p = vec![1.0, 0.0];
        let q = vec![0.0, 1.0];
        assert_eq!(jsd(&p, &q).unwrap(), 1.0);
        let p = vec![0.5, 0.5, 0.0, 0.0];
        let q = vec![0.0, 0.0, 0.25, 0.75];
        assert!((jsd(&p, &q).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn jsd_hand_computed_value() {
        // p=[1,0], q=[1/2,1/2]: m=[3/4,1/4],
        // 1/2*log2(4/3) + 1/2*(1/2*log2(2/3) + 1/2*log2(2)) = 0.311278...
        let p = vec![1.0, 0.0];
        let q = vec![0.5, 0.5];
        let expect = 0.5 * (4.0f64 / 3.0).log2()
            + 0.5 * (0.5 * (2.0f64 / 3.0).log2() + 0.5 * 2.0f64.log2());
        let got = jsd(&p, &q).unwrap();
        assert!((got - expect).abs() < 1e-15);
        assert!((got - 0.31128).abs() < 1e-5);
    }

    #[test]
    fn jsd_rejects_bad_inputs() {
        assert!(matches!(
            jsd(&[1.0], &[0.5, 0.5]),
            Err(GeometryError::LengthMismatch(1, 2))
        ));
        assert!(matches!(
            jsd(&[0.7, 0.7], &[0.5, 0.5]),
            Err(GeometryError::NotNormalized(_))
        ));
    }

    #[test]
    fn mds_zero_matrix_gives_origin() {
        let d = vec![vec![0.0; 3]; 3];
        let coords = classical_mds(&d, 2).unwrap();
        for row in coords {
            assert!(row.iter().all(|&c| c.abs() < 1e-12));
        }
    }

    fn reconstructed_error(d: &[Vec<f64>], coords: &[Vec<f64>]) -> f64 {
        let n = d.len();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let got: f64 = coords[i]
                    .iter()
                    .zip(&coords[j])
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt();
                worst = worst.max((got - d[i][j]).abs());
            }
        }
        worst
    }

    #[test]
    fn mds_recovers_collinear_points() {
        let d = vec![
            vec![0.0, 1.0, 2.0],
            vec![1.0, 0.0, 1.0],
            vec![2.0, 1.0, 0.0],
        ];
        let coords = classical_mds(&d, 2).unwrap();
        assert!(reconstructed_error(&d, &coords) < 1e-9);
    }

    #[test]
    fn mds_rejects_asymmetric_input() {
        let d = vec![vec![0.0, 1.0], vec![2.0, 0.0]];
        assert!(matches!(
            classical_mds(&d, 2),
            Err(GeometryError::NotSymmetric(0, 1))
        ));
    }

    #[test]
    fn mds_pads_when_dim_exceeds_points() {
        let d = vec![vec![0.0]];
        let coords = classical_mds(&d, 2).unwrap();
        assert_eq!(coords, vec![vec![0.0, 0.0]]);
    }

    #[test]
    fn mds_distancewise_invariant_under_permutation() {
        let d = vec![
            vec![0.0, 3.0, 4.0],
            vec![3.0, 0.0, 5.0],
            vec![4.0, 5.0, 0.0],
        ];
        // permute indices (2,0,1)
        let perm = [2usize, 0, 1];
        let mut pd = vec![vec![0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                pd[i][j] = d[perm[i]][perm[j]];
            }
        }
        let c1 = classical_mds(&d, 2).unwrap();
        let c2 = classical_mds(&pd, 2).unwrap();
        let dist = |c: &[Vec<f64>], i: usize, j: usize| -> f64 {
            c[i].iter()
                .zip(&c[j])
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt()
        };
        for i in 0..3 {
            for j in 0..3 {
                assert!((dist(&c1, perm[i], perm[j]) - dist(&c2, i, j)).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn jacobi_matches_known_eigenvalues() {
        // [[2,1],[1,2]] has eigenvalues 3 and 1
        let m = vec![vec![2.0, 1.0], vec![1.0, 2.0]];
        let (mut vals, _) = symmetric_eigen(&m);
        vals.sort_by(|a, b| b.partial_cmp(a).unwrap());
        assert!((vals[0] - 3.0).abs() < 1e-12);
        assert!((vals[1] - 1.0).abs() < 1e-12);
    }

    proptest::proptest! {
        #[test]
        fn jsd_symmetric_bounded_and_sqrt_triangular(
            raw in proptest::collection::vec(0.001f64..1.0, 9),
        ) {
            let norm = |v: &[f64]| -> Vec<f64> {
                let s: f64 = v.iter().sum();
                v.iter().map(|x| x / s).collect()
            };
            let p = norm(&raw[0..3]);
            let q = norm(&raw[3..6]);
            let r = norm(&raw[6..9]);
            let dpq = jsd(&p, &q).unwrap();
            let dqp = jsd(&q, &p).unwrap();
            proptest::prop_assert!((dpq - dqp).abs() < 1e-12);
            proptest::prop_assert!((0.0..=1.0 + 1e-12).contains(&dpq));
            // sqrt(JSD) is a metric
            let dpr = jsd(&p, &r).unwrap();
            let dqr = jsd(&q, &r).unwrap();
            proptest::prop_assert!(dpr.sqrt() <= dpq.sqrt() + dqr.sqrt() + 1e-9);
        }
    }
}
