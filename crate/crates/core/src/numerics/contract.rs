//! Einsum-style contraction generalized over a [`Semiring`].

use super::semiring::Semiring;
use super::tensor::Tensor;
use crate::error::{Error, Result};

/// Parsed contraction spec such as `"ij,jk->ik"`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ContractionSpec {
    inputs: Vec<Vec<char>>,
    output: Vec<char>,
}

impl ContractionSpec {
    pub fn parse(spec: &str) -> Result<Self> {
        let spec: String = spec.chars().filter(|c| !c.is_whitespace()).collect();
        let (lhs, rhs) = spec
            .split_once("->")
            .ok_or_else(|| Error::Shape(format!("contraction spec {spec:?} lacks '->'")))?;
        let inputs: Vec<Vec<char>> = lhs.split(',').map(|s| s.chars().collect()).collect();
        let output: Vec<char> = rhs.chars().collect();
        for c in inputs.iter().flatten().chain(&output) {
            if !c.is_ascii_alphabetic() {
                return Err(Error::Shape(format!("bad axis label {c:?} in {spec:?}")));
            }
        }
        for (i, c) in output.iter().enumerate() {
            if output[..i].contains(c) {
                return Err(Error::Shape(format!("repeated output axis {c:?}")));
            }
            if !inputs.iter().any(|inp| inp.contains(c)) {
                return Err(Error::Shape(format!("output axis {c:?} not in any input")));
            }
        }
        Ok(ContractionSpec { inputs, output })
    }
}

/// Generalized sum-of-products: scalar `+` becomes `S::plus`, `×` becomes `S::times`.
pub fn semiring_contract<S: Semiring>(spec: &str, operands: &[&Tensor]) -> Result<Tensor> {
    let spec = ContractionSpec::parse(spec)?;
    contract_parsed::<S>(&spec, operands)
}

pub fn contract_parsed<S: Semiring>(spec: &ContractionSpec, operands: &[&Tensor]) -> Result<Tensor> {
    if spec.inputs.len() != operands.len() {
        return Err(Error::Shape(format!(
            "spec names {} operands, got {}",
            spec.inputs.len(),
            operands.len()
        )));
    }

    // Assign every label an id and an extent.
    let mut labels: Vec<char> = Vec::new();
    let mut extents: Vec<usize> = Vec::new();
    for (axes, t) in spec.inputs.iter().zip(operands) {
        if axes.len() != t.rank() {
            return Err(Error::Shape(format!(
                "operand of rank {} given {} axis labels",
                t.rank(),
                axes.len()
            )));
        }
        for (&c, &extent) in axes.iter().zip(t.shape()) {
            match labels.iter().position(|&l| l == c) {
                Some(id) if extents[id] != extent => {
                    return Err(Error::Shape(format!(
                        "axis {c:?} has extents {} and {extent}",
                        extents[id]
                    )))
                }
                Some(_) => {}
                None => {
                    labels.push(c);
                    extents.push(extent);
                }
            }
        }
    }
    let id_of = |c: char| labels.iter().position(|&l| l == c).unwrap();
    let out_ids: Vec<usize> = spec.output.iter().map(|&c| id_of(c)).collect();
    let sum_ids: Vec<usize> = (0..labels.len()).filter(|i| !out_ids.contains(i)).collect();

    // Per-operand stride attached to each label id.
    let label_strides: Vec<Vec<usize>> = spec
        .inputs
        .iter()
        .zip(operands)
        .map(|(axes, t)| {
            let mut s = vec![0; labels.len()];
            for (&c, stride) in axes.iter().zip(t.strides()) {
                s[id_of(c)] += stride;
            }
            s
        })
        .collect();

    let out_shape: Vec<usize> = out_ids.iter().map(|&i| extents[i]).collect();
    let out_len: usize = out_shape.iter().product();
    let sum_len: usize = sum_ids.iter().map(|&i| extents[i]).product();
    let mut out = Vec::with_capacity(out_len);
    let mut assign = vec![0usize; labels.len()];

    let mut terms = Vec::with_capacity(sum_len);
    for flat_out in 0..out_len {
        unravel(flat_out, &out_ids, &extents, &mut assign);
        terms.clear();
        for flat_sum in 0..sum_len {
            unravel(flat_sum, &sum_ids, &extents, &mut assign);
            terms.push(S::product(operands.iter().zip(&label_strides).map(
                |(t, strides)| {
                    let off: usize = assign.iter().zip(strides).map(|(a, s)| a * s).sum();
                    t.data()[off]
                },
            )));
        }
        out.push(S::sum(terms.iter().copied()));
    }
    Tensor::new(out_shape, out)
}

fn unravel(mut flat: usize, ids: &[usize], extents: &[usize], assign: &mut [usize]) {
    for &id in ids.iter().rev() {
        let e = extents[id];
        assign[id] = flat % e;
        flat /= e;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::semiring::{Log, MaxPlus, Real};
    use proptest::prelude::*;

    #[test]
    fn max_plus_matrix_square() {
        let a = Tensor::from_rows(&[vec![0.0, 1.0], vec![2.0, 3.0]]).unwrap();
        let sq = semiring_contract::<MaxPlus>("ij,jk->ik", &[&a, &a]).unwrap();
        assert_eq!(sq.data(), &[3.0, 4.0, 5.0, 6.0]);
    }

    #[test]
    fn log_matmul_of_zeros() {
        let z = Tensor::zeros(vec![2, 2]);
        let out = semiring_contract::<Log>("ij,jk->ik", &[&z, &z]).unwrap();
        for &v in out.data() {
            assert!((v - 2f64.ln()).abs() < 1e-15);
        }
    }

    #[test]
    fn identity_spec_is_identity() {
        let t = Tensor::new(vec![2, 3], vec![0.5, -1.0, 2.0, f64::NEG_INFINITY, 0.0, 3.0]).unwrap();
        let same = semiring_contract::<Log>("ab->ab", &[&t]).unwrap();
        assert_eq!(same, t);
        let transposed = semiring_contract::<MaxPlus>("ab->ba", &[&t]).unwrap();
        assert_eq!(transposed.shape(), &[3, 2]);
        assert_eq!(transposed.get(&[2, 1]), 3.0);
    }

    #[test]
    fn full_reduction_and_diagonal() {
        let t = Tensor::new(vec![2, 2], vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let total = semiring_contract::<Real>("ij->", &[&t]).unwrap();
        assert_eq!(total.shape(), &[] as &[usize]);
        assert_eq!(total.data(), &[10.0]);
        let trace = semiring_contract::<Real>("ii->", &[&t]).unwrap();
        assert_eq!(trace.data(), &[5.0]);
    }

    #[test]
    fn shape_errors() {
        let a = Tensor::zeros(vec![2, 3]);
        let b = Tensor::zeros(vec![2, 3]);
        assert!(semiring_contract::<Log>("ij,jk->ik", &[&a, &b]).is_err());
        assert!(semiring_contract::<Log>("ij,jk", &[&a, &b]).is_err());
        assert!(semiring_contract::<Log>("ij->ik", &[&a]).is_err());
        assert!(semiring_contract::<Log>("ijk->i", &[&a]).is_err());
        assert!(semiring_contract::<Log>("ij,jk->ik", &[&a]).is_err());
    }

    fn matrix(n: usize, m: usize) -> impl Strategy<Value = Tensor> {
        proptest::collection::vec(-5.0..5.0f64, n * m)
            .prop_map(move |d| Tensor::new(vec![n, m], d).unwrap())
    }

    proptest! {
        // Oracle: plain triple loop over exponentiated entries.
        #[test]
        fn log_contraction_matches_ordinary_matmul(
            (a, b) in (1usize..=8, 1usize..=8, 1usize..=8)
                .prop_flat_map(|(n, k, m)| (matrix(n, k), matrix(k, m)))
        ) {
            let (n, k, m) = (a.shape()[0], a.shape()[1], b.shape()[1]);
            let got = semiring_contract::<Log>("ij,jk->ik", &[&a, &b]).unwrap();
            for i in 0..n {
                for j in 0..m {
                    let mut s = 0.0;
                    for l in 0..k {
                        s += a.get(&[i, l]).exp() * b.get(&[l, j]).exp();
                    }
                    let g = got.get(&[i, j]).exp();
                    prop_assert!((g - s).abs() <= 1e-8 * s);
                }
            }
        }

        #[test]
        fn three_operand_chain(
            (a, b, c) in (1usize..=4, 1usize..=4, 1usize..=4, 1usize..=4)
                .prop_flat_map(|(n, k, l, m)| (matrix(n, k), matrix(k, l), matrix(l, m)))
        ) {
            let got = semiring_contract::<Log>("ij,jk,kl->il", &[&a, &b, &c]).unwrap();
            let ab = semiring_contract::<Log>("ij,jk->ik", &[&a, &b]).unwrap();
            let abc = semiring_contract::<Log>("ik,kl->il", &[&ab, &c]).unwrap();
            for (x, y) in got.data().iter().zip(abc.data()) {
                prop_assert!((x - y).abs() <= 1e-9 * (1.0 + x.abs()));
            }
        }
    }
}
