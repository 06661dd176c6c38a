use std::collections::BTreeMap;

use nalgebra::DMatrix;

use super::{HamiltonianError, HamiltonianTerm, OperatorKind, OperatorProduct};
use crate::sparse::CsrMatrix;
use crate::C64;

/// Matrix of a single-subsystem operator truncated to `dim` levels.
///
/// `Z` acts as the qubit Pauli Z on levels 0 and 1 and as zero above them.
pub fn operator_matrix(kind: OperatorKind, dim: usize) -> Result<DMatrix<C64>, HamiltonianError> {
    if dim < 2 {
        return Err(HamiltonianError::InvalidDimension(format!(
            "operator dimension must be at least 2, got {dim}"
        )));
    }
    let re = |v: f64| C64::new(v, 0.0);
    let sm = DMatrix::from_fn(dim, dim, |r, c| if c == r + 1 { re((c as f64).sqrt()) } else { re(0.0) });
    let number = DMatrix::from_fn(dim, dim, |r, c| if r == c { re(r as f64) } else { re(0.0) });
    Ok(match kind {
        OperatorKind::PauliI => DMatrix::identity(dim, dim),
        OperatorKind::LoweringSM => sm,
        OperatorKind::RaisingSP => sm.transpose(),
        OperatorKind::NumberN | OperatorKind::ProjectorO => number,
        OperatorKind::PauliX => &sm + sm.transpose(),
        OperatorKind::PauliY => (sm.transpose() - &sm) * C64::new(0.0, 1.0),
        OperatorKind::PauliZ => DMatrix::from_fn(dim, dim, |r, c| match (r, c) {
            (0, 0) => re(1.0),
            (1, 1) => re(-1.0),
            _ => re(0.0),
        }),
    })
}

pub(crate) fn total_dimension(dims: &BTreeMap<usize, usize>) -> usize {
    dims.values().product()
}

/// Full-space matrix of one weighted product of operators. Subsystems are
/// tensored in ascending index order, the lowest index most significant.
pub fn product_matrix(product: &OperatorProduct, dims: &BTreeMap<usize, usize>) -> Result<CsrMatrix, HamiltonianError> {
    let mut locals: BTreeMap<usize, DMatrix<C64>> = BTreeMap::new();
    for op in &product.factors {
        let dim = *dims.get(&op.subsystem).ok_or_else(|| {
            HamiltonianError::InvalidDimension(format!("subsystem {} has no dimension", op.subsystem))
        })?;
        let m = operator_matrix(op.kind, dim)?;
        locals
            .entry(op.subsystem)
            .and_modify(|acc| *acc = &*acc * &m)
            .or_insert(m);
    }
    let mut full = CsrMatrix::identity(1);
    for (idx, &dim) in dims {
        let local = match locals.get(idx) {
            Some(m) => CsrMatrix::from_dense(m),
            None => CsrMatrix::identity(dim),
        };
        full = full.kron(&local);
    }
    Ok(full.scale(C64::new(product.weight, 0.0)))
}

/// `coefficient * Σ_k weight_k * (embedded product_k)` as a sparse D×D matrix.
pub fn term_matrix(term: &HamiltonianTerm, dims: &BTreeMap<usize, usize>) -> Result<CsrMatrix, HamiltonianError> {
    let d = total_dimension(dims);
    let mut acc = CsrMatrix::zeros(d, d);
    for p in &term.products {
        acc = acc.add(&product_matrix(p, dims)?);
    }
    Ok(acc.scale(C64::new(term.coefficient, 0.0)))
}

/// Sum of a list of weighted products, e.g. a collapse operator or a
/// control Hamiltonian.
pub fn operator_sum_matrix(products: &[OperatorProduct], dims: &BTreeMap<usize, usize>) -> Result<CsrMatrix, HamiltonianError> {
    let d = total_dimension(dims);
    let mut acc = CsrMatrix::zeros(d, d);
    for p in products {
        acc = acc.add(&product_matrix(p, dims)?);
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::Operator;

    fn re(v: f64) -> C64 {
        C64::new(v, 0.0)
    }

    fn dense(rows: usize, vals: &[f64]) -> DMatrix<C64> {
        DMatrix::from_row_slice(rows, rows, &vals.iter().map(|v| re(*v)).collect::<Vec<_>>())
    }

    fn term(coefficient: f64, factors: Vec<Operator>) -> HamiltonianTerm {
        HamiltonianTerm {
            channel: None,
            coefficient,
            products: vec![OperatorProduct { weight: 1.0, factors }],
        }
    }

    fn op(kind: OperatorKind, subsystem: usize) -> Operator {
        Operator { kind, subsystem }
    }

    #[test]
    fn qubit_paulis() {
        assert_eq!(operator_matrix(OperatorKind::PauliX, 2).unwrap(), dense(2, &[0.0, 1.0, 1.0, 0.0]));
        assert_eq!(operator_matrix(OperatorKind::PauliZ, 2).unwrap(), dense(2, &[1.0, 0.0, 0.0, -1.0]));
        assert_eq!(operator_matrix(OperatorKind::LoweringSM, 2).unwrap(), dense(2, &[0.0, 1.0, 0.0, 0.0]));
        let y = operator_matrix(OperatorKind::PauliY, 2).unwrap();
        assert_eq!(y[(0, 1)], C64::new(0.0, -1.0));
        assert_eq!(y[(1, 0)], C64::new(0.0, 1.0));
        let x = operator_matrix(OperatorKind::PauliX, 2).unwrap();
        assert_eq!(&x * &x, DMatrix::identity(2, 2));
        // XY = iZ fixes the sign convention of Y
        let z = operator_matrix(OperatorKind::PauliZ, 2).unwrap();
        assert_eq!(&x * &y, z * C64::new(0.0, 1.0));
    }

    #[test]
    fn ladder_and_number_truncations() {
        let s2 = 2f64.sqrt();
        assert_eq!(
            operator_matrix(OperatorKind::LoweringSM, 3).unwrap(),
            dense(3, &[0.0, 1.0, 0.0, 0.0, 0.0, s2, 0.0, 0.0, 0.0])
        );
        assert_eq!(
            operator_matrix(OperatorKind::NumberN, 3).unwrap(),
            dense(3, &[0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 2.0])
        );
        assert_eq!(
            operator_matrix(OperatorKind::ProjectorO, 4).unwrap(),
            operator_matrix(OperatorKind::NumberN, 4).unwrap()
        );
        let sp = operator_matrix(OperatorKind::RaisingSP, 4).unwrap();
        let sm = operator_matrix(OperatorKind::LoweringSM, 4).unwrap();
        // SP*SM = N for any truncation
        assert!((sp * sm - operator_matrix(OperatorKind::NumberN, 4).unwrap()).norm() < 1e-12);
        assert_eq!(
            operator_matrix(OperatorKind::PauliZ, 3).unwrap(),
            dense(3, &[1.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0, 0.0, 0.0])
        );
        assert!(operator_matrix(OperatorKind::PauliX, 1).is_err());
    }

    #[test]
    fn single_operators_are_hermitian() {
        for dim in 2..5 {
            for kind in [
                OperatorKind::PauliX,
                OperatorKind::PauliY,
                OperatorKind::PauliZ,
                OperatorKind::NumberN,
                OperatorKind::ProjectorO,
            ] {
                let dims = BTreeMap::from([(0, dim), (1, 2)]);
                let m = term_matrix(&term(0.7, vec![op(kind, 0)]), &dims).unwrap();
                assert!(m.hermiticity_defect() < 1e-14, "{kind:?} d={dim}");
            }
        }
    }

    #[test]
    fn term_matrix_examples() {
        let dims1 = BTreeMap::from([(0, 2)]);
        let m = term_matrix(&term(2.0, vec![op(OperatorKind::PauliZ, 0)]), &dims1).unwrap();
        assert_eq!(m.to_dense(), dense(2, &[2.0, 0.0, 0.0, -2.0]));

        let dims2 = BTreeMap::from([(0, 2), (1, 2)]);
        let m = term_matrix(
            &term(1.0, vec![op(OperatorKind::RaisingSP, 0), op(OperatorKind::LoweringSM, 1)]),
            &dims2,
        )
        .unwrap();
        // brute force: SP ⊗ SM with subsystem 0 most significant
        let sp = operator_matrix(OperatorKind::RaisingSP, 2).unwrap();
        let sm = operator_matrix(OperatorKind::LoweringSM, 2).unwrap();
        assert_eq!(m.to_dense(), sp.kronecker(&sm));
        assert_eq!(m.nnz(), 1);
        // <10|M|01> = 1: row index of |10> is 2, column of |01> is 1
        assert_eq!(m.get(2, 1), re(1.0));

        let dims3 = BTreeMap::from([(0, 3)]);
        let m = term_matrix(
            &term(0.5, vec![op(OperatorKind::ProjectorO, 0), op(OperatorKind::ProjectorO, 0)]),
            &dims3,
        )
        .unwrap();
        let n = operator_matrix(OperatorKind::NumberN, 3).unwrap();
        assert_eq!(m.to_dense(), (&n * &n) * re(0.5));
        assert_eq!(m.get(2, 2), re(2.0));
    }

    #[test]
    fn repeated_subsystem_multiplies_in_written_order() {
        let dims = BTreeMap::from([(0, 3)]);
        let sm_sp = term_matrix(
            &term(1.0, vec![op(OperatorKind::LoweringSM, 0), op(OperatorKind::RaisingSP, 0)]),
            &dims,
        )
        .unwrap()
        .to_dense();
        let sm = operator_matrix(OperatorKind::LoweringSM, 3).unwrap();
        let sp = operator_matrix(OperatorKind::RaisingSP, 3).unwrap();
        assert_eq!(sm_sp, &sm * &sp);
        assert_ne!(sm_sp, &sp * &sm);
    }
}
