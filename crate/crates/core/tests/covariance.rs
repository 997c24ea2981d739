use cshock_core::covariance::{
    sigma_example48, sigma_from_gamma, sigma_inverse_cellwise, GammaStructure, StructureKind,
};
use cshock_core::kronecker::{kron, Matrix};
use cshock_core::Error;
use proptest::prelude::*;

fn entries(r: usize, c: usize) -> impl Strategy<Value = Matrix> {
    prop::collection::vec(0.0f64..2.0, r * c).prop_map(move |v| Matrix::from_vec(r, c, v))
}

fn central_difference(s: &GammaStructure, omega: &[f64], k: usize) -> Matrix {
    let h = 1e-5;
    let l = s.l_matrix();
    let (mut up, mut dn) = (omega.to_vec(), omega.to_vec());
    up[k] += h;
    dn[k] -= h;
    (sigma_from_gamma(&l, &s.gamma(&up).unwrap()).unwrap() - sigma_from_gamma(&l, &s.gamma(&dn).unwrap()).unwrap())
        / (2.0 * h)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn cellwise_inverse(s2 in 0.0f64..2.0, v2 in 0.001f64..2.0, cells in 1usize..8) {
        let sigma = GammaStructure::CellWiseTwoLevel { n_arrays: 2, n_cells: cells }.model().sigma(&[s2, v2]).unwrap();
        let prod = sigma_inverse_cellwise(s2, v2, cells).unwrap() * sigma;
        prop_assert!((prod - Matrix::identity(2 * cells, 2 * cells)).amax() < 1e-10);
    }

    #[test]
    fn example48_matches_loadings(
        (a0, r, omega) in (1usize..4, 1usize..5, 1usize..4).prop_flat_map(|(n, cells, p)| (
            entries(cells, p),
            entries(p, p).prop_map(|m| &m * m.transpose()),
            prop::collection::vec(0.0f64..1.0, 2 * n + 1),
        ))
    ) {
        let n = (omega.len() - 1) / 2;
        let s = GammaStructure::Example48 { n_arrays: n, a0: a0.clone(), r: r.clone() };
        let direct = sigma_example48(omega[0], &omega[1..=n], &omega[n + 1..], &a0, &r).unwrap();
        let via_l = sigma_from_gamma(&s.l_matrix(), &s.gamma(&omega).unwrap()).unwrap();
        prop_assert!((&direct - &via_l).amax() <= 1e-12 * (1.0 + direct.amax()));
        let via_basis = s.model().sigma(&omega).unwrap();
        prop_assert!((&direct - &via_basis).amax() <= 1e-12 * (1.0 + direct.amax()));
    }

    #[test]
    fn derivatives_match_differences(
        (a0, omega) in (1usize..4, 1usize..5, 1usize..4).prop_flat_map(|(n, cells, p)| (
            entries(cells, p),
            prop::collection::vec(0.1f64..1.0, 2 * n + 1),
        ))
    ) {
        let n = (omega.len() - 1) / 2;
        let p = a0.ncols();
        let structures = [
            GammaStructure::Example48 { n_arrays: n, a0: a0.clone(), r: Matrix::identity(p, p) },
            GammaStructure::DiagonalScalar {
                a: kron(&Matrix::from_element(n, 1, 1.0), &a0),
                b: Some(kron(&Matrix::identity(n, n), &a0)),
            },
            GammaStructure::CellWiseTwoLevel { n_arrays: 2, n_cells: a0.nrows() },
        ];
        for s in &structures {
            let w = &omega[..s.n_params()];
            let model = s.model();
            for k in 0..s.n_params() {
                let d = model.dsigma(k).unwrap();
                let fd = central_difference(s, w, k);
                prop_assert!((&fd - d).amax() <= 1e-6 * d.amax().max(1.0));
            }
        }
    }
}

#[test]
fn printed_scalar_cell_case() {
    let s = GammaStructure::CellWiseTwoLevel { n_arrays: 2, n_cells: 1 }.model().sigma(&[0.01, 0.0225]).unwrap();
    let expected = Matrix::from_row_slice(2, 2, &[0.0325, 0.01, 0.01, 0.0325]);
    assert!((&s - &expected).amax() < 1e-15);
    let inv = sigma_inverse_cellwise(0.01, 0.0225, 1).unwrap();
    let det = 0.0325 * 0.0325 - 0.01 * 0.01;
    let analytic = Matrix::from_row_slice(2, 2, &[0.0325, -0.01, -0.01, 0.0325]) / det;
    assert!((inv - analytic).amax() < 1e-9);
}

#[test]
fn example48_reduces_to_cellwise() {
    let cells = 3;
    let e48 = sigma_example48(0.01, &[0.0, 0.0], &[0.0225, 0.0225], &Matrix::identity(cells, cells), &Matrix::identity(cells, cells)).unwrap();
    let cw = GammaStructure::CellWiseTwoLevel { n_arrays: 2, n_cells: cells }.model().sigma(&[0.01, 0.0225]).unwrap();
    assert_eq!(e48, cw);
}

#[test]
fn rejections() {
    assert!(matches!(sigma_inverse_cellwise(0.1, 0.0, 3), Err(Error::NotPositiveDefinite)));
    let model = GammaStructure::CellWiseTwoLevel { n_arrays: 2, n_cells: 2 }.model();
    assert!(matches!(model.dsigma(2), Err(Error::UnknownComponent(2))));
    assert!(model.sigma(&[-0.1, 1.0]).is_err());
    assert!(model.sigma(&[0.1]).is_err());
    assert!(sigma_from_gamma(&Matrix::identity(3, 3), &Matrix::identity(2, 2)).is_err());
    let err = "banded".parse::<StructureKind>().unwrap_err().to_string();
    assert!(err.contains("cellwise_two_level"), "{err}");
}
