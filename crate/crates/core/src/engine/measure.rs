use crate::error::{Error, Result};
use crate::fock::{DensityOperator, PolarizationQubit};

/// Mean fraction of photons found in the polarization `q` within the
/// normalized `N`-photon sector of `rho`.
pub fn measure_fidelity(rho: &DensityOperator, q: &PolarizationQubit, n_total: usize) -> Result<f64> {
    if n_total < 1 {
        return Err(Error::OutOfRange {
            what: "output photon number",
            value: n_total.to_string(),
            allowed: ">= 1".into(),
        });
    }
    let sector = rho.project_total_n(n_total)?;
    if sector.is_empty() {
        return Err(Error::EmptySector(n_total));
    }
    let n_q = q.number_op(rho.basis());
    Ok(sector.block.expectation(&n_q).re / n_total as f64)
}

/// Distribution of the number of photons in polarization `q` within the
/// normalized `N`-photon sector, indexed by `n = 0..=N`.
pub fn aligned_distribution(
    rho: &DensityOperator,
    q: &PolarizationQubit,
    n_total: usize,
) -> Result<Vec<f64>> {
    let sector = rho.project_total_n(n_total)?;
    if sector.is_empty() {
        return Err(Error::EmptySector(n_total));
    }
    (0..=n_total)
        .map(|n| {
            let state = q.aligned_fock_state(rho.basis(), n, n_total - n)?;
            Ok(state.expectation(sector.block.matrix()).re)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::FockBasis;
    use crate::theory::{prob_n_given_n, rho_n, unpolarized_operator};

    #[test]
    fn pure_aligned_state_has_unit_fidelity() {
        let b = FockBasis::new(5).unwrap();
        let q = PolarizationQubit::from_bloch(1.0, 0.3);
        let rho = q.aligned_fock_state(&b, 3, 0).unwrap().to_density();
        assert!((measure_fidelity(&rho, &q, 3).unwrap() - 1.0).abs() < 1e-13);
    }

    #[test]
    fn unpolarized_sector_has_half_fidelity() {
        let b = FockBasis::new(5).unwrap();
        let q = PolarizationQubit::from_bloch(2.3, -0.7);
        for n in 1..=4 {
            let w = unpolarized_operator(n + 1, &b).unwrap().state;
            assert!((measure_fidelity(&w, &q, n).unwrap() - 0.5).abs() < 1e-13);
        }
    }

    #[test]
    fn optimal_two_photon_output() {
        let b = FockBasis::new(4).unwrap();
        let q = PolarizationQubit::from_bloch(0.4, 1.7);
        let rho = rho_n(&q, 2, &b).unwrap();
        assert!((measure_fidelity(&rho, &q, 2).unwrap() - 5.0 / 6.0).abs() < 1e-13);
        let dist = aligned_distribution(&rho, &q, 2).unwrap();
        assert!(dist[0].abs() < 1e-13);
        for (n, p) in dist.iter().enumerate().skip(1) {
            assert!((p - prob_n_given_n(n, 2).unwrap()).abs() < 1e-13);
        }
    }

    #[test]
    fn empty_sector_is_an_error() {
        let b = FockBasis::new(4).unwrap();
        let rho = rho_n(&PolarizationQubit::horizontal(), 2, &b).unwrap();
        assert_eq!(
            measure_fidelity(&rho, &PolarizationQubit::horizontal(), 3),
            Err(Error::EmptySector(3))
        );
    }
}
