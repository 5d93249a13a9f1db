//! Jet verification of the local-function catalog.
//!
//! For each catalog entry, the sigma-derivatives of its tilted mean through
//! the declared jet order must vanish within the stacked finite-difference
//! plus quadrature tolerance. A deliberately mis-tagged control must fail.

use super::{Cell, ExperimentError, ExperimentSpec, Report, Stat};
use crate::cole_hopf::{local_fn_library, mis_tagged_control};
use crate::potential::{
    compute_constants, jet_moments, tilt_for_mean, PotentialFamily, PotentialSpec,
};

/// Combined finite-difference + quadrature tolerance for jet moments.
pub const JET_TOLERANCE: f64 = 1e-4;

pub fn exp_jet_suite(xspec: &ExperimentSpec) -> Result<Report, ExperimentError> {
    // the suite always covers the gaussian and a perturbed potential; the
    // spec's potential selects the perturbation strength
    let kappa = match xspec.potential {
        PotentialFamily::CosinePerturbed { kappa } => kappa,
        PotentialFamily::Gaussian => 0.2,
    };
    let families = [
        PotentialFamily::Gaussian,
        PotentialFamily::CosinePerturbed { kappa },
    ];
    let mut cells = Vec::new();
    for family in families {
        let spec = PotentialSpec::from_family(family)?;
        let constants = compute_constants(&spec, &xspec.betas)?;
        let ens0 = tilt_for_mean(&spec, 0.0)?;
        let library = local_fn_library(&ens0, &constants)?;
        let tag = match family {
            PotentialFamily::Gaussian => "gaussian".to_string(),
            PotentialFamily::CosinePerturbed { kappa } => format!("perturbed-{kappa}"),
        };
        for f in &library {
            let jets = jet_moments(&spec, f, f.jet_order)?;
            let stats: Vec<Stat> = jets
                .iter()
                .map(|j| {
                    Stat::new(format!("order-{}", j.order), j.value, j.error_bound)
                        .with_pass(j.value.abs() <= JET_TOLERANCE)
                })
                .collect();
            cells.push(Cell::new(format!("{tag}/{}", f.name), stats));
        }
        // negative control: must NOT vanish at order zero
        let control = mis_tagged_control(&constants);
        let jets = jet_moments(&spec, &control, 0)?;
        let detected = jets[0].value.abs() > JET_TOLERANCE;
        cells.push(Cell::new(
            format!("{tag}/negative-control"),
            vec![
                Stat::new("order-0", jets[0].value, jets[0].error_bound).with_pass(detected)
            ],
        ));
    }
    Ok(Report::new(xspec, cells))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_suite_passes_with_detected_control() {
        let spec = ExperimentSpec {
            betas: vec![1.0, 0.3],
            ..Default::default()
        };
        let report = exp_jet_suite(&spec).unwrap();
        assert!(report.pass, "{:#?}", report.cells);
        // both potentials, 12 entries + control each
        assert_eq!(report.cells.len(), 26);
        let control = report.cell("gaussian/negative-control").unwrap();
        assert!(control.pass);
        assert!(control.stats[0].value > 0.5);
    }
}
